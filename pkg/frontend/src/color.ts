/** Diverging color scale shared with the server's SVG renderer.
 *
 * Blue for negative, white for zero, red for positive, scaled
 * symmetrically by the maximum absolute value of the map. Matching the
 * server exactly (including its round-half-to-even) keeps live views
 * and exported provenance cards pixel-identical.
 */

function roundHalfEven(x: number): number {
  const floor = Math.floor(x);
  const frac = x - floor;
  if (frac > 0.5) return floor + 1;
  if (frac < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

export function divergingColor(value: number, scale: number): string {
  if (scale <= 0) return "#ffffff";
  const t = Math.min(Math.abs(value) / scale, 1);
  const c = roundHalfEven(255 * (1 - t));
  const hex = c.toString(16).padStart(2, "0");
  return value >= 0 ? `#ff${hex}${hex}` : `#${hex}${hex}ff`;
}
