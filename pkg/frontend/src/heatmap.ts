/** Client-side heatmap rendering of attribution maps.
 *
 * Produces the same SVG markup as the server renderer (same cell size,
 * color scale, and segment expansion), so a card saved to provenance
 * looks exactly like the live view it was saved from.
 */

import { divergingColor } from "./color.js";
import type { AttributionMap } from "./types.js";

export const CELL = 20; // px per cell

/** Collapse an attribution map to a 2-D grid of per-cell values:
 * per-segment scores are expanded through the segment map, a trailing
 * channel axis is summed away, and 1-D maps become a single row. */
export function asGrid(map: Pick<AttributionMap, "values" | "shape" | "segments">): number[][] {
  let values = map.values;
  let shape = map.shape;
  if (map.segments) {
    values = map.segments.map((s) => map.values[s]!);
    shape = [values.length];
  }
  if (shape.length === 3) {
    const [rows, cols, channels] = shape as [number, number, number];
    const grid: number[][] = [];
    for (let i = 0; i < rows; i++) {
      const row: number[] = [];
      for (let j = 0; j < cols; j++) {
        let sum = 0;
        for (let k = 0; k < channels; k++) sum += values[(i * cols + j) * channels + k]!;
        row.push(sum);
      }
      grid.push(row);
    }
    return grid;
  }
  if (shape.length === 2) {
    const [rows, cols] = shape as [number, number];
    return Array.from({ length: rows }, (_, i) => values.slice(i * cols, (i + 1) * cols));
  }
  return [values.slice()];
}

export function heatmapSvg(map: Pick<AttributionMap, "values" | "shape" | "segments">): string {
  const grid = asGrid(map);
  const rows = grid.length;
  const cols = grid[0]?.length ?? 0;
  const scale = Math.max(0, ...grid.flat().map(Math.abs));
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${cols * CELL}" ` +
      `height="${rows * CELL}" viewBox="0 0 ${cols * CELL} ${rows * CELL}">`,
  ];
  for (let i = 0; i < rows; i++) {
    for (let j = 0; j < cols; j++) {
      const color = divergingColor(grid[i]![j]!, scale);
      parts.push(
        `<rect x="${j * CELL}" y="${i * CELL}" width="${CELL}" height="${CELL}" ` +
          `fill="${color}" stroke="#dddddd" stroke-width="1"/>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("\n");
}
