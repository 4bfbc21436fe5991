"""Provenance cards and report export.

The provenance store is an append-only JSON-lines event log
(workspace/provenance.jsonl): card additions, annotations, grouping and
tombstone deletes. Cards are self-contained: the payload carries the full
serialized result, so a card stays readable even if its source state is
gone. Reports arrange existing cards into ordered sections and export to
JSON, Markdown (+ SVG heatmaps) or a bare SVG bundle.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DanglingReference, InvalidInput, NotFound
from .render import heatmap_svg

CARD_KINDS = (
    "attribution",
    "introspection",
    "metrics",
    "comparison",
    "recommendation",
    "note",
    "graph_snapshot",
)


@dataclass
class ProvenanceCard:
    card_id: str
    created_at: str
    kind: str
    payload: dict
    annotation: str = ""
    annotation_history: list = field(default_factory=list)
    group_id: Optional[str] = None
    source: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "card_id": self.card_id,
            "created_at": self.created_at,
            "kind": self.kind,
            "payload": self.payload,
            "annotation": self.annotation,
            "annotation_history": self.annotation_history,
            "group_id": self.group_id,
            "source": self.source,
        }


@dataclass
class Report:
    report_id: str
    title: str
    sections: list  # (heading, [card_id, ...], narrative) triples

    def to_dict(self) -> dict:
        return {
            "report_id": self.report_id,
            "title": self.title,
            "sections": [
                {"heading": h, "card_ids": list(ids), "narrative": n} for h, ids, n in self.sections
            ],
        }


class ProvenanceStore:
    """Single-writer card store persisted as an append-only event log."""

    def __init__(self, workspace_root):
        self.root = Path(workspace_root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.log_path = self.root / "provenance.jsonl"
        self.reports_dir = self.root / "reports"

    # -- event log ---------------------------------------------------------

    def _events(self) -> list:
        if not self.log_path.exists():
            return []
        events = []
        with open(self.log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    events.append(json.loads(line))
                except json.JSONDecodeError:
                    continue  # torn tail record
        return events

    def _append(self, event: dict) -> None:
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")
            fh.flush()

    def _materialize(self) -> dict:
        """Replay the event log into card_id -> ProvenanceCard, insertion order."""
        cards = {}
        for event in self._events():
            op = event.get("event")
            if op == "add":
                c = event["card"]
                cards[c["card_id"]] = ProvenanceCard(
                    card_id=c["card_id"],
                    created_at=c["created_at"],
                    kind=c["kind"],
                    payload=c["payload"],
                    annotation=c.get("annotation", ""),
                    annotation_history=list(c.get("annotation_history", [])),
                    group_id=c.get("group_id"),
                    source=c.get("source", {}),
                )
            elif op == "annotate" and event["card_id"] in cards:
                card = cards[event["card_id"]]
                card.annotation_history.append(event["text"])
                card.annotation = event["text"]
            elif op == "group" and event["card_id"] in cards:
                cards[event["card_id"]].group_id = event["group_id"]
            elif op == "delete":
                cards.pop(event["card_id"], None)
        return cards

    # -- card operations ----------------------------------------------------

    def add_card(self, kind: str, payload: dict, source: Optional[dict] = None,
                 annotation: str = "", created_at: Optional[str] = None) -> str:
        if kind not in CARD_KINDS:
            raise InvalidInput(f"unknown card kind {kind!r}")
        # Ids are never reused, even after deletes: number by add events.
        n_adds = sum(1 for e in self._events() if e.get("event") == "add")
        card_id = f"c{n_adds + 1:04d}"
        card = ProvenanceCard(
            card_id=card_id,
            created_at=created_at or time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            kind=kind,
            payload=payload,
            annotation=annotation,
            annotation_history=[annotation] if annotation else [],
            source=source or {},
        )
        self._append({"event": "add", "card": card.to_dict()})
        return card_id

    def get_card(self, card_id: str) -> ProvenanceCard:
        cards = self._materialize()
        if card_id not in cards:
            raise NotFound(f"card {card_id!r} not found")
        return cards[card_id]

    def annotate(self, card_id: str, text: str) -> None:
        if card_id not in self._materialize():
            raise NotFound(f"card {card_id!r} not found")
        self._append({"event": "annotate", "card_id": card_id, "text": text})

    def group(self, card_ids: list, group_name: str) -> None:
        cards = self._materialize()
        for card_id in card_ids:
            if card_id not in cards:
                raise NotFound(f"card {card_id!r} not found")
        for card_id in card_ids:
            self._append({"event": "group", "card_id": card_id, "group_id": group_name})

    def delete(self, card_id: str) -> None:
        if card_id not in self._materialize():
            raise NotFound(f"card {card_id!r} not found")
        for report in self.list_reports():
            for _, card_ids, _ in report.sections:
                if card_id in card_ids:
                    raise DanglingReference(
                        f"card {card_id!r} is referenced by report {report.report_id!r}"
                    )
        self._append({"event": "delete", "card_id": card_id})

    def list_cards(self, kind: Optional[str] = None, group: Optional[str] = None) -> list:
        cards = list(self._materialize().values())
        if kind is not None:
            cards = [c for c in cards if c.kind == kind]
        if group is not None:
            cards = [c for c in cards if c.group_id == group]
        return cards

    # -- reports -------------------------------------------------------------

    def assemble_report(self, title: str, sections: list, report_id: Optional[str] = None) -> Report:
        """sections: (heading, [card_id, ...], narrative) triples."""
        cards = self._materialize()
        for _, card_ids, _ in sections:
            for card_id in card_ids:
                if card_id not in cards:
                    raise DanglingReference(f"report references missing card {card_id!r}")
        if report_id is None:
            taken = {r.report_id for r in self.list_reports()}
            i = 1
            while f"r{i:04d}" in taken:
                i += 1
            report_id = f"r{i:04d}"
        report = Report(report_id=report_id, title=title,
                        sections=[(h, list(ids), n) for h, ids, n in sections])
        out_dir = self.reports_dir / report_id
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(
            json.dumps(report.to_dict(), indent=1, sort_keys=True), encoding="utf-8"
        )
        return report

    def get_report(self, report_id: str) -> Report:
        path = self.reports_dir / report_id / "report.json"
        if not path.exists():
            raise NotFound(f"report {report_id!r} not found")
        obj = json.loads(path.read_text(encoding="utf-8"))
        return Report(
            report_id=obj["report_id"],
            title=obj["title"],
            sections=[(s["heading"], list(s["card_ids"]), s["narrative"]) for s in obj["sections"]],
        )

    def list_reports(self) -> list:
        if not self.reports_dir.is_dir():
            return []
        out = []
        for path in sorted(self.reports_dir.iterdir()):
            if (path / "report.json").exists():
                out.append(self.get_report(path.name))
        return out

    def export_report(self, report: Report, fmt: str = "markdown") -> list:
        """Export to workspace/reports/<id>/; returns the written paths.

        Exports are pure functions of (report, card store): re-exporting
        writes byte-identical files.
        """
        cards = self._materialize()
        for _, card_ids, _ in report.sections:
            for card_id in card_ids:
                if card_id not in cards:
                    raise DanglingReference(f"report references missing card {card_id!r}")
        out_dir = self.reports_dir / report.report_id
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt == "json":
            path = out_dir / "report.json"
            bundle = report.to_dict()
            bundle["cards"] = {
                card_id: cards[card_id].to_dict()
                for _, ids, _ in report.sections
                for card_id in ids
            }
            path.write_text(json.dumps(bundle, indent=1, sort_keys=True), encoding="utf-8")
            written.append(path)
        elif fmt in ("markdown", "svg_bundle"):
            svg_paths = self._write_card_svgs(report, cards, out_dir)
            written.extend(svg_paths)
            if fmt == "markdown":
                path = out_dir / "report.md"
                path.write_text(self._markdown(report, cards), encoding="utf-8")
                written.append(path)
        else:
            raise InvalidInput(f"unknown export format {fmt!r}")
        return written

    def _write_card_svgs(self, report: Report, cards: dict, out_dir: Path) -> list:
        svg_dir = out_dir / "cards"
        written = []
        for _, card_ids, _ in report.sections:
            for card_id in card_ids:
                card = cards[card_id]
                if card.kind != "attribution":
                    continue
                payload = card.payload
                values = np.asarray(payload["values"]).reshape(payload["shape"])
                segments = None
                if payload.get("segments") is not None:
                    segments = np.asarray(payload["segments"]).reshape(payload["segments_shape"])
                svg_dir.mkdir(parents=True, exist_ok=True)
                path = svg_dir / f"{card_id}.svg"
                path.write_text(heatmap_svg(values, segments), encoding="utf-8")
                written.append(path)
        return written

    @staticmethod
    def _markdown(report: Report, cards: dict) -> str:
        lines = [f"# {report.title}", ""]
        for heading, card_ids, narrative in report.sections:
            lines.append(f"## {heading}")
            lines.append("")
            if narrative:
                lines.append(narrative)
                lines.append("")
            for card_id in card_ids:
                card = cards[card_id]
                lines.append(f"### {card.kind}: {card_id}")
                lines.append("")
                lines.append(f"- created: {card.created_at}")
                for key, value in sorted(card.source.items()):
                    lines.append(f"- {key}: {value}")
                if card.group_id:
                    lines.append(f"- group: {card.group_id}")
                lines.append("")
                if card.kind == "attribution":
                    lines.append(f"![{card_id}](cards/{card_id}.svg)")
                    lines.append("")
                elif card.kind == "metrics":
                    for key in ("accuracy", "macro_precision", "macro_recall", "mean_loss"):
                        if key in card.payload:
                            lines.append(f"- {key}: {card.payload[key]:.4f}")
                    lines.append("")
                elif card.kind in ("note", "recommendation"):
                    body = card.payload.get("text") or card.payload.get("rationale", "")
                    if body:
                        lines.append(body)
                        lines.append("")
                if card.annotation:
                    lines.append(f"> {card.annotation}")
                    lines.append("")
        return "\n".join(lines).rstrip() + "\n"
