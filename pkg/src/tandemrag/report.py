"""Report builder over curated blocks.

A report is an ordered list of sections; each section carries a heading,
a writing instruction, an ordered list of assigned blocks, and a draft
whose revision increases on every generation or manual edit. Exports are
deterministic markdown or HTML with a provenance appendix.
"""

from __future__ import annotations

import html
import re
import threading
from pathlib import Path

from pydantic import BaseModel, ConfigDict

from .adapters import LlmAdapter
from .clock import Clock, SystemClock
from .errors import ConflictError, InvalidError, NotFoundError
from .session import render_prompt
from .storage import BlockStore, atomic_write_text, canonical_json

DRAFT_MAX_CHARS = 8000


class ReportSection(BaseModel):
    model_config = ConfigDict(frozen=True)

    section_id: str
    heading: str
    instruction: str = ""
    block_ids: tuple[str, ...] = ()
    draft_text: str = ""
    draft_revision: int = 0

    def to_dict(self) -> dict:
        return {
            "section_id": self.section_id,
            "heading": self.heading,
            "instruction": self.instruction,
            "block_ids": list(self.block_ids),
            "draft_text": self.draft_text,
            "draft_revision": self.draft_revision,
        }


class Report(BaseModel):
    model_config = ConfigDict(frozen=True)

    report_id: str
    session_id: str
    title: str
    sections: tuple[ReportSection, ...] = ()
    created_at: str = ""

    def to_dict(self) -> dict:
        return {
            "report_id": self.report_id,
            "session_id": self.session_id,
            "title": self.title,
            "created_at": self.created_at,
            "sections": [s.to_dict() for s in self.sections],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        return cls(
            report_id=data["report_id"], session_id=data["session_id"],
            title=data["title"], created_at=data.get("created_at", ""),
            sections=tuple(ReportSection(**s) for s in data.get("sections", [])),
        )

    def section(self, section_id: str) -> ReportSection:
        for section in self.sections:
            if section.section_id == section_id:
                return section
        raise NotFoundError(f"unknown section {section_id}")

    def cited_blocks(self) -> list[str]:
        """Distinct assigned blocks in first-appearance order."""
        seen: list[str] = []
        for section in self.sections:
            for block_id in section.block_ids:
                if block_id not in seen:
                    seen.append(block_id)
        return seen


class ReportManager:
    """Owns report persistence and the single-writer-per-report rule."""

    def __init__(self, store: BlockStore, llm: LlmAdapter, reports_dir: Path,
                 clock: Clock | None = None):
        self.store = store
        self.llm = llm
        self.reports_dir = Path(reports_dir)
        self.reports_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock or SystemClock()
        self._reports: dict[str, Report] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self._load()

    def _load(self) -> None:
        import json

        for path in sorted(self.reports_dir.glob("*.json")):
            report = Report.from_dict(json.loads(path.read_text(encoding="utf-8")))
            self._reports[report.report_id] = report
            self._locks[report.report_id] = threading.Lock()

    def _save(self, report: Report) -> None:
        self._reports[report.report_id] = report
        path = self.reports_dir / f"{report.report_id}.json"
        atomic_write_text(path, canonical_json(report.to_dict()))

    def _now(self) -> str:
        return self.clock.now().isoformat().replace("+00:00", "Z")

    def _next_report_id(self) -> str:
        highest = 0
        for rid in self._reports:
            match = re.fullmatch(r"r-(\d+)", rid)
            if match:
                highest = max(highest, int(match.group(1)))
        return f"r-{highest + 1:04d}"

    def get(self, report_id: str) -> Report:
        report = self._reports.get(report_id)
        if report is None:
            raise NotFoundError(f"unknown report {report_id}")
        return report

    def list_reports(self) -> list[Report]:
        return [self._reports[rid] for rid in sorted(self._reports)]

    def _lock(self, report_id: str) -> threading.Lock:
        with self._guard:
            if report_id not in self._locks:
                raise NotFoundError(f"unknown report {report_id}")
            return self._locks[report_id]

    def create_report(self, session_id: str, title: str) -> Report:
        if not title.strip():
            raise InvalidError("report title must not be empty")
        with self._guard:
            report = Report(report_id=self._next_report_id(), session_id=session_id,
                            title=title, created_at=self._now())
            self._reports[report.report_id] = report
            self._locks[report.report_id] = threading.Lock()
        self._save(report)
        return report

    def add_section(self, report_id: str, heading: str, instruction: str = "") -> Report:
        with self._lock(report_id):
            report = self.get(report_id)
            section = ReportSection(
                section_id=f"sec-{len(report.sections) + 1:02d}",
                heading=heading, instruction=instruction,
            )
            report = report.model_copy(update={"sections": report.sections + (section,)})
            self._save(report)
            return report

    def _replace_section(self, report: Report, updated: ReportSection) -> Report:
        sections = tuple(updated if s.section_id == updated.section_id else s
                         for s in report.sections)
        return report.model_copy(update={"sections": sections})

    def assign_block(self, report_id: str, section_id: str, block_id: str,
                     position: int) -> Report:
        """Insert a block at a position; duplicates within a section rejected."""
        with self._lock(report_id):
            report = self.get(report_id)
            section = report.section(section_id)
            if block_id in section.block_ids:
                raise ConflictError(f"block {block_id} is already in this section")
            if not 0 <= position <= len(section.block_ids):
                raise InvalidError(
                    f"position must be within 0..{len(section.block_ids)}")
            self.store.get_block(block_id)
            block_ids = list(section.block_ids)
            block_ids.insert(position, block_id)
            report = self._replace_section(
                report, section.model_copy(update={"block_ids": tuple(block_ids)}))
            self._save(report)
            return report

    def remove_block(self, report_id: str, section_id: str, block_id: str) -> Report:
        with self._lock(report_id):
            report = self.get(report_id)
            section = report.section(section_id)
            if block_id not in section.block_ids:
                raise NotFoundError(f"block {block_id} is not in this section")
            block_ids = tuple(b for b in section.block_ids if b != block_id)
            report = self._replace_section(
                report, section.model_copy(update={"block_ids": block_ids}))
            self._save(report)
            return report

    def set_instruction(self, report_id: str, section_id: str, text: str) -> Report:
        with self._lock(report_id):
            report = self.get(report_id)
            section = report.section(section_id)
            report = self._replace_section(
                report, section.model_copy(update={"instruction": text}))
            self._save(report)
            return report

    def edit_draft(self, report_id: str, section_id: str, text: str) -> Report:
        """Manual draft edit; bumps the draft revision like a generation."""
        with self._lock(report_id):
            report = self.get(report_id)
            section = report.section(section_id)
            report = self._replace_section(report, section.model_copy(update={
                "draft_text": text, "draft_revision": section.draft_revision + 1,
            }))
            self._save(report)
            return report

    def generate_section(self, report_id: str, section_id: str) -> Report:
        """Draft the section from its instruction and assigned blocks.

        Adapter failure leaves the stored draft untouched and re-raises.
        """
        with self._lock(report_id):
            report = self.get(report_id)
            section = report.section(section_id)
            if not section.block_ids and not section.instruction.strip():
                raise InvalidError(
                    "section needs at least one block or a non-empty instruction")
            segments = []
            for block_id in section.block_ids:
                document, block = self.store.get_block(block_id)
                text = "[removed]" if block.tombstoned else block.text_repr
                segments.append((document.source_name, block.bbox.page_index,
                                 block.block_type.value, text))
            prompt = _section_prompt(section.heading, section.instruction, segments)
            draft = self.llm.complete("report_section", prompt, DRAFT_MAX_CHARS)
            report = self._replace_section(report, section.model_copy(update={
                "draft_text": draft, "draft_revision": section.draft_revision + 1,
            }))
            self._save(report)
            return report

    # --- export ---------------------------------------------------------------

    def export_report(self, report_id: str, fmt: str) -> bytes:
        """Render the report deterministically as markdown or HTML bytes."""
        report = self.get(report_id)
        if fmt in ("md", "markdown"):
            return self._export_markdown(report).encode("utf-8")
        if fmt == "html":
            return self._export_html(report).encode("utf-8")
        raise InvalidError(f"unknown export format {fmt!r}; use md or html")

    def _appendix_lines(self, report: Report) -> list[str]:
        lines = []
        for block_id in report.cited_blocks():
            document, block = self.store.get_block(block_id)
            notice = " [removed]" if block.tombstoned else ""
            lines.append(f"{block_id} | {document.source_name} "
                         f"p.{block.bbox.page_index + 1} {block.block_type.value}{notice}")
        return lines

    def _export_markdown(self, report: Report) -> str:
        parts = [f"# {report.title}"]
        for section in report.sections:
            parts.append(f"## {section.heading}")
            if section.draft_text:
                parts.append(section.draft_text)
        parts.append("## Appendix: Cited Blocks")
        lines = self._appendix_lines(report)
        if lines:
            parts.append("\n".join(f"- {line}" for line in lines))
        return "\n\n".join(parts) + "\n"

    def _export_html(self, report: Report) -> str:
        esc = html.escape
        parts = ["<!DOCTYPE html>", "<html><head><meta charset=\"utf-8\">",
                 f"<title>{esc(report.title)}</title></head><body>",
                 f"<h1>{esc(report.title)}</h1>"]
        for section in report.sections:
            parts.append(f"<h2>{esc(section.heading)}</h2>")
            if section.draft_text:
                parts.append(f"<p>{esc(section.draft_text)}</p>")
        parts.append("<h2>Appendix: Cited Blocks</h2>")
        lines = self._appendix_lines(report)
        if lines:
            parts.append("<ul>")
            parts.extend(f"<li>{esc(line)}</li>" for line in lines)
            parts.append("</ul>")
        parts.append("</body></html>")
        return "\n".join(parts) + "\n"


def _section_prompt(heading: str, instruction: str,
                    segments: list[tuple[str, int, str, str]]) -> str:
    """Heading and instruction first, then each block with provenance."""
    tail = instruction if instruction.strip() else "Write this section."
    return f"Section: {heading}\n\n" + render_prompt(segments, tail)
