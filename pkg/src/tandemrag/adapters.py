"""Pluggable extraction and LLM adapters.

Each pipeline capability (layout detection, OCR, table extraction, formula
recognition, figure description) sits behind a small contract with three
interchangeable modes: ``reference`` (deterministic, rule-based), ``mock``
(fixture-driven, for tests), and ``http`` (delegate to a model service).
Adapter invocations never touch the block store; they map a page or crop
reference to a payload record.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from pydantic import BaseModel

from .errors import AdapterUnavailableError, InvalidError
from .model import BlockType

MARGIN = 72.0
LINE_HEIGHT = 14.0
PARAGRAPH_GAP = 6.0


class PageRef(BaseModel):
    """What a layout detector sees: one page plus its native text layer."""

    document_id: str
    source_name: str = ""
    page_index: int
    width: float
    height: float
    native_text: str = ""


class DetectedRegion(BaseModel):
    x0: float
    y0: float
    x1: float
    y1: float
    label: str
    native_text: str | None = None
    fixture_payload: dict | None = None


class CropRef(BaseModel):
    """What an extraction adapter sees: one typed region of a page."""

    document_id: str
    page_index: int
    x0: float
    y0: float
    x1: float
    y1: float
    block_type: BlockType
    native_text: str | None = None
    fixture_payload: dict | None = None


class LayoutDetectorContract(Protocol):
    def detect(self, page: PageRef) -> list[DetectedRegion]: ...

    def health(self) -> bool: ...


class ExtractionAdapterContract(Protocol):
    def invoke(self, crop: CropRef) -> dict: ...

    def health(self) -> bool: ...


# --- layout detection ------------------------------------------------------

class ReferenceLayoutDetector:
    """Paragraph splitter over the native text layer.

    Emits one Text region per blank-line-separated paragraph, stacked down
    the page with synthetic geometry (compressed if the page would overflow).
    """

    def health(self) -> bool:
        return True

    def detect(self, page: PageRef) -> list[DetectedRegion]:
        paragraphs = [p for p in re.split(r"\n\s*\n", page.native_text) if p.strip()]
        if not paragraphs:
            return []
        heights = [LINE_HEIGHT * len(p.strip().splitlines()) for p in paragraphs]
        available = max(page.height - 2 * MARGIN, 1.0)
        total = sum(heights) + PARAGRAPH_GAP * (len(paragraphs) - 1)
        scale = min(1.0, available / total)
        x0 = min(MARGIN, page.width / 4)
        x1 = max(page.width - MARGIN, x0 + 1.0)
        regions = []
        cursor = min(MARGIN, page.height / 4)
        for paragraph, height in zip(paragraphs, heights):
            h = max(height * scale, 1.0)
            regions.append(DetectedRegion(
                x0=x0, y0=cursor, x1=x1, y1=cursor + h,
                label="Text", native_text=paragraph.strip(),
            ))
            cursor += h + PARAGRAPH_GAP * scale
        return regions


class MockLayoutDetector:
    """Replays a sidecar fixture: region lists per page, optionally per document.

    Fixture shape: {"documents": {source_name: {"pages": [...]}},
    "pages": [...], "fallback": "reference"}. Documents not listed use the
    top-level pages, then the reference detector when fallback is set.
    """

    def __init__(self, fixture: dict, healthy: bool = True):
        self.fixture = fixture
        self.healthy = healthy
        self._fallback = (ReferenceLayoutDetector()
                          if fixture.get("fallback") == "reference" else None)

    def health(self) -> bool:
        return self.healthy

    def detect(self, page: PageRef) -> list[DetectedRegion]:
        if not self.healthy:
            raise AdapterUnavailableError("mock layout detector is unhealthy")
        documents = self.fixture.get("documents", {})
        if page.source_name in documents:
            pages = documents[page.source_name].get("pages", [])
        elif "pages" in self.fixture:
            pages = self.fixture["pages"]
        elif self._fallback is not None:
            return self._fallback.detect(page)
        else:
            pages = []
        for page_entry in pages:
            if page_entry.get("page_index") == page.page_index:
                return [
                    DetectedRegion(
                        x0=r["bbox"][0], y0=r["bbox"][1], x1=r["bbox"][2], y1=r["bbox"][3],
                        label=r.get("block_type", "Text"),
                        native_text=r.get("native_text"),
                        fixture_payload=r.get("payload"),
                    )
                    for r in page_entry.get("regions", [])
                ]
        return []


class HttpLayoutDetector:
    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def health(self) -> bool:
        import httpx

        try:
            return httpx.get(self.endpoint + "/health", timeout=5.0).status_code == 200
        except Exception:
            return False

    def detect(self, page: PageRef) -> list[DetectedRegion]:
        import httpx

        try:
            response = httpx.post(self.endpoint, json=page.model_dump(), timeout=self.timeout)
            response.raise_for_status()
            return [DetectedRegion.model_validate(r) for r in response.json()["regions"]]
        except AdapterUnavailableError:
            raise
        except Exception as exc:
            raise AdapterUnavailableError(f"layout detector failed: {exc}") from exc


# --- per-type extraction ---------------------------------------------------

class ReferenceExtractor:
    """Deterministic extraction from native signals, one instance per kind."""

    def __init__(self, kind: str):
        self.kind = kind

    def health(self) -> bool:
        return True

    def invoke(self, crop: CropRef) -> dict:
        native = (crop.native_text or "").strip()
        page_label = f"page {crop.page_index + 1}"
        if self.kind == "ocr":
            return {"text": native}
        if self.kind == "table_extractor":
            return {"caption": "", "cells": [[native or f"Table region on {page_label}"]]}
        if self.kind == "formula_extractor":
            return {"latex": native or f"\\mathrm{{region}}_{{{crop.page_index + 1}}}",
                    "description": f"Formula region on {page_label}"}
        if self.kind == "figure_describer":
            return {"caption": "", "description": native or f"Figure region on {page_label}"}
        raise InvalidError(f"unknown extraction kind {self.kind}")


class MockExtractor:
    """Echoes the region's sidecar payload, or a constant payload override."""

    def __init__(self, kind: str, fixture: dict | None = None, healthy: bool = True):
        self.kind = kind
        self.fixture = fixture or {}
        self.healthy = healthy

    def health(self) -> bool:
        return self.healthy

    def invoke(self, crop: CropRef) -> dict:
        if not self.healthy:
            raise AdapterUnavailableError(f"mock {self.kind} is unhealthy")
        if crop.fixture_payload is not None:
            return dict(crop.fixture_payload)
        if "payload" in self.fixture:
            return dict(self.fixture["payload"])
        raise AdapterUnavailableError(
            f"mock {self.kind} has no fixture payload for page {crop.page_index}")


class HttpExtractor:
    def __init__(self, kind: str, endpoint: str, timeout: float = 60.0):
        self.kind = kind
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def health(self) -> bool:
        import httpx

        try:
            return httpx.get(self.endpoint + "/health", timeout=5.0).status_code == 200
        except Exception:
            return False

    def invoke(self, crop: CropRef) -> dict:
        import httpx

        try:
            response = httpx.post(self.endpoint, json=crop.model_dump(), timeout=self.timeout)
            response.raise_for_status()
            return response.json()
        except Exception as exc:
            raise AdapterUnavailableError(f"{self.kind} adapter failed: {exc}") from exc


# --- LLM adapter -----------------------------------------------------------

class LlmAdapter(Protocol):
    def complete(self, purpose: str, prompt: str, max_chars: int) -> str: ...

    def health(self) -> bool: ...


class EchoLlm:
    """Deterministic mock LLM with fixed per-purpose echo rules."""

    def health(self) -> bool:
        return True

    def complete(self, purpose: str, prompt: str, max_chars: int) -> str:
        if purpose == "intention_summary":
            queries = re.findall(r"^SendQuery: (.+)$", prompt, flags=re.MULTILINE)
            if queries:
                text = f"USER SEEKS: {queries[-1]}"
            else:
                lines = [l for l in prompt.splitlines() if l.strip()]
                text = f"USER ACTIVITY: {lines[-1]}" if lines else ""
        elif purpose == "answer":
            blocks = prompt.count("[source:")
            lines = [l for l in prompt.splitlines() if l.strip()]
            query = lines[-1] if lines else ""
            text = f"Drawing on {blocks} source blocks: {query}"
        elif purpose == "report_section":
            blocks = prompt.count("[source:")
            text = f"Draft based on {blocks} curated blocks."
        else:
            text = prompt
        return text[:max_chars]


class ScriptedLlm:
    """Test helper: delegate to a caller-supplied function."""

    def __init__(self, fn: Callable[[str, str, int], str]):
        self.fn = fn

    def health(self) -> bool:
        return True

    def complete(self, purpose: str, prompt: str, max_chars: int) -> str:
        return self.fn(purpose, prompt, max_chars)[:max_chars]


class FailingLlm:
    def __init__(self, message: str = "llm adapter down"):
        self.message = message

    def health(self) -> bool:
        return False

    def complete(self, purpose: str, prompt: str, max_chars: int) -> str:
        raise AdapterUnavailableError(self.message)


class HttpLlm:
    def __init__(self, endpoint: str, timeout: float = 120.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def health(self) -> bool:
        import httpx

        try:
            return httpx.get(self.endpoint + "/health", timeout=5.0).status_code == 200
        except Exception:
            return False

    def complete(self, purpose: str, prompt: str, max_chars: int) -> str:
        import httpx

        try:
            response = httpx.post(
                self.endpoint,
                json={"purpose": purpose, "prompt": prompt, "max_chars": max_chars},
                timeout=self.timeout,
            )
            response.raise_for_status()
            return str(response.json()["text"])[:max_chars]
        except Exception as exc:
            raise AdapterUnavailableError(f"llm adapter failed: {exc}") from exc


# --- configuration ---------------------------------------------------------

ADAPTER_KINDS = ("layout_detector", "ocr", "table_extractor", "formula_extractor",
                 "figure_describer")

ENV_PREFIX = "TANDEMRAG_ADAPTER_"


@dataclass
class AdapterSet:
    layout_detector: LayoutDetectorContract
    ocr: ExtractionAdapterContract
    table_extractor: ExtractionAdapterContract
    formula_extractor: ExtractionAdapterContract
    figure_describer: ExtractionAdapterContract

    def extractor_for(self, block_type: BlockType) -> ExtractionAdapterContract:
        if block_type is BlockType.TABLE:
            return self.table_extractor
        if block_type is BlockType.FORMULA:
            return self.formula_extractor
        if block_type is BlockType.FIGURE:
            return self.figure_describer
        return self.ocr

    @classmethod
    def reference(cls) -> "AdapterSet":
        return cls(
            layout_detector=ReferenceLayoutDetector(),
            ocr=ReferenceExtractor("ocr"),
            table_extractor=ReferenceExtractor("table_extractor"),
            formula_extractor=ReferenceExtractor("formula_extractor"),
            figure_describer=ReferenceExtractor("figure_describer"),
        )

    @classmethod
    def from_config(cls, config: dict, base_dir: Path | None = None) -> "AdapterSet":
        """Build adapters from {adapter_kind: {mode, endpoint?, fixture?}}.

        Endpoints may be overridden through TANDEMRAG_ADAPTER_<KIND>_ENDPOINT.
        """
        built: dict[str, object] = {}
        for kind in ADAPTER_KINDS:
            entry = config.get(kind, {"mode": "reference"})
            mode = entry.get("mode", "reference")
            endpoint = os.environ.get(ENV_PREFIX + kind.upper() + "_ENDPOINT",
                                      entry.get("endpoint"))
            fixture = None
            if entry.get("fixture"):
                fixture_path = Path(entry["fixture"])
                if base_dir is not None and not fixture_path.is_absolute():
                    fixture_path = base_dir / fixture_path
                fixture = json.loads(fixture_path.read_text(encoding="utf-8"))
            if mode == "reference":
                built[kind] = (ReferenceLayoutDetector() if kind == "layout_detector"
                               else ReferenceExtractor(kind))
            elif mode == "mock":
                built[kind] = (MockLayoutDetector(fixture or {}) if kind == "layout_detector"
                               else MockExtractor(kind, fixture))
            elif mode == "http":
                if not endpoint:
                    raise InvalidError(f"adapter {kind} in http mode needs an endpoint")
                built[kind] = (HttpLayoutDetector(endpoint) if kind == "layout_detector"
                               else HttpExtractor(kind, endpoint))
            else:
                raise InvalidError(f"unknown adapter mode {mode!r} for {kind}")
        return cls(**built)  # type: ignore[arg-type]


def build_llm(config: dict) -> LlmAdapter:
    """Build the LLM adapter from {mode: mock|http, endpoint?}."""
    mode = config.get("mode", "mock")
    if mode == "mock":
        return EchoLlm()
    if mode == "http":
        endpoint = os.environ.get("TANDEMRAG_LLM_ENDPOINT", config.get("endpoint"))
        if not endpoint:
            raise InvalidError("llm adapter in http mode needs an endpoint")
        return HttpLlm(endpoint)
    raise InvalidError(f"unknown llm mode {mode!r}")
