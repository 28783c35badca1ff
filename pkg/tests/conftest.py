import json
from pathlib import Path

import pytest

from tandemrag.adapters import AdapterSet
from tandemrag.clock import LogicalClock
from tandemrag.workspace import Workspace

FIXTURES = Path(__file__).resolve().parent / "fixtures"
CORPUS = FIXTURES / "corpus"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def clock() -> LogicalClock:
    return LogicalClock()


@pytest.fixture
def fixture_adapters() -> AdapterSet:
    config = json.loads((FIXTURES / "adapters.json").read_text(encoding="utf-8"))
    return AdapterSet.from_config(config, base_dir=FIXTURES)


@pytest.fixture
def workspace(tmp_path) -> Workspace:
    return Workspace(tmp_path / "data", clock=LogicalClock())


def ingest_corpus(ws: Workspace) -> list[str]:
    """Ingest the bundled 3-document corpus; returns document ids in file order."""
    ids = []
    for path in sorted(CORPUS.iterdir()):
        document, _ = ws.ingest_bytes(path.read_bytes(), path.name)
        ids.append(document.document_id)
    return ids


def corpus_workspace_at(root: Path) -> Workspace:
    """Fresh workspace with fixture adapters and the corpus ingested."""
    config = json.loads((FIXTURES / "adapters.json").read_text(encoding="utf-8"))
    ws = Workspace(root, adapters=AdapterSet.from_config(config, base_dir=FIXTURES),
                   clock=LogicalClock())
    ingest_corpus(ws)
    return ws


@pytest.fixture
def corpus_workspace(tmp_path) -> Workspace:
    return corpus_workspace_at(tmp_path / "data")


def make_text_document(ws: Workspace, name: str, paragraphs: list[str]):
    """Ingest a small plain-text document built from paragraphs."""
    data = ("\n\n".join(paragraphs) + "\n").encode("utf-8")
    document, _ = ws.ingest_bytes(data, name)
    return document
