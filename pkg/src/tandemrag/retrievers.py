"""Retrieval strategies over the block vector index.

Three shipped strategies: ``naive`` (embed the query, search), ``label``
(per-type top-k, score-ranked union, overall top-k), and ``symbiotic``
(augment the query with an LLM summary of the user's recent interaction
log before embedding). Strategies are stateless; session context arrives
as an argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

from pydantic import BaseModel, ConfigDict

from .adapters import LlmAdapter
from .clock import Clock, SystemClock
from .embedding import EmbedderContract
from .errors import InvalidError
from .vector_index import SearchHit, VectorIndex

INTENT_SEPARATOR = "\n[user intent]\n"
EVENT_WINDOW = 50
SUMMARY_MAX_CHARS = 600


class RetrievalResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    strategy_name: str
    query_as_issued: str
    augmented_query: str | None = None
    items: tuple[SearchHit, ...] = ()
    k_requested: int
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "strategy_name": self.strategy_name,
            "query_as_issued": self.query_as_issued,
            "augmented_query": self.augmented_query,
            "items": [
                {"block_id": h.block_id, "score": h.score,
                 "block_type": getattr(h.block_type, "value", h.block_type),
                 "document_id": h.document_id}
                for h in self.items
            ],
            "k_requested": self.k_requested,
            "warning": self.warning,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RetrievalResult":
        return cls(
            strategy_name=data["strategy_name"],
            query_as_issued=data["query_as_issued"],
            augmented_query=data.get("augmented_query"),
            items=tuple(SearchHit(i["block_id"], i["score"], i["block_type"],
                                  i["document_id"]) for i in data.get("items", [])),
            k_requested=data["k_requested"],
            warning=data.get("warning"),
        )


class IntentionSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    session_id: str
    summary_text: str
    source_event_count: int = 0
    generated_at: str = ""
    warning: str | None = None


@dataclass
class SessionContext:
    """What a strategy may read from the calling session."""

    session_id: str = ""
    events: Sequence[Mapping] = ()
    corpus: frozenset[str] | None = None


class StrategyContract(Protocol):
    name: str

    def retrieve(self, query: str, context: SessionContext, k: int) -> RetrievalResult: ...


def render_event_line(event: Mapping) -> str:
    """One transcript line per event: kind plus its salient payload."""
    kind = event.get("kind", "?")
    payload = event.get("payload", {}) or {}
    if kind == "SendQuery":
        return f"SendQuery: {payload.get('query', '')}"
    salient = " ".join(f"{k}={payload[k]}" for k in sorted(payload))
    return f"{kind}: {salient}" if salient else f"{kind}:"


def render_transcript(events: Sequence[Mapping], window: int = EVENT_WINDOW) -> str:
    """Compact transcript of the most recent events, oldest first."""
    recent = list(events)[-window:]
    return "\n".join(render_event_line(e) for e in recent)


def summarize_intention(session_id: str, events: Sequence[Mapping], llm: LlmAdapter,
                        clock: Clock | None = None) -> IntentionSummary:
    """Condense the recent interaction log through the LLM adapter.

    Zero events skip the adapter entirely. Adapter failure yields an empty
    summary with a warning so retrieval can degrade instead of failing; the
    event count is zeroed because no events informed the summary.
    """
    clock = clock or SystemClock()
    stamp = clock.now().isoformat().replace("+00:00", "Z")
    recent = list(events)[-EVENT_WINDOW:]
    if not recent:
        return IntentionSummary(session_id=session_id, summary_text="",
                                source_event_count=0, generated_at=stamp)
    transcript = render_transcript(recent, window=EVENT_WINDOW)
    try:
        text = llm.complete("intention_summary", transcript, SUMMARY_MAX_CHARS)
    except Exception as exc:
        return IntentionSummary(session_id=session_id, summary_text="",
                                source_event_count=0, generated_at=stamp,
                                warning=f"intention summary unavailable: {exc}")
    text = text[:SUMMARY_MAX_CHARS]
    if not text.strip():
        return IntentionSummary(session_id=session_id, summary_text="",
                                source_event_count=0, generated_at=stamp,
                                warning="intention summary came back empty")
    return IntentionSummary(session_id=session_id, summary_text=text,
                            source_event_count=len(recent), generated_at=stamp)


def _search(index: VectorIndex, embedder: EmbedderContract, text: str, k: int,
            corpus: frozenset[str] | None) -> tuple[SearchHit, ...]:
    vector = embedder.embed(text)
    return tuple(index.search(vector, k, corpus_filter=corpus))


def naive_retrieve(index: VectorIndex, embedder: EmbedderContract, query: str,
                   k: int, corpus: frozenset[str] | None = None) -> RetrievalResult:
    """Embed the query as issued and take the global top-k."""
    if k < 1:
        raise InvalidError("k must be at least 1")
    return RetrievalResult(
        strategy_name="naive", query_as_issued=query, k_requested=k,
        items=_search(index, embedder, query, k, corpus),
    )


def label_naive_retrieve(index: VectorIndex, embedder: EmbedderContract, query: str,
                         k: int, corpus: frozenset[str] | None = None) -> RetrievalResult:
    """Take top-k per block type present, then the best k of the union."""
    if k < 1:
        raise InvalidError("k must be at least 1")
    vector = embedder.embed(query)
    union: list[SearchHit] = []
    for block_type in index.block_types(corpus):
        union.extend(index.search(vector, k, type_filter=block_type, corpus_filter=corpus))
    return RetrievalResult(
        strategy_name="label", query_as_issued=query, k_requested=k,
        items=tuple(merge_ranked(union, k)),
    )


def merge_ranked(hits: Sequence[SearchHit], k: int) -> list[SearchHit]:
    """Merge rule for the per-type union: rank by score, ties by block id."""
    return sorted(hits, key=lambda h: (-h.score, h.block_id))[:k]


def symbiotic_retrieve(index: VectorIndex, embedder: EmbedderContract, llm: LlmAdapter,
                       query: str, context: SessionContext, k: int,
                       clock: Clock | None = None) -> RetrievalResult:
    """Augment the query with an intention summary of the recent log.

    With no events (or a failed summarizer) the search is identical to
    naive retrieval; the failure case carries a warning.
    """
    if k < 1:
        raise InvalidError("k must be at least 1")
    summary = summarize_intention(context.session_id, context.events, llm, clock=clock)
    if summary.summary_text:
        augmented: str | None = query + INTENT_SEPARATOR + summary.summary_text
        search_text = augmented
    else:
        augmented = None
        search_text = query
    return RetrievalResult(
        strategy_name="symbiotic", query_as_issued=query, augmented_query=augmented,
        k_requested=k, warning=summary.warning,
        items=_search(index, embedder, search_text, k, context.corpus),
    )


# --- strategy registry -----------------------------------------------------

@dataclass
class _BoundStrategy:
    name: str
    fn: Callable[[str, SessionContext, int], RetrievalResult]

    def retrieve(self, query: str, context: SessionContext, k: int) -> RetrievalResult:
        return self.fn(query, context, k)


StrategyFactory = Callable[[VectorIndex, EmbedderContract, LlmAdapter, Clock], StrategyContract]

_REGISTRY: dict[str, StrategyFactory] = {}


def register_strategy(name: str, factory: StrategyFactory) -> None:
    """Register a strategy factory under a unique name."""
    if name in _REGISTRY:
        raise InvalidError(f"strategy {name!r} is already registered")
    _REGISTRY[name] = factory


def strategy_names() -> list[str]:
    return sorted(_REGISTRY)


def build_strategy(name: str, index: VectorIndex, embedder: EmbedderContract,
                   llm: LlmAdapter, clock: Clock | None = None) -> StrategyContract:
    if name not in _REGISTRY:
        raise InvalidError(f"unknown strategy {name!r}; known: {', '.join(strategy_names())}")
    return _REGISTRY[name](index, embedder, llm, clock or SystemClock())


def _naive_factory(index, embedder, llm, clock) -> StrategyContract:
    return _BoundStrategy("naive", lambda q, ctx, k: naive_retrieve(
        index, embedder, q, k, ctx.corpus))


def _label_factory(index, embedder, llm, clock) -> StrategyContract:
    return _BoundStrategy("label", lambda q, ctx, k: label_naive_retrieve(
        index, embedder, q, k, ctx.corpus))


def _symbiotic_factory(index, embedder, llm, clock) -> StrategyContract:
    return _BoundStrategy("symbiotic", lambda q, ctx, k: symbiotic_retrieve(
        index, embedder, llm, q, ctx, k, clock=clock))


register_strategy("naive", _naive_factory)
register_strategy("label", _label_factory)
register_strategy("symbiotic", _symbiotic_factory)
