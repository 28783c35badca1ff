"""Retrieval strategies: transcripts, summaries, ranking rules, the registry."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import oracle_top_k
from tandemrag.adapters import EchoLlm, FailingLlm, ScriptedLlm
from tandemrag.clock import LogicalClock
from tandemrag.embedding import ReferenceEmbedder
from tandemrag.errors import InvalidError
from tandemrag.model import BlockType, BoundingBox, make_block
from tandemrag.retrievers import (
    EVENT_WINDOW,
    INTENT_SEPARATOR,
    SUMMARY_MAX_CHARS,
    RetrievalResult,
    SessionContext,
    _REGISTRY,
    build_strategy,
    label_naive_retrieve,
    merge_ranked,
    naive_retrieve,
    register_strategy,
    render_event_line,
    render_transcript,
    strategy_names,
    summarize_intention,
    symbiotic_retrieve,
)
from tandemrag.vector_index import SearchHit, VectorIndex


def block(document_id, text, y0, block_type=BlockType.TEXT):
    payloads = {
        BlockType.TABLE: {"cells": [[text]]},
        BlockType.FORMULA: {"latex": text},
        BlockType.FIGURE: {"description": text},
    }
    payload = payloads.get(block_type, {"text": text})
    b = BoundingBox(page_index=0, x0=72.0, y0=y0, x1=540.0, y1=y0 + 20.0)
    return make_block(document_id, b, block_type, payload)


@pytest.fixture
def index():
    idx = VectorIndex(ReferenceEmbedder())
    rows = [
        ("d-a", "pump test drawdown at well N-7", BlockType.TEXT),
        ("d-a", "recovery curve analysis for the pump test", BlockType.TEXT),
        ("d-a", "station chloride concentrations", BlockType.TABLE),
        ("d-a", "drawdown versus time", BlockType.TABLE),
        ("d-a", "s = Q/T drawdown relation", BlockType.FORMULA),
        ("d-b", "seasonal depth to water table", BlockType.FIGURE),
        ("d-b", "irrigation pumping volumes by district", BlockType.TEXT),
        ("d-b", "annual picnic committee minutes", BlockType.TEXT),
    ]
    for i, (doc, text, btype) in enumerate(rows):
        idx.upsert(block(doc, text, y0=100.0 + 25.0 * i, block_type=btype))
    return idx


EMBEDDER = ReferenceEmbedder()


def send_query(q):
    return {"kind": "SendQuery", "payload": {"query": q}}


def click(block_id="b-1"):
    return {"kind": "ClickResult", "payload": {"block_id": block_id}}


# --- transcript rendering -----------------------------------------------------

def test_render_event_line_kinds():
    assert render_event_line(send_query("pump test")) == "SendQuery: pump test"
    assert render_event_line(click("b-9")) == "ClickResult: block_id=b-9"
    line = render_event_line({"kind": "NavigatePage",
                              "payload": {"page_index": 2, "document_id": "d-a"}})
    assert line == "NavigatePage: document_id=d-a page_index=2"
    assert render_event_line({"kind": "Regenerate"}) == "Regenerate:"


def test_render_transcript_windows_oldest_first():
    events = [send_query(f"q{i}") for i in range(60)]
    text = render_transcript(events)
    lines = text.splitlines()
    assert len(lines) == EVENT_WINDOW
    assert lines[0] == "SendQuery: q10"
    assert lines[-1] == "SendQuery: q59"


# --- intention summaries --------------------------------------------------------

def test_summary_of_empty_log_skips_the_adapter():
    class Exploding:
        def health(self):
            return True

        def complete(self, purpose, prompt, max_chars):
            raise AssertionError("adapter must not be called")

    summary = summarize_intention("s-0001", [], Exploding(), clock=LogicalClock())
    assert summary.summary_text == ""
    assert summary.source_event_count == 0
    assert summary.warning is None
    assert summary.generated_at.endswith("Z")


def test_summary_reflects_last_query_in_window():
    events = [send_query("old question"), click(), send_query("newest question")]
    summary = summarize_intention("s-0001", events, EchoLlm(), clock=LogicalClock())
    assert summary.summary_text == "USER SEEKS: newest question"
    assert summary.source_event_count == 3


def test_summary_window_drops_old_events():
    events = [send_query("ancient question")] + [click(f"b-{i}") for i in range(EVENT_WINDOW)]
    summary = summarize_intention("s-0001", events, EchoLlm(), clock=LogicalClock())
    assert summary.summary_text.startswith("USER ACTIVITY:")
    assert summary.source_event_count == EVENT_WINDOW


def test_summary_is_capped():
    events = [send_query("x" * 2000)]
    summary = summarize_intention("s-0001", events, EchoLlm(), clock=LogicalClock())
    assert len(summary.summary_text) == SUMMARY_MAX_CHARS


def test_summary_failure_degrades_with_warning():
    summary = summarize_intention("s-0001", [send_query("q")], FailingLlm("boom"),
                                  clock=LogicalClock())
    assert summary.summary_text == ""
    assert summary.source_event_count == 0
    assert "boom" in summary.warning


def test_summary_empty_completion_warns():
    summary = summarize_intention("s-0001", [send_query("q")],
                                  ScriptedLlm(lambda *a: "   "), clock=LogicalClock())
    assert summary.summary_text == ""
    assert summary.source_event_count == 0
    assert "empty" in summary.warning


@given(
    n_events=st.integers(min_value=0, max_value=8),
    completion=st.sampled_from(["", "   ", "focused on wells", "x" * 700]),
)
def test_summary_text_empty_iff_no_source_events(n_events, completion):
    events = [send_query(f"q{i}") for i in range(n_events)]
    llm = ScriptedLlm(lambda *a: completion)
    summary = summarize_intention("s-0001", events, llm, clock=LogicalClock())
    assert (summary.summary_text == "") == (summary.source_event_count == 0)
    assert len(summary.summary_text) <= SUMMARY_MAX_CHARS


# --- naive strategy ---------------------------------------------------------------

def test_naive_matches_oracle(index):
    result = naive_retrieve(index, EMBEDDER, "pump test drawdown", k=4)
    assert result.strategy_name == "naive"
    assert result.augmented_query is None
    assert result.k_requested == 4
    expected = oracle_top_k(index.entries(), EMBEDDER.embed("pump test drawdown"), 4)
    assert [(h.block_id, h.score) for h in result.items] == expected


def test_naive_respects_corpus_filter(index):
    result = naive_retrieve(index, EMBEDDER, "pumping", k=8, corpus=frozenset({"d-b"}))
    assert result.items
    assert all(h.document_id == "d-b" for h in result.items)


def test_naive_rejects_bad_k(index):
    with pytest.raises(InvalidError):
        naive_retrieve(index, EMBEDDER, "q", k=0)


def test_naive_on_empty_index():
    result = naive_retrieve(VectorIndex(ReferenceEmbedder()), EMBEDDER, "q", k=5)
    assert result.items == ()


# --- label strategy ----------------------------------------------------------------

def test_merge_ranked_orders_and_truncates():
    hits = [
        SearchHit("b-2", 0.5, BlockType.TEXT, "d-a"),
        SearchHit("b-1", 0.5, BlockType.TABLE, "d-a"),
        SearchHit("b-3", 0.9, BlockType.TEXT, "d-a"),
    ]
    merged = merge_ranked(hits, 2)
    assert [h.block_id for h in merged] == ["b-3", "b-1"]


def test_label_takes_top_k_per_type_then_overall(index):
    k = 3
    query = EMBEDDER.embed("drawdown")
    result = label_naive_retrieve(index, EMBEDDER, "drawdown", k=k)
    union = []
    for block_type in index.block_types():
        union.extend(oracle_top_k(index.entries(), query, k, type_filter=block_type))
    expected = sorted(union, key=lambda pair: (-pair[1], pair[0]))[:k]
    assert [(h.block_id, h.score) for h in result.items] == expected


def test_label_result_is_score_sorted_with_id_ties(index):
    result = label_naive_retrieve(index, EMBEDDER, "drawdown pump", k=5)
    keys = [(-h.score, h.block_id) for h in result.items]
    assert keys == sorted(keys)
    assert len(result.items) <= 5


def test_label_top_hit_matches_naive_top_hit(index):
    for query in ["pump test", "chloride", "seasonal depth"]:
        naive = naive_retrieve(index, EMBEDDER, query, k=1)
        label = label_naive_retrieve(index, EMBEDDER, query, k=1)
        assert naive.items[0] == label.items[0]


def test_label_equals_naive_on_single_type_corpus():
    idx = VectorIndex(ReferenceEmbedder())
    for i, text in enumerate(["alpha beta", "beta gamma", "gamma delta"]):
        idx.upsert(block("d-a", text, y0=100.0 + 30.0 * i))
    naive = naive_retrieve(idx, EMBEDDER, "beta", k=2)
    label = label_naive_retrieve(idx, EMBEDDER, "beta", k=2)
    assert naive.items == label.items


def test_label_can_surface_types_naive_buries(index):
    # per-type quotas guarantee representation for every type in the union
    result = label_naive_retrieve(index, EMBEDDER, "drawdown", k=8)
    assert {h.block_type for h in result.items} >= {
        BlockType.TEXT, BlockType.TABLE, BlockType.FORMULA}


# --- symbiotic strategy ---------------------------------------------------------------

def test_symbiotic_with_empty_log_equals_naive(index):
    context = SessionContext(session_id="s-0001", events=[])
    result = symbiotic_retrieve(index, EMBEDDER, EchoLlm(), "pump test",
                                context, k=4, clock=LogicalClock())
    naive = naive_retrieve(index, EMBEDDER, "pump test", k=4)
    assert result.items == naive.items
    assert result.augmented_query is None
    assert result.warning is None
    assert result.strategy_name == "symbiotic"


def test_symbiotic_augments_with_intention_summary(index):
    events = [send_query("recovery curve for the pump test"), click()]
    context = SessionContext(session_id="s-0001", events=events)
    result = symbiotic_retrieve(index, EMBEDDER, EchoLlm(), "well N-7",
                                context, k=4, clock=LogicalClock())
    expected_augmented = ("well N-7" + INTENT_SEPARATOR
                          + "USER SEEKS: recovery curve for the pump test")
    assert result.augmented_query == expected_augmented
    assert result.query_as_issued == "well N-7"
    naive_on_augmented = naive_retrieve(index, EMBEDDER, expected_augmented, k=4)
    assert result.items == naive_on_augmented.items


def test_symbiotic_failure_degrades_to_naive_with_warning(index):
    events = [send_query("pump test")]
    context = SessionContext(session_id="s-0001", events=events)
    result = symbiotic_retrieve(index, EMBEDDER, FailingLlm("outage"), "well N-7",
                                context, k=4, clock=LogicalClock())
    naive = naive_retrieve(index, EMBEDDER, "well N-7", k=4)
    assert result.items == naive.items
    assert result.augmented_query is None
    assert "outage" in result.warning


def test_symbiotic_respects_corpus_filter(index):
    context = SessionContext(session_id="s-0001", events=[send_query("wells")],
                             corpus=frozenset({"d-a"}))
    result = symbiotic_retrieve(index, EMBEDDER, EchoLlm(), "pumping",
                                context, k=8, clock=LogicalClock())
    assert all(h.document_id == "d-a" for h in result.items)


def test_raw_transcript_is_unbounded_where_summary_is_capped():
    # the augmentation channel is the capped summary, never the raw log: a
    # long session's transcript outgrows any prompt budget
    events = [send_query(f"question number {i} about station {i % 7}")
              for i in range(EVENT_WINDOW)]
    transcript = render_transcript(events)
    summary = summarize_intention("s-0001", events, EchoLlm(), clock=LogicalClock())
    assert len(transcript) > SUMMARY_MAX_CHARS
    assert len(summary.summary_text) <= SUMMARY_MAX_CHARS


# --- serialization ----------------------------------------------------------------------

def test_retrieval_result_round_trips(index):
    events = [send_query("pump test")]
    context = SessionContext(session_id="s-0001", events=events)
    result = symbiotic_retrieve(index, EMBEDDER, EchoLlm(), "drawdown",
                                context, k=3, clock=LogicalClock())
    data = result.to_dict()
    assert isinstance(data["items"][0]["block_type"], str)
    assert RetrievalResult.from_dict(data) == result


# --- registry ----------------------------------------------------------------------------

def test_registry_ships_three_strategies():
    assert strategy_names() == ["label", "naive", "symbiotic"]


def test_built_strategies_match_direct_calls(index):
    context = SessionContext(session_id="s-0001", events=[send_query("pump")])
    for name in strategy_names():
        strategy = build_strategy(name, index, EMBEDDER, EchoLlm(), LogicalClock())
        assert strategy.name == name
        result = strategy.retrieve("drawdown", context, 3)
        assert result.strategy_name == name
        assert len(result.items) <= 3


def test_build_strategy_unknown_name():
    with pytest.raises(InvalidError, match="unknown strategy"):
        build_strategy("psychic", VectorIndex(ReferenceEmbedder()), EMBEDDER, EchoLlm())


def test_register_strategy_rejects_duplicates():
    with pytest.raises(InvalidError, match="already registered"):
        register_strategy("naive", lambda *a: None)


def test_register_custom_strategy(index):
    def factory(idx, embedder, llm, clock):
        class Reversed:
            name = "reversed"

            def retrieve(self, query, context, k):
                result = naive_retrieve(idx, embedder, query, k, context.corpus)
                return result.model_copy(update={
                    "strategy_name": "reversed",
                    "items": tuple(reversed(result.items)),
                })

        return Reversed()

    register_strategy("reversed", factory)
    try:
        strategy = build_strategy("reversed", index, EMBEDDER, EchoLlm())
        result = strategy.retrieve("pump test", SessionContext(), 3)
        naive = naive_retrieve(index, EMBEDDER, "pump test", k=3)
        assert result.items == tuple(reversed(naive.items))
    finally:
        del _REGISTRY["reversed"]
