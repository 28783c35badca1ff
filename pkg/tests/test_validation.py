"""Validation edits: optimistic concurrency, transforms, log replay."""

import threading

import numpy as np
import pytest

from tandemrag.clock import LogicalClock
from tandemrag.embedding import ReferenceEmbedder
from tandemrag.errors import ConflictError, InvalidError, NotFoundError, SchemaError
from tandemrag.model import (
    BlockType,
    BoundingBox,
    Document,
    Page,
    make_block,
)
from tandemrag.storage import AppendLog, BlockStore
from tandemrag.validation import (
    EditKind,
    Snapshot,
    ValidationEdit,
    Validator,
    replay_log,
)
from tandemrag.vector_index import VectorIndex


def bbox(y0=100.0, x0=72.0, page_index=0, height=20.0):
    return BoundingBox(page_index=page_index, x0=x0, y0=y0, x1=x0 + 400.0,
                       y1=y0 + height)


def seed_document():
    text = make_block("d-doc", bbox(y0=100.0), BlockType.TEXT, {"text": "first paragraph"})
    table = make_block("d-doc", bbox(y0=200.0), BlockType.TABLE,
                       {"caption": "T1", "cells": [["a", "b"]]})
    figure = make_block("d-doc", bbox(y0=300.0), BlockType.FIGURE,
                        {"description": "a chart"})
    flagged = make_block("d-doc", bbox(y0=400.0), BlockType.FORMULA,
                         needs_validation=True)
    return Document(
        document_id="d-doc", source_name="doc.pdf", page_count=2,
        pages=[
            Page(page_index=0, width=612, height=792,
                 blocks=[text, table, figure, flagged]),
            Page(page_index=1, width=612, height=792, blocks=[]),
        ],
    )


@pytest.fixture
def setup(tmp_path):
    store = BlockStore(tmp_path / "blocks")
    index = VectorIndex(ReferenceEmbedder())
    doc = seed_document()
    store.save(doc)
    for block in doc.iter_blocks():
        if block.text_repr:
            index.upsert(block)
    log = AppendLog(tmp_path / "edits.jsonl")
    validator = Validator(store, index, edit_log=log, clock=LogicalClock())
    return store, index, log, validator, doc


def edit_for(validator, store, block_id, kind, after, editor="u-vera"):
    _, block = store.get_block(block_id)
    return validator.new_edit(block_id, editor, kind, Snapshot.of_block(block), after)


# --- snapshots ----------------------------------------------------------------

def test_snapshot_matches_only_identical_state():
    block = make_block("d-doc", bbox(), BlockType.TEXT, {"text": "body"})
    snap = Snapshot.of_block(block)
    assert snap.matches(block)
    assert not snap.matches(block.model_copy(update={"raw_payload": {"text": "other"}}))
    assert not snap.matches(block.model_copy(update={"block_type": BlockType.TITLE}))
    assert not snap.matches(block.model_copy(update={"bbox": bbox(y0=500.0)}))
    assert not snap.matches(block.model_copy(update={"tombstoned": True}))
    assert not Snapshot.absent().matches(block)


def test_snapshot_round_trips_through_dict():
    block = make_block("d-doc", bbox(), BlockType.TABLE, {"cells": [["x"]]})
    snap = Snapshot.of_block(block)
    assert Snapshot.from_dict(snap.to_dict()) == snap
    assert Snapshot.from_dict(Snapshot.absent().to_dict()) == Snapshot.absent()


def test_validation_edit_round_trips_through_dict(setup):
    store, _, _, validator, doc = setup
    block = doc.pages[0].blocks[0]
    edit = edit_for(validator, store, block.block_id, EditKind.CORRECT_TEXT,
                    Snapshot(raw_payload={"text": "fixed"}))
    assert ValidationEdit.from_dict(edit.to_dict()) == edit
    assert edit.timestamp.endswith("Z")


def test_new_edit_ids_are_sequential(setup):
    store, _, _, validator, doc = setup
    block = doc.pages[0].blocks[0]
    first = edit_for(validator, store, block.block_id, EditKind.CORRECT_TEXT,
                     Snapshot(raw_payload={"text": "a"}))
    second = edit_for(validator, store, block.block_id, EditKind.CORRECT_TEXT,
                      Snapshot(raw_payload={"text": "b"}))
    assert (first.edit_id, second.edit_id) == ("edit-000001", "edit-000002")


# --- corrections ----------------------------------------------------------------

def test_correct_text_bumps_revision_and_reindexes(setup):
    store, index, log, validator, doc = setup
    block = doc.pages[0].blocks[0]
    edit = edit_for(validator, store, block.block_id, EditKind.CORRECT_TEXT,
                    Snapshot(raw_payload={"text": "corrected paragraph"}))
    updated = validator.apply_edit(edit)
    assert updated.revision == 1
    assert updated.text_repr == "corrected paragraph"
    assert not updated.needs_validation
    _, stored = store.get_block(block.block_id)
    assert stored == updated
    entry = index.entry(block.block_id)
    assert entry.revision == 1
    assert np.array_equal(entry.vector, ReferenceEmbedder().embed("corrected paragraph"))
    assert [r["edit_id"] for r in log.read_all()] == [edit.edit_id]


def test_correct_table_recomputes_flattened_text(setup):
    store, _, _, validator, doc = setup
    table = doc.pages[0].blocks[1]
    edit = edit_for(validator, store, table.block_id, EditKind.CORRECT_TABLE,
                    Snapshot(raw_payload={"caption": "Fixed", "cells": [["1", "2"]]}))
    updated = validator.apply_edit(edit)
    assert updated.text_repr == "Fixed\n1 | 2"


def test_correction_kind_must_match_block_type(setup):
    store, _, log, validator, doc = setup
    text = doc.pages[0].blocks[0]
    edit = edit_for(validator, store, text.block_id, EditKind.CORRECT_TABLE,
                    Snapshot(raw_payload={"cells": [["x"]]}))
    with pytest.raises(SchemaError, match="does not apply"):
        validator.apply_edit(edit)
    assert log.read_all() == []


def test_correction_payload_is_schema_checked(setup):
    store, _, _, validator, doc = setup
    figure = doc.pages[0].blocks[2]
    edit = edit_for(validator, store, figure.block_id, EditKind.CORRECT_FIGURE,
                    Snapshot(raw_payload={"caption": "only caption"}))
    with pytest.raises(SchemaError):
        validator.apply_edit(edit)


def test_correct_formula_clears_needs_validation(setup):
    store, index, _, validator, doc = setup
    flagged = doc.pages[0].blocks[3]
    assert flagged.needs_validation
    edit = edit_for(validator, store, flagged.block_id, EditKind.CORRECT_FORMULA,
                    Snapshot(raw_payload={"latex": "s = Q/T"}))
    updated = validator.apply_edit(edit)
    assert not updated.needs_validation
    assert updated.text_repr == "s = Q/T"
    assert flagged.block_id in index


# --- optimistic concurrency -------------------------------------------------------

def test_stale_before_snapshot_conflicts(setup):
    store, _, log, validator, doc = setup
    block = doc.pages[0].blocks[0]
    stale = edit_for(validator, store, block.block_id, EditKind.CORRECT_TEXT,
                     Snapshot(raw_payload={"text": "version A"}))
    validator.apply_edit(edit_for(validator, store, block.block_id,
                                  EditKind.CORRECT_TEXT,
                                  Snapshot(raw_payload={"text": "version B"})))
    with pytest.raises(ConflictError, match="stale"):
        validator.apply_edit(stale)
    assert len(log.read_all()) == 1


def test_concurrent_edits_admit_exactly_one_winner(setup):
    store, _, log, validator, doc = setup
    block = doc.pages[0].blocks[0]
    edits = [edit_for(validator, store, block.block_id, EditKind.CORRECT_TEXT,
                      Snapshot(raw_payload={"text": f"editor {i} version"}),
                      editor=f"u-{i}")
             for i in range(4)]
    barrier = threading.Barrier(4)
    results = []

    def contend(edit):
        barrier.wait()
        try:
            validator.apply_edit(edit)
            results.append("applied")
        except ConflictError:
            results.append("conflict")

    threads = [threading.Thread(target=contend, args=(e,)) for e in edits]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(results) == ["applied", "conflict", "conflict", "conflict"]
    _, final = store.get_block(block.block_id)
    assert final.revision == 1
    assert len(log.read_all()) == 1


def test_unknown_block_raises_not_found(setup):
    _, _, _, validator, _ = setup
    edit = validator.new_edit("b-missing", "u-vera", EditKind.CORRECT_TEXT,
                              Snapshot(raw_payload={"text": "x"}),
                              Snapshot(raw_payload={"text": "y"}))
    with pytest.raises(NotFoundError):
        validator.apply_edit(edit)


# --- reclassify and bounds ---------------------------------------------------------

def test_reclassify_revalidates_payload_for_new_type(setup):
    store, _, _, validator, doc = setup
    text = doc.pages[0].blocks[0]
    good = edit_for(validator, store, text.block_id, EditKind.RECLASSIFY,
                    Snapshot(block_type=BlockType.TITLE))
    updated = validator.apply_edit(good)
    assert updated.block_type is BlockType.TITLE
    assert updated.text_repr == "first paragraph"

    figure = doc.pages[0].blocks[2]
    bad = edit_for(validator, store, figure.block_id, EditKind.RECLASSIFY,
                   Snapshot(block_type=BlockType.TABLE))
    # figure payload does not satisfy the table schema
    with pytest.raises(SchemaError):
        validator.apply_edit(bad)


def test_reclassify_with_replacement_payload(setup):
    store, _, _, validator, doc = setup
    figure = doc.pages[0].blocks[2]
    edit = edit_for(validator, store, figure.block_id, EditKind.RECLASSIFY,
                    Snapshot(block_type=BlockType.TABLE,
                             raw_payload={"cells": [["was a chart"]]}))
    updated = validator.apply_edit(edit)
    assert updated.block_type is BlockType.TABLE
    assert updated.text_repr == "was a chart"


def test_reclassify_requires_target_type(setup):
    store, _, _, validator, doc = setup
    block = doc.pages[0].blocks[0]
    edit = edit_for(validator, store, block.block_id, EditKind.RECLASSIFY, Snapshot())
    with pytest.raises(SchemaError, match="block_type"):
        validator.apply_edit(edit)


def test_adjust_bounds_clips_to_page(setup):
    store, _, _, validator, doc = setup
    block = doc.pages[0].blocks[0]
    edit = edit_for(validator, store, block.block_id, EditKind.ADJUST_BOUNDS,
                    Snapshot(bbox=BoundingBox(page_index=0, x0=60, y0=90,
                                              x1=700, y1=130)))
    updated = validator.apply_edit(edit)
    assert updated.bbox.x1 == 612.0
    assert updated.bbox.x0 == 60.0
    # identity is birth geometry: the id does not change with the box
    assert updated.block_id == block.block_id


def test_adjust_bounds_cannot_change_page(setup):
    store, _, _, validator, doc = setup
    block = doc.pages[0].blocks[0]
    edit = edit_for(validator, store, block.block_id, EditKind.ADJUST_BOUNDS,
                    Snapshot(bbox=bbox(page_index=1)))
    with pytest.raises(InvalidError, match="between pages"):
        validator.apply_edit(edit)


def test_adjust_bounds_rejects_off_page_boxes(setup):
    store, _, _, validator, doc = setup
    block = doc.pages[0].blocks[0]
    edit = edit_for(validator, store, block.block_id, EditKind.ADJUST_BOUNDS,
                    Snapshot(bbox=BoundingBox(page_index=0, x0=650, y0=100,
                                              x1=700, y1=140)))
    with pytest.raises(InvalidError, match="outside the page"):
        validator.apply_edit(edit)


# --- remove and add ------------------------------------------------------------------

def test_remove_block_tombstones_and_unindexes(setup):
    store, index, _, validator, doc = setup
    block = doc.pages[0].blocks[0]
    edit = edit_for(validator, store, block.block_id, EditKind.REMOVE_BLOCK,
                    Snapshot(tombstoned=True))
    updated = validator.apply_edit(edit)
    assert updated.tombstoned
    assert updated.revision == 1
    assert block.block_id not in index
    # a second edit built against the live state now conflicts
    stale = validator.new_edit(block.block_id, "u-vera", EditKind.CORRECT_TEXT,
                               Snapshot.of_block(block),
                               Snapshot(raw_payload={"text": "too late"}))
    with pytest.raises(ConflictError):
        validator.apply_edit(stale)


def test_add_block_mints_at_revision_one(setup):
    store, index, log, validator, _ = setup
    after = Snapshot(document_id="d-doc", block_type=BlockType.TEXT,
                     bbox=bbox(y0=150.0), raw_payload={"text": "inserted note"})
    edit = validator.new_edit("", "u-vera", EditKind.ADD_BLOCK,
                              Snapshot.absent(), after)
    block = validator.apply_edit(edit)
    assert block.revision == 1
    assert block.text_repr == "inserted note"
    assert block.block_id in index
    doc = store.get("d-doc")
    ys = [b.bbox.y0 for b in doc.pages[0].blocks]
    assert ys == sorted(ys)
    logged = log.read_all()[-1]
    assert logged["block_id"] == block.block_id
    assert logged["edit_kind"] == "AddBlock"


def test_add_block_duplicate_geometry_conflicts(setup):
    store, _, _, validator, doc = setup
    existing = doc.pages[0].blocks[0]
    after = Snapshot(document_id="d-doc", block_type=existing.block_type,
                     bbox=existing.bbox, raw_payload={"text": "twin"})
    edit = validator.new_edit("", "u-vera", EditKind.ADD_BLOCK,
                              Snapshot.absent(), after)
    with pytest.raises(ConflictError, match="already exists"):
        validator.apply_edit(edit)


def test_add_block_validations(setup):
    store, _, _, validator, _ = setup
    with pytest.raises(ConflictError, match="absent"):
        validator.apply_edit(validator.new_edit(
            "", "u", EditKind.ADD_BLOCK, Snapshot(),
            Snapshot(document_id="d-doc", block_type=BlockType.TEXT,
                     bbox=bbox(), raw_payload={"text": "x"})))
    with pytest.raises(SchemaError, match="requires"):
        validator.apply_edit(validator.new_edit(
            "", "u", EditKind.ADD_BLOCK, Snapshot.absent(),
            Snapshot(document_id="d-doc", raw_payload={"text": "x"})))
    with pytest.raises(NotFoundError):
        validator.apply_edit(validator.new_edit(
            "", "u", EditKind.ADD_BLOCK, Snapshot.absent(),
            Snapshot(document_id="d-nope", block_type=BlockType.TEXT,
                     bbox=bbox(), raw_payload={"text": "x"})))
    with pytest.raises(InvalidError, match="outside the page"):
        validator.apply_edit(validator.new_edit(
            "", "u", EditKind.ADD_BLOCK, Snapshot.absent(),
            Snapshot(document_id="d-doc", block_type=BlockType.TEXT,
                     bbox=BoundingBox(page_index=0, x0=620, y0=10, x1=700, y1=40),
                     raw_payload={"text": "x"})))


# --- replay ---------------------------------------------------------------------------

def test_replay_log_reproduces_store_state(setup, tmp_path):
    store, index, log, validator, doc = setup
    blocks = doc.pages[0].blocks
    validator.apply_edit(edit_for(validator, store, blocks[0].block_id,
                                  EditKind.CORRECT_TEXT,
                                  Snapshot(raw_payload={"text": "reworded"})))
    validator.apply_edit(edit_for(validator, store, blocks[1].block_id,
                                  EditKind.REMOVE_BLOCK, Snapshot(tombstoned=True)))
    validator.apply_edit(edit_for(validator, store, blocks[0].block_id,
                                  EditKind.RECLASSIFY,
                                  Snapshot(block_type=BlockType.CAPTION)))
    validator.apply_edit(validator.new_edit(
        "", "u-vera", EditKind.ADD_BLOCK, Snapshot.absent(),
        Snapshot(document_id="d-doc", block_type=BlockType.TEXT,
                 bbox=bbox(y0=500.0), raw_payload={"text": "added later"})))

    baseline = BlockStore(tmp_path / "replayed")
    baseline.save(seed_document())
    replay_index = VectorIndex(ReferenceEmbedder())
    for block in seed_document().iter_blocks():
        if block.text_repr:
            replay_index.upsert(block)
    replay_log(baseline, replay_index, log.read_all(), clock=LogicalClock())

    assert baseline.get("d-doc") == store.get("d-doc")
    query = ReferenceEmbedder().embed("reworded")
    assert replay_index.search(query, k=10) == index.search(query, k=10)


def test_replayed_edits_do_not_append_to_the_log(setup, tmp_path):
    store, _, log, validator, doc = setup
    block = doc.pages[0].blocks[0]
    validator.apply_edit(edit_for(validator, store, block.block_id,
                                  EditKind.CORRECT_TEXT,
                                  Snapshot(raw_payload={"text": "once"})))
    before = log.path.read_bytes()
    baseline = BlockStore(tmp_path / "replayed")
    baseline.save(seed_document())
    replay_log(baseline, VectorIndex(ReferenceEmbedder()), log.read_all())
    assert log.path.read_bytes() == before


# --- review queue ----------------------------------------------------------------------

def test_list_pending_defaults_to_flagged_blocks(setup):
    _, _, _, validator, doc = setup
    pending, cursor = validator.list_pending("d-doc")
    assert [b.block_id for b in pending] == [doc.pages[0].blocks[3].block_id]
    assert cursor is None


def test_list_pending_all_in_reading_order(setup):
    store, _, _, validator, doc = setup
    blocks, _ = validator.list_pending("d-doc", flt="all")
    keys = [(b.bbox.page_index, b.bbox.y0, b.bbox.x0) for b in blocks]
    assert keys == sorted(keys)
    assert len(blocks) == 4


def test_list_pending_filters_by_type_and_skips_tombstones(setup):
    store, _, _, validator, doc = setup
    tables, _ = validator.list_pending("d-doc", flt="Table")
    assert [b.block_type for b in tables] == [BlockType.TABLE]
    table = doc.pages[0].blocks[1]
    validator.apply_edit(edit_for(validator, store, table.block_id,
                                  EditKind.REMOVE_BLOCK, Snapshot(tombstoned=True)))
    assert validator.list_pending("d-doc", flt="Table")[0] == []


def test_list_pending_pagination(setup):
    _, _, _, validator, _ = setup
    first, cursor = validator.list_pending("d-doc", flt="all", page_size=3)
    assert len(first) == 3
    assert cursor == 3
    rest, done = validator.list_pending("d-doc", flt="all", cursor=cursor, page_size=3)
    assert len(rest) == 1
    assert done is None


def test_list_pending_validates_arguments(setup):
    _, _, _, validator, _ = setup
    with pytest.raises(NotFoundError):
        validator.list_pending("d-unknown")
    with pytest.raises(InvalidError):
        validator.list_pending("d-doc", cursor=-1)
