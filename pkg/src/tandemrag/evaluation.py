"""Human-retriever alignment metrics and the scripted comparison harness.

The distance between what the human staged and what the retriever returned
is one minus their Jaccard similarity: 0 means perfect alignment, 1 means
complete divergence. Scripted sessions replay through the real session
module so the harness measures the shipped behavior, not a simulation.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from pydantic import BaseModel, ConfigDict

from .errors import InvalidError, NotFoundError, ScriptError
from .retrievers import strategy_names
from .session import SessionManager


def distance(human_selected: set[str], retriever_returned: set[str]) -> float:
    """1 - |intersection| / |union|; an empty union counts as no divergence."""
    union = human_selected | retriever_returned
    if not union:
        return 0.0
    return 1.0 - len(human_selected & retriever_returned) / len(union)


class ConversationOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    session_id: str
    strategy_name: str
    human_selected: frozenset[str]
    retriever_returned: frozenset[str]
    satisfaction_rating: int | None = None
    k: int

    @property
    def dist(self) -> float:
        return distance(set(self.human_selected), set(self.retriever_returned))

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "strategy_name": self.strategy_name,
            "human_selected": sorted(self.human_selected),
            "retriever_returned": sorted(self.retriever_returned),
            "satisfaction_rating": self.satisfaction_rating,
            "k": self.k,
            "distance": self.dist,
        }


def mean_satisfaction(outcomes: Iterable[ConversationOutcome]) -> float:
    """Arithmetic mean over the rated outcomes; fails when none are rated."""
    ratings = [o.satisfaction_rating for o in outcomes
               if o.satisfaction_rating is not None]
    if not ratings:
        raise InvalidError("no rated outcomes to average")
    return sum(ratings) / len(ratings)


def mean_distance(outcomes: Sequence[ConversationOutcome]) -> float:
    if not outcomes:
        raise InvalidError("no outcomes to average")
    return sum(o.dist for o in outcomes) / len(outcomes)


class ScriptAction(BaseModel):
    """One toggle after a given turn: select_retrieved copies that turn's hits."""

    model_config = ConfigDict(frozen=True)

    turn: int
    op: str
    block_id: str | None = None


class SessionScript(BaseModel):
    model_config = ConfigDict(frozen=True)

    strategy: str = "naive"
    user_id: str = "scripted"
    queries: tuple[str, ...]
    actions: tuple[ScriptAction, ...] = ()
    rating: int | None = None
    name: str = ""

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "SessionScript":
        rating = data.get("rating")
        if rating is not None and rating not in (1, 2, 3, 4, 5):
            raise InvalidError("script rating must be an integer 1..5")
        return cls(
            strategy=data.get("strategy", "naive"),
            user_id=data.get("user_id", "scripted"),
            queries=tuple(data.get("queries", [])),
            actions=tuple(ScriptAction(**a) for a in data.get("actions", [])),
            rating=rating,
            name=name or data.get("name", ""),
        )


def load_script(path: Path) -> tuple[SessionScript, str]:
    """Parse a script file, keeping the raw text for error line lookup."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ScriptError(f"script is not valid JSON: {exc}",
                          path=str(path), line=exc.lineno) from exc
    return SessionScript.from_dict(data, name=Path(path).stem), raw


def _line_of(raw_text: str, needle: str) -> int | None:
    for number, line in enumerate(raw_text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def replay_script(manager: SessionManager, script: SessionScript,
                  strategy_name: str | None = None,
                  raw_text: str = "", path: str = "") -> ConversationOutcome:
    """Run one scripted session and measure its outcome.

    Unknown block references become script errors carrying the offending
    action index and, when the raw text is available, its line number.
    """
    strategy = strategy_name or script.strategy
    if strategy not in strategy_names():
        raise ScriptError(f"unknown strategy {strategy!r}", path=path or None)
    session = manager.create_session(script.user_id, strategy)
    retrieved: set[str] = set()
    for turn, query in enumerate(script.queries):
        retrieval_message, _ = manager.post_query(session.session_id,
                                                  script.user_id, query)
        result = retrieval_message.retrieval_result
        turn_hits = [h.block_id for h in result.items] if result else []
        retrieved.update(turn_hits)
        for index, action in enumerate(script.actions):
            if action.turn != turn:
                continue
            try:
                _apply_action(manager, session.session_id, script.user_id,
                              action, turn_hits)
            except (NotFoundError, InvalidError) as exc:
                line = _line_of(raw_text, action.block_id or "")
                raise ScriptError(
                    f"action {index} failed: {exc.message}",
                    path=path or None, action_index=index, line=line,
                ) from exc
    if script.rating is not None and session.messages:
        assistants = [m for m in session.messages if m.role == "assistant"]
        if assistants:
            manager.rate(session.session_id, script.user_id,
                         assistants[-1].message_id, liked=script.rating >= 3)
    final = manager.get_session(session.session_id)
    return ConversationOutcome(
        session_id=session.session_id, strategy_name=strategy,
        human_selected=frozenset(final.staging),
        retriever_returned=frozenset(retrieved),
        satisfaction_rating=script.rating, k=manager.k,
    )


def _apply_action(manager: SessionManager, session_id: str, user_id: str,
                  action: ScriptAction, turn_hits: list[str]) -> None:
    if action.op == "select_retrieved":
        for block_id in turn_hits:
            manager.toggle_block(session_id, user_id, block_id, select=True)
    elif action.op in ("select", "deselect"):
        if not action.block_id:
            raise InvalidError(f"{action.op} action needs a block_id")
        manager.toggle_block(session_id, user_id, action.block_id,
                             select=action.op == "select")
    else:
        raise InvalidError(f"unknown script op {action.op!r}")


def run_experiment(manager: SessionManager,
                   scripts: Sequence[tuple[SessionScript, str, str]],
                   strategies: Sequence[str]) -> dict:
    """Replay every script under every strategy and aggregate per strategy.

    scripts entries are (script, raw_text, path); the table reports mean
    distance and mean satisfaction per strategy over all its sessions.
    """
    if not scripts:
        raise InvalidError("no scripts to run")
    if not strategies:
        raise InvalidError("no strategies selected")
    outcomes: list[ConversationOutcome] = []
    for strategy in strategies:
        for script, raw_text, path in scripts:
            outcomes.append(replay_script(manager, script, strategy_name=strategy,
                                          raw_text=raw_text, path=path))
    rows = []
    for strategy in strategies:
        mine = [o for o in outcomes if o.strategy_name == strategy]
        rated = [o for o in mine if o.satisfaction_rating is not None]
        rows.append({
            "strategy": strategy,
            "sessions": len(mine),
            "mean_distance": round(mean_distance(mine), 6),
            "mean_satisfaction": (round(mean_satisfaction(rated), 6)
                                  if rated else None),
        })
    return {
        "strategies": rows,
        "outcomes": [o.to_dict() for o in outcomes],
    }


def render_table(table: dict) -> str:
    """Aligned text table: one row per strategy, distance and satisfaction."""
    headers = ["Strategy", "Sessions", "D (mean)", "S (mean)"]
    body = []
    for row in table["strategies"]:
        satisfaction = (f"{row['mean_satisfaction']:.2f}"
                        if row["mean_satisfaction"] is not None else "-")
        body.append([row["strategy"], str(row["sessions"]),
                     f"{row['mean_distance']:.2f}", satisfaction])
    widths = [max(len(headers[i]), *(len(r[i]) for r in body)) if body
              else len(headers[i]) for i in range(len(headers))]
    lines = [
        "  ".join(headers[i].ljust(widths[i]) for i in range(len(headers))),
        "  ".join("-" * widths[i] for i in range(len(headers))),
    ]
    for row in body:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(headers))))
    return "\n".join(lines)
