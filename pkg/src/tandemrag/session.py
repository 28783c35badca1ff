"""Chat sessions, staging, and the append-only interaction event log.

Every user gesture becomes an InteractionEvent appended to a shared JSON
Lines log; staging and corpus are pure folds of that log, with the session
object acting as a cache. Answer generation renders retrieved blocks into
a provenance-tagged prompt for the LLM adapter.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

from pydantic import BaseModel, ConfigDict

from .adapters import LlmAdapter
from .clock import Clock, SystemClock
from .embedding import EmbedderContract
from .errors import InvalidError, NotFoundError
from .model import ProcessingState
from .retrievers import RetrievalResult, SessionContext, build_strategy
from .storage import AppendLog, BlockStore, atomic_write_text, canonical_json
from .vector_index import VectorIndex

DEFAULT_K = 5
ANSWER_MAX_CHARS = 4000
PROMPT_PREAMBLE = ("Answer the user's question using only the source blocks below. "
                   "Cite blocks by their source tags.")


class EventKind(str, Enum):
    SEND_QUERY = "SendQuery"
    CLICK_RESULT = "ClickResult"
    SELECT_BLOCK = "SelectBlock"
    DESELECT_BLOCK = "DeselectBlock"
    NAVIGATE_PAGE = "NavigatePage"
    ADD_DOCUMENT = "AddDocument"
    LIKE = "Like"
    DISLIKE = "Dislike"
    REGENERATE = "Regenerate"


GESTURE_KINDS = {EventKind.CLICK_RESULT, EventKind.NAVIGATE_PAGE}


class InteractionEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    event_id: str
    session_id: str
    user_id: str
    kind: EventKind
    payload: dict
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "session_id": self.session_id,
            "user_id": self.user_id,
            "kind": self.kind.value,
            "payload": dict(self.payload),
            "timestamp": self.timestamp,
        }


class CitedBlock(NamedTuple):
    block_id: str
    revision: int


class Message(BaseModel):
    model_config = ConfigDict(frozen=True)

    message_id: str
    role: str
    content: str
    retrieval_result: RetrievalResult | None = None
    cited_blocks: tuple[CitedBlock, ...] = ()
    error: bool = False
    query_message_id: str | None = None
    created_at: str = ""

    def to_dict(self) -> dict:
        return {
            "message_id": self.message_id,
            "role": self.role,
            "content": self.content,
            "retrieval_result": (self.retrieval_result.to_dict()
                                 if self.retrieval_result else None),
            "cited_blocks": [{"block_id": c.block_id, "revision": c.revision}
                             for c in self.cited_blocks],
            "error": self.error,
            "query_message_id": self.query_message_id,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Message":
        rr = data.get("retrieval_result")
        return cls(
            message_id=data["message_id"], role=data["role"], content=data["content"],
            retrieval_result=RetrievalResult.from_dict(rr) if rr else None,
            cited_blocks=tuple(CitedBlock(c["block_id"], c["revision"])
                               for c in data.get("cited_blocks", [])),
            error=data.get("error", False),
            query_message_id=data.get("query_message_id"),
            created_at=data.get("created_at", ""),
        )


@dataclass
class ChatSession:
    """Mutable session state; staging and corpus mirror the event log."""

    session_id: str
    user_id: str
    strategy_name: str
    created_at: str
    corpus: set[str] = field(default_factory=set)
    staging: set[str] = field(default_factory=set)
    messages: list[Message] = field(default_factory=list)
    ratings: dict[str, str] = field(default_factory=dict)
    event_seq: int = 0
    message_seq: int = 0

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "user_id": self.user_id,
            "strategy_name": self.strategy_name,
            "created_at": self.created_at,
            "corpus": sorted(self.corpus),
            "staging": sorted(self.staging),
            "ratings": {k: self.ratings[k] for k in sorted(self.ratings)},
            "event_seq": self.event_seq,
            "message_seq": self.message_seq,
            "messages": [m.to_dict() for m in self.messages],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChatSession":
        return cls(
            session_id=data["session_id"], user_id=data["user_id"],
            strategy_name=data["strategy_name"], created_at=data["created_at"],
            corpus=set(data.get("corpus", [])), staging=set(data.get("staging", [])),
            messages=[Message.from_dict(m) for m in data.get("messages", [])],
            ratings=dict(data.get("ratings", {})),
            event_seq=data.get("event_seq", 0), message_seq=data.get("message_seq", 0),
        )


def staging_fold(events: Iterable[Mapping]) -> set[str]:
    """Replay Select/Deselect events into the staging set."""
    staging: set[str] = set()
    for event in events:
        kind = event.get("kind")
        block_id = (event.get("payload") or {}).get("block_id")
        if kind == EventKind.SELECT_BLOCK.value and block_id:
            staging.add(block_id)
        elif kind == EventKind.DESELECT_BLOCK.value and block_id:
            staging.discard(block_id)
    return staging


def corpus_fold(events: Iterable[Mapping], initial: Iterable[str] = ()) -> set[str]:
    """Replay AddDocument events over the session's initial corpus."""
    corpus = set(initial)
    for event in events:
        if event.get("kind") == EventKind.ADD_DOCUMENT.value:
            document_id = (event.get("payload") or {}).get("document_id")
            if document_id:
                corpus.add(document_id)
    return corpus


def render_prompt(segments: Iterable[tuple[str, int, str, str]], query: str) -> str:
    """Fixed prompt layout: preamble, provenance-tagged blocks, then the query."""
    parts = [PROMPT_PREAMBLE]
    for source_name, page_index, block_type, text_repr in segments:
        parts.append(f"[source: {source_name} p.{page_index + 1} {block_type}]\n{text_repr}")
    parts.append(query)
    return "\n\n".join(parts)


class SessionManager:
    """Owns all sessions, the shared event log, and snapshot persistence."""

    def __init__(self, store: BlockStore, index: VectorIndex, embedder: EmbedderContract,
                 llm: LlmAdapter, event_log: AppendLog, sessions_dir: Path,
                 clock: Clock | None = None, k: int = DEFAULT_K):
        self.store = store
        self.index = index
        self.embedder = embedder
        self.llm = llm
        self.event_log = event_log
        self.sessions_dir = Path(sessions_dir)
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock or SystemClock()
        self.k = k
        self._sessions: dict[str, ChatSession] = {}
        self._events: dict[str, list[dict]] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._guard = threading.Lock()
        self._load()

    def _load(self) -> None:
        import json

        for path in sorted(self.sessions_dir.glob("*.json")):
            session = ChatSession.from_dict(json.loads(path.read_text(encoding="utf-8")))
            self._sessions[session.session_id] = session
            self._events[session.session_id] = []
            self._locks[session.session_id] = threading.RLock()
        for record in self.event_log.read_all():
            sid = record.get("session_id", "")
            if sid in self._events:
                self._events[sid].append(record)

    def _next_session_id(self) -> str:
        highest = 0
        for sid in self._sessions:
            match = re.fullmatch(r"s-(\d+)", sid)
            if match:
                highest = max(highest, int(match.group(1)))
        return f"s-{highest + 1:04d}"

    def _now(self) -> str:
        return self.clock.now().isoformat().replace("+00:00", "Z")

    def _lock(self, session_id: str) -> threading.RLock:
        with self._guard:
            if session_id not in self._locks:
                raise NotFoundError(f"unknown session {session_id}")
            return self._locks[session_id]

    def _save(self, session: ChatSession) -> None:
        path = self.sessions_dir / f"{session.session_id}.json"
        atomic_write_text(path, canonical_json(session.to_dict()))

    def _log_event(self, session: ChatSession, user_id: str, kind: EventKind,
                   payload: dict) -> InteractionEvent:
        session.event_seq += 1
        event = InteractionEvent(
            event_id=f"{session.session_id}:e{session.event_seq:05d}",
            session_id=session.session_id, user_id=user_id, kind=kind,
            payload=payload, timestamp=self._now(),
        )
        record = event.to_dict()
        self.event_log.append(record)
        self._events[session.session_id].append(record)
        return event

    def _next_message_id(self, session: ChatSession) -> str:
        session.message_seq += 1
        return f"{session.session_id}:m{session.message_seq:04d}"

    # --- session lifecycle ---------------------------------------------------

    def create_session(self, user_id: str, strategy_name: str = "symbiotic",
                       corpus: Iterable[str] | None = None) -> ChatSession:
        """New session; corpus defaults to every stored document."""
        build_strategy(strategy_name, self.index, self.embedder, self.llm, self.clock)
        if corpus is None:
            corpus_set = set(self.store.list_ids())
        else:
            corpus_set = set(corpus)
            for document_id in corpus_set:
                if not self.store.exists(document_id):
                    raise NotFoundError(f"unknown document {document_id}")
        with self._guard:
            session = ChatSession(
                session_id=self._next_session_id(), user_id=user_id,
                strategy_name=strategy_name, created_at=self._now(),
                corpus=corpus_set,
            )
            self._sessions[session.session_id] = session
            self._events[session.session_id] = []
            self._locks[session.session_id] = threading.RLock()
        self._save(session)
        return session

    def get_session(self, session_id: str) -> ChatSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"unknown session {session_id}")
        return session

    def list_sessions(self) -> list[ChatSession]:
        return [self._sessions[sid] for sid in sorted(self._sessions)]

    def events_for(self, session_id: str) -> list[dict]:
        self.get_session(session_id)
        return list(self._events[session_id])

    def replay_folds(self, session_id: str) -> tuple[set[str], set[str]]:
        """Recompute (staging, corpus) purely from the event log."""
        session = self.get_session(session_id)
        events = self._events[session_id]
        initial = {d for d in session.corpus
                   if not any(e.get("kind") == EventKind.ADD_DOCUMENT.value
                              and (e.get("payload") or {}).get("document_id") == d
                              for e in events)}
        return staging_fold(events), corpus_fold(events, initial)

    # --- conversation --------------------------------------------------------

    def post_query(self, session_id: str, user_id: str,
                   query: str) -> tuple[Message, Message]:
        """Log the query, retrieve, and generate a provenance-grounded answer."""
        if not query.strip():
            raise InvalidError("query must not be empty")
        with self._lock(session_id):
            session = self.get_session(session_id)
            prior_events = list(self._events[session_id])
            self._log_event(session, user_id, EventKind.SEND_QUERY, {"query": query})
            user_message = Message(
                message_id=self._next_message_id(session), role="user",
                content=query, created_at=self._now(),
            )
            session.messages.append(user_message)

            strategy = build_strategy(session.strategy_name, self.index,
                                      self.embedder, self.llm, self.clock)
            context = SessionContext(session_id=session_id, events=prior_events,
                                     corpus=frozenset(session.corpus))
            result = strategy.retrieve(query, context, self.k)
            retrieval_message = Message(
                message_id=self._next_message_id(session), role="retrieval",
                content=self._render_result(result), retrieval_result=result,
                query_message_id=user_message.message_id, created_at=self._now(),
            )
            session.messages.append(retrieval_message)

            assistant_message = self._generate_answer(
                session, query, [h.block_id for h in result.items],
                user_message.message_id)
            session.messages.append(assistant_message)
            self._save(session)
            return retrieval_message, assistant_message

    def _render_result(self, result: RetrievalResult) -> str:
        lines = [f"{i + 1}. {h.block_id} {h.block_type} score={h.score:.6f}"
                 for i, h in enumerate(result.items)]
        if result.warning:
            lines.append(f"warning: {result.warning}")
        return "\n".join(lines)

    def _segments_for(self, block_ids: Iterable[str]) -> tuple[list, list[CitedBlock]]:
        segments, cited = [], []
        for block_id in block_ids:
            try:
                document, block = self.store.get_block(block_id)
            except NotFoundError:
                continue
            if block.tombstoned:
                continue
            segments.append((document.source_name, block.bbox.page_index,
                             block.block_type.value, block.text_repr))
            cited.append(CitedBlock(block_id, block.revision))
        return segments, cited

    def _generate_answer(self, session: ChatSession, query: str,
                         block_ids: list[str], query_message_id: str) -> Message:
        segments, cited = self._segments_for(block_ids)
        prompt = render_prompt(segments, query)
        try:
            text = self.llm.complete("answer", prompt, ANSWER_MAX_CHARS)
            return Message(
                message_id=self._next_message_id(session), role="assistant",
                content=text, cited_blocks=tuple(cited),
                query_message_id=query_message_id, created_at=self._now(),
            )
        except Exception as exc:
            return Message(
                message_id=self._next_message_id(session), role="assistant",
                content=f"[error] answer generation unavailable: {exc}",
                error=True, query_message_id=query_message_id, created_at=self._now(),
            )

    def regenerate(self, session_id: str, user_id: str, message_id: str) -> Message:
        """Fresh answer over the original retrieval plus current staging."""
        with self._lock(session_id):
            session = self.get_session(session_id)
            original = self._find_message(session, message_id)
            if original.role != "assistant":
                raise InvalidError("only assistant messages can be regenerated")
            self._log_event(session, user_id, EventKind.REGENERATE,
                            {"message_id": message_id})
            query, retrieved = self._turn_inputs(session, original)
            block_ids = list(retrieved)
            block_ids.extend(b for b in sorted(session.staging) if b not in retrieved)
            message = self._generate_answer(session, query, block_ids,
                                            original.query_message_id or message_id)
            session.messages.append(message)
            self._save(session)
            return message

    def _find_message(self, session: ChatSession, message_id: str) -> Message:
        for message in session.messages:
            if message.message_id == message_id:
                return message
        raise NotFoundError(f"unknown message {message_id}")

    def _turn_inputs(self, session: ChatSession, assistant: Message) -> tuple[str, list[str]]:
        query, retrieved = "", []
        for message in session.messages:
            if message.message_id == assistant.query_message_id:
                query = message.content
            if (message.role == "retrieval" and message.retrieval_result
                    and message.query_message_id == assistant.query_message_id):
                retrieved = [h.block_id for h in message.retrieval_result.items]
        return query, retrieved

    def rate(self, session_id: str, user_id: str, message_id: str, liked: bool) -> None:
        """Append a Like/Dislike event; the latest one wins for display."""
        with self._lock(session_id):
            session = self.get_session(session_id)
            message = self._find_message(session, message_id)
            if message.role != "assistant":
                raise InvalidError("ratings apply to assistant messages only")
            kind = EventKind.LIKE if liked else EventKind.DISLIKE
            self._log_event(session, user_id, kind, {"message_id": message_id})
            session.ratings[message_id] = kind.value
            self._save(session)

    # --- staging and corpus --------------------------------------------------

    def toggle_block(self, session_id: str, user_id: str, block_id: str,
                     select: bool) -> set[str]:
        """Select or deselect one block; the event is logged even when no-op."""
        with self._lock(session_id):
            session = self.get_session(session_id)
            _, block = self.store.get_block(block_id)
            if block.tombstoned:
                raise InvalidError(f"block {block_id} has been removed")
            kind = EventKind.SELECT_BLOCK if select else EventKind.DESELECT_BLOCK
            self._log_event(session, user_id, kind, {"block_id": block_id})
            if select:
                session.staging.add(block_id)
            else:
                session.staging.discard(block_id)
            self._save(session)
            return set(session.staging)

    def add_document(self, session_id: str, user_id: str, document_id: str) -> set[str]:
        """Widen the session corpus with an indexed document."""
        with self._lock(session_id):
            session = self.get_session(session_id)
            if not self.store.exists(document_id):
                raise NotFoundError(f"unknown document {document_id}")
            document = self.store.get(document_id)
            if document.processing_state is not ProcessingState.INDEXED:
                raise InvalidError(
                    f"document {document_id} is not indexed "
                    f"(state {document.processing_state.value})")
            self._log_event(session, user_id, EventKind.ADD_DOCUMENT,
                            {"document_id": document_id})
            session.corpus.add(document_id)
            self._save(session)
            return set(session.corpus)

    def record_gesture(self, session_id: str, user_id: str, kind: EventKind,
                       payload: dict) -> InteractionEvent:
        """Log a UI gesture (result click, page navigation) with no state change."""
        if kind not in GESTURE_KINDS:
            raise InvalidError(f"{kind.value} is not a recordable gesture")
        if kind is EventKind.CLICK_RESULT and not payload.get("block_id"):
            raise InvalidError("ClickResult requires a block_id")
        if kind is EventKind.NAVIGATE_PAGE:
            if "page_index" not in payload or not isinstance(payload["page_index"], int):
                raise InvalidError("NavigatePage requires an integer page_index")
        with self._lock(session_id):
            session = self.get_session(session_id)
            event = self._log_event(session, user_id, kind, dict(payload))
            self._save(session)
            return event
