"""Event-sourced translation sessions.

A session is a log of immutable events with gapless sequence numbers
starting at 0. Every mutating operation builds a JSON-safe payload,
appends an event, and folds it into the in-memory state through the same
``_apply_event`` that replay uses, so a live session and its replayed
twin can never disagree. Once confirmed, a session accepts nothing else.
"""
from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .agents import (
    MalformedResponse,
    TaskContext,
    TranslationCandidate,
    invoke_agent,
    revise_candidate,
    synthesize,
)
from .dimensions import JobContext, LanguagePair, UnknownDimension, dimension_from_label
from .providers import ChatProvider, ProviderError, RetryPolicy
from .router import (
    MAX_DIMENSIONS,
    ORIGIN_OVERRIDE,
    RoutingDecision,
    route,
)
from .tm import TmStore
from .util import new_id, now_rfc3339

log = logging.getLogger(__name__)


class SessionError(Exception):
    """Base for session lifecycle violations."""


class EmptySource(SessionError):
    pass


class SessionFinalized(SessionError):
    pass


class UnknownSession(SessionError):
    def __init__(self, session_id: str):
        super().__init__(f"no such session: {session_id}")
        self.session_id = session_id


class InvalidDimensionSet(SessionError):
    pass


class NoDecision(SessionError):
    pass


class UnknownCandidate(SessionError):
    def __init__(self, candidate_id: str):
        super().__init__(f"no such candidate: {candidate_id}")
        self.candidate_id = candidate_id


class NoCandidates(SessionError):
    pass


class AllAgentsFailed(SessionError):
    def __init__(self, failures: list[dict]):
        details = "; ".join(f"{f['dimension']}: {f['error']}" for f in failures)
        super().__init__(f"every selected agent failed: {details}")
        self.failures = failures


class CorruptLog(SessionError):
    def __init__(self, seq: int, reason: str):
        super().__init__(f"corrupt session log at event {seq}: {reason}")
        self.seq = seq
        self.reason = reason


class SessionStatus(str, Enum):
    DRAFTING = "drafting"
    ROUTED = "routed"
    DELIBERATING = "deliberating"
    SYNTHESIZED = "synthesized"
    CONFIRMED = "confirmed"


class EventKind(str, Enum):
    CREATED = "created"
    ROUTED = "routed"
    OVERRIDE_APPLIED = "override_applied"
    AGENTS_INVOKED = "agents_invoked"
    REVISED = "revised"
    SYNTHESIZED = "synthesized"
    CONFIRMED = "confirmed"


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: EventKind
    payload: dict
    at: str

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind.value, "payload": self.payload, "at": self.at}

    @classmethod
    def from_dict(cls, d: dict) -> "SessionEvent":
        return cls(seq=d["seq"], kind=EventKind(d["kind"]), payload=d["payload"], at=d.get("at", ""))


@dataclass
class Session:
    """Materialized view over the event log. Mutate only via the ops below."""

    session_id: str = ""
    source_text: str = ""
    language_pair: LanguagePair | None = None
    job: JobContext | None = None
    goal: str = ""
    draft: str = ""
    status: SessionStatus = SessionStatus.DRAFTING
    decision: RoutingDecision | None = None
    candidates: list[TranslationCandidate] = field(default_factory=list)
    events: list[SessionEvent] = field(default_factory=list)
    created_at: str = ""

    def current_text(self) -> str:
        if self.candidates:
            return self.candidates[-1].text
        return self.draft or ""

    def candidate_by_id(self, candidate_id: str) -> TranslationCandidate:
        for cand in self.candidates:
            if cand.candidate_id == candidate_id:
                return cand
        raise UnknownCandidate(candidate_id)

    def task_context(self) -> TaskContext:
        assert self.language_pair is not None and self.job is not None
        return TaskContext(
            source_text=self.source_text,
            language_pair=self.language_pair,
            job=self.job,
            current_translation=self.current_text(),
            translator_goal=self.goal,
        )

    def to_dict(self) -> dict:
        assert self.language_pair is not None and self.job is not None
        return {
            "session_id": self.session_id,
            "source_text": self.source_text,
            "language_pair": self.language_pair.to_dict(),
            "job": self.job.to_dict(),
            "goal": self.goal,
            "draft": self.draft,
            "status": self.status.value,
            "decision": self.decision.to_dict() if self.decision else None,
            "candidates": [c.to_dict() for c in self.candidates],
            "current_text": self.current_text(),
            "created_at": self.created_at,
            "events": [e.to_dict() for e in self.events],
        }


def _apply_event(session: Session, event: SessionEvent) -> None:
    """Fold one event into state. Replay and live mutation share this path."""
    p = event.payload
    if event.kind is EventKind.CREATED:
        session.session_id = p["session_id"]
        session.source_text = p["source_text"]
        session.language_pair = LanguagePair.from_dict(p["language_pair"])
        session.job = JobContext.from_dict(p["job"])
        session.goal = p.get("goal", "")
        session.draft = p.get("draft", "")
        session.status = SessionStatus.DRAFTING
        session.created_at = event.at
    elif event.kind in (EventKind.ROUTED, EventKind.OVERRIDE_APPLIED):
        session.decision = RoutingDecision.from_dict(p["decision"])
        session.status = SessionStatus.ROUTED
    elif event.kind is EventKind.AGENTS_INVOKED:
        batch = [TranslationCandidate.from_dict(c) for c in p["candidates"]]
        session.candidates.extend(batch)
        if batch:
            session.status = SessionStatus.DELIBERATING
    elif event.kind is EventKind.REVISED:
        session.candidates.append(TranslationCandidate.from_dict(p["candidate"]))
        session.status = SessionStatus.DELIBERATING
    elif event.kind is EventKind.SYNTHESIZED:
        session.candidates.append(TranslationCandidate.from_dict(p["candidate"]))
        session.status = SessionStatus.SYNTHESIZED
    elif event.kind is EventKind.CONFIRMED:
        session.status = SessionStatus.CONFIRMED
    else:  # pragma: no cover - EventKind is closed
        raise CorruptLog(event.seq, f"unknown event kind {event.kind!r}")


def _append(session: Session, kind: EventKind, payload: dict) -> SessionEvent:
    event = SessionEvent(seq=len(session.events), kind=kind, payload=payload, at=now_rfc3339())
    session.events.append(event)
    _apply_event(session, event)
    return event


def _require_open(session: Session) -> None:
    if session.status is SessionStatus.CONFIRMED:
        raise SessionFinalized("session is confirmed and immutable")


def create_session(
    source_text: str,
    language_pair: LanguagePair,
    job: JobContext,
    *,
    goal: str = "",
    draft: str = "",
) -> Session:
    if not source_text or not source_text.strip():
        raise EmptySource("source_text must be non-empty")
    session = Session()
    _append(
        session,
        EventKind.CREATED,
        {
            "session_id": new_id(),
            "source_text": source_text,
            "language_pair": language_pair.to_dict(),
            "job": job.to_dict(),
            "goal": goal,
            "draft": draft,
        },
    )
    return session


def request_routing(
    session: Session,
    provider: ChatProvider,
    tm: TmStore,
    instruction: str,
    *,
    retry: RetryPolicy | None = None,
) -> RoutingDecision:
    """Route the instruction; re-routing an already-routed session is allowed."""
    _require_open(session)
    decision = route(provider, instruction, session.task_context(), tm, retry=retry)
    _append(session, EventKind.ROUTED, {"decision": decision.to_dict(), "instruction": instruction})
    return decision


def apply_override(session: Session, labels: list[str], rationale: str = "") -> RoutingDecision:
    """Translator replaces the routed dimension set. Strict validation: this
    is an explicit human action, not model output to be repaired."""
    _require_open(session)
    if session.decision is None:
        raise NoDecision("nothing routed yet; request routing before overriding")
    dims = []
    for label in labels:
        try:
            dim = dimension_from_label(label)
        except UnknownDimension as exc:
            raise InvalidDimensionSet(str(exc)) from exc
        if dim in dims:
            raise InvalidDimensionSet(f"duplicate dimension: {label}")
        dims.append(dim)
    if not 1 <= len(dims) <= MAX_DIMENSIONS:
        raise InvalidDimensionSet("an override selects between 1 and 3 dimensions")
    dims.sort(key=lambda d: d.ordinal)
    decision = RoutingDecision(
        dimensions=tuple(dims),
        rationale=rationale or "translator override",
        origin=ORIGIN_OVERRIDE,
        instruction_echo=session.decision.instruction_echo,
    )
    _append(session, EventKind.OVERRIDE_APPLIED, {"decision": decision.to_dict()})
    return decision


def invoke_selected(
    session: Session,
    provider: ChatProvider,
    tm: TmStore,
    *,
    retry: RetryPolicy | None = None,
) -> list[TranslationCandidate]:
    """Run every selected agent sequentially in canonical dimension order.

    Per-agent failures are tolerated and recorded; only a clean sweep of
    failures raises, and even then the attempt is part of the log.
    """
    _require_open(session)
    if session.decision is None:
        raise NoDecision("nothing routed yet; request routing before invoking agents")
    ctx = session.task_context()
    batch: list[TranslationCandidate] = []
    failures: list[dict] = []
    for dim in session.decision.dimensions:
        try:
            batch.append(invoke_agent(provider, dim, ctx, tm, retry=retry))
        except (ProviderError, MalformedResponse) as exc:
            log.warning("agent %s failed: %s", dim.label, exc)
            failures.append({"dimension": dim.label, "error": str(exc)})
    _append(
        session,
        EventKind.AGENTS_INVOKED,
        {"candidates": [c.to_dict() for c in batch], "failures": failures},
    )
    if not batch:
        raise AllAgentsFailed(failures)
    return batch


def request_revision(
    session: Session,
    provider: ChatProvider,
    tm: TmStore,
    candidate_id: str,
    instruction: str,
    *,
    retry: RetryPolicy | None = None,
) -> TranslationCandidate:
    _require_open(session)
    if not instruction or not instruction.strip():
        raise ValueError("revision instruction must be non-empty")
    base = session.candidate_by_id(candidate_id)
    revised = revise_candidate(provider, base, instruction, session.task_context(), tm, retry=retry)
    _append(
        session,
        EventKind.REVISED,
        {"candidate": revised.to_dict(), "base_candidate_id": candidate_id, "instruction": instruction},
    )
    return revised


def _synthesis_inputs(session: Session) -> list[TranslationCandidate]:
    """Latest agent batch, with each member replaced by its revision leaves."""
    batch_ids: list[str] = []
    for event in reversed(session.events):
        if event.kind is EventKind.AGENTS_INVOKED and event.payload["candidates"]:
            batch_ids = [c["candidate_id"] for c in event.payload["candidates"]]
            break
    if not batch_ids:
        return list(session.candidates)
    children: dict[str, list[TranslationCandidate]] = {}
    for cand in session.candidates:
        if cand.parent_id:
            children.setdefault(cand.parent_id, []).append(cand)
    leaves: list[TranslationCandidate] = []
    frontier = [session.candidate_by_id(cid) for cid in batch_ids]
    while frontier:
        cand = frontier.pop(0)
        kids = children.get(cand.candidate_id)
        if kids:
            frontier.extend(kids)
        else:
            leaves.append(cand)
    return leaves


def request_synthesis(
    session: Session,
    provider: ChatProvider,
    *,
    retry: RetryPolicy | None = None,
) -> TranslationCandidate:
    _require_open(session)
    if not session.candidates:
        raise NoCandidates("no candidates to synthesize")
    inputs = _synthesis_inputs(session)
    merged = synthesize(provider, inputs, session.task_context(), retry=retry)
    _append(
        session,
        EventKind.SYNTHESIZED,
        {"candidate": merged.to_dict(), "input_candidate_ids": [c.candidate_id for c in inputs]},
    )
    return merged


def confirm(session: Session, candidate_id: str, tm: TmStore) -> str:
    """Finalize on one candidate; records exactly one confirmed TM entry.

    Returns the new TM entry id.
    """
    _require_open(session)
    cand = session.candidate_by_id(candidate_id)
    assert session.language_pair is not None and session.job is not None
    entry_id = tm.record_confirmation(
        source=session.source_text,
        target=cand.text,
        pair=session.language_pair,
        job=session.job,
    )
    _append(session, EventKind.CONFIRMED, {"candidate_id": candidate_id, "tm_entry_id": entry_id})
    return entry_id


def replay(events: Iterable[SessionEvent | dict]) -> Session:
    """Rebuild a session from its log. No model or TM calls happen here."""
    session = Session()
    expected = 0
    for raw in events:
        if isinstance(raw, SessionEvent):
            event = raw
        else:
            try:
                event = SessionEvent.from_dict(raw)
            except (KeyError, ValueError, TypeError) as exc:
                raise CorruptLog(expected, f"undecodable event: {exc}") from exc
        if event.seq != expected:
            raise CorruptLog(event.seq, f"expected seq {expected}")
        if expected == 0 and event.kind is not EventKind.CREATED:
            raise CorruptLog(0, "log must start with a created event")
        if expected > 0 and event.kind is EventKind.CREATED:
            raise CorruptLog(event.seq, "created event appears mid-log")
        try:
            _apply_event(session, event)
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptLog(event.seq, f"unappliable event: {exc}") from exc
        session.events.append(event)
        expected += 1
    if expected == 0:
        raise CorruptLog(0, "empty log")
    return session


class SessionStore:
    """One JSONL event log per session under a directory."""

    def __init__(self, directory: str):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        self._persisted: dict[str, int] = {}
        self._lock = threading.RLock()

    def _path(self, session_id: str) -> str:
        return os.path.join(self.directory, f"{session_id}.jsonl")

    def list_ids(self) -> list[str]:
        ids = []
        for name in os.listdir(self.directory):
            if name.endswith(".jsonl"):
                ids.append(name[: -len(".jsonl")])
        return sorted(ids)

    def sync(self, session: Session) -> None:
        """Append any events not yet on disk."""
        with self._lock:
            done = self._persisted.get(session.session_id, 0)
            fresh = session.events[done:]
            if not fresh:
                return
            with open(self._path(session.session_id), "a", encoding="utf-8") as fh:
                for event in fresh:
                    fh.write(json.dumps(event.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
            self._persisted[session.session_id] = len(session.events)

    def load(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not os.path.exists(path):
            raise UnknownSession(session_id)
        raw_events: list[dict] = []
        with open(path, "r", encoding="utf-8") as fh:
            for index, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    raw_events.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise CorruptLog(index, f"bad JSON on line {index + 1}: {exc}") from exc
        session = replay(raw_events)
        with self._lock:
            self._persisted[session.session_id] = len(session.events)
        return session
