"""Random valid-operation walks over the session engine, shared by the
session tests and the acceptance suite.

Each walk drives one session through a random but always-legal operation
sequence against a fully scripted mock provider, then checks the
structural invariants that must hold for every history.
"""
from __future__ import annotations

import random

from mqmcat.dimensions import JobContext, LanguagePair, all_dimensions
from mqmcat.providers import MockProvider, MockRule, MockScript, RetryPolicy
from mqmcat.session import (
    EventKind,
    Session,
    SessionStatus,
    apply_override,
    confirm,
    create_session,
    invoke_selected,
    replay,
    request_revision,
    request_routing,
    request_synthesis,
)
from mqmcat.tm import TmNamespace, TmStore

FAST = RetryPolicy(max_attempts=1)

SCRIPT = MockScript(
    rules=(
        MockRule("revise:", '{"translation": "revised text", "explanation": "tweak", "tm_refs": []}'),
        MockRule("router", '{"dimensions": ["Accuracy", "Style"], "rationale": "walked"}'),
        MockRule("agent:", '{"translation": "agent text", "explanation": "pass", "tm_refs": []}'),
        MockRule("editor", '{"translation": "merged text", "explanation": "joined"}'),
    )
)

INSTRUCTIONS = [
    "fix the terminology",
    "make the tone formal",
    "watch the number formats",
    "keep it accurate",
    "smooth the grammar",
]

LABEL_POOL = [d.label for d in all_dimensions()]


def run_random_walk(rng: random.Random, tm: TmStore, max_ops: int = 12) -> Session:
    provider = MockProvider(SCRIPT)
    job = JobContext(job_id=f"walk-{rng.getrandbits(48):012x}")
    session = create_session(
        source_text=f"source sentence {rng.randint(0, 999)}",
        language_pair=LanguagePair("en", "de"),
        job=job,
        goal=rng.choice(["", "read naturally", "match the glossary"]),
        draft=rng.choice(["", "ein erster entwurf"]),
    )
    for _ in range(rng.randint(1, max_ops)):
        if session.status is SessionStatus.CONFIRMED:
            break
        ops = ["route"]
        if session.decision is not None:
            ops += ["override", "invoke", "invoke"]
        if session.candidates:
            ops += ["revise", "revise", "synthesize", "confirm"]
        op = rng.choice(ops)
        if op == "route":
            request_routing(session, provider, tm, rng.choice(INSTRUCTIONS), retry=FAST)
        elif op == "override":
            count = rng.randint(1, 3)
            labels = rng.sample(LABEL_POOL, count)
            apply_override(session, labels)
        elif op == "invoke":
            invoke_selected(session, provider, tm, retry=FAST)
        elif op == "revise":
            target = rng.choice(session.candidates)
            request_revision(session, provider, tm, target.candidate_id, "tighten it", retry=FAST)
        elif op == "synthesize":
            request_synthesis(session, provider, retry=FAST)
        elif op == "confirm":
            target = rng.choice(session.candidates)
            confirm(session, target.candidate_id, tm)
    return session


def check_invariants(session: Session, tm: TmStore) -> None:
    seqs = [e.seq for e in session.events]
    assert seqs == list(range(len(seqs))), f"seq not gapless: {seqs}"

    confirmed_positions = [i for i, e in enumerate(session.events) if e.kind is EventKind.CONFIRMED]
    if confirmed_positions:
        assert confirmed_positions == [len(session.events) - 1], "events after confirmed"
        assert session.status is SessionStatus.CONFIRMED

    twin = replay([e.to_dict() for e in session.events])
    assert twin.to_dict() == session.to_dict(), "replay diverges from live state"

    by_id = {c.candidate_id: c for c in session.candidates}
    for cand in session.candidates:
        if cand.parent_id is not None:
            parent = by_id[cand.parent_id]
            assert cand.round == parent.round + 1, "revision round must be parent + 1"

    job_ns = TmNamespace.for_job(session.job.job_id)
    confirmed_entries = [e for e in tm.entries() if e.namespace == job_ns]
    expected = 1 if session.status is SessionStatus.CONFIRMED else 0
    assert len(confirmed_entries) == expected, (
        f"expected {expected} confirmed TM entries, found {len(confirmed_entries)}"
    )
