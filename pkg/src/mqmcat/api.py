"""HTTP boundary: sessions, routing, agents, revision, confirmation, TM browse.

Every endpoint delegates to exactly one engine or TM operation; there is
no hidden multi-step automation behind a route. Mutating session
endpoints require a client-supplied request_id and replay their original
response when retried with the same id, so a flaky connection never
double-invokes a paid model call. Every non-2xx body is a single error
object: {"code", "message", "request_id"}.
"""
from __future__ import annotations

import logging
import socket
import threading
from typing import Callable

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .agents import MalformedResponse
from .dimensions import JobContext, LanguagePair, UnknownDimension, Visibility
from .providers import ChatProvider, ProviderError, RetryPolicy
from .session import (
    AllAgentsFailed,
    CorruptLog,
    EmptySource,
    InvalidDimensionSet,
    NoCandidates,
    NoDecision,
    Session,
    SessionFinalized,
    SessionStore,
    UnknownCandidate,
    UnknownSession,
    apply_override,
    confirm,
    create_session,
    invoke_selected,
    request_revision,
    request_routing,
    request_synthesis,
)
from .tm import (
    EntryKind,
    Provenance,
    RetrievalQuery,
    TmEntry,
    TmNamespace,
    TmStore,
)
from .util import new_id, now_rfc3339

log = logging.getLogger(__name__)


class BindFailure(Exception):
    """The configured address is not bindable."""


class ApiFailure(Exception):
    def __init__(self, status: int, code: str, message: str, request_id: str = ""):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.request_id = request_id


_ERROR_MAP: tuple[tuple[type, int, str], ...] = (
    (EmptySource, 400, "empty_source"),
    (InvalidDimensionSet, 400, "invalid_dimension_set"),
    (UnknownDimension, 400, "invalid_dimension_set"),
    (UnknownSession, 404, "unknown_session"),
    (UnknownCandidate, 404, "unknown_candidate"),
    (SessionFinalized, 409, "session_finalized"),
    (NoDecision, 409, "no_decision"),
    (NoCandidates, 409, "no_candidates"),
    (AllAgentsFailed, 502, "all_agents_failed"),
    (MalformedResponse, 502, "provider_malformed_output"),
    (ProviderError, 502, "provider_unavailable"),
    (CorruptLog, 500, "corrupt_log"),
    (ValueError, 400, "invalid_request"),
)


def _to_api_failure(exc: Exception, request_id: str) -> ApiFailure:
    for err_type, status, code in _ERROR_MAP:
        if isinstance(exc, err_type):
            return ApiFailure(status, code, str(exc), request_id)
    log.exception("unhandled engine error")
    return ApiFailure(500, "internal_error", str(exc), request_id)


class CreateSessionBody(BaseModel):
    source: str
    src_lang: str
    tgt_lang: str
    draft: str = ""
    goal: str = ""
    job: dict = Field(default_factory=dict)


class RouteBody(BaseModel):
    instruction: str = ""
    request_id: str = Field(min_length=1)


class OverrideBody(BaseModel):
    dimensions: list[str]
    request_id: str = Field(min_length=1)


class InvokeBody(BaseModel):
    request_id: str = Field(min_length=1)


class ReviseBody(BaseModel):
    candidate_id: str
    instruction: str
    request_id: str = Field(min_length=1)


class SynthesizeBody(BaseModel):
    request_id: str = Field(min_length=1)


class ConfirmBody(BaseModel):
    candidate_id: str
    request_id: str = Field(min_length=1)


class TmEntryBody(BaseModel):
    namespace: dict
    kind: str
    src_lang: str
    tgt_lang: str
    source_text: str = ""
    target_text: str = ""
    provenance: str = "seeded"
    note: str = ""


class _State:
    """Mutable bits behind the app: engine handles, caches, locks."""

    def __init__(self, provider: ChatProvider, tm_store: TmStore, session_store: SessionStore, retry: RetryPolicy | None):
        self.provider = provider
        self.tm = tm_store
        self.store = session_store
        self.retry = retry
        self.sessions: dict[str, Session] = {}
        self.idempotency: dict[tuple[str, str], tuple[int, dict]] = {}
        self._big_lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._big_lock:
            return self._session_locks.setdefault(session_id, threading.Lock())

    def get_session(self, session_id: str) -> Session:
        with self._big_lock:
            cached = self.sessions.get(session_id)
        if cached is not None:
            return cached
        loaded = self.store.load(session_id)  # raises UnknownSession
        with self._big_lock:
            return self.sessions.setdefault(session_id, loaded)

    def remember(self, session: Session) -> None:
        with self._big_lock:
            self.sessions[session.session_id] = session

    def cached_response(self, path: str, request_id: str) -> JSONResponse | None:
        with self._big_lock:
            hit = self.idempotency.get((path, request_id))
        if hit is None:
            return None
        status, payload = hit
        return JSONResponse(payload, status_code=status)

    def cache_response(self, path: str, request_id: str, status: int, payload: dict) -> None:
        # Only successes replay; a failed call should be retried for real.
        if 200 <= status < 300:
            with self._big_lock:
                self.idempotency[(path, request_id)] = (status, payload)


def create_app(
    provider: ChatProvider,
    tm_store: TmStore,
    session_store: SessionStore,
    *,
    static_dir: str | None = None,
    retry: RetryPolicy | None = None,
) -> FastAPI:
    app = FastAPI(title="translation workbench", docs_url=None, redoc_url=None)
    state = _State(provider, tm_store, session_store, retry)
    app.state.engine = state

    @app.exception_handler(ApiFailure)
    async def _api_failure_handler(_request: Request, exc: ApiFailure):
        return JSONResponse(
            {"code": exc.code, "message": exc.message, "request_id": exc.request_id},
            status_code=exc.status,
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            {"code": "malformed_body", "message": str(exc.errors()[:3]), "request_id": ""},
            status_code=400,
        )

    @app.get("/healthz", response_class=PlainTextResponse)
    def healthz() -> str:
        return "ok"

    @app.post("/sessions", status_code=201)
    def create_session_route(body: CreateSessionBody):
        try:
            pair = LanguagePair(body.src_lang, body.tgt_lang)
            job_dict = dict(body.job)
            job_dict.setdefault("job_id", new_id())
            job = JobContext(
                job_id=str(job_dict["job_id"]),
                domain_tag=str(job_dict.get("domain_tag", "")),
                audience_note=str(job_dict.get("audience_note", "")),
                visibility=Visibility(job_dict.get("visibility", "normal")),
            )
            session = create_session(body.source, pair, job, goal=body.goal, draft=body.draft)
            state.store.sync(session)
            state.remember(session)
        except Exception as exc:
            raise _to_api_failure(exc, "") from exc
        return session.to_dict()

    def _mutate(session_id: str, request_id: str, path: str, op: Callable[[Session], None]):
        cached = state.cached_response(path, request_id)
        if cached is not None:
            return cached
        try:
            with state.lock_for(session_id):
                session = state.get_session(session_id)
                op(session)
                state.store.sync(session)
                payload = session.to_dict()
        except Exception as exc:
            raise _to_api_failure(exc, request_id) from exc
        state.cache_response(path, request_id, 200, payload)
        return JSONResponse(payload, status_code=200)

    @app.get("/sessions/{session_id}")
    def get_session_route(session_id: str):
        try:
            session = state.get_session(session_id)
        except Exception as exc:
            raise _to_api_failure(exc, "") from exc
        return session.to_dict()

    @app.get("/sessions/{session_id}/events")
    def get_events_route(session_id: str):
        try:
            session = state.get_session(session_id)
        except Exception as exc:
            raise _to_api_failure(exc, "") from exc
        return {"session_id": session_id, "events": [e.to_dict() for e in session.events]}

    @app.post("/sessions/{session_id}/route")
    def route_route(session_id: str, body: RouteBody):
        return _mutate(
            session_id,
            body.request_id,
            f"/sessions/{session_id}/route",
            lambda s: request_routing(s, state.provider, state.tm, body.instruction, retry=state.retry),
        )

    @app.post("/sessions/{session_id}/override")
    def override_route(session_id: str, body: OverrideBody):
        return _mutate(
            session_id,
            body.request_id,
            f"/sessions/{session_id}/override",
            lambda s: apply_override(s, body.dimensions),
        )

    @app.post("/sessions/{session_id}/invoke")
    def invoke_route(session_id: str, body: InvokeBody):
        return _mutate(
            session_id,
            body.request_id,
            f"/sessions/{session_id}/invoke",
            lambda s: invoke_selected(s, state.provider, state.tm, retry=state.retry),
        )

    @app.post("/sessions/{session_id}/revise")
    def revise_route(session_id: str, body: ReviseBody):
        return _mutate(
            session_id,
            body.request_id,
            f"/sessions/{session_id}/revise",
            lambda s: request_revision(
                s, state.provider, state.tm, body.candidate_id, body.instruction, retry=state.retry
            ),
        )

    @app.post("/sessions/{session_id}/synthesize")
    def synthesize_route(session_id: str, body: SynthesizeBody):
        return _mutate(
            session_id,
            body.request_id,
            f"/sessions/{session_id}/synthesize",
            lambda s: request_synthesis(s, state.provider, retry=state.retry),
        )

    @app.post("/sessions/{session_id}/confirm")
    def confirm_route(session_id: str, body: ConfirmBody):
        return _mutate(
            session_id,
            body.request_id,
            f"/sessions/{session_id}/confirm",
            lambda s: confirm(s, body.candidate_id, state.tm),
        )

    @app.get("/tm/search")
    def tm_search_route(
        q: str = Query(...),
        src: str = Query(...),
        tgt: str = Query(...),
        k: int = Query(5, ge=1, le=50),
    ):
        try:
            pair = LanguagePair(src, tgt)
            scored = state.tm.retrieve(RetrievalQuery(query_text=q, language_pair=pair, top_k=k))
        except Exception as exc:
            raise _to_api_failure(exc, "") from exc
        return {"results": [{"entry": se.entry.to_dict(), "score": se.score} for se in scored]}

    @app.post("/tm/entries", status_code=201)
    def tm_add_route(body: TmEntryBody):
        try:
            entry = TmEntry(
                entry_id=new_id(),
                namespace=TmNamespace.from_dict(body.namespace),
                kind=EntryKind(body.kind),
                language_pair=LanguagePair(body.src_lang, body.tgt_lang),
                source_text=body.source_text,
                target_text=body.target_text,
                provenance=Provenance(body.provenance),
                created_at=now_rfc3339(),
                note=body.note,
            )
            entry_id = state.tm.upsert_entry(entry)
        except Exception as exc:
            raise _to_api_failure(exc, "") from exc
        return {"entry_id": entry_id}

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app


def serve(config) -> None:
    """Bind and run until interrupted. Raises BindFailure up front when the
    address is taken so the CLI can report it cleanly."""
    import uvicorn

    from .config import ServerConfig, build_provider, retry_policy_from
    from .tm import open_store

    assert isinstance(config, ServerConfig)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((config.host, config.port))
    except OSError as exc:
        raise BindFailure(f"cannot bind {config.host}:{config.port}: {exc}") from exc
    finally:
        probe.close()
    provider = build_provider(config.provider)
    app = create_app(
        provider,
        open_store(config.tm_store),
        SessionStore(config.sessions_dir),
        static_dir=config.static_dir or None,
        retry=retry_policy_from(config.provider),
    )
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
