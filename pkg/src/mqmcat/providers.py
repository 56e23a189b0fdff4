"""Chat-completion providers: one interface, remote backends plus a scriptable mock.

Every provider records (request, response-or-error, latency) to an
append-only call log, so tests and the evaluation harness can count calls
exactly. The mock is a pure function of (script, request); transient
failures for retry testing come from the separate stateful
``SequenceProvider``.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from threading import Lock
from typing import Literal

import httpx

logger = logging.getLogger(__name__)

Role = Literal["system", "user", "assistant"]

# Requests above this temperature are allowed but logged: deterministic
# output is the default operating policy.
TEMPERATURE_POLICY_MAX = 0.3


class ProviderError(Exception):
    pass


class ProviderUnavailable(ProviderError):
    pass


class ProviderTimeout(ProviderError):
    def __init__(self, deadline_ms: float):
        super().__init__(f"provider call exceeded {deadline_ms:.0f} ms")
        self.deadline_ms = deadline_ms


class RateLimited(ProviderError):
    def __init__(self, retry_after: float = 0.0):
        super().__init__(f"rate limited, retry after {retry_after}s")
        self.retry_after = retry_after


@dataclass(frozen=True)
class Message:
    role: Role
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown message role: {self.role!r}")
        # Real models can return empty text; only prompting with nothing is a bug.
        if self.role != "assistant" and not self.content:
            raise ValueError(f"{self.role} message content must be non-empty")


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[Message, ...]
    model_id: str = ""
    temperature: float = 0.0
    max_output_chars: int = 8000
    tag: str = ""

    def __post_init__(self):
        if not isinstance(self.messages, tuple):
            object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError("temperature must be in [0, 1]")
        if self.temperature > TEMPERATURE_POLICY_MAX:
            logger.warning(
                "temperature %.2f above policy ceiling %.1f (tag=%s)",
                self.temperature,
                TEMPERATURE_POLICY_MAX,
                self.tag,
            )
        if self.max_output_chars < 1:
            raise ValueError("max_output_chars must be >= 1")

    def last_user_content(self) -> str:
        for msg in reversed(self.messages):
            if msg.role == "user":
                return msg.content
        return ""

    def joined_content(self) -> str:
        return "\n".join(m.content for m in self.messages)


@dataclass(frozen=True)
class ChatResponse:
    content: str
    model_id: str
    latency_ms: float
    truncated: bool = False


@dataclass(frozen=True)
class CallRecord:
    request: ChatRequest
    response: ChatResponse | None
    error: str | None
    latency_ms: float


class ChatProvider:
    """Base class: subclasses implement _complete(request) -> raw text."""

    default_model_id = "unknown"

    def __init__(self):
        self._log: list[CallRecord] = []
        self._log_lock = Lock()

    @property
    def call_log(self) -> tuple[CallRecord, ...]:
        with self._log_lock:
            return tuple(self._log)

    def _record(self, record: CallRecord) -> None:
        with self._log_lock:
            self._log.append(record)

    def complete(self, request: ChatRequest) -> ChatResponse:
        """Run one chat completion, log it, and return the (possibly truncated) output."""
        start = time.perf_counter()
        try:
            raw = self._complete(request)
        except ProviderError as e:
            latency = (time.perf_counter() - start) * 1000.0
            self._record(CallRecord(request=request, response=None, error=str(e), latency_ms=latency))
            raise
        latency = (time.perf_counter() - start) * 1000.0
        truncated = len(raw) > request.max_output_chars
        response = ChatResponse(
            content=raw[: request.max_output_chars],
            model_id=request.model_id or self.default_model_id,
            latency_ms=latency,
            truncated=truncated,
        )
        self._record(CallRecord(request=request, response=response, error=None, latency_ms=latency))
        return response

    def _complete(self, request: ChatRequest) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class MockRule:
    matcher: str
    response: str


@dataclass(frozen=True)
class MockScript:
    """Ordered substring rules; first match wins. Unmatched requests either
    echo the last user message or fail, per default_mode."""

    rules: tuple[MockRule, ...] = ()
    default_mode: Literal["error", "echo"] = "echo"

    def __post_init__(self):
        if not isinstance(self.rules, tuple):
            object.__setattr__(self, "rules", tuple(self.rules))


class MockProvider(ChatProvider):
    """Deterministic offline provider: pure function of (script, request)."""

    default_model_id = "mock"

    def __init__(self, script: MockScript | None = None):
        super().__init__()
        self.script = script or MockScript()

    def _complete(self, request: ChatRequest) -> str:
        blob = request.joined_content()
        for rule in self.script.rules:
            if rule.matcher in blob or rule.matcher in request.tag:
                return rule.response
        if self.script.default_mode == "echo":
            return "ECHO[" + request.last_user_content() + "]"
        raise ProviderUnavailable("mock scripted failure (default_mode=error)")


def make_mock_provider(script: MockScript | None = None) -> MockProvider:
    return MockProvider(script)


class SequenceProvider(ChatProvider):
    """Stateful test double: replays a fixed sequence of outcomes.

    Each outcome is either a string (success) or a ProviderError instance
    (raised). After the sequence is exhausted the last outcome repeats.
    Use this to exercise retry policies; MockProvider stays pure.
    """

    default_model_id = "sequence"

    def __init__(self, outcomes: list[str | Exception]):
        super().__init__()
        if not outcomes:
            raise ValueError("outcomes must be non-empty")
        self._outcomes = list(outcomes)
        self._next = 0
        self._seq_lock = Lock()

    def _complete(self, request: ChatRequest) -> str:
        with self._seq_lock:
            outcome = self._outcomes[min(self._next, len(self._outcomes) - 1)]
            self._next += 1
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff: float = 0.5

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


_RETRYABLE = (ProviderUnavailable, ProviderTimeout, RateLimited)


def complete_with_retry(
    provider: ChatProvider,
    request: ChatRequest,
    policy: RetryPolicy | None = None,
    *,
    sleep=time.sleep,
) -> ChatResponse:
    """complete() with exponential backoff on transient provider errors.

    Backoff after attempt i (0-based) is base_backoff * 2**i; RateLimited
    hints extend the wait. The last error propagates after max_attempts.
    """
    policy = policy or RetryPolicy()
    last_error: ProviderError | None = None
    for attempt in range(policy.max_attempts):
        try:
            return provider.complete(request)
        except _RETRYABLE as e:
            last_error = e
            if attempt == policy.max_attempts - 1:
                break
            wait = policy.base_backoff * (2**attempt)
            if isinstance(e, RateLimited):
                wait = max(wait, e.retry_after)
            if wait > 0:
                sleep(wait)
    assert last_error is not None
    raise last_error


class OpenAiChatProvider(ChatProvider):
    """OpenAI-compatible /chat/completions backend."""

    def __init__(
        self,
        model_id: str,
        api_key: str,
        base_url: str = "https://api.openai.com/v1",
        timeout_ms: float = 60000,
        client: httpx.Client | None = None,
    ):
        super().__init__()
        self.default_model_id = model_id
        self._api_key = api_key
        self._base_url = base_url.rstrip("/")
        self._timeout_ms = timeout_ms
        self._client = client or httpx.Client(timeout=timeout_ms / 1000.0)

    def _complete(self, request: ChatRequest) -> str:
        payload = {
            "model": request.model_id or self.default_model_id,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
        }
        data = _post_json(
            self._client,
            f"{self._base_url}/chat/completions",
            payload,
            headers={"Authorization": f"Bearer {self._api_key}"},
            timeout_ms=self._timeout_ms,
        )
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as e:
            raise ProviderUnavailable(f"malformed completion payload: {e}") from e


class AnthropicChatProvider(ChatProvider):
    """Anthropic messages API backend."""

    def __init__(
        self,
        model_id: str,
        api_key: str,
        base_url: str = "https://api.anthropic.com",
        timeout_ms: float = 60000,
        client: httpx.Client | None = None,
    ):
        super().__init__()
        self.default_model_id = model_id
        self._api_key = api_key
        self._base_url = base_url.rstrip("/")
        self._timeout_ms = timeout_ms
        self._client = client or httpx.Client(timeout=timeout_ms / 1000.0)

    def _complete(self, request: ChatRequest) -> str:
        system = "\n".join(m.content for m in request.messages if m.role == "system")
        turns = [
            {"role": m.role, "content": m.content}
            for m in request.messages
            if m.role in ("user", "assistant")
        ]
        payload = {
            "model": request.model_id or self.default_model_id,
            "max_tokens": max(1, request.max_output_chars // 4),
            "messages": turns,
            "temperature": request.temperature,
        }
        if system:
            payload["system"] = system
        data = _post_json(
            self._client,
            f"{self._base_url}/v1/messages",
            payload,
            headers={"x-api-key": self._api_key, "anthropic-version": "2023-06-01"},
            timeout_ms=self._timeout_ms,
        )
        try:
            return "".join(block.get("text", "") for block in data["content"])
        except (KeyError, TypeError) as e:
            raise ProviderUnavailable(f"malformed completion payload: {e}") from e


class GeminiChatProvider(ChatProvider):
    """Google generateContent backend."""

    def __init__(
        self,
        model_id: str,
        api_key: str,
        base_url: str = "https://generativelanguage.googleapis.com/v1beta",
        timeout_ms: float = 60000,
        client: httpx.Client | None = None,
    ):
        super().__init__()
        self.default_model_id = model_id
        self._api_key = api_key
        self._base_url = base_url.rstrip("/")
        self._timeout_ms = timeout_ms
        self._client = client or httpx.Client(timeout=timeout_ms / 1000.0)

    def _complete(self, request: ChatRequest) -> str:
        system = "\n".join(m.content for m in request.messages if m.role == "system")
        contents = []
        for m in request.messages:
            if m.role == "system":
                continue
            role = "user" if m.role == "user" else "model"
            contents.append({"role": role, "parts": [{"text": m.content}]})
        payload: dict = {
            "contents": contents,
            "generationConfig": {"temperature": request.temperature},
        }
        if system:
            payload["systemInstruction"] = {"parts": [{"text": system}]}
        model = request.model_id or self.default_model_id
        data = _post_json(
            self._client,
            f"{self._base_url}/models/{model}:generateContent",
            payload,
            headers={"x-goog-api-key": self._api_key},
            timeout_ms=self._timeout_ms,
        )
        try:
            parts = data["candidates"][0]["content"]["parts"]
            return "".join(p.get("text", "") for p in parts)
        except (KeyError, IndexError, TypeError) as e:
            raise ProviderUnavailable(f"malformed completion payload: {e}") from e


def _post_json(
    client: httpx.Client, url: str, payload: dict, *, headers: dict, timeout_ms: float
) -> dict:
    """POST and map transport/status failures onto the provider error taxonomy."""
    try:
        resp = client.post(url, json=payload, headers=headers)
    except httpx.TimeoutException as e:
        raise ProviderTimeout(timeout_ms) from e
    except httpx.HTTPError as e:
        raise ProviderUnavailable(str(e)) from e
    if resp.status_code == 429:
        retry_after = float(resp.headers.get("retry-after", "1") or 1)
        raise RateLimited(retry_after)
    if resp.status_code >= 400:
        raise ProviderUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        return resp.json()
    except ValueError as e:
        raise ProviderUnavailable(f"non-JSON response: {e}") from e
