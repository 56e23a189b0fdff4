"""JSON configuration for the server and provider selection.

A config file is one JSON object:

    {
      "host": "127.0.0.1",
      "port": 8077,
      "tm_store": "tm.jsonl",
      "sessions_dir": "sessions",
      "static_dir": "frontend/dist",
      "provider": {
        "kind": "anthropic",
        "model_id": "claude-sonnet-4-5",
        "api_key_env": "ANTHROPIC_API_KEY",
        "temperature": 0.0,
        "timeout_ms": 60000,
        "max_attempts": 3
      }
    }

API keys never live in the file, only the name of the environment
variable holding them.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .providers import (
    AnthropicChatProvider,
    ChatProvider,
    GeminiChatProvider,
    MockProvider,
    MockRule,
    MockScript,
    OpenAiChatProvider,
    RetryPolicy,
)

PROVIDER_KINDS = ("mock", "openai", "anthropic", "gemini")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"
    model_id: str = ""
    api_key_env: str = ""
    base_url: str = ""
    temperature: float = 0.0
    timeout_ms: float = 60000
    max_attempts: int = 3
    mock_rules: tuple[tuple[str, str], ...] = ()
    mock_default: str = "echo"

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS:
            raise ConfigError(f"provider kind must be one of {PROVIDER_KINDS}, got {self.kind!r}")
        if self.mock_default not in ("echo", "error"):
            raise ConfigError(f"mock_default must be 'echo' or 'error', got {self.mock_default!r}")
        if not isinstance(self.mock_rules, tuple):
            object.__setattr__(self, "mock_rules", tuple(tuple(r) for r in self.mock_rules))

    @classmethod
    def from_dict(cls, d: dict) -> "ProviderConfig":
        return cls(
            kind=d.get("kind", "mock"),
            model_id=d.get("model_id", ""),
            api_key_env=d.get("api_key_env", ""),
            base_url=d.get("base_url", ""),
            temperature=float(d.get("temperature", 0.0)),
            timeout_ms=float(d.get("timeout_ms", 60000)),
            max_attempts=int(d.get("max_attempts", 3)),
            mock_rules=tuple((r["matcher"], r["response"]) for r in d.get("mock_rules", [])),
            mock_default=d.get("mock_default", "echo"),
        )


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8077
    tm_store: str = "tm.jsonl"
    sessions_dir: str = "sessions"
    static_dir: str = ""
    provider: ProviderConfig = field(default_factory=ProviderConfig)

    @classmethod
    def from_dict(cls, d: dict) -> "ServerConfig":
        return cls(
            host=d.get("host", "127.0.0.1"),
            port=int(d.get("port", 8077)),
            tm_store=d.get("tm_store", "tm.jsonl"),
            sessions_dir=d.get("sessions_dir", "sessions"),
            static_dir=d.get("static_dir", ""),
            provider=ProviderConfig.from_dict(d.get("provider", {})),
        )


def load_config(path: str) -> ServerConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        return ServerConfig.from_dict(data)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad config: {exc}") from exc


def _require_key(cfg: ProviderConfig) -> str:
    if not cfg.api_key_env:
        raise ConfigError(f"provider kind {cfg.kind!r} needs api_key_env in the config")
    key = os.environ.get(cfg.api_key_env, "")
    if not key:
        raise ConfigError(f"environment variable {cfg.api_key_env} is not set")
    return key


def build_provider(cfg: ProviderConfig) -> ChatProvider:
    if cfg.kind == "mock":
        rules = tuple(MockRule(matcher, response) for matcher, response in cfg.mock_rules)
        return MockProvider(MockScript(rules=rules, default_mode=cfg.mock_default))
    if cfg.kind == "openai":
        return OpenAiChatProvider(
            model_id=cfg.model_id,
            api_key=_require_key(cfg),
            **({"base_url": cfg.base_url} if cfg.base_url else {}),
            timeout_ms=cfg.timeout_ms,
        )
    if cfg.kind == "anthropic":
        return AnthropicChatProvider(
            model_id=cfg.model_id,
            api_key=_require_key(cfg),
            **({"base_url": cfg.base_url} if cfg.base_url else {}),
            timeout_ms=cfg.timeout_ms,
        )
    return GeminiChatProvider(
        model_id=cfg.model_id,
        api_key=_require_key(cfg),
        **({"base_url": cfg.base_url} if cfg.base_url else {}),
        timeout_ms=cfg.timeout_ms,
    )


def retry_policy_from(cfg: ProviderConfig) -> RetryPolicy:
    return RetryPolicy(max_attempts=cfg.max_attempts)
