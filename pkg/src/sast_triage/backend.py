"""Reasoning-backend abstraction: HTTP chat-completion client plus a
deterministic scripted backend for tests and offline runs.

The HTTP wire format is the de-facto chat-completions shape
({model, messages, temperature}); the prompt's system_instruction becomes the
system message and the canonical payload JSON the user message. Temperature
is pinned to 0 so triage verdicts are as repeatable as the model allows.

The scripted backend keys fixture entries on (finding fingerprint, task), not
on the prompt digest, so context-extraction changes do not invalidate
fixtures. A separate golden-prompt test pins the digest.

API keys are read from the environment at call time and never appear in
errors, logs, or responses.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

import requests

from .errors import AuthMissing, BackendTimeout, FixtureMiss, TransportError
from .promptkit import PromptDocument

BACKOFF_BASE_SECONDS = 1.0
BACKOFF_FACTOR = 2.0


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # "scripted" | "http"
    endpoint: str | None = None
    model_name: str = ""
    api_key_env: str = ""
    timeout: float = 60.0
    max_retries: int = 2
    max_parallel: int = 4
    fixture_path: str | None = None
    strict: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("scripted", "http"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http backend requires an endpoint")
        if self.kind == "scripted" and not self.fixture_path:
            raise ValueError("scripted backend requires a fixture_path")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class BackendResponse:
    raw_text: str
    latency_ms: float
    attempt_count: int
    model_name: str


class ScriptTable:
    """Fixture map {fingerprint: {task: text}} with an optional 'default' entry."""

    def __init__(self, entries: Mapping[str, Mapping[str, str]], strict: bool = False):
        self.entries = {k: dict(v) for k, v in entries.items()}
        self.strict = strict

    def lookup(self, fingerprint: str | None, task: str) -> str:
        entry = self.entries.get(fingerprint or "")
        if entry is not None and task in entry:
            return entry[task]
        if self.strict:
            raise FixtureMiss(f"no scripted entry for ({fingerprint}, {task}) in strict mode")
        default = self.entries.get("default")
        if default is not None and task in default:
            return default[task]
        raise FixtureMiss(f"no scripted entry or default for ({fingerprint}, {task})")


def load_script_table(path: Path | str, strict: bool = False) -> ScriptTable:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("scripted fixture must be a JSON object keyed by fingerprint")
    return ScriptTable(data, strict=strict)


def scripted_lookup(fingerprint: str | None, task: str, fixture: ScriptTable) -> str:
    return fixture.lookup(fingerprint, task)


class ScriptedBackend:
    def __init__(self, config: BackendConfig):
        self.config = config
        self.table = load_script_table(config.fixture_path or "", strict=config.strict)

    def complete(self, prompt: PromptDocument) -> BackendResponse:
        started = time.perf_counter()
        text = self.table.lookup(prompt.finding_fingerprint, prompt.task)
        return BackendResponse(
            raw_text=text,
            latency_ms=(time.perf_counter() - started) * 1000.0,
            attempt_count=1,
            model_name=self.config.model_name or "scripted",
        )


class HttpBackend:
    """Chat-completion client with bounded parallelism and retry policy.

    Retries transport failures and 5xx responses with exponential backoff
    (base 1s, factor 2); 4xx responses never retry.
    """

    def __init__(
        self,
        config: BackendConfig,
        *,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._session = session or requests.Session()
        self._sleep = sleep
        self._semaphore = threading.BoundedSemaphore(max(1, config.max_parallel))

    def _request_body(self, prompt: PromptDocument) -> dict[str, Any]:
        payload_json = json.dumps(prompt.payload, sort_keys=True, ensure_ascii=False)
        return {
            "model": self.config.model_name,
            "messages": [
                {"role": "system", "content": prompt.system_instruction},
                {"role": "user", "content": payload_json},
            ],
            "temperature": 0,
        }

    def complete(self, prompt: PromptDocument) -> BackendResponse:
        api_key = os.environ.get(self.config.api_key_env) if self.config.api_key_env else None
        if not api_key:
            raise AuthMissing(
                f"environment variable {self.config.api_key_env or '<unset>'} is not set"
            )
        headers = {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}
        body = self._request_body(prompt)
        attempts = self.config.max_retries + 1
        started = time.perf_counter()
        last_error: str = "no attempt made"
        timed_out = False
        with self._semaphore:
            for attempt in range(1, attempts + 1):
                try:
                    resp = self._session.post(
                        self.config.endpoint or "",
                        json=body,
                        headers=headers,
                        timeout=self.config.timeout,
                    )
                except requests.Timeout:
                    last_error = f"timeout after {self.config.timeout}s"
                    timed_out = True
                except requests.RequestException as exc:
                    last_error = f"transport failure: {type(exc).__name__}"
                    timed_out = False
                else:
                    if resp.status_code >= 500:
                        last_error = f"server error {resp.status_code}"
                        timed_out = False
                    elif resp.status_code >= 400:
                        raise TransportError(
                            f"backend rejected request with status {resp.status_code}"
                        )
                    else:
                        text = self._extract_text(resp)
                        return BackendResponse(
                            raw_text=text,
                            latency_ms=(time.perf_counter() - started) * 1000.0,
                            attempt_count=attempt,
                            model_name=self.config.model_name,
                        )
                if attempt < attempts:
                    self._sleep(BACKOFF_BASE_SECONDS * (BACKOFF_FACTOR ** (attempt - 1)))
        if timed_out:
            raise BackendTimeout(f"{last_error} after {attempts} attempt(s)")
        raise TransportError(f"{last_error} after {attempts} attempt(s)")

    @staticmethod
    def _extract_text(resp: requests.Response) -> str:
        try:
            data = resp.json()
        except ValueError:
            return resp.text
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            return resp.text


Backend = ScriptedBackend | HttpBackend

_BACKEND_CACHE: dict[BackendConfig, Backend] = {}
_CACHE_LOCK = threading.Lock()


def make_backend(config: BackendConfig) -> Backend:
    if config.kind == "scripted":
        return ScriptedBackend(config)
    return HttpBackend(config)


def complete(prompt: PromptDocument, config: BackendConfig) -> BackendResponse:
    """Convenience wrapper reusing one backend instance per config."""
    with _CACHE_LOCK:
        backend = _BACKEND_CACHE.get(config)
        if backend is None:
            backend = make_backend(config)
            _BACKEND_CACHE[config] = backend
    return backend.complete(prompt)
