from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from sast_triage.backend import (
    BackendConfig,
    HttpBackend,
    ScriptedBackend,
    ScriptTable,
    load_script_table,
    make_backend,
    scripted_lookup,
)
from sast_triage.errors import AuthMissing, FixtureMiss, TransportError
from sast_triage.promptkit import GuardReport, PromptDocument


def _prompt(fingerprint: str | None = "0011223344556677", task: str = "triage") -> PromptDocument:
    return PromptDocument(
        schema_version="1",
        task=task,
        system_instruction="analyze",
        payload={"schema_version": "1", "question": "?"},
        guard=GuardReport.clean(),
        render_digest="d" * 64,
        finding_fingerprint=fingerprint,
    )


class StubChat:
    """Minimal chat endpoint scripted with a status sequence."""

    def __init__(self, statuses: list[int], delay: float = 0.0):
        self.statuses = list(statuses)
        self.delay = delay
        self.requests: list[dict] = []
        self.concurrent = 0
        self.max_concurrent = 0
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):
                pass

            def do_POST(self):
                with stub._lock:
                    stub.concurrent += 1
                    stub.max_concurrent = max(stub.max_concurrent, stub.concurrent)
                    status = stub.statuses.pop(0) if stub.statuses else 200
                    length = int(self.headers.get("Content-Length") or 0)
                    body = json.loads(self.rfile.read(length) or b"{}")
                    stub.requests.append({"body": body, "auth": self.headers.get("Authorization")})
                if stub.delay:
                    time.sleep(stub.delay)
                payload = json.dumps(
                    {"choices": [{"message": {"content": '{"verdict": "false_positive", "reasoning": "ok"}'}}]}
                ).encode()
                try:
                    self.send_response(status)
                    self.send_header("Content-Type", "application/json")
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    if status < 500:
                        self.wfile.write(payload)
                    else:
                        self.wfile.write(payload)
                finally:
                    with stub._lock:
                        stub.concurrent -= 1

        class Server(ThreadingHTTPServer):
            request_queue_size = 64
            daemon_threads = True

        self._httpd = Server(("127.0.0.1", 0), Handler)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self._httpd.server_address[1]}/v1/chat/completions"

    def __enter__(self):
        threading.Thread(target=self._httpd.serve_forever, daemon=True).start()
        return self

    def __exit__(self, *exc):
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture()
def fixture_path(tmp_path: Path) -> Path:
    table = {
        "0011223344556677": {"triage": "entry text", "exploit": "curl http://127.0.0.1:1/x"},
        "default": {"triage": "default text"},
    }
    path = tmp_path / "responses.json"
    path.write_text(json.dumps(table))
    return path


class TestScripted:
    def test_entry_lookup(self, fixture_path: Path):
        config = BackendConfig(kind="scripted", fixture_path=str(fixture_path))
        backend = make_backend(config)
        assert isinstance(backend, ScriptedBackend)
        resp = backend.complete(_prompt())
        assert resp.raw_text == "entry text"
        assert resp.attempt_count == 1

    def test_default_used_when_strict_off(self, fixture_path: Path):
        backend = ScriptedBackend(BackendConfig(kind="scripted", fixture_path=str(fixture_path)))
        assert backend.complete(_prompt(fingerprint="ffffffffffffffff")).raw_text == "default text"

    def test_strict_miss_raises(self, fixture_path: Path):
        backend = ScriptedBackend(
            BackendConfig(kind="scripted", fixture_path=str(fixture_path), strict=True)
        )
        with pytest.raises(FixtureMiss):
            backend.complete(_prompt(fingerprint="ffffffffffffffff"))

    def test_no_entry_no_default_raises(self, tmp_path: Path):
        path = tmp_path / "empty.json"
        path.write_text("{}")
        table = load_script_table(path)
        with pytest.raises(FixtureMiss):
            scripted_lookup("ab", "triage", table)

    def test_task_scoped_lookup(self, fixture_path: Path):
        table = load_script_table(fixture_path)
        assert scripted_lookup("0011223344556677", "exploit", table).startswith("curl")
        # task missing on the entry falls through to default (non-strict)
        assert scripted_lookup("0011223344556677", "remediation", ScriptTable(
            {"default": {"remediation": "generic"}})) == "generic"

    def test_referential_transparency(self, fixture_path: Path):
        backend = ScriptedBackend(BackendConfig(kind="scripted", fixture_path=str(fixture_path)))
        a = backend.complete(_prompt()).raw_text
        b = backend.complete(_prompt()).raw_text
        assert a == b

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BackendConfig(kind="scripted")
        with pytest.raises(ValueError):
            BackendConfig(kind="http")
        with pytest.raises(ValueError):
            BackendConfig(kind="http", endpoint="http://x", timeout=0)


class TestHttp:
    def test_auth_missing_when_env_unset(self, monkeypatch):
        monkeypatch.delenv("UNIT_TEST_KEY", raising=False)
        backend = HttpBackend(
            BackendConfig(kind="http", endpoint="http://127.0.0.1:1/v1", api_key_env="UNIT_TEST_KEY")
        )
        with pytest.raises(AuthMissing):
            backend.complete(_prompt())

    def test_401_fails_without_retry(self, monkeypatch):
        monkeypatch.setenv("UNIT_TEST_KEY", "sk-sentinel-value-404")
        with StubChat([401]) as stub:
            sleeps: list[float] = []
            backend = HttpBackend(
                BackendConfig(
                    kind="http", endpoint=stub.url, api_key_env="UNIT_TEST_KEY", max_retries=3
                ),
                sleep=sleeps.append,
            )
            with pytest.raises(TransportError) as excinfo:
                backend.complete(_prompt())
            assert len(stub.requests) == 1
            assert sleeps == []
            assert "sk-sentinel-value-404" not in str(excinfo.value)

    def test_500_then_success_attempt_count_two(self, monkeypatch):
        monkeypatch.setenv("UNIT_TEST_KEY", "k")
        with StubChat([500, 200]) as stub:
            sleeps: list[float] = []
            backend = HttpBackend(
                BackendConfig(kind="http", endpoint=stub.url, api_key_env="UNIT_TEST_KEY"),
                sleep=sleeps.append,
            )
            resp = backend.complete(_prompt())
            assert resp.attempt_count == 2
            assert sleeps == [1.0]
            assert json.loads(resp.raw_text)["verdict"] == "false_positive"

    def test_exhausted_retries_with_exponential_backoff(self, monkeypatch):
        monkeypatch.setenv("UNIT_TEST_KEY", "k")
        with StubChat([500, 500, 500]) as stub:
            sleeps: list[float] = []
            backend = HttpBackend(
                BackendConfig(kind="http", endpoint=stub.url, api_key_env="UNIT_TEST_KEY", max_retries=2),
                sleep=sleeps.append,
            )
            with pytest.raises(TransportError):
                backend.complete(_prompt())
            assert sleeps == [1.0, 2.0]
            assert len(stub.requests) == 3  # max_retries + 1

    def test_connection_error_retries_then_transport(self, monkeypatch):
        monkeypatch.setenv("UNIT_TEST_KEY", "k")
        sleeps: list[float] = []
        backend = HttpBackend(
            BackendConfig(
                kind="http", endpoint="http://127.0.0.1:9/never", api_key_env="UNIT_TEST_KEY", max_retries=1
            ),
            sleep=sleeps.append,
        )
        with pytest.raises(TransportError):
            backend.complete(_prompt())
        assert sleeps == [1.0]

    def test_wire_shape_and_temperature_zero(self, monkeypatch):
        monkeypatch.setenv("UNIT_TEST_KEY", "bearer-key-123")
        with StubChat([200]) as stub:
            backend = HttpBackend(
                BackendConfig(kind="http", endpoint=stub.url, api_key_env="UNIT_TEST_KEY", model_name="m1")
            )
            backend.complete(_prompt())
            body = stub.requests[0]["body"]
            assert body["model"] == "m1"
            assert body["temperature"] == 0
            assert [m["role"] for m in body["messages"]] == ["system", "user"]
            assert json.loads(body["messages"][1]["content"])["question"] == "?"
            assert stub.requests[0]["auth"] == "Bearer bearer-key-123"

    def test_max_parallel_bound_observed(self, monkeypatch):
        monkeypatch.setenv("UNIT_TEST_KEY", "k")
        with StubChat([200] * 12, delay=0.05) as stub:
            backend = HttpBackend(
                BackendConfig(
                    kind="http", endpoint=stub.url, api_key_env="UNIT_TEST_KEY", max_parallel=4
                )
            )
            with ThreadPoolExecutor(max_workers=12) as pool:
                list(pool.map(lambda _: backend.complete(_prompt()), range(12)))
            assert stub.max_concurrent <= 4

    def test_api_key_never_in_response_or_errors(self, monkeypatch):
        sentinel = "sk-ultra-secret-sentinel"
        monkeypatch.setenv("UNIT_TEST_KEY", sentinel)
        with StubChat([200]) as stub:
            backend = HttpBackend(
                BackendConfig(kind="http", endpoint=stub.url, api_key_env="UNIT_TEST_KEY")
            )
            resp = backend.complete(_prompt())
            assert sentinel not in resp.raw_text
            assert sentinel not in repr(resp)
            assert sentinel not in repr(backend.config)
