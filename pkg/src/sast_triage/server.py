"""Local HTTP JSON API serving a pipeline report plus an append-only analyst
feedback log.

The server is read-only over findings: verdict overrides live only in the
feedback log, keeping the pipeline report an immutable record of what the
automated system decided. Feedback is line-delimited JSON — trivially
appendable, diffable, and directly usable for later dataset curation.

Binds loopback by default; a non-loopback bind requires an explicit config
override and logs a startup warning. Responses carry permissive CORS headers
so a dev-served UI on another local port can talk to the API.
"""

from __future__ import annotations

import errno
import json
import logging
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Mapping
from urllib.parse import parse_qs, urlsplit

from .errors import MalformedReport, PortInUse, StoreUnwritable, UnknownFingerprint
from .pipeline import PipelineReport
from .report import load_report

logger = logging.getLogger(__name__)

MAX_NOTE_CHARS = 2000
ANALYST_VERDICTS = ("true_positive", "false_positive")
LOOPBACK_HOSTS = ("127.0.0.1", "localhost", "::1")


class _ApiHttpServer(ThreadingHTTPServer):
    # the socketserver default backlog of 5 drops connections under
    # concurrent review bursts
    request_queue_size = 128
    daemon_threads = True


@dataclass(frozen=True)
class FeedbackRecord:
    timestamp: str
    fingerprint: str
    llm_verdict: str
    analyst_verdict: str
    note: str
    analyst_id: str

    def to_dict(self) -> dict[str, str]:
        return {
            "timestamp": self.timestamp,
            "fingerprint": self.fingerprint,
            "llm_verdict": self.llm_verdict,
            "analyst_verdict": self.analyst_verdict,
            "note": self.note,
            "analyst_id": self.analyst_id,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, str]) -> "FeedbackRecord":
        return cls(
            timestamp=d["timestamp"],
            fingerprint=d["fingerprint"],
            llm_verdict=d["llm_verdict"],
            analyst_verdict=d["analyst_verdict"],
            note=d.get("note", ""),
            analyst_id=d.get("analyst_id", ""),
        )


class FeedbackStore:
    """Append-only NDJSON log; appends are serialized and fsynced before the
    caller is acknowledged."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: FeedbackRecord) -> int:
        line = json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False)
        with self._lock:
            try:
                position = 0
                if self.path.exists():
                    with self.path.open("r", encoding="utf-8") as fh:
                        position = sum(1 for _ in fh)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
                    import os

                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StoreUnwritable(f"cannot append feedback to {self.path}: {exc}") from exc
        return position

    def list(self, fingerprint: str | None = None) -> list[FeedbackRecord]:
        if not self.path.exists():
            return []
        records: list[FeedbackRecord] = []
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                records.append(FeedbackRecord.from_dict(json.loads(line)))
        if fingerprint is not None:
            records = [r for r in records if r.fingerprint == fingerprint]
        return records


def record_feedback(record: FeedbackRecord, store_path: Path | str) -> int:
    """Append one validated record; returns its position in the log."""
    return FeedbackStore(store_path).append(record)


def list_feedback(store_path: Path | str, fingerprint: str | None = None) -> list[FeedbackRecord]:
    return FeedbackStore(store_path).list(fingerprint)


class ReviewServer:
    def __init__(
        self,
        report: PipelineReport,
        feedback_path: Path | str,
        *,
        host: str = "127.0.0.1",
        port: int = 8711,
        static_dir: Path | str | None = None,
    ):
        self.report = report
        self.store = FeedbackStore(feedback_path)
        self.host = host
        self.static_dir = Path(static_dir) if static_dir else None
        self._by_fingerprint = {r.finding.fingerprint: r for r in report.results}
        if host not in LOOPBACK_HOSTS:
            logger.warning("review server binding non-loopback address %s", host)
        try:
            self._httpd = _ApiHttpServer((host, port), self._make_handler())
        except OSError as exc:
            if exc.errno == errno.EADDRINUSE:
                raise PortInUse(f"port {port} is already in use") from exc
            raise
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def _summary(self) -> dict[str, Any]:
        counts: dict[str, int] = {"true_positive": 0, "false_positive": 0, "needs_human_review": 0}
        for r in self.report.results:
            counts[r.verdict.kind.value] += 1
        return {"counts": counts, "total": len(self.report.results), "gate": self.report.gate.to_dict()}

    def _make_handler(self) -> type[BaseHTTPRequestHandler]:
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt: str, *args: Any) -> None:
                logger.debug("review-api: " + fmt, *args)

            def _send(self, status: int, payload: Any, content_type: str = "application/json") -> None:
                body = (
                    json.dumps(payload, ensure_ascii=False).encode("utf-8")
                    if content_type == "application/json"
                    else payload
                )
                self.send_response(status)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.end_headers()
                self.wfile.write(body)

            def do_OPTIONS(self) -> None:  # noqa: N802 - stdlib naming
                self.send_response(HTTPStatus.NO_CONTENT)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Content-Length", "0")
                self.end_headers()

            def do_GET(self) -> None:  # noqa: N802
                parsed = urlsplit(self.path)
                path = parsed.path
                if path == "/api/findings":
                    self._send(200, [r.to_dict() for r in server.report.results])
                elif path.startswith("/api/findings/"):
                    fp = path[len("/api/findings/"):]
                    result = server._by_fingerprint.get(fp)
                    if result is None:
                        self._send(404, {"error": f"unknown fingerprint {fp!r}"})
                    else:
                        self._send(200, result.to_dict())
                elif path == "/api/feedback":
                    query = parse_qs(parsed.query)
                    wanted = query.get("fingerprint", [None])[0]
                    self._send(200, [r.to_dict() for r in server.store.list(wanted)])
                elif path == "/api/summary":
                    self._send(200, server._summary())
                elif server.static_dir is not None:
                    self._serve_static(path)
                else:
                    self._send(404, {"error": "not found"})

            def _serve_static(self, path: str) -> None:
                rel = path.lstrip("/") or "index.html"
                target = (server.static_dir / rel).resolve()
                if server.static_dir is None or not str(target).startswith(str(server.static_dir.resolve())):
                    self._send(404, {"error": "not found"})
                    return
                if target.is_dir():
                    target = target / "index.html"
                if not target.is_file():
                    self._send(404, {"error": "not found"})
                    return
                ctype = {
                    ".html": "text/html; charset=utf-8",
                    ".js": "text/javascript; charset=utf-8",
                    ".css": "text/css; charset=utf-8",
                    ".json": "application/json",
                    ".png": "image/png",
                    ".svg": "image/svg+xml",
                }.get(target.suffix, "application/octet-stream")
                self._send(200, target.read_bytes(), content_type=ctype)

            def do_POST(self) -> None:  # noqa: N802
                if urlsplit(self.path).path != "/api/feedback":
                    self._send(404, {"error": "not found"})
                    return
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length) if length else b"{}"
                try:
                    body = json.loads(raw.decode("utf-8"))
                    if not isinstance(body, dict):
                        raise ValueError("body must be an object")
                except (UnicodeDecodeError, ValueError) as exc:
                    self._send(400, {"error": f"invalid JSON body: {exc}"})
                    return
                try:
                    record, position = server.submit_feedback(body)
                except UnknownFingerprint as exc:
                    self._send(404, {"error": str(exc)})
                    return
                except ValueError as exc:
                    self._send(400, {"error": str(exc)})
                    return
                except StoreUnwritable as exc:
                    self._send(500, {"error": str(exc)})
                    return
                self._send(201, {"position": position, "record": record.to_dict()})

        return Handler

    def submit_feedback(self, body: Mapping[str, Any]) -> tuple[FeedbackRecord, int]:
        """Validate and append one feedback record (fingerprint must exist in
        the loaded report); the llm verdict and timestamp are filled
        server-side so the log reflects what the machine actually decided."""
        fingerprint = str(body.get("fingerprint") or "")
        result = self._by_fingerprint.get(fingerprint)
        if result is None:
            raise UnknownFingerprint(f"fingerprint {fingerprint!r} not present in the loaded report")
        analyst_verdict = str(body.get("analyst_verdict") or "")
        if analyst_verdict not in ANALYST_VERDICTS:
            raise ValueError(f"analyst_verdict must be one of {ANALYST_VERDICTS}")
        note = str(body.get("note") or "")
        if len(note) > MAX_NOTE_CHARS:
            raise ValueError(f"note exceeds {MAX_NOTE_CHARS} characters")
        record = FeedbackRecord(
            timestamp=datetime.now(timezone.utc).isoformat(),
            fingerprint=fingerprint,
            llm_verdict=result.verdict.kind.value,
            analyst_verdict=analyst_verdict,
            note=note,
            analyst_id=str(body.get("analyst_id") or "anonymous"),
        )
        return record, self.store.append(record)


def serve(
    report_path: Path | str,
    *,
    feedback_path: Path | str = "feedback.ndjson",
    host: str = "127.0.0.1",
    port: int = 8711,
    static_dir: Path | str | None = None,
) -> ReviewServer:
    """Load report.json and return a ready (not yet started) server."""
    report = load_report(report_path)
    if not isinstance(report, PipelineReport):  # pragma: no cover - defensive
        raise MalformedReport("loaded object is not a pipeline report")
    return ReviewServer(report, feedback_path, host=host, port=port, static_dir=static_dir)
