"""Self-contained download service for exercising PoC validation.

Serves an in-memory fake filesystem — it can never leak real files. The
vulnerable mode resolves ``..`` traversal inside that fake tree; the patched
mode rejects any path containing ``..`` with a 400.

Run standalone:

    python -m sast_triage.testserver --mode vulnerable --port 18089
"""

from __future__ import annotations

import argparse
import posixpath
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

PASSWD_SENTINEL = "SENTINEL-f4k3-passwd"

BASE_DIR = "srv/files"

FAKE_FILES = {
    "etc/passwd": (
        f"root:x:0:0:{PASSWD_SENTINEL}:/root:/bin/bash\n"
        "daemon:x:1:1:daemon:/usr/sbin:/usr/sbin/nologin\n"
        "app:x:1000:1000:app:/home/app:/bin/bash\n"
    ),
    "srv/files/readme.txt": "public download area\n",
    "srv/files/report.csv": "quarter,revenue\nQ1,100\n",
}


def _resolve(mode: str, file_path: str) -> tuple[int, str]:
    if mode == "patched" and ".." in file_path:
        return 400, "invalid file_path: directory traversal rejected\n"
    joined = posixpath.normpath(posixpath.join(BASE_DIR, file_path))
    if joined.startswith("../") or joined == "..":
        # even the vulnerable mode cannot climb out of the fake tree
        return 404, "no such file\n"
    content = FAKE_FILES.get(joined)
    if content is None:
        return 404, "no such file\n"
    return 200, content


class _Handler(BaseHTTPRequestHandler):
    mode = "vulnerable"

    def log_message(self, fmt: str, *args: object) -> None:
        pass

    def do_GET(self) -> None:  # noqa: N802 - stdlib naming
        parsed = urlsplit(self.path)
        if parsed.path != "/download":
            self._reply(404, "unknown endpoint\n")
            return
        query = parse_qs(parsed.query)
        file_path = query.get("file_path", [""])[0]
        status, body = _resolve(self.mode, file_path)
        self._reply(status, body)

    def do_POST(self) -> None:  # noqa: N802
        self._reply(200, "ok\n")

    def _reply(self, status: int, body: str) -> None:
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class _PocHttpServer(ThreadingHTTPServer):
    request_queue_size = 64
    daemon_threads = True


class PocTestServer:
    """Loopback HTTP server; use port=0 for an ephemeral port."""

    def __init__(self, mode: str = "vulnerable", port: int = 0):
        if mode not in ("vulnerable", "patched"):
            raise ValueError(f"unknown mode {mode!r}")
        handler = type(f"_{mode.title()}Handler", (_Handler,), {"mode": mode})
        self._httpd = _PocHttpServer(("127.0.0.1", port), handler)
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def __enter__(self) -> "PocTestServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="fake download service for PoC validation")
    parser.add_argument("--mode", choices=("vulnerable", "patched"), default="vulnerable")
    parser.add_argument("--port", type=int, default=18089)
    args = parser.parse_args(argv)
    with PocTestServer(mode=args.mode, port=args.port) as srv:
        print(f"{args.mode} download service on {srv.base_url}/download?file_path=...")
        try:
            threading.Event().wait()
        except KeyboardInterrupt:
            pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
