"""Canonical JSON serialization and content hashing.

All machine-facing artifacts (prompts, reports, config digests) serialize
through :func:`canonical_json_bytes` so byte-for-byte comparisons are stable:
sorted keys, no whitespace, UTF-8.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json_bytes(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_of(obj: Any) -> str:
    return sha256_hex(canonical_json_bytes(obj))
