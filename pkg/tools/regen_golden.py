#!/usr/bin/env python3
"""Refresh the golden triage-prompt fixture used by the byte-for-byte test."""

from __future__ import annotations

import sys
from pathlib import Path

TESTS = Path(__file__).resolve().parent.parent / "tests"
sys.path.insert(0, str(TESTS))

from test_promptkit import _bundle, _finding  # noqa: E402

from sast_triage.promptkit import build_triage_prompt  # noqa: E402


def main() -> None:
    doc = build_triage_prompt(_finding(), _bundle())
    target = TESTS / "data" / "golden_triage_prompt.json"
    target.parent.mkdir(exist_ok=True)
    target.write_bytes(doc.canonical_bytes())
    print(f"wrote {target} ({len(doc.canonical_bytes())} bytes, digest {doc.render_digest[:16]}...)")


if __name__ == "__main__":
    main()
