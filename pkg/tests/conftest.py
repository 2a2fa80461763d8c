from __future__ import annotations

import json
from pathlib import Path

import pytest

from sast_triage.backend import BackendResponse
from sast_triage.config import AppConfig, load_config
from sast_triage.pipeline import PipelineReport, run_pipeline

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
TEST_DATA = Path(__file__).resolve().parent / "data"


class CountingBackend:
    """Test double recording every completion call."""

    def __init__(self, response_text: str = '{"verdict": "false_positive", "reasoning": "stub"}'):
        self.calls: list = []
        self.response_text = response_text

    def complete(self, prompt) -> BackendResponse:
        self.calls.append(prompt)
        return BackendResponse(
            raw_text=self.response_text, latency_ms=0.1, attempt_count=1, model_name="counting"
        )


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def corpus_config() -> AppConfig:
    return load_config(CORPUS / "config.yaml")


@pytest.fixture(scope="session")
def corpus_report(corpus_config: AppConfig) -> PipelineReport:
    return run_pipeline(CORPUS / "findings.semgrep.json", CORPUS / "repo", corpus_config)


@pytest.fixture(scope="session")
def corpus_semgrep_bytes() -> bytes:
    return (CORPUS / "findings.semgrep.json").read_bytes()


@pytest.fixture(scope="session")
def corpus_sarif_bytes() -> bytes:
    return (CORPUS / "findings.sarif").read_bytes()


def minimal_sarif(results: list[dict], rules: list[dict] | None = None) -> bytes:
    doc = {
        "version": "2.1.0",
        "runs": [
            {
                "tool": {"driver": {"name": "unit-scanner", "rules": rules or []}},
                "results": results,
            }
        ],
    }
    return json.dumps(doc).encode("utf-8")


def minimal_semgrep(results: list[dict]) -> bytes:
    return json.dumps({"version": "1.97.0", "results": results}).encode("utf-8")
