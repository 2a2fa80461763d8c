"""YAML configuration: limits.*, backend.*, policy.*, server.*, report.*.

Relative paths inside the file (scripted fixture, feedback log, static dir)
resolve against the config file's directory so a checked-in config works from
any working directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .backend import BackendConfig
from .canonical import digest_of
from .context import ContextLimits, IndexLimits
from .errors import MalformedConfig
from .ingest import Severity
from .pipeline import PolicyConfig


@dataclass(frozen=True)
class Limits:
    context_window_lines: int = 20
    max_hops: int = 2
    max_bytes: int = 16384
    max_candidates: int = 3
    max_files: int = 2000
    max_file_bytes: int = 262144
    max_def_lines: int = 40
    max_prompt_bytes: int = 65536

    def index_limits(self) -> IndexLimits:
        return IndexLimits(
            max_files=self.max_files,
            max_file_bytes=self.max_file_bytes,
            max_def_lines=self.max_def_lines,
            max_candidates=self.max_candidates,
        )

    def context_limits(self) -> ContextLimits:
        return ContextLimits(
            window_lines=self.context_window_lines,
            max_hops=self.max_hops,
            max_bytes=self.max_bytes,
            max_candidates=self.max_candidates,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "context_window_lines": self.context_window_lines,
            "max_hops": self.max_hops,
            "max_bytes": self.max_bytes,
            "max_candidates": self.max_candidates,
            "max_files": self.max_files,
            "max_file_bytes": self.max_file_bytes,
            "max_def_lines": self.max_def_lines,
            "max_prompt_bytes": self.max_prompt_bytes,
        }


@dataclass(frozen=True)
class ServerConfig:
    port: int = 8711
    bind: str = "127.0.0.1"
    feedback_path: str = "feedback.ndjson"
    static_dir: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "port": self.port,
            "bind": self.bind,
            "feedback_path": self.feedback_path,
            "static_dir": self.static_dir,
        }


@dataclass(frozen=True)
class ReportOptions:
    figures: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {"figures": self.figures}


@dataclass(frozen=True)
class AppConfig:
    limits: Limits = field(default_factory=Limits)
    backend: BackendConfig = field(
        default_factory=lambda: BackendConfig(kind="scripted", fixture_path="responses.json")
    )
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    server: ServerConfig = field(default_factory=ServerConfig)
    report: ReportOptions = field(default_factory=ReportOptions)

    def to_dict(self) -> dict[str, Any]:
        return {
            "limits": self.limits.to_dict(),
            "backend": {
                "kind": self.backend.kind,
                "endpoint": self.backend.endpoint,
                "model_name": self.backend.model_name,
                "api_key_env": self.backend.api_key_env,
                "timeout": self.backend.timeout,
                "max_retries": self.backend.max_retries,
                "max_parallel": self.backend.max_parallel,
                "fixture_path": self.backend.fixture_path,
                "strict": self.backend.strict,
            },
            "policy": self.policy.to_dict(),
            "server": self.server.to_dict(),
            "report": self.report.to_dict(),
        }

    def digest(self) -> str:
        return digest_of(self.to_dict())


def _section(data: Mapping[str, Any], name: str) -> dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, Mapping):
        raise MalformedConfig(f"config section {name!r} must be a mapping")
    return dict(section)


def _resolve_path(base: Path | None, value: str | None) -> str | None:
    if value is None or base is None:
        return value
    p = Path(value)
    return str(p if p.is_absolute() else (base / p))


def load_config(path: Path | str | None = None) -> AppConfig:
    """Load the config file, falling back to defaults for missing keys."""
    if path is None:
        return AppConfig()
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise MalformedConfig(f"cannot load config {path}: {exc}") from exc
    if not isinstance(data, Mapping):
        raise MalformedConfig("config root must be a mapping")
    base = path.parent

    limits_raw = _section(data, "limits")
    limits = Limits(**{k: v for k, v in limits_raw.items() if k in Limits.__dataclass_fields__})

    backend_raw = _section(data, "backend")
    backend_raw.setdefault("kind", "scripted")
    if backend_raw.get("fixture_path"):
        backend_raw["fixture_path"] = _resolve_path(base, backend_raw["fixture_path"])
    try:
        backend = BackendConfig(
            **{k: v for k, v in backend_raw.items() if k in BackendConfig.__dataclass_fields__}
        )
    except ValueError as exc:
        raise MalformedConfig(f"invalid backend config: {exc}") from exc

    policy_raw = _section(data, "policy")
    if "fail_severity_threshold" in policy_raw:
        try:
            policy_raw["fail_severity_threshold"] = Severity(policy_raw["fail_severity_threshold"])
        except ValueError as exc:
            raise MalformedConfig(f"invalid severity threshold: {exc}") from exc
    if "poc_allowed_hosts" in policy_raw:
        policy_raw["poc_allowed_hosts"] = tuple(policy_raw["poc_allowed_hosts"])
    try:
        policy = PolicyConfig(
            **{k: v for k, v in policy_raw.items() if k in PolicyConfig.__dataclass_fields__}
        )
    except ValueError as exc:
        raise MalformedConfig(f"invalid policy config: {exc}") from exc

    server_raw = _section(data, "server")
    if server_raw.get("feedback_path"):
        server_raw["feedback_path"] = _resolve_path(base, server_raw["feedback_path"])
    if server_raw.get("static_dir"):
        server_raw["static_dir"] = _resolve_path(base, server_raw["static_dir"])
    server = ServerConfig(
        **{k: v for k, v in server_raw.items() if k in ServerConfig.__dataclass_fields__}
    )

    report_raw = _section(data, "report")
    report = ReportOptions(
        **{k: v for k, v in report_raw.items() if k in ReportOptions.__dataclass_fields__}
    )
    return AppConfig(limits=limits, backend=backend, policy=policy, server=server, report=report)
