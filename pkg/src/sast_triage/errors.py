"""Exception types shared across the toolkit."""

from __future__ import annotations


class TriageError(Exception):
    """Base class for all toolkit errors."""


class MalformedReport(TriageError):
    """Input report is not decodable, not JSON, or not a supported format/version."""


class PathEscape(TriageError):
    """A canonicalized path leaves the repository root."""


class OversizePrompt(TriageError):
    """Serialized prompt exceeds the configured backend limit even after trimming."""


class VerdictMismatch(TriageError):
    """An operation requiring a true-positive verdict was called with another kind."""


class BackendError(TriageError):
    """Base class for reasoning-backend failures."""


class BackendTimeout(BackendError):
    """Backend did not answer within the configured timeout (after retries)."""


class TransportError(BackendError):
    """HTTP transport failed: connection errors after retries, or a non-retryable 4xx."""


class AuthMissing(BackendError):
    """The configured API-key environment variable is unset."""


class FixtureMiss(BackendError):
    """Scripted backend has no entry for the requested (fingerprint, task)."""


class NoUrl(TriageError):
    """PoC command text carries no URL."""


class UnsupportedMethod(TriageError):
    """PoC requests only support GET and POST."""


class TicketSinkFailure(TriageError):
    """Ticket delivery (file write or webhook POST) failed."""


class MalformedLabels(TriageError):
    """Label file is not valid JSON or misses required fields."""


class UnknownLabelValue(TriageError):
    """A label is neither 'vulnerable' nor 'benign'."""


class NoRuleInResponse(TriageError):
    """Backend response contains no recognizable rule document."""


class YamlParseError(TriageError):
    """A fenced rule block failed to parse as YAML."""


class UnknownFingerprint(TriageError):
    """Feedback references a fingerprint absent from the loaded report."""


class StoreUnwritable(TriageError):
    """Feedback log cannot be opened or written."""


class PortInUse(TriageError):
    """Requested server port is already bound."""


class MalformedConfig(TriageError):
    """Configuration file is unreadable or structurally invalid."""
