"""Repository-wide symbol index and cross-file context bundles.

Indexing is deliberately syntactic: per-language regex patterns over source
lines, no parsing. Misses degrade to unresolved call edges, which the prompt
layer reports honestly instead of guessing.

Recognized definitions:

* Python (.py): ``def name(`` / ``async def name(`` (method when indented),
  ``class Name``, and module-level ``UPPER_CASE =`` constants.
* Java (.java): ``class``/``interface`` declarations, modifier-prefixed method
  signatures, and ``static final`` upper-case constants.
* JavaScript (.js, .jsx, .mjs, .cjs): ``function name(``,
  ``const name = (...) =>`` / ``const name = function``, ``class Name``, and
  ``const UPPER_CASE =`` constants.

Bundle trimming follows a fixed priority when the byte budget is hit: taint
sink snippets are kept first, then taint sources, then remaining taint steps,
then resolved definitions, and finally the surrounding lines of the primary
window (grown outward from the finding line). The budget applies to the total
snippet payload (primary + taint + definition bodies) in UTF-8 bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping

from .ingest import Finding, SourceLocation, StepRole

FINDING_SITE = "finding-site"

_LANG_EXTENSIONS = {
    ".py": "python",
    ".java": "java",
    ".js": "javascript",
    ".jsx": "javascript",
    ".mjs": "javascript",
    ".cjs": "javascript",
}

_SKIP_DIRS = {".git", ".hg", ".svn", "__pycache__", "node_modules", ".venv", "venv", "dist", "build"}

# (kind, regex with the name as group 1, method_when_indented)
_DEF_PATTERNS: dict[str, list[tuple[str, re.Pattern[str], bool]]] = {
    "python": [
        ("function", re.compile(r"^(\s*)(?:async\s+)?def\s+([A-Za-z_]\w*)\s*\("), True),
        ("class", re.compile(r"^(\s*)class\s+([A-Za-z_]\w*)\b"), False),
        ("constant", re.compile(r"^()([A-Z][A-Z0-9_]*)\s*="), False),
    ],
    "java": [
        ("class", re.compile(r"^(\s*)(?:public\s+|final\s+|abstract\s+)*(?:class|interface|enum)\s+([A-Za-z_]\w*)\b"), False),
        (
            "method",
            re.compile(
                r"^(\s*)(?:(?:public|protected|private|static|final|synchronized|abstract|native)\s+)+"
                r"[\w<>\[\],\s?]+?\s+([a-z]\w*)\s*\("
            ),
            False,
        ),
        ("constant", re.compile(r"^(\s*)(?:(?:public|protected|private|static|final)\s+)*[\w<>\[\]]+\s+([A-Z][A-Z0-9_]*)\s*="), False),
    ],
    "javascript": [
        ("function", re.compile(r"^(\s*)(?:export\s+)?(?:async\s+)?function\s+([A-Za-z_$][\w$]*)\s*\("), False),
        (
            "function",
            re.compile(
                r"^(\s*)(?:export\s+)?(?:const|let|var)\s+([a-z_$][\w$]*)\s*=\s*"
                r"(?:async\s*)?(?:function\b|\([^)]*\)\s*=>|[A-Za-z_$][\w$]*\s*=>)"
            ),
            False,
        ),
        ("class", re.compile(r"^(\s*)(?:export\s+)?class\s+([A-Za-z_$][\w$]*)\b"), False),
        ("constant", re.compile(r"^(\s*)(?:export\s+)?const\s+([A-Z][A-Z0-9_]*)\s*="), False),
    ],
}

# Names never treated as project callees: language builtins, keywords, and
# ubiquitous method names that would drown the index in noise.
CALLEE_STOPLIST = frozenset(
    """
    print len range str int float bool list dict set tuple type isinstance issubclass super
    open input format repr hash id enumerate zip map filter sorted reversed min max sum abs
    round any all getattr setattr hasattr vars dir next iter bytes bytearray exec eval compile
    if elif while for return yield with assert raise except lambda not and or in is del pass
    get keys values items append extend insert remove pop join split rsplit strip lstrip rstrip
    replace startswith endswith encode decode read write close find count add update copy copyfile
    lower upper title group groups match search sub fullmatch findall finditer exists mkdir
    require console log warn error info debug parseInt parseFloat stringify parse then catch
    finally push shift unshift slice splice concat forEach reduce includes indexOf
    println printf sprintf valueOf toString equals hashCode charAt substring length size
    """.split()
)

_CALL_RE = re.compile(r"([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*)\s*\(")
_DEF_KEYWORD_RE = re.compile(r"\b(?:def|function|class|interface|enum)\s+$")


@dataclass(frozen=True)
class IndexLimits:
    max_files: int = 2000
    max_file_bytes: int = 262144
    max_def_lines: int = 40
    max_candidates: int = 3


@dataclass(frozen=True)
class ContextLimits:
    window_lines: int = 20
    max_hops: int = 2
    max_bytes: int = 16384
    step_context_lines: int = 2
    max_candidates: int = 3


@dataclass(frozen=True)
class SymbolDef:
    name: str
    kind: str
    location: SourceLocation
    body_snippet: str
    language_hint: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "location": self.location.to_dict(),
            "body_snippet": self.body_snippet,
            "language_hint": self.language_hint,
        }


@dataclass(frozen=True)
class SymbolIndex:
    repo_root: str
    defs: Mapping[str, tuple[SymbolDef, ...]]
    file_count: int
    indexed_at: str
    warnings: tuple[str, ...] = ()

    def lookup(self, name: str) -> tuple[SymbolDef, ...]:
        return self.defs.get(name, ())

    def size(self) -> int:
        return sum(len(v) for v in self.defs.values())


@dataclass(frozen=True)
class CallEdge:
    caller: SymbolDef | str
    callee_name: str
    resolved: SymbolDef | None
    call_site: SourceLocation

    def to_dict(self) -> dict[str, Any]:
        caller = self.caller.to_dict() if isinstance(self.caller, SymbolDef) else self.caller
        return {
            "caller": caller,
            "callee_name": self.callee_name,
            "resolved": self.resolved.to_dict() if self.resolved else None,
            "call_site": self.call_site.to_dict(),
        }


@dataclass(frozen=True)
class ContextBundle:
    primary_snippet: str
    primary_start_line: int
    taint_snippets: tuple[str, ...]
    resolved_defs: tuple[SymbolDef, ...]
    call_edges: tuple[CallEdge, ...]
    truncated: bool
    files_touched: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    def snippet_bytes(self) -> int:
        total = len(self.primary_snippet.encode("utf-8"))
        total += sum(len(s.encode("utf-8")) for s in self.taint_snippets)
        total += sum(len(d.body_snippet.encode("utf-8")) for d in self.resolved_defs)
        return total

    def to_dict(self) -> dict[str, Any]:
        return {
            "primary_snippet": self.primary_snippet,
            "primary_start_line": self.primary_start_line,
            "taint_snippets": list(self.taint_snippets),
            "resolved_defs": [d.to_dict() for d in self.resolved_defs],
            "call_edges": [e.to_dict() for e in self.call_edges],
            "truncated": self.truncated,
            "files_touched": list(self.files_touched),
            "warnings": list(self.warnings),
        }


def _body_snippet(lines: list[str], start_idx: int, language: str, max_lines: int) -> str:
    first = lines[start_idx]
    body = [first]
    if language == "python":
        indent = len(first) - len(first.lstrip())
        for line in lines[start_idx + 1 : start_idx + max_lines]:
            if line.strip() and (len(line) - len(line.lstrip())) <= indent:
                break
            body.append(line)
    else:
        depth = first.count("{") - first.count("}")
        if depth <= 0 and "{" not in first:
            # single-line declaration (constants, arrows without block body)
            return first.rstrip("\n")
        for line in lines[start_idx + 1 : start_idx + max_lines]:
            body.append(line)
            depth += line.count("{") - line.count("}")
            if depth <= 0:
                break
    while body and not body[-1].strip():
        body.pop()
    return "\n".join(line.rstrip("\n") for line in body)


def scan_file(rel_path: str, text: str, language: str, max_def_lines: int) -> list[SymbolDef]:
    lines = text.splitlines()
    defs: list[SymbolDef] = []
    for i, line in enumerate(lines):
        for kind, pattern, method_when_indented in _DEF_PATTERNS[language]:
            m = pattern.match(line)
            if not m:
                continue
            name = m.group(2)
            resolved_kind = kind
            if method_when_indented and m.group(1):
                resolved_kind = "method"
            body = _body_snippet(lines, i, language, max_def_lines)
            end_line = i + 1 + max(0, body.count("\n"))
            defs.append(
                SymbolDef(
                    name=name,
                    kind=resolved_kind,
                    location=SourceLocation(file_path=rel_path, start_line=i + 1, end_line=end_line),
                    body_snippet=body,
                    language_hint=language,
                )
            )
            break
    return defs


def build_symbol_index(repo_root: Path | str, limits: IndexLimits | None = None) -> SymbolIndex:
    """Scan the repository for definitions in recognized languages.

    An empty repository yields an empty index with a warning, never a failure.
    Ordering is deterministic: files sorted by path, definitions by line.
    """
    limits = limits or IndexLimits()
    root = Path(repo_root)
    candidates: list[Path] = []
    for p in sorted(root.rglob("*")):
        if not p.is_file() or p.suffix not in _LANG_EXTENSIONS:
            continue
        if any(part in _SKIP_DIRS for part in p.relative_to(root).parts):
            continue
        candidates.append(p)
    warnings: list[str] = []
    if not candidates:
        warnings.append(f"no candidate source files found under {root}")
    if len(candidates) > limits.max_files:
        warnings.append(f"file limit {limits.max_files} reached; {len(candidates) - limits.max_files} files skipped")
        candidates = candidates[: limits.max_files]
    defs: dict[str, list[SymbolDef]] = {}
    file_count = 0
    for path in candidates:
        try:
            if path.stat().st_size > limits.max_file_bytes:
                warnings.append(f"{path.relative_to(root).as_posix()} skipped: exceeds max file size")
                continue
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            warnings.append(f"{path} unreadable: {exc}")
            continue
        file_count += 1
        rel = path.relative_to(root).as_posix()
        for d in scan_file(rel, text, _LANG_EXTENSIONS[path.suffix], limits.max_def_lines):
            defs.setdefault(d.name, []).append(d)
    frozen = {
        name: tuple(sorted(ds, key=lambda d: (d.location.file_path, d.location.start_line)))
        for name, ds in sorted(defs.items())
    }
    return SymbolIndex(
        repo_root=str(root),
        defs=frozen,
        file_count=file_count,
        indexed_at=datetime.now(timezone.utc).isoformat(),
        warnings=tuple(warnings),
    )


def resolve_callees(
    snippet: str,
    index: SymbolIndex,
    limits: IndexLimits | None = None,
    *,
    caller: SymbolDef | str = FINDING_SITE,
    base: SourceLocation | None = None,
) -> list[CallEdge]:
    """Extract call-like identifiers from the snippet and resolve them.

    Attribute calls resolve on the final segment (``auth.decrypt_config`` ->
    ``decrypt_config``). Names on the stoplist are skipped. Ambiguous names
    yield one edge per candidate definition, capped at limits.max_candidates;
    unresolved names yield a single edge with ``resolved`` absent.
    """
    limits = limits or IndexLimits()
    edges: list[CallEdge] = []
    seen: set[str] = set()
    for line_offset, line in enumerate(snippet.splitlines()):
        for m in _CALL_RE.finditer(line):
            if _DEF_KEYWORD_RE.search(line[: m.start()]):
                continue
            name = m.group(1).rsplit(".", 1)[-1]
            if name in CALLEE_STOPLIST or name in seen:
                continue
            seen.add(name)
            if base is not None:
                site = SourceLocation(
                    file_path=base.file_path,
                    start_line=base.start_line + line_offset,
                    end_line=base.start_line + line_offset,
                )
            else:
                site = SourceLocation(file_path="<snippet>", start_line=line_offset + 1, end_line=line_offset + 1)
            candidates = index.lookup(name)
            if not candidates:
                edges.append(CallEdge(caller=caller, callee_name=name, resolved=None, call_site=site))
                continue
            for cand in candidates[: limits.max_candidates]:
                edges.append(CallEdge(caller=caller, callee_name=name, resolved=cand, call_site=site))
    return edges


def _read_lines(root: Path, rel_path: str, cache: dict[str, list[str] | None]) -> list[str] | None:
    if rel_path not in cache:
        try:
            cache[rel_path] = (root / rel_path).read_text(encoding="utf-8", errors="replace").splitlines()
        except OSError:
            cache[rel_path] = None
    return cache[rel_path]


def _fit_lines(text: str, budget: int) -> tuple[str, bool]:
    """Keep whole lines from the start until the UTF-8 budget is hit."""
    if len(text.encode("utf-8")) <= budget:
        return text, False
    kept: list[str] = []
    used = 0
    for line in text.splitlines():
        cost = len(line.encode("utf-8")) + (1 if kept else 0)
        if used + cost > budget:
            break
        kept.append(line)
        used += cost
    return "\n".join(kept), True


def _window_outward(lines: list[str], center_idx: int, max_radius: int, budget: int) -> tuple[str, int, bool]:
    """Grow a window around the center line while the budget allows.

    Returns (text, 1-based start line, hit_budget).
    """
    if not lines:
        return "", 1, False
    center_idx = min(max(center_idx, 0), len(lines) - 1)
    lo = hi = center_idx
    used = len(lines[center_idx].encode("utf-8"))
    if used > budget:
        return "", center_idx + 1, True
    full_lo = max(0, center_idx - max_radius)
    full_hi = min(len(lines) - 1, center_idx + max_radius)
    hit = False
    while lo > full_lo or hi < full_hi:
        grew = False
        if hi < full_hi:
            cost = len(lines[hi + 1].encode("utf-8")) + 1
            if used + cost <= budget:
                hi += 1
                used += cost
                grew = True
            else:
                hit = True
        if lo > full_lo:
            cost = len(lines[lo - 1].encode("utf-8")) + 1
            if used + cost <= budget:
                lo -= 1
                used += cost
                grew = True
            else:
                hit = True
        if not grew:
            break
    return "\n".join(lines[lo : hi + 1]), lo + 1, hit


def extract_context(finding: Finding, index: SymbolIndex, limits: ContextLimits | None = None) -> ContextBundle:
    """Assemble the cross-file context bundle for one finding.

    Unreadable files produce placeholder snippets plus a warning; the bundle
    is always produced. Callee resolution runs one hop from the primary and
    taint snippets, then transitively from resolved definition bodies up to
    limits.max_hops.
    """
    limits = limits or ContextLimits()
    root = Path(index.repo_root)
    cache: dict[str, list[str] | None] = {}
    warnings: list[str] = []
    files_touched: set[str] = set()

    primary_lines = _read_lines(root, finding.location.file_path, cache)
    if primary_lines is None:
        warnings.append(f"file unreadable: {finding.location.file_path}")
        full_primary = f"<<unreadable: {finding.location.file_path}>>"
        primary_all_lines: list[str] = [full_primary]
    else:
        files_touched.add(finding.location.file_path)
        primary_all_lines = primary_lines
    primary_center = finding.location.start_line - 1

    raw_taint: list[str] = []
    taint_bases: list[SourceLocation] = []
    for step in finding.taint_path:
        loc = step.location
        lines = _read_lines(root, loc.file_path, cache)
        if lines is None:
            warnings.append(f"file unreadable: {loc.file_path}")
            raw_taint.append(f"<<unreadable: {loc.file_path}>>")
            taint_bases.append(loc)
            continue
        files_touched.add(loc.file_path)
        lo = max(0, loc.start_line - 1 - limits.step_context_lines)
        hi = min(len(lines), loc.end_line + limits.step_context_lines)
        raw_taint.append("\n".join(lines[lo:hi]))
        taint_bases.append(replace(loc, start_line=lo + 1, end_line=max(lo + 1, hi)))

    index_limits = IndexLimits(max_candidates=limits.max_candidates)
    edges: list[CallEdge] = []
    resolved: dict[tuple[str, str, int], tuple[SymbolDef, int]] = {}

    lo = max(0, primary_center - limits.window_lines)
    primary_base = SourceLocation(
        file_path=finding.location.file_path, start_line=lo + 1, end_line=lo + 1
    )
    frontier: list[tuple[SymbolDef | str, str, SourceLocation | None]] = [
        (FINDING_SITE, "\n".join(primary_all_lines[lo : primary_center + limits.window_lines + 1]), primary_base)
    ]
    for text, base in zip(raw_taint, taint_bases):
        frontier.append((FINDING_SITE, text, base))

    for hop in range(1, limits.max_hops + 1):
        next_frontier: list[tuple[SymbolDef | str, str, SourceLocation | None]] = []
        for caller, text, base in frontier:
            for edge in resolve_callees(text, index, index_limits, caller=caller, base=base):
                edges.append(edge)
                if edge.resolved is None:
                    continue
                key = (edge.resolved.name, edge.resolved.location.file_path, edge.resolved.location.start_line)
                if key not in resolved:
                    resolved[key] = (edge.resolved, hop)
                    next_frontier.append((edge.resolved, edge.resolved.body_snippet, edge.resolved.location))
        frontier = next_frontier
        if not frontier:
            break

    defs_order = sorted(resolved.values(), key=lambda pair: (pair[1], pair[0].name, pair[0].location.file_path))

    # Budget pass: sinks, then sources, then other steps, then defs, then
    # the primary window grown outward from the finding line.
    remaining = limits.max_bytes
    truncated = False
    n = len(raw_taint)
    sink_idx = [i for i, s in enumerate(finding.taint_path) if s.role is StepRole.SINK]
    source_idx = [i for i, s in enumerate(finding.taint_path) if s.role is StepRole.SOURCE]
    other_idx = [i for i in range(n) if i not in set(sink_idx) | set(source_idx)]
    final_taint = [""] * n
    for i in sink_idx + source_idx + other_idx:
        kept, cut = _fit_lines(raw_taint[i], remaining)
        final_taint[i] = kept
        remaining -= len(kept.encode("utf-8"))
        truncated = truncated or cut

    kept_defs: list[SymbolDef] = []
    for d, _hop in defs_order:
        kept, cut = _fit_lines(d.body_snippet, remaining)
        if cut:
            truncated = True
        if not kept:
            continue
        kept_defs.append(replace(d, body_snippet=kept))
        remaining -= len(kept.encode("utf-8"))
        files_touched.add(d.location.file_path)

    primary_snippet, primary_start, hit = _window_outward(
        primary_all_lines, primary_center, limits.window_lines, remaining
    )
    truncated = truncated or hit

    return ContextBundle(
        primary_snippet=primary_snippet,
        primary_start_line=primary_start,
        taint_snippets=tuple(final_taint),
        resolved_defs=tuple(kept_defs),
        call_edges=tuple(edges),
        truncated=truncated,
        files_touched=tuple(sorted(files_touched)),
        warnings=tuple(warnings),
    )
