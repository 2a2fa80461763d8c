from __future__ import annotations

import random
import re
from pathlib import Path

from sast_triage.canonical import canonical_json_bytes
from sast_triage.context import (
    FINDING_SITE,
    ContextLimits,
    IndexLimits,
    SymbolDef,
    build_symbol_index,
    extract_context,
    resolve_callees,
)
from sast_triage.ingest import Finding, Severity, SourceLocation, StepRole, TaintStep


def _finding(path: str, line: int, taint: tuple[TaintStep, ...] = ()) -> Finding:
    return Finding(
        id="x",
        rule_id="r",
        rule_name="r",
        severity=Severity.HIGH,
        vulnerability_type="T",
        message="m",
        location=SourceLocation(path, line, line),
        taint_path=taint,
        origin_tool="unit",
        fingerprint="00ff00ff00ff00ff",
    )


class TestBuildSymbolIndex:
    def test_single_python_function(self, tmp_path: Path):
        (tmp_path / "src").mkdir()
        (tmp_path / "src" / "file_ops.py").write_text("def download_file(path):\n    return open(path).read()\n")
        index = build_symbol_index(tmp_path)
        defs = index.lookup("download_file")
        assert len(defs) == 1
        assert defs[0].kind == "function"
        assert defs[0].location.file_path == "src/file_ops.py"
        assert defs[0].body_snippet.startswith("def download_file(path):")

    def test_empty_directory_yields_empty_index_with_warning(self, tmp_path: Path):
        index = build_symbol_index(tmp_path)
        assert index.size() == 0
        assert index.lookup("anything") == ()
        assert index.warnings

    def test_synthetic_repo_20_files_57_defs_matches_grep_oracle(self, tmp_path: Path):
        # 20 files, 57 definitions by construction: 10 py x 4 + 5 java x 2 + 4 js x 1 + 1 js x 3
        expected = 0
        for i in range(10):
            body = (
                f"CONST_{i} = {i}\n\n"
                f"def fn_{i}(x):\n    return x\n\n"
                f"class Holder{i}:\n    def method_{i}(self):\n        return None\n"
            )
            (tmp_path / f"py_{i:02d}.py").write_text(body)
            expected += 4
        for i in range(5):
            body = (
                f"public class J{i} {{\n"
                f"    public static int run{i}(int x) {{ return x; }}\n"
                "}\n"
            )
            (tmp_path / f"J{i}.java").write_text(body)
            expected += 2
        for i in range(4):
            (tmp_path / f"js_{i}.js").write_text(f"function go{i}(a) {{ return a; }}\n")
            expected += 1
        (tmp_path / "js_4.js").write_text(
            "function go4(a) { return a; }\n"
            "const helper4 = (b) => b + 1;\n"
            "const LIMIT_MAX = 10;\n"
        )
        expected += 3
        assert expected == 57
        assert len(list(tmp_path.iterdir())) == 20

        index = build_symbol_index(tmp_path)

        # independent oracle: exhaustive text search with separate patterns
        oracle = 0
        patterns = [
            re.compile(r"^\s*def\s+\w+\s*\("),
            re.compile(r"^class\s+\w+"),
            re.compile(r"^[A-Z][A-Z0-9_]*\s*="),
            re.compile(r"^public class \w+"),
            re.compile(r"^\s*public static int run\d+\("),
            re.compile(r"^function \w+\("),
            re.compile(r"^const helper\d+ = "),
            re.compile(r"^const [A-Z][A-Z0-9_]* = "),
        ]
        for path in tmp_path.rglob("*"):
            if path.suffix not in (".py", ".java", ".js"):
                continue
            for line in path.read_text().splitlines():
                if any(p.match(line) for p in patterns):
                    oracle += 1
        assert oracle == 57
        assert index.size() == 57

    def test_file_and_size_limits(self, tmp_path: Path):
        for i in range(4):
            (tmp_path / f"m{i}.py").write_text(f"def f{i}():\n    pass\n")
        (tmp_path / "big.py").write_text("def huge():\n    pass\n" + "#" * 5000)
        index = build_symbol_index(tmp_path, IndexLimits(max_files=3, max_file_bytes=1000))
        assert index.size() <= 3
        assert any("file limit" in w for w in index.warnings)

    def test_method_kind_for_indented_python_def(self, tmp_path: Path):
        (tmp_path / "c.py").write_text("class C:\n    def m(self):\n        pass\n")
        index = build_symbol_index(tmp_path)
        assert index.lookup("m")[0].kind == "method"
        assert index.lookup("C")[0].kind == "class"

    def test_deterministic_ordering(self, tmp_path: Path):
        for name in ("b.py", "a.py"):
            (tmp_path / name).write_text("def shared():\n    pass\n")
        index = build_symbol_index(tmp_path)
        files = [d.location.file_path for d in index.lookup("shared")]
        assert files == ["a.py", "b.py"]


class TestResolveCallees:
    def _index(self, tmp_path: Path, files: dict[str, str]):
        for rel, text in files.items():
            target = tmp_path / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text)
        return build_symbol_index(tmp_path)

    def test_cross_file_resolution(self, tmp_path: Path):
        index = self._index(tmp_path, {"src/ops.py": "def download_file(path):\n    return path\n"})
        edges = resolve_callees("data = download_file(user_path)", index)
        assert len(edges) == 1
        assert edges[0].resolved is not None
        assert edges[0].resolved.location.file_path == "src/ops.py"
        assert edges[0].caller == FINDING_SITE

    def test_no_call_expressions(self, tmp_path: Path):
        index = self._index(tmp_path, {"a.py": "def f():\n    pass\n"})
        assert resolve_callees("x = 1\ny = x", index) == []

    def test_stoplist_filters_builtins(self, tmp_path: Path):
        index = self._index(tmp_path, {"san.py": "def sanitize_html(t):\n    return t\n"})
        edges = resolve_callees("sanitize_html(x)\nprint(x)", index)
        assert len(edges) == 1
        assert edges[0].callee_name == "sanitize_html"

    def test_attribute_call_uses_final_segment(self, tmp_path: Path):
        index = self._index(tmp_path, {"auth.py": "def decrypt_config(blob):\n    return blob\n"})
        edges = resolve_callees("key = auth.decrypt_config(API_BLOB)", index)
        assert len(edges) == 1
        assert edges[0].callee_name == "decrypt_config"
        assert edges[0].resolved is not None

    def test_unresolved_name_yields_edge_without_def(self, tmp_path: Path):
        index = self._index(tmp_path, {"a.py": "def f():\n    pass\n"})
        edges = resolve_callees("mystery_call(x)", index)
        assert len(edges) == 1
        assert edges[0].resolved is None

    def test_ambiguous_names_capped_by_max_candidates(self, tmp_path: Path):
        files = {f"m{i}.py": "def dup():\n    pass\n" for i in range(5)}
        index = self._index(tmp_path, files)
        edges = resolve_callees("dup()", index, IndexLimits(max_candidates=2))
        assert len(edges) == 2
        assert all(e.callee_name == "dup" for e in edges)

    def test_definition_lines_not_treated_as_calls(self, tmp_path: Path):
        index = self._index(tmp_path, {"a.py": "def configure(x):\n    pass\n"})
        assert resolve_callees("def configure(x):", index) == []


def _write_repo(tmp_path: Path, files: dict[str, str]) -> Path:
    for rel, text in files.items():
        target = tmp_path / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    return tmp_path


class TestExtractContext:
    def test_cross_file_bundle(self, tmp_path: Path):
        repo = _write_repo(
            tmp_path,
            {
                "web_handler.py": (
                    "from src.utlils.file_ops import download_file\n\n\n"
                    "def handle():\n"
                    "    p = request.args.get('file_path')\n"
                    "    return download_file(p)\n"
                ),
                "src/utlils/file_ops.py": "def download_file(path):\n    return open('/root/' + path).read()\n",
            },
        )
        index = build_symbol_index(repo)
        steps = (
            TaintStep(SourceLocation("web_handler.py", 5, 5), StepRole.SOURCE),
            TaintStep(SourceLocation("web_handler.py", 6, 6), StepRole.SINK),
        )
        bundle = extract_context(_finding("web_handler.py", 6, steps), index)
        names = {(d.name, d.location.file_path) for d in bundle.resolved_defs}
        assert ("download_file", "src/utlils/file_ops.py") in names
        assert "web_handler.py" in bundle.files_touched
        assert "src/utlils/file_ops.py" in bundle.files_touched
        assert len(bundle.taint_snippets) == 2
        assert all(s for s in bundle.taint_snippets)

    def test_small_file_without_taint(self, tmp_path: Path):
        repo = _write_repo(tmp_path, {"tiny.py": "a = 1\nb = 2\nc = a\nd = b\ne = c\n"})
        index = build_symbol_index(repo)
        bundle = extract_context(_finding("tiny.py", 3), index)
        assert bundle.primary_snippet == "a = 1\nb = 2\nc = a\nd = b\ne = c"
        assert bundle.call_edges == ()
        assert bundle.truncated is False

    def test_missing_file_yields_placeholder_and_warning(self, tmp_path: Path):
        index = build_symbol_index(_write_repo(tmp_path, {"there.py": "x = 1\n"}))
        bundle = extract_context(_finding("gone.py", 1), index)
        assert "unreadable" in bundle.primary_snippet
        assert any("gone.py" in w for w in bundle.warnings)

    def test_budget_trim_keeps_sink_drops_surroundings(self, tmp_path: Path):
        lines = [f"filler_{i:04d} = {i}" for i in range(200)]
        lines[99] = "sink_line = run_query(user_input)"
        repo = _write_repo(tmp_path, {"big.py": "\n".join(lines) + "\n"})
        index = build_symbol_index(repo)
        steps = (TaintStep(SourceLocation("big.py", 100, 100), StepRole.SINK),)
        finding = _finding("big.py", 100, steps)

        full = extract_context(finding, index, ContextLimits(max_bytes=100000))
        assert full.truncated is False
        full_primary_lines = full.primary_snippet.count("\n") + 1

        tight = extract_context(finding, index, ContextLimits(max_bytes=200))
        assert tight.truncated is True
        # priority order applied by hand: the sink step snippet is the
        # step's lines +-2, kept in full; surrounding primary lines shrink
        expected_sink = "\n".join(lines[97:102])
        assert tight.taint_snippets[0] == expected_sink
        assert "sink_line" in tight.primary_snippet or tight.primary_snippet == ""
        assert tight.primary_snippet.count("\n") + 1 < full_primary_lines
        assert tight.snippet_bytes() <= 200

    def test_determinism_byte_identical(self, tmp_path: Path):
        repo = _write_repo(
            tmp_path,
            {
                "a.py": "def caller():\n    helper(1)\n",
                "b.py": "def helper(x):\n    return deeper(x)\n",
                "c.py": "def deeper(x):\n    return x\n",
            },
        )
        index = build_symbol_index(repo)
        finding = _finding("a.py", 2)
        one = canonical_json_bytes(extract_context(finding, index).to_dict())
        two = canonical_json_bytes(extract_context(finding, index).to_dict())
        assert one == two

    def test_hop_bound_and_transitive_resolution(self, tmp_path: Path):
        repo = _write_repo(
            tmp_path,
            {
                "a.py": "def entry():\n    level_one(1)\n",
                "b.py": "def level_one(x):\n    return level_two(x)\n",
                "c.py": "def level_two(x):\n    return level_three(x)\n",
                "d.py": "def level_three(x):\n    return x\n",
            },
        )
        index = build_symbol_index(repo)
        finding = _finding("a.py", 2)
        bundle = extract_context(finding, index, ContextLimits(max_hops=2))
        names = {d.name for d in bundle.resolved_defs}
        assert "level_one" in names
        assert "level_two" in names  # second hop
        assert "level_three" not in names  # beyond max_hops

        # hop distances recomputed from the edge chain
        hop: dict[str, int] = {}
        for edge in bundle.call_edges:
            if edge.resolved is None:
                continue
            if isinstance(edge.caller, str):
                hop.setdefault(edge.resolved.name, 1)
            elif edge.caller.name in hop:
                hop.setdefault(edge.resolved.name, hop[edge.caller.name] + 1)
        assert all(h <= 2 for h in hop.values())

    def test_closure_every_resolved_def_has_an_edge(self, tmp_path: Path):
        repo = _write_repo(
            tmp_path,
            {
                "a.py": "def entry():\n    one(1)\n    two(2)\n",
                "b.py": "def one(x):\n    return x\n\n\ndef two(x):\n    return x\n",
            },
        )
        index = build_symbol_index(repo)
        bundle = extract_context(_finding("a.py", 2), index)
        edge_names = {e.callee_name for e in bundle.call_edges}
        for d in bundle.resolved_defs:
            assert d.name in edge_names


def test_budget_safety_property_random_repos(tmp_path: Path):
    rng = random.Random(90210)
    for case in range(25):
        repo = tmp_path / f"case_{case}"
        repo.mkdir()
        file_count = rng.randint(1, 5)
        names = []
        for i in range(file_count):
            lines = []
            for j in range(rng.randint(3, 60)):
                roll = rng.random()
                if roll < 0.2:
                    lines.append(f"def fn_{case}_{i}_{j}(x):")
                    lines.append("    return x" + " + 1" * rng.randint(0, 10))
                    names.append(f"fn_{case}_{i}_{j}")
                elif roll < 0.4 and names:
                    lines.append(f"val_{j} = {rng.choice(names)}({j})")
                else:
                    lines.append(f"data_{j} = '{'x' * rng.randint(0, 120)}'")
            (repo / f"mod_{i}.py").write_text("\n".join(lines) + "\n")
        index = build_symbol_index(repo)
        target = rng.randint(0, file_count - 1)
        text = (repo / f"mod_{target}.py").read_text().splitlines()
        line = rng.randint(1, len(text))
        budget = rng.choice([64, 200, 512, 2048, 16384])
        limits = ContextLimits(max_bytes=budget)
        steps = ()
        if rng.random() < 0.5 and len(text) > 2:
            steps = (
                TaintStep(SourceLocation(f"mod_{target}.py", 1, 1), StepRole.SOURCE),
                TaintStep(SourceLocation(f"mod_{target}.py", len(text), len(text)), StepRole.SINK),
            )
        bundle = extract_context(_finding(f"mod_{target}.py", line, steps), index, limits)
        assert bundle.snippet_bytes() <= budget, f"case {case}: {bundle.snippet_bytes()} > {budget}"
        for d in bundle.resolved_defs:
            assert d.location.file_path in bundle.files_touched
