#!/usr/bin/env python3
"""Regenerate the synthetic corpus fixtures from one shared finding table.

Emits corpus/findings.semgrep.json and corpus/findings.sarif (semantically
equivalent by construction), corpus/labels.json, and corpus/responses.json
(scripted backend fixture keyed by fingerprint).

Run from the repository root: python3 tools/regen_corpus.py
"""

from __future__ import annotations

import json
from pathlib import Path

from sast_triage.ingest import fingerprint_fields

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

TRAVERSAL_REASONING = (
    "The user input in `file_path` is passed unsanitized to the `download_file` function in "
    "`src/utlils/file_ops.py`. This function concatenates the input path with the root "
    "directory, allowing a `../` attack to access system files."
)
SANITIZE_REASONING = (
    "Dismissed because the taint path passed through `utils/sanitizer.py:sanitize_html` function"
)
INTCAST_REASONING = (
    "Casting the input to an integer prevents the inclusion of single quotes required for a "
    "SQL injection payload; the finding is not exploitable."
)

FINDINGS = [
    {
        "rule": "corpus.python.security.path-traversal-download",
        "sev": "ERROR",
        "vclass": "Directory Traversal",
        "cwe": "CWE-22: Improper Limitation of a Pathname to a Restricted Directory ('Path Traversal')",
        "file": "web_handler.py",
        "line": 9,
        "cols": (12, 36),
        "msg": "User-controlled file path reaches a file download helper without sanitization.",
        "trace": [("web_handler.py", 8, "source"), ("web_handler.py", 9, "sink")],
        "label": "vulnerable",
        "triage": {
            "verdict": "true_positive",
            "reasoning": TRAVERSAL_REASONING,
            "confidence": 0.95,
        },
        "exploit": (
            "```\ncurl -X GET 'http://127.0.0.1:18089/download?file_path=../../etc/passwd'\n```\n"
            "expected_evidence: SENTINEL-f4k3-passwd"
        ),
        "remediation": {
            "description": "download_file builds the target path by string concatenation, so '..' segments escape the download root.",
            "fix_summary": "Resolve the joined path and require it to stay under ROOT_DIR.",
            "patched_snippet": "full_path = os.path.realpath(os.path.join(ROOT_DIR, path))\nif not full_path.startswith(ROOT_DIR + os.sep):\n    raise ValueError(\"invalid path\")",
        },
    },
    {
        "rule": "corpus.python.security.sqli-string-concat",
        "sev": "ERROR",
        "vclass": "SQL Injection",
        "cwe": "CWE-89: Improper Neutralization of Special Elements used in an SQL Command ('SQL Injection')",
        "file": "api/orders.py",
        "line": 9,
        "cols": (12, 62),
        "msg": "User input is concatenated into a SQL statement via a query-fragment helper.",
        "trace": [("api/orders.py", 7, "source"), ("api/orders.py", 8, "propagator"), ("api/orders.py", 9, "sink")],
        "label": "vulnerable",
        "triage": {
            "verdict": "true_positive",
            "reasoning": "build_filter in db/query_builder.py interpolates the raw value into a quoted SQL fragment with no escaping, so a crafted status value breaks out of the literal.",
            "confidence": 0.92,
        },
        "exploit": (
            "```\ncurl -X POST http://127.0.0.1:18089/api/orders -d \"status=x' OR '1'='1\"\n```\n"
            "expected_evidence: 1 row(s)"
        ),
        "remediation": {
            "description": "The WHERE clause is assembled from unescaped user input across two modules.",
            "fix_summary": "Use parameterized queries instead of build_filter.",
            "patched_snippet": "db.execute(\"SELECT * FROM orders WHERE status = ?\", (status,))",
        },
    },
    {
        "rule": "corpus.python.security.xss-unescaped-output",
        "sev": "WARNING",
        "vclass": "Cross-Site Scripting",
        "cwe": "CWE-79: Improper Neutralization of Input During Web Page Generation ('Cross-site Scripting')",
        "file": "app/profile.py",
        "line": 6,
        "cols": (12, 57),
        "msg": "User-provided value is embedded in an HTML response without escaping.",
        "trace": [("app/profile.py", 5, "source"), ("app/profile.py", 6, "sink")],
        "label": "vulnerable",
        "triage": {
            "verdict": "true_positive",
            "reasoning": "The bio value is concatenated into markup with no escaping anywhere on the path.",
            "confidence": 0.9,
        },
        "exploit": (
            "```\ncurl -X POST 'http://127.0.0.1:18089/profile' -d 'bio=<script>alert(1)</script>'\n```\n"
            "expected_evidence: <script>alert(1)</script>"
        ),
        "remediation": {
            "description": "show_profile reflects the raw bio field into HTML.",
            "fix_summary": "Escape the value before embedding.",
            "patched_snippet": "return \"<section class='bio'>\" + html.escape(bio) + \"</section>\"",
        },
    },
    {
        "rule": "corpus.python.security.command-injection-shell",
        "sev": "ERROR",
        "vclass": "Command Injection",
        "cwe": "CWE-78: Improper Neutralization of Special Elements used in an OS Command ('OS Command Injection')",
        "file": "tasks/runner.py",
        "line": 8,
        "cols": (5, 44),
        "msg": "User input flows into a shell command.",
        "trace": [("tasks/runner.py", 7, "source"), ("tasks/runner.py", 8, "sink")],
        "label": "vulnerable",
        "triage": {
            "verdict": "true_positive",
            "reasoning": "The format value is appended to a shell string passed to os.system; shell metacharacters execute arbitrary commands.",
            "confidence": 0.97,
        },
        "exploit": "```\nexporter --format 'csv; id > /tmp/pwned'\n```\nexpected_evidence: uid=",
        "remediation": {
            "description": "run_export interpolates user input into an os.system string.",
            "fix_summary": "Use subprocess.run with an argument list.",
            "patched_snippet": "subprocess.run([\"exporter\", \"--format\", fmt], check=True)",
        },
    },
    {
        "rule": "corpus.python.security.encoded-secret-in-source",
        "sev": "INFO",
        "vclass": "Obfuscated Secret",
        "cwe": "CWE-798: Use of Hard-coded Credentials",
        "file": "core/settings.py",
        "line": 5,
        "cols": (1, 49),
        "msg": "Base64-encoded value assigned in source may be an obfuscated secret.",
        "trace": [],
        "label": "vulnerable",
        "triage": (
            "Verdict: True positive. The encoded blob is fed to auth.decrypt_config() and the result "
            "is used as a partner API credential, so a real secret is checked into source."
        ),
        "exploit": "```\necho aGlnaGx5LXNlY3JldC1wYXJ0bmVyLWtleQ== | base64 -d\n```\nexpected_evidence: highly-secret-partner-key",
        "remediation": {
            "description": "A live partner key is stored base64-encoded in core/settings.py and decoded at runtime.",
            "fix_summary": "Move the key into a secret store and rotate it.",
            "patched_snippet": "API_KEY = os.environ[\"PARTNER_API_KEY\"]",
        },
    },
    {
        "rule": "corpus.python.security.xss-unescaped-output",
        "sev": "WARNING",
        "vclass": "Cross-Site Scripting",
        "cwe": "CWE-79: Improper Neutralization of Input During Web Page Generation ('Cross-site Scripting')",
        "file": "app/render.py",
        "line": 9,
        "cols": (12, 54),
        "msg": "User-provided value is embedded in an HTML response without escaping.",
        "trace": [("app/render.py", 7, "source"), ("app/render.py", 8, "propagator"), ("app/render.py", 9, "sink")],
        "label": "benign",
        "triage": {
            "verdict": "false_positive",
            "reasoning": SANITIZE_REASONING,
            "confidence": 0.93,
        },
    },
    {
        "rule": "corpus.python.security.sqli-string-concat",
        "sev": "ERROR",
        "vclass": "SQL Injection",
        "cwe": "CWE-89: Improper Neutralization of Special Elements used in an SQL Command ('SQL Injection')",
        "file": "api/user_info.py",
        "line": 7,
        "cols": (11, 72),
        "msg": "User input is concatenated into a SQL statement via a query-fragment helper.",
        "trace": [("api/user_info.py", 5, "source"), ("api/user_info.py", 6, "propagator"), ("api/user_info.py", 7, "sink")],
        "label": "benign",
        "triage": {
            "verdict": "false_positive",
            "reasoning": INTCAST_REASONING,
            "confidence": 0.97,
        },
    },
    {
        "rule": "corpus.python.security.ssrf-user-controlled-url",
        "sev": "WARNING",
        "vclass": "Server-Side Request Forgery",
        "cwe": "CWE-918: Server-Side Request Forgery (SSRF)",
        "file": "net/fetcher.py",
        "line": 13,
        "cols": (12, 70),
        "msg": "User-controlled hostname is used in an outbound HTTP request.",
        "trace": [("net/fetcher.py", 10, "source"), ("net/fetcher.py", 13, "sink")],
        "label": "benign",
        "triage": {
            "verdict": "false_positive",
            "reasoning": "The hostname is checked against the constant ALLOWED_HOSTS tuple before the request; only the two internal hosts are reachable.",
            "confidence": 0.88,
        },
    },
    {
        "rule": "corpus.python.security.path-traversal-open",
        "sev": "WARNING",
        "vclass": "Directory Traversal",
        "cwe": "CWE-22: Improper Limitation of a Pathname to a Restricted Directory ('Path Traversal')",
        "file": "files/archive.py",
        "line": 11,
        "cols": (10, 50),
        "msg": "User-controlled name is used in a filesystem read.",
        "trace": [("files/archive.py", 9, "source"), ("files/archive.py", 10, "propagator"), ("files/archive.py", 11, "sink")],
        "label": "benign",
        "triage": {
            "verdict": "false_positive",
            "reasoning": "os.path.basename strips every directory component, so the opened path cannot leave the STORAGE directory.",
            "confidence": 0.91,
        },
    },
    {
        "rule": "corpus.python.security.hardcoded-secret",
        "sev": "INFO",
        "vclass": "Hardcoded Secret",
        "cwe": "CWE-798: Use of Hard-coded Credentials",
        "file": "tests/fixtures_secrets.py",
        "line": 3,
        "cols": (1, 37),
        "msg": "Hardcoded credential-like string assigned in source.",
        "trace": [],
        "label": "benign",
        "triage": {
            "verdict": "false_positive",
            "reasoning": "The value is a rotated fake credential inside a test fixture module and grants no access.",
            "confidence": 0.85,
        },
    },
    {
        "rule": "corpus.python.security.command-injection-shell",
        "sev": "ERROR",
        "vclass": "Command Injection",
        "cwe": "CWE-78: Improper Neutralization of Special Elements used in an OS Command ('OS Command Injection')",
        "file": "inj/build_notes.py",
        "line": 9,
        "cols": (5, 48),
        "msg": "User input flows into a shell command.",
        "trace": [("inj/build_notes.py", 8, "source"), ("inj/build_notes.py", 9, "sink")],
        "label": None,  # injection-salted: guard short-circuits before the backend
    },
    {
        "rule": "corpus.python.security.xss-unescaped-output",
        "sev": "WARNING",
        "vclass": "Cross-Site Scripting",
        "cwe": "CWE-79: Improper Neutralization of Input During Web Page Generation ('Cross-site Scripting')",
        "file": "inj/helpers.py",
        "line": 11,
        "cols": (12, 46),
        "msg": "User-provided value is embedded in an HTML response without escaping.",
        "trace": [("inj/helpers.py", 10, "source"), ("inj/helpers.py", 11, "sink")],
        "label": None,
    },
]

_SEMGREP_LEVEL = {"ERROR": "error", "WARNING": "warning", "INFO": "note"}


def _trace_loc(path: str, line: int) -> dict:
    return {"path": path, "start": {"line": line}, "end": {"line": line}}


def build_semgrep() -> dict:
    results = []
    for i, f in enumerate(FINDINGS):
        extra = {
            "severity": f["sev"],
            "message": f["msg"],
            "metadata": {"vulnerability_class": [f["vclass"]], "cwe": [f["cwe"]]},
            "fingerprint": f"req-{i:03d}",
        }
        if f["trace"]:
            trace: dict = {}
            steps = f["trace"]
            trace["taint_source"] = _trace_loc(steps[0][0], steps[0][1])
            mids = [s for s in steps[1:-1]]
            if mids:
                trace["intermediate_vars"] = [{"location": _trace_loc(p, ln)} for p, ln, _ in mids]
            trace["taint_sink"] = _trace_loc(steps[-1][0], steps[-1][1])
            extra["dataflow_trace"] = trace
        results.append(
            {
                "check_id": f["rule"],
                "path": f["file"],
                "start": {"line": f["line"], "col": f["cols"][0]},
                "end": {"line": f["line"], "col": f["cols"][1]},
                "extra": extra,
            }
        )
    return {"version": "1.97.0", "results": results, "errors": [], "paths": {"scanned": ["."]}}


def build_sarif() -> dict:
    rules: dict[str, dict] = {}
    for f in FINDINGS:
        rules.setdefault(
            f["rule"],
            {
                "id": f["rule"],
                "name": f["rule"].rsplit(".", 1)[-1],
                "shortDescription": {"text": f["msg"]},
                "properties": {
                    "vulnerability_class": [f["vclass"]],
                    "cwe": [f["cwe"]],
                    "tags": ["security"],
                },
            },
        )
    results = []
    for f in FINDINGS:
        result = {
            "ruleId": f["rule"],
            "level": _SEMGREP_LEVEL[f["sev"]],
            "message": {"text": f["msg"]},
            "locations": [
                {
                    "physicalLocation": {
                        "artifactLocation": {"uri": f["file"]},
                        "region": {
                            "startLine": f["line"],
                            "endLine": f["line"],
                            "startColumn": f["cols"][0],
                            "endColumn": f["cols"][1],
                        },
                    }
                }
            ],
        }
        if f["trace"]:
            result["codeFlows"] = [
                {
                    "threadFlows": [
                        {
                            "locations": [
                                {
                                    "location": {
                                        "physicalLocation": {
                                            "artifactLocation": {"uri": p},
                                            "region": {"startLine": ln, "endLine": ln},
                                        }
                                    }
                                }
                                for p, ln, _role in f["trace"]
                            ]
                        }
                    ]
                }
            ]
        results.append(result)
    return {
        "$schema": "https://raw.githubusercontent.com/oasis-tcs/sarif-spec/master/Schemata/sarif-schema-2.1.0.json",
        "version": "2.1.0",
        "runs": [
            {
                "tool": {"driver": {"name": "corpus-scanner", "rules": list(rules.values())}},
                "results": results,
            }
        ],
    }


def main() -> None:
    CORPUS.mkdir(exist_ok=True)
    semgrep = build_semgrep()
    sarif = build_sarif()
    (CORPUS / "findings.semgrep.json").write_text(json.dumps(semgrep, indent=2) + "\n", encoding="utf-8")
    (CORPUS / "findings.sarif").write_text(json.dumps(sarif, indent=2) + "\n", encoding="utf-8")

    labels: dict[str, str] = {}
    responses: dict[str, dict[str, str]] = {}
    for f in FINDINGS:
        fp = fingerprint_fields(f["rule"], f["file"], f["line"], f["vclass"])
        if f["label"] is not None:
            labels[fp] = f["label"]
        if "triage" in f:
            entry: dict[str, str] = {}
            triage = f["triage"]
            entry["triage"] = triage if isinstance(triage, str) else json.dumps(triage)
            if "exploit" in f:
                entry["exploit"] = f["exploit"]
            if "remediation" in f:
                entry["remediation"] = json.dumps(f["remediation"])
            responses[fp] = entry
    (CORPUS / "labels.json").write_text(
        json.dumps({"ground_truth_total": 5, "labels": labels}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    (CORPUS / "responses.json").write_text(
        json.dumps(responses, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(FINDINGS)} findings, {len(labels)} labels, {len(responses)} scripted entries")


if __name__ == "__main__":
    main()
