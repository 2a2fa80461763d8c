/** Dashboard wiring: finding table with filters, detail panel, feedback form.
 *
 * All report-derived text lands in the DOM via textContent, so snippets,
 * PoCs, and reasoning are inert by construction. Machine verdict and analyst
 * override render side by side and are never merged.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  FindingFilter,
  FindingView,
  applyFeedback,
  filterFindings,
  sortFindings,
  toFindingView,
  validateSubmission,
  verdictBadge,
} from "./model.js";

interface State {
  all: FindingView[];
  filter: FindingFilter;
  selected: string | null;
  reviewed: Set<string>;
}

const state: State = { all: [], filter: {}, selected: null, reviewed: new Set() };

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function banner(message: string, retry?: () => void): void {
  const host = document.getElementById("banner");
  if (!host) return;
  host.replaceChildren();
  if (!message) return;
  const box = el("div", "banner-error", message);
  if (retry) {
    const button = el("button", "retry", "retry");
    button.addEventListener("click", retry);
    box.appendChild(button);
  }
  host.appendChild(box);
}

function visibleFindings(): FindingView[] {
  return sortFindings(filterFindings(state.all, state.filter));
}

function renderTable(): void {
  const host = document.getElementById("findings");
  if (!host) return;
  host.replaceChildren();
  const rows = visibleFindings();
  if (rows.length === 0) {
    host.appendChild(el("p", "empty", "No findings match the current filter."));
    return;
  }
  const table = el("table", "finding-table");
  const head = el("tr");
  for (const col of ["verdict", "severity", "rule", "location", "guard", "analyst"]) {
    head.appendChild(el("th", undefined, col));
  }
  table.appendChild(head);
  for (const view of rows) {
    const tr = el("tr", view.fingerprint === state.selected ? "selected" : undefined);
    tr.dataset.fingerprint = view.fingerprint;
    tr.appendChild(el("td", `badge verdict-${view.verdict}`, verdictBadge(view)));
    tr.appendChild(el("td", `sev-${view.severity}`, view.severity));
    tr.appendChild(el("td", undefined, view.ruleName));
    tr.appendChild(el("td", "mono", `${view.file}:${view.line}`));
    tr.appendChild(el("td", view.guardRisk === "high" ? "guard-high" : undefined, view.guardRisk));
    const analyst = view.analystVerdict
      ? `override: ${view.analystVerdict}`
      : state.reviewed.has(view.fingerprint)
        ? "reviewed"
        : "";
    tr.appendChild(el("td", "analyst", analyst));
    tr.addEventListener("click", () => {
      state.selected = view.fingerprint;
      renderTable();
      renderDetail();
    });
    table.appendChild(tr);
  }
  host.appendChild(table);
}

function section(title: string): HTMLElement {
  const box = el("section");
  box.appendChild(el("h3", undefined, title));
  return box;
}

function renderDetail(): void {
  const host = document.getElementById("detail");
  if (!host) return;
  host.replaceChildren();
  const view = state.all.find((v) => v.fingerprint === state.selected);
  if (!view) {
    host.appendChild(el("p", "empty", "Select a finding to inspect it."));
    return;
  }
  host.appendChild(el("h2", undefined, `${view.ruleName} — ${view.file}:${view.line}`));
  const meta = section("Finding");
  meta.appendChild(el("p", "mono", `fingerprint ${view.fingerprint} | ${view.vulnerabilityType} | severity ${view.severity}`));
  meta.appendChild(el("p", undefined, view.message));
  host.appendChild(meta);

  const verdictBox = section("Machine verdict");
  verdictBox.appendChild(el("p", `badge verdict-${view.verdict}`, verdictBadge(view)));
  if (view.confidence !== null) {
    verdictBox.appendChild(el("p", undefined, `confidence ${view.confidence.toFixed(2)}`));
  }
  verdictBox.appendChild(el("pre", "reasoning", view.reasoning));
  host.appendChild(verdictBox);

  if (view.analystVerdict) {
    const override = section("Analyst override");
    override.appendChild(el("p", "badge analyst-override", view.analystVerdict));
    if (view.analystNote) override.appendChild(el("pre", "reasoning", view.analystNote));
    host.appendChild(override);
  }

  if (view.taintPath.length > 0) {
    const taint = section("Taint path");
    for (const step of view.taintPath) {
      taint.appendChild(el("p", "mono", `${step.role}: ${step.file}:${step.line}`));
      if (step.snippet) taint.appendChild(el("pre", "snippet", step.snippet));
    }
    host.appendChild(taint);
  }

  if (view.pocText) {
    const poc = section(`PoC (${view.pocKind}, ${view.pocValidation})`);
    poc.appendChild(el("pre", "snippet", view.pocText));
    host.appendChild(poc);
  }

  if (view.remediationDescription) {
    const fix = section("Remediation");
    fix.appendChild(el("p", undefined, view.remediationDescription));
    if (view.remediationFix) fix.appendChild(el("p", undefined, `Fix: ${view.remediationFix}`));
    if (view.patchedSnippet) fix.appendChild(el("pre", "snippet", view.patchedSnippet));
    host.appendChild(fix);
  }

  host.appendChild(renderFeedbackForm(view));
}

function renderFeedbackForm(view: FindingView): HTMLElement {
  const box = section("Submit review");
  const form = el("div", "feedback-form");
  const select = el("select") as HTMLSelectElement;
  for (const [value, label] of [
    ["", "choose verdict..."],
    ["true_positive", "true positive"],
    ["false_positive", "false positive"],
  ]) {
    const option = el("option", undefined, label) as HTMLOptionElement;
    option.value = value ?? "";
    select.appendChild(option);
  }
  const note = el("textarea") as HTMLTextAreaElement;
  note.placeholder = "note (optional)";
  const analyst = el("input") as HTMLInputElement;
  analyst.placeholder = "analyst id";
  const submit = el("button", undefined, "submit") as HTMLButtonElement;
  const status = el("p", "form-status", "");
  submit.addEventListener("click", () => {
    const check = validateSubmission(select.value || null, note.value);
    if (!check.ok) {
      status.textContent = check.error;
      return;
    }
    submit.disabled = true;
    client
      .submitFeedback({
        fingerprint: view.fingerprint,
        analyst_verdict: select.value as "true_positive" | "false_positive",
        note: note.value,
        analyst_id: analyst.value || "anonymous",
      })
      .then(() => {
        state.reviewed.add(view.fingerprint);
        status.textContent = "recorded";
        return refresh();
      })
      .catch((error: unknown) => {
        // keep the form contents so the analyst can retry
        status.textContent =
          error instanceof ApiError ? `rejected: ${error.message}` : "network failure; retry";
      })
      .finally(() => {
        submit.disabled = false;
      });
  });
  for (const node of [select, note, analyst, submit, status]) form.appendChild(node);
  box.appendChild(form);
  return box;
}

function renderFilters(): void {
  const host = document.getElementById("filters");
  if (!host) return;
  host.replaceChildren();
  const verdicts = ["all", "needs_human_review", "true_positive", "false_positive"];
  const risks = ["all", "none", "suspicious", "high"];
  const verdictSelect = el("select") as HTMLSelectElement;
  for (const value of verdicts) {
    const option = el("option", undefined, value.replace(/_/g, " ")) as HTMLOptionElement;
    option.value = value;
    verdictSelect.appendChild(option);
  }
  verdictSelect.addEventListener("change", () => {
    state.filter = { ...state.filter, verdict: verdictSelect.value as FindingFilter["verdict"] };
    renderTable();
  });
  const riskSelect = el("select") as HTMLSelectElement;
  for (const value of risks) {
    const option = el("option", undefined, `guard: ${value}`) as HTMLOptionElement;
    option.value = value;
    riskSelect.appendChild(option);
  }
  riskSelect.addEventListener("change", () => {
    state.filter = { ...state.filter, guardRisk: riskSelect.value as FindingFilter["guardRisk"] };
    renderTable();
  });
  host.appendChild(verdictSelect);
  host.appendChild(riskSelect);
}

async function refresh(): Promise<void> {
  const [results, feedback] = await Promise.all([client.loadFindings(), client.listFeedback()]);
  state.all = applyFeedback(results.map(toFindingView), feedback);
  renderTable();
  renderDetail();
}

async function bootstrap(): Promise<void> {
  renderFilters();
  try {
    await refresh();
    banner("");
  } catch {
    banner("cannot reach the review API", () => void bootstrap());
  }
}

const client = new ApiClient(window.location.origin);
void bootstrap();
