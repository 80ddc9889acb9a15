/**
 * Workbench entry point: pick a bundled scenario (or rely on documents
 * already uploaded elsewhere), edit the recipe, launch solves, and
 * collect immutable result cards for comparison.
 */

import { WorkbenchClient } from "./api.js";
import { frontierChart, marginalChart, taxesChart, toCsv } from "./charts.js";
import { Designer } from "./designer.js";
import { cloneReform, emptyReform, validateSweepCaps } from "./reform.js";
import {
  ResultCard,
  Timeline,
  addCard,
  comparePair,
  emptyTimeline,
  toggleCompare,
} from "./timeline.js";
import type {
  CodeDoc,
  InfeasibleDoc,
  ReportDoc,
  ScenarioEntry,
} from "./types.js";

interface AppState {
  scenario: ScenarioEntry | null;
  codeId: string | null;
  populationId: string | null;
  timeline: Timeline;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

function download(filename: string, text: string): void {
  const link = document.createElement("a");
  link.href = URL.createObjectURL(new Blob([text], { type: "text/csv" }));
  link.download = filename;
  link.click();
  URL.revokeObjectURL(link.href);
}

export function startApp(): void {
  const client = new WorkbenchClient("", (url, init) => fetch(url, init));
  const state: AppState = {
    scenario: null,
    codeId: null,
    populationId: null,
    timeline: emptyTimeline(),
  };

  const statusLine = byId("status");
  const say = (text: string) => {
    statusLine.textContent = text;
  };

  const designer = new Designer(
    byId("designer"),
    { name: "none", rules: [] } as CodeDoc,
    emptyReform(),
    {
      onChange: () => undefined,
      onSubmit: () => {
        void submit();
      },
      onSweep: (caps) => {
        void submit(caps);
      },
    },
  );
  designer.render();

  async function loadScenarios(): Promise<void> {
    say("loading bundled scenarios…");
    const entries = await client.scenarios();
    const select = byId("scenario") as HTMLSelectElement;
    select.replaceChildren();
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "choose a scenario…";
    select.append(blank);
    for (const entry of entries) {
      const option = document.createElement("option");
      option.value = entry.name;
      option.textContent = `${entry.name} — ${entry.description}`;
      select.append(option);
    }
    select.addEventListener("change", () => {
      const entry = entries.find((e) => e.name === select.value) ?? null;
      if (entry) {
        void loadScenario(entry);
      }
    });
    say("pick a scenario to begin");
  }

  async function loadScenario(entry: ScenarioEntry): Promise<void> {
    say(`uploading ${entry.name}…`);
    state.scenario = entry;
    state.populationId = await client.uploadPopulation(entry.population);
    state.codeId = await client.uploadCode(entry.code);
    designer.load(entry.code, cloneReform(entry.reform));
    say(`${entry.name} ready`);
  }

  async function submit(sweepCaps?: number[]): Promise<void> {
    if (!state.populationId || !state.codeId) {
      say("load a scenario first");
      return;
    }
    if (sweepCaps) {
      const issues = validateSweepCaps(sweepCaps);
      if (issues.length) {
        say(issues.join("; "));
        return;
      }
    }
    const reform = cloneReform(designer.document);
    say("submitting…");
    try {
      const jobId = await client.submitSolve(
        state.populationId, state.codeId, reform, sweepCaps);
      say(`solving ${jobId}…`);
      const payload = await client.pollSolve(jobId, {
        onTick: (status) => say(`solve ${jobId}: ${status}`),
      });
      const card: ResultCard = {
        jobId,
        title: `${reform.name} (${payload.status})`,
        submittedAt: Date.now(),
        reform,
        payload,
      };
      state.timeline = addCard(state.timeline, card);
      renderTimeline();
      say(`solve ${jobId}: ${payload.status}`);
    } catch (err) {
      say(`request failed: ${(err as Error).message}`);
    }
  }

  function renderTimeline(): void {
    const container = byId("timeline");
    container.replaceChildren();
    for (const card of [...state.timeline.cards].reverse()) {
      container.append(renderCard(card));
    }
    renderComparison();
  }

  function renderCard(card: ResultCard): HTMLElement {
    const section = document.createElement("section");
    section.className = `card ${card.payload.status}`;
    const heading = document.createElement("h3");
    heading.textContent = card.title;
    section.append(heading);

    const compare = document.createElement("button");
    compare.type = "button";
    compare.textContent = state.timeline.compare.includes(card.jobId)
      ? "comparing ✓" : "compare";
    compare.addEventListener("click", () => {
      state.timeline = toggleCompare(state.timeline, card.jobId);
      renderTimeline();
    });
    section.append(compare);

    if (card.payload.status === "optimal" && card.payload.kind === "sweep") {
      void renderFrontier(card, section);
    } else if (card.payload.status === "optimal") {
      renderOptimal(card, section);
    } else if (card.payload.status === "infeasible") {
      renderConflicts(card.payload.report as InfeasibleDoc, section);
    } else {
      const p = document.createElement("p");
      p.textContent = card.payload.error ?? card.payload.status;
      section.append(p);
    }
    return section;
  }

  function renderOptimal(card: ResultCard, section: HTMLElement): void {
    const report = card.payload.report as ReportDoc;
    const stats = document.createElement("p");
    stats.className = "stats";
    stats.textContent =
      `revenue loss ${report.revenue_loss.toFixed(2)} · `
      + `${report.census_totals.active} active rules `
      + `(${report.census_totals.income_dependent} income-dependent) · `
      + `${report.solve_statistics.iterations} pivots, `
      + `${report.solve_statistics.nodes} nodes`;
    section.append(stats);

    const taxes = document.createElement("div");
    taxes.innerHTML = taxesChart(report.taxpayers, card.reform);
    section.append(taxes);
    const marginal = document.createElement("div");
    marginal.innerHTML = marginalChart(report.marginal_series);
    section.append(marginal);

    const census = document.createElement("table");
    census.className = "census";
    census.innerHTML = "<tr><th>rule</th><th>topic</th><th>active</th><th>inc. dep.</th></tr>"
      + report.rule_census.map((row) =>
        `<tr><td>${row.name}</td><td>${row.topic}</td>`
        + `<td>${row.active ? "x" : ""}</td>`
        + `<td>${row.income_dependent ? "x" : ""}</td></tr>`).join("");
    section.append(census);

    const downloads = document.createElement("div");
    downloads.className = "downloads";
    const buttons: [string, () => string][] = [
      ["taxes.csv", () => toCsv(report.taxpayers as unknown as Record<string, unknown>[])],
      ["marginal.csv", () => toCsv(report.marginal_series as unknown as Record<string, unknown>[])],
      ["rates.csv", () => toCsv(report.rates as unknown as Record<string, unknown>[])],
    ];
    for (const [name, make] of buttons) {
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = `download ${name}`;
      button.addEventListener("click", () => download(name, make()));
      downloads.append(button);
    }
    section.append(downloads);
  }

  async function renderFrontier(card: ResultCard, section: HTMLElement): Promise<void> {
    const entries = await client.getFrontier(card.jobId);
    const holder = document.createElement("div");
    holder.innerHTML = frontierChart(entries);
    section.append(holder);
    const button = document.createElement("button");
    button.type = "button";
    button.textContent = "download frontier.csv";
    button.addEventListener("click", () => {
      download("frontier.csv", toCsv(entries as unknown as Record<string, unknown>[]));
    });
    section.append(button);
  }

  function renderConflicts(report: InfeasibleDoc, section: HTMLElement): void {
    const panel = document.createElement("div");
    panel.className = "conflicts";
    const heading = document.createElement("h4");
    heading.textContent = "these guarantees cannot hold together";
    panel.append(heading);
    const list = document.createElement("ul");
    for (const name of report.conflicts) {
      const item = document.createElement("li");
      item.textContent = name;
      list.append(item);
    }
    panel.append(list);
    section.append(panel);
  }

  function renderComparison(): void {
    const container = byId("comparison");
    container.replaceChildren();
    const pair = comparePair(state.timeline);
    if (!pair) {
      return;
    }
    const [a, b] = pair;
    if (a.payload.status !== "optimal" || b.payload.status !== "optimal") {
      return;
    }
    const heading = document.createElement("h3");
    heading.textContent = `${a.title} vs ${b.title}`;
    container.append(heading);
    const chart = document.createElement("div");
    chart.innerHTML = marginalChart(
      (a.payload.report as ReportDoc).marginal_series,
      { label: b.title, points: (b.payload.report as ReportDoc).marginal_series },
    );
    container.append(chart);
  }

  void loadScenarios().catch((err) => say(`cannot reach the service: ${err.message}`));
}

if (typeof document !== "undefined" && document.getElementById("designer")) {
  startApp();
}
