/**
 * Hand-rolled SVG charts.  Every renderer is a pure function from data
 * to markup so the chart logic is testable without a DOM, and every
 * chart's underlying rows can be exported as delimited text.
 */

import type {
  ConstraintDoc,
  FrontierEntry,
  MarginalPoint,
  ReformDoc,
  TaxpayerRow,
} from "./types.js";

export interface Scale {
  min: number;
  max: number;
}

export function dataScale(values: number[], padRatio = 0.05): Scale {
  if (values.length === 0) {
    return { min: 0, max: 1 };
  }
  let min = Math.min(...values);
  let max = Math.max(...values);
  if (min === max) {
    min -= 1;
    max += 1;
  }
  const pad = (max - min) * padRatio;
  return { min: min - pad, max: max + pad };
}

export function project(scale: Scale, value: number, pixels: number, flip = false): number {
  const ratio = (value - scale.min) / (scale.max - scale.min);
  const r = flip ? 1 - ratio : ratio;
  return +(r * pixels).toFixed(2);
}

/** Round tick positions: 1-2-5 ladder covering the scale. */
export function ticks(scale: Scale, target = 5): number[] {
  const span = scale.max - scale.min;
  if (span <= 0) {
    return [scale.min];
  }
  const raw = span / target;
  const power = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 5, 10].map((m) => m * power).find((s) => span / s <= target) ?? power * 10;
  const first = Math.ceil(scale.min / step) * step;
  const out: number[] = [];
  for (let v = first; v <= scale.max + 1e-9; v += step) {
    out.push(+v.toFixed(10));
  }
  return out;
}

export function formatTick(value: number): string {
  if (Math.abs(value) >= 1_000_000) {
    return `${(value / 1_000_000).toFixed(1)}M`;
  }
  if (Math.abs(value) >= 1_000) {
    return `${Math.round(value / 1_000)}k`;
  }
  if (Math.abs(value) < 10 && value !== 0) {
    return value.toFixed(2);
  }
  return `${value}`;
}

export interface Series {
  label: string;
  color: string;
  points: { x: number; y: number }[];
  line?: boolean;
}

const WIDTH = 560;
const HEIGHT = 320;
const MARGIN = { left: 56, right: 16, top: 20, bottom: 36 };

function frame(inner: string, xScale: Scale, yScale: Scale,
               xLabel: string, yLabel: string, legend: Series[]): string {
  const w = WIDTH - MARGIN.left - MARGIN.right;
  const h = HEIGHT - MARGIN.top - MARGIN.bottom;
  const gridX = ticks(xScale).map((t) => {
    const x = project(xScale, t, w);
    return `<line class="grid" x1="${x}" y1="0" x2="${x}" y2="${h}"/>`
      + `<text class="tick" x="${x}" y="${h + 16}" text-anchor="middle">${formatTick(t)}</text>`;
  }).join("");
  const gridY = ticks(yScale).map((t) => {
    const y = project(yScale, t, h, true);
    return `<line class="grid" x1="0" y1="${y}" x2="${w}" y2="${y}"/>`
      + `<text class="tick" x="-6" y="${y + 4}" text-anchor="end">${formatTick(t)}</text>`;
  }).join("");
  const legendMarkup = legend.map((s, i) =>
    `<rect x="${4 + i * 130}" y="-12" width="8" height="8" fill="${s.color}"/>`
    + `<text class="legend" x="${16 + i * 130}" y="-4">${s.label}</text>`).join("");
  return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" class="chart">`
    + `<g transform="translate(${MARGIN.left},${MARGIN.top})">`
    + gridX + gridY + legendMarkup + inner
    + `<text class="axis" x="${w / 2}" y="${h + 32}" text-anchor="middle">${xLabel}</text>`
    + `<text class="axis" transform="rotate(-90)" x="${-h / 2}" y="-42" text-anchor="middle">${yLabel}</text>`
    + `</g></svg>`;
}

export function scatterChart(series: Series[], xLabel: string, yLabel: string,
                             extra = ""): string {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const xScale = dataScale(xs);
  const yScale = dataScale(ys);
  const w = WIDTH - MARGIN.left - MARGIN.right;
  const h = HEIGHT - MARGIN.top - MARGIN.bottom;
  const body = series.map((s) => {
    const sorted = s.line ? [...s.points].sort((a, b) => a.x - b.x) : s.points;
    const dots = sorted.map((p) =>
      `<circle cx="${project(xScale, p.x, w)}" cy="${project(yScale, p.y, h, true)}" r="2.2" fill="${s.color}" fill-opacity="0.7"/>`).join("");
    if (!s.line) {
      return dots;
    }
    const path = sorted.map((p, i) =>
      `${i === 0 ? "M" : "L"}${project(xScale, p.x, w)},${project(yScale, p.y, h, true)}`).join("");
    return `<path d="${path}" fill="none" stroke="${s.color}" stroke-width="1.5"/>` + dots;
  }).join("");
  return frame(extra + body, xScale, yScale, xLabel, yLabel, series);
}

/**
 * Allowed post-reform tax interval for one taxpayer, read off the
 * recipe's own income guarantees (rendering what the user asked for,
 * not recomputing any fiscal outcome).
 */
export function guaranteeBand(reform: ReformDoc, row: TaxpayerRow): [number, number] | null {
  let lo = -Infinity;
  let hi = Infinity;
  const applies = (con: ConstraintDoc): boolean => {
    const sel = con.selector ?? { kind: "all" as const };
    if (sel.kind === "all") {
      return true;
    }
    if (sel.kind === "input_range") {
      if (sel.minimum != null && row.income < sel.minimum) return false;
      if (sel.maximum != null && row.income >= sel.maximum) return false;
      return true;
    }
    if (sel.kind === "ids") {
      return (sel.ids ?? []).includes(row.taxpayer_id);
    }
    return false; // quantile/characteristic bands need more than one row
  };
  for (const con of reform.constraints) {
    if ((con.level ?? "taxpayer") !== "taxpayer" || !applies(con)) {
      continue;
    }
    if (con.kind === "income_relative" && con.basis !== "gross") {
      const target = row.old_net * (1 + (con.epsilon ?? 0));
      if ((con.direction ?? "at_least") === "at_least") {
        hi = Math.min(hi, row.income - target);
      } else {
        lo = Math.max(lo, row.income - target);
      }
    } else if (con.kind === "income_relative") {
      const target = row.old_tax * (1 + (con.epsilon ?? 0));
      if ((con.direction ?? "at_least") === "at_most") {
        hi = Math.min(hi, target);
      } else {
        lo = Math.max(lo, target);
      }
    } else if (con.kind === "income_absolute") {
      if (con.floor != null) hi = Math.min(hi, row.income - con.floor);
      if (con.ceiling != null) lo = Math.max(lo, row.income - con.ceiling);
    } else if (con.kind === "income_tight") {
      lo = Math.max(lo, row.old_tax);
      hi = Math.min(hi, row.old_tax);
    }
  }
  if (!Number.isFinite(lo) && !Number.isFinite(hi)) {
    return null;
  }
  return [lo, hi];
}

export function taxesChart(taxpayers: TaxpayerRow[], reform?: ReformDoc): string {
  const old: Series = {
    label: "current taxes", color: "#4263eb",
    points: taxpayers.map((t) => ({ x: t.income, y: t.old_tax })),
  };
  const now: Series = {
    label: "reformed taxes", color: "#b23ac0",
    points: taxpayers.map((t) => ({ x: t.income, y: t.new_tax })),
  };
  let bands = "";
  if (reform) {
    const xs = taxpayers.map((t) => t.income);
    const ys = taxpayers.flatMap((t) => [t.old_tax, t.new_tax]);
    const xScale = dataScale(xs);
    const yScale = dataScale(ys);
    const w = WIDTH - MARGIN.left - MARGIN.right;
    const h = HEIGHT - MARGIN.top - MARGIN.bottom;
    bands = taxpayers.map((t) => {
      const band = guaranteeBand(reform, t);
      if (!band) {
        return "";
      }
      const [lo, hi] = band;
      const y1 = project(yScale, Number.isFinite(hi) ? hi : yScale.max, h, true);
      const y2 = project(yScale, Number.isFinite(lo) ? lo : yScale.min, h, true);
      const x = project(xScale, t.income, w);
      return `<line class="band" x1="${x}" y1="${y1}" x2="${x}" y2="${y2}"/>`;
    }).join("");
  }
  return scatterChart([old, now], "income before tax", "taxes paid", bands);
}

export function marginalChart(series: MarginalPoint[], overlay?: {
  label: string;
  points: MarginalPoint[];
}): string {
  const charted: Series[] = [
    { label: "current", color: "#4263eb",
      points: series.map((p) => ({ x: p.income, y: p.old })) },
    { label: "reform", color: "#b23ac0",
      points: series.map((p) => ({ x: p.income, y: p.new })) },
  ];
  if (overlay) {
    charted.push({
      label: overlay.label, color: "#12b886",
      points: overlay.points.map((p) => ({ x: p.income, y: p.new })),
    });
  }
  return scatterChart(charted, "income before tax", "marginal pressure");
}

/** Loss versus cap, dots colored by how many rules stay active. */
export function frontierChart(entries: FrontierEntry[]): string {
  const feasible = entries.filter((e) => e.revenue_loss !== null);
  if (feasible.length === 0) {
    return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} 60" class="chart">`
      + `<text x="12" y="32">no feasible caps</text></svg>`;
  }
  const counts = feasible.map((e) => e.active_rules ?? 0);
  const lo = Math.min(...counts);
  const hi = Math.max(...counts);
  const color = (n: number): string => {
    const t = hi === lo ? 0.5 : (n - lo) / (hi - lo);
    const channel = Math.round(80 + t * 140);
    return `rgb(${channel},${Math.round(180 - t * 120)},140)`;
  };
  const xScale = dataScale(feasible.map((e) => e.cap), 0.1);
  const yScale = dataScale(feasible.map((e) => e.revenue_loss as number));
  const w = WIDTH - MARGIN.left - MARGIN.right;
  const h = HEIGHT - MARGIN.top - MARGIN.bottom;
  const path = feasible.map((e, i) =>
    `${i === 0 ? "M" : "L"}${project(xScale, e.cap, w)},${project(yScale, e.revenue_loss as number, h, true)}`).join("");
  const dots = feasible.map((e) =>
    `<circle cx="${project(xScale, e.cap, w)}" cy="${project(yScale, e.revenue_loss as number, h, true)}" r="5" fill="${color(e.active_rules ?? 0)}">`
    + `<title>cap ${e.cap}: ${e.active_rules} rules</title></circle>`).join("");
  const crosses = entries.filter((e) => e.revenue_loss === null).map((e) =>
    `<text class="infeasible" x="${project(xScale, e.cap, w)}" y="${h - 6}" text-anchor="middle">x</text>`).join("");
  const inner = `<path d="${path}" fill="none" stroke="#868e96" stroke-width="1.5"/>` + dots + crosses;
  return frame(inner, xScale, yScale, "marginal pressure cap", "revenue loss",
               [{ label: "darker = more rules", color: color(hi), points: [] }]);
}

/** Chart data as delimited text for download. */
export function toCsv(rows: Record<string, unknown>[]): string {
  if (rows.length === 0) {
    return "";
  }
  const columns: string[] = [];
  for (const row of rows) {
    for (const key of Object.keys(row)) {
      if (!columns.includes(key)) {
        columns.push(key);
      }
    }
  }
  const escape = (value: unknown): string => {
    const text = value === null || value === undefined ? "" : String(value);
    return /[",\n]/.test(text) ? `"${text.replace(/"/g, '""')}"` : text;
  };
  const lines = [columns.join(",")];
  for (const row of rows) {
    lines.push(columns.map((c) => escape(row[c])).join(","));
  }
  return lines.join("\n") + "\n";
}
