/**
 * Reform document editing: defaults, guarantee rows, freeze toggles and
 * the client-side validation that mirrors the service schema.  The
 * designer keeps the document as its single source of truth so that
 * form -> document -> form is lossless.
 */

import type { CodeDoc, ConstraintDoc, ObjectiveDoc, ReformDoc } from "./types.js";

export function emptyReform(name = "reform"): ReformDoc {
  return {
    version: 1,
    name,
    variable_mode: "rates",
    objective: { kind: "min_revenue_loss" },
    constraints: [],
    frozen_rules: {},
    support_overrides: {},
    merge_dimensions: [],
  };
}

export function cloneReform(doc: ReformDoc): ReformDoc {
  return JSON.parse(JSON.stringify(doc)) as ReformDoc;
}

/** Round-trip helper: serialized form parses back to an equal document. */
export function roundTrip(doc: ReformDoc): ReformDoc {
  return JSON.parse(JSON.stringify(doc)) as ReformDoc;
}

export function addConstraint(doc: ReformDoc, constraint: ConstraintDoc): ReformDoc {
  const next = cloneReform(doc);
  next.constraints.push(constraint);
  return next;
}

export function removeConstraint(doc: ReformDoc, index: number): ReformDoc {
  const next = cloneReform(doc);
  next.constraints.splice(index, 1);
  return next;
}

export function setObjective(doc: ReformDoc, objective: ObjectiveDoc): ReformDoc {
  const next = cloneReform(doc);
  next.objective = objective;
  return next;
}

export function toggleFreeze(doc: ReformDoc, ruleId: string): ReformDoc {
  const next = cloneReform(doc);
  if (ruleId in next.frozen_rules) {
    delete next.frozen_rules[ruleId];
  } else {
    next.frozen_rules[ruleId] = null;
  }
  return next;
}

export function toggleMerge(doc: ReformDoc, dimension: string): ReformDoc {
  const next = cloneReform(doc);
  const at = next.merge_dimensions.indexOf(dimension);
  if (at >= 0) {
    next.merge_dimensions.splice(at, 1);
  } else {
    next.merge_dimensions.push(dimension);
  }
  return next;
}

export function setRateCap(doc: ReformDoc, cap: number | null): ReformDoc {
  const next = cloneReform(doc);
  next.constraints = next.constraints.filter((c) => c.kind !== "rate_bound");
  if (cap !== null) {
    next.constraints.push({ kind: "rate_bound", upper: cap, label: "pressure_cap" });
  }
  return next;
}

export type BudgetChoice =
  | { mode: "free" }
  | { mode: "neutral" }
  | { mode: "cap"; cap: number };

export function setBudget(doc: ReformDoc, choice: BudgetChoice): ReformDoc {
  const next = cloneReform(doc);
  next.constraints = next.constraints.filter((c) => c.kind !== "budget");
  if (choice.mode === "neutral") {
    next.constraints.push({ kind: "budget", direction: "neutral", label: "budget_neutral" });
  } else if (choice.mode === "cap") {
    next.constraints.push({
      kind: "budget",
      direction: "loss_at_most",
      cap: choice.cap,
      label: "budget_cap",
    });
  }
  return next;
}

/** Rules a reform may not touch: frozen in the code document itself. */
export function excludedRules(code: CodeDoc): string[] {
  return code.rules.filter((r) => r.frozen).map((r) => r.id);
}

const SELECTOR_KINDS = new Set(["all", "ids", "input_range", "quantile", "characteristic"]);
const CONSTRAINT_KINDS = new Set([
  "income_relative", "income_absolute", "income_tight",
  "rate_bound", "rate_monotone", "budget", "mirror",
]);
const OBJECTIVE_KINDS = new Set([
  "feasibility", "min_revenue_loss", "min_complexity", "lexicographic",
]);

/**
 * Validation mirroring the service's schema: the submit button stays
 * disabled while any issue remains, and issues render inline.
 */
export function validateReform(doc: ReformDoc, code?: CodeDoc): string[] {
  const issues: string[] = [];
  if (!doc.name.trim()) {
    issues.push("the reform needs a name");
  }
  if (doc.constraints.length === 0) {
    issues.push("add at least one guarantee");
  }
  if (!OBJECTIVE_KINDS.has(doc.objective.kind)) {
    issues.push(`unknown objective ${doc.objective.kind}`);
  }
  doc.constraints.forEach((con, i) => {
    const where = `guarantee #${i + 1}`;
    if (!CONSTRAINT_KINDS.has(con.kind)) {
      issues.push(`${where}: unknown kind ${con.kind}`);
      return;
    }
    if (con.selector && !SELECTOR_KINDS.has(con.selector.kind)) {
      issues.push(`${where}: unknown selector ${con.selector.kind}`);
    }
    if (con.kind === "income_relative") {
      if (con.epsilon === undefined || Number.isNaN(con.epsilon)) {
        issues.push(`${where}: epsilon is required`);
      } else if (con.epsilon <= -1) {
        issues.push(`${where}: epsilon must be greater than -1`);
      }
    }
    if (con.kind === "income_absolute" && con.floor == null && con.ceiling == null) {
      issues.push(`${where}: needs a floor or a ceiling`);
    }
    if (con.kind === "rate_bound") {
      if (con.upper == null && con.lower == null) {
        issues.push(`${where}: needs an upper or lower bound`);
      }
      if (con.upper != null && con.lower != null && con.lower > con.upper) {
        issues.push(`${where}: bounds are not ordered`);
      }
    }
    if (con.kind === "budget" && con.direction !== "neutral" && con.cap == null) {
      issues.push(`${where}: a budget cap is required`);
    }
    if (con.kind === "mirror" && (!con.taxpayer || !con.mirror)) {
      issues.push(`${where}: mirror needs two taxpayer ids`);
    }
    if (con.selector?.kind === "input_range"
        && con.selector.minimum != null && con.selector.maximum != null
        && con.selector.minimum >= con.selector.maximum) {
      issues.push(`${where}: selector range is empty`);
    }
  });
  if (code) {
    const known = new Set(code.rules.map((r) => r.id));
    for (const ruleId of Object.keys(doc.frozen_rules)) {
      if (!known.has(ruleId)) {
        issues.push(`frozen rule ${ruleId} is not part of the code`);
      }
    }
    const dims = new Set((code.dimensions ?? []).map((d) => d.name));
    for (const dim of doc.merge_dimensions) {
      if (!dims.has(dim)) {
        issues.push(`merge dimension ${dim} is not part of the code`);
      }
    }
  }
  return issues;
}

export function validateSweepCaps(caps: number[]): string[] {
  const issues: string[] = [];
  if (caps.length === 0) {
    issues.push("add at least one cap");
  }
  if (caps.some((c) => Number.isNaN(c))) {
    issues.push("caps must be numbers");
  }
  for (let i = 1; i < caps.length; i++) {
    if (caps[i] <= caps[i - 1]) {
      issues.push("caps must be strictly ascending");
      break;
    }
  }
  return issues;
}
