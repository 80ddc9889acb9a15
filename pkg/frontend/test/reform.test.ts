import { describe, expect, it } from "vitest";

import {
  addConstraint,
  emptyReform,
  roundTrip,
  setBudget,
  setRateCap,
  toggleFreeze,
  toggleMerge,
  validateReform,
  validateSweepCaps,
} from "../src/reform.js";
import type { CodeDoc, ReformDoc } from "../src/types.js";

const CODE: CodeDoc = {
  name: "demo",
  rules: [
    { id: "income_tax", kind: "bracket", input: "income_before_tax", topic: "brackets" },
    { id: "mortgage", kind: "benefit", input: "income_before_tax", frozen: true },
  ],
  dimensions: [
    { name: "partnership", characteristic: "fiscal_partner",
      groups: { single: ["no"], fiscal_partner: ["yes"] } },
  ],
};

function guarded(): ReformDoc {
  return addConstraint(emptyReform("test"), {
    kind: "income_relative",
    selector: { kind: "all" },
    epsilon: -0.05,
    direction: "at_least",
    basis: "net",
  });
}

describe("validateReform", () => {
  it("rejects an empty recipe so submit stays disabled", () => {
    expect(validateReform(emptyReform())).toContain("add at least one guarantee");
  });

  it("accepts a minimal guarded recipe", () => {
    expect(validateReform(guarded(), CODE)).toEqual([]);
  });

  it("rejects epsilon at or below -1", () => {
    const doc = addConstraint(emptyReform(), {
      kind: "income_relative", selector: { kind: "all" }, epsilon: -1,
    });
    expect(validateReform(doc).some((i) => i.includes("epsilon"))).toBe(true);
  });

  it("rejects an empty selector range", () => {
    const doc = addConstraint(emptyReform(), {
      kind: "income_relative",
      selector: { kind: "input_range", input: "income_before_tax",
                  minimum: 50_000, maximum: 20_000 },
      epsilon: 0.05,
    });
    expect(validateReform(doc).some((i) => i.includes("range is empty"))).toBe(true);
  });

  it("rejects unknown frozen rules and merge dimensions", () => {
    let doc = guarded();
    doc = toggleFreeze(doc, "no_such_rule");
    doc = toggleMerge(doc, "no_such_dim");
    const issues = validateReform(doc, CODE);
    expect(issues.some((i) => i.includes("no_such_rule"))).toBe(true);
    expect(issues.some((i) => i.includes("no_such_dim"))).toBe(true);
  });

  it("requires a cap for non-neutral budgets", () => {
    const doc = addConstraint(guarded(), { kind: "budget", direction: "loss_at_most" });
    expect(validateReform(doc).some((i) => i.includes("budget cap"))).toBe(true);
  });
});

describe("document editing", () => {
  it("round-trips through JSON losslessly", () => {
    let doc = guarded();
    doc = setRateCap(doc, 0.6);
    doc = setBudget(doc, { mode: "neutral" });
    doc = toggleFreeze(doc, "income_tax");
    doc = toggleMerge(doc, "partnership");
    expect(roundTrip(doc)).toEqual(doc);
  });

  it("rate cap replaces any previous bound", () => {
    let doc = setRateCap(guarded(), 0.6);
    doc = setRateCap(doc, 0.5);
    const bounds = doc.constraints.filter((c) => c.kind === "rate_bound");
    expect(bounds).toHaveLength(1);
    expect(bounds[0].upper).toBe(0.5);
    expect(setRateCap(doc, null).constraints.every((c) => c.kind !== "rate_bound")).toBe(true);
  });

  it("freeze toggling is reversible and non-mutating", () => {
    const doc = guarded();
    const frozen = toggleFreeze(doc, "income_tax");
    expect("income_tax" in frozen.frozen_rules).toBe(true);
    expect("income_tax" in doc.frozen_rules).toBe(false);
    expect(toggleFreeze(frozen, "income_tax").frozen_rules).toEqual({});
  });
});

describe("validateSweepCaps", () => {
  it("accepts ascending caps", () => {
    expect(validateSweepCaps([0.65, 0.7, 0.75])).toEqual([]);
  });

  it("rejects unsorted or empty lists", () => {
    expect(validateSweepCaps([])).not.toEqual([]);
    expect(validateSweepCaps([0.7, 0.65])).not.toEqual([]);
  });
});
