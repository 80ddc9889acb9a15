/**
 * Form-driven reform editor.  The ReformDoc is the single source of
 * truth: every control renders from it and every change produces a new
 * document, so designer -> JSON -> designer is lossless by
 * construction.
 */

import {
  BudgetChoice,
  addConstraint,
  removeConstraint,
  setBudget,
  setObjective,
  setRateCap,
  toggleFreeze,
  toggleMerge,
  validateReform,
} from "./reform.js";
import type { CodeDoc, ConstraintDoc, ReformDoc } from "./types.js";

export interface DesignerHooks {
  onChange(doc: ReformDoc): void;
  onSubmit(): void;
  onSweep(caps: number[]): void;
}

const GUARANTEE_KINDS: ConstraintDoc["kind"][] = [
  "income_relative", "income_absolute", "income_tight", "rate_monotone", "mirror",
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function numberInput(value: number | null | undefined, onInput: (v: number | null) => void,
                     step = "0.01"): HTMLInputElement {
  const input = el("input", { type: "number", step });
  if (value !== null && value !== undefined) {
    input.value = String(value);
  }
  input.addEventListener("input", () => {
    onInput(input.value === "" ? null : Number(input.value));
  });
  return input;
}

export class Designer {
  private doc: ReformDoc;

  constructor(
    private readonly root: HTMLElement,
    private code: CodeDoc,
    doc: ReformDoc,
    private readonly hooks: DesignerHooks,
  ) {
    this.doc = doc;
  }

  get document(): ReformDoc {
    return this.doc;
  }

  load(code: CodeDoc, doc: ReformDoc): void {
    this.code = code;
    this.doc = doc;
    this.render();
  }

  private update(doc: ReformDoc): void {
    this.doc = doc;
    this.hooks.onChange(doc);
    this.render();
  }

  render(): void {
    this.root.replaceChildren();
    this.renderName();
    this.renderGuarantees();
    this.renderRateCap();
    this.renderBudget();
    this.renderObjective();
    this.renderRules();
    this.renderMerges();
    this.renderJson();
    this.renderActions();
  }

  private renderName(): void {
    const row = el("div", { class: "field" });
    row.append(el("label", {}, "reform name"));
    const input = el("input", { type: "text", value: this.doc.name });
    input.addEventListener("input", () => {
      this.update({ ...this.doc, name: input.value });
    });
    row.append(input);
    this.root.append(row);
  }

  private renderGuarantees(): void {
    const section = el("section", { class: "guarantees" });
    section.append(el("h3", {}, "income guarantees"));
    this.doc.constraints.forEach((con, index) => {
      if (con.kind === "rate_bound" || con.kind === "budget") {
        return; // edited through their dedicated controls
      }
      section.append(this.guaranteeRow(con, index));
    });
    const add = el("button", { type: "button" }, "add guarantee");
    add.addEventListener("click", () => {
      this.update(addConstraint(this.doc, {
        kind: "income_relative",
        selector: { kind: "all" },
        epsilon: -0.05,
        direction: "at_least",
        basis: "net",
        level: "taxpayer",
        label: `guarantee_${this.doc.constraints.length + 1}`,
      }));
    });
    section.append(add);
    this.root.append(section);
  }

  private guaranteeRow(con: ConstraintDoc, index: number): HTMLElement {
    const row = el("div", { class: "guarantee-row" });
    const kind = el("select");
    for (const k of GUARANTEE_KINDS) {
      const option = el("option", { value: k }, k.replace("_", " "));
      if (k === con.kind) {
        option.selected = true;
      }
      kind.append(option);
    }
    kind.addEventListener("change", () => {
      const next = { ...con, kind: kind.value as ConstraintDoc["kind"] };
      this.replaceConstraint(index, next);
    });
    row.append(kind);

    const selector = el("select", { title: "who it protects" });
    for (const s of ["all", "input_range"]) {
      const option = el("option", { value: s }, s === "all" ? "everyone" : "income range");
      if ((con.selector?.kind ?? "all") === s) {
        option.selected = true;
      }
      selector.append(option);
    }
    selector.addEventListener("change", () => {
      const base = selector.value === "all"
        ? { kind: "all" as const }
        : { kind: "input_range" as const, input: "income_before_tax" };
      this.replaceConstraint(index, { ...con, selector: base });
    });
    row.append(selector);

    if (con.selector?.kind === "input_range") {
      row.append(numberInput(con.selector.minimum, (v) => {
        this.replaceConstraint(index, {
          ...con, selector: { ...con.selector!, minimum: v },
        });
      }, "1000"));
      row.append(numberInput(con.selector.maximum, (v) => {
        this.replaceConstraint(index, {
          ...con, selector: { ...con.selector!, maximum: v },
        });
      }, "1000"));
    }

    if (con.kind === "income_relative") {
      const eps = numberInput(con.epsilon, (v) => {
        this.replaceConstraint(index, { ...con, epsilon: v ?? 0 });
      });
      eps.title = "allowed net-income change (negative allows losses)";
      row.append(eps);
      const direction = el("select");
      for (const d of ["at_least", "at_most"]) {
        const option = el("option", { value: d }, d.replace("_", " "));
        if ((con.direction ?? "at_least") === d) {
          option.selected = true;
        }
        direction.append(option);
      }
      direction.addEventListener("change", () => {
        this.replaceConstraint(index, { ...con, direction: direction.value });
      });
      row.append(direction);
      const level = el("select");
      for (const l of ["taxpayer", "household"]) {
        const option = el("option", { value: l }, l);
        if ((con.level ?? "taxpayer") === l) {
          option.selected = true;
        }
        level.append(option);
      }
      level.addEventListener("change", () => {
        this.replaceConstraint(index, {
          ...con, level: level.value as ConstraintDoc["level"],
        });
      });
      row.append(level);
    }
    if (con.kind === "income_absolute") {
      row.append(numberInput(con.floor, (v) => {
        this.replaceConstraint(index, { ...con, floor: v });
      }, "100"));
    }
    if (con.kind === "mirror") {
      for (const field of ["taxpayer", "mirror"] as const) {
        const input = el("input", { type: "text", placeholder: field });
        input.value = con[field] ?? "";
        input.addEventListener("input", () => {
          this.replaceConstraint(index, { ...con, [field]: input.value });
        });
        row.append(input);
      }
      row.append(numberInput(con.cap, (v) => {
        this.replaceConstraint(index, { ...con, cap: v });
      }, "100"));
    }

    const remove = el("button", { type: "button", class: "remove" }, "remove");
    remove.addEventListener("click", () => {
      this.update(removeConstraint(this.doc, index));
    });
    row.append(remove);
    return row;
  }

  private replaceConstraint(index: number, constraint: ConstraintDoc): void {
    const next = removeConstraint(this.doc, index);
    next.constraints.splice(index, 0, constraint);
    this.update(next);
  }

  private renderRateCap(): void {
    const row = el("div", { class: "field" });
    row.append(el("label", {}, "marginal pressure cap"));
    const current = this.doc.constraints.find((c) => c.kind === "rate_bound");
    const input = numberInput(current?.upper ?? null, (v) => {
      this.update(setRateCap(this.doc, v));
    });
    row.append(input);
    this.root.append(row);
  }

  private renderBudget(): void {
    const row = el("div", { class: "field" });
    row.append(el("label", {}, "budget"));
    const current = this.doc.constraints.find((c) => c.kind === "budget");
    const mode = current ? (current.direction === "neutral" ? "neutral" : "cap") : "free";
    const select = el("select");
    for (const m of ["free", "neutral", "cap"]) {
      const option = el("option", { value: m },
        m === "free" ? "unconstrained" : m === "neutral" ? "budget neutral" : "loss cap");
      if (m === mode) {
        option.selected = true;
      }
      select.append(option);
    }
    select.addEventListener("change", () => {
      const choice: BudgetChoice = select.value === "free"
        ? { mode: "free" }
        : select.value === "neutral"
          ? { mode: "neutral" }
          : { mode: "cap", cap: current?.cap ?? 0 };
      this.update(setBudget(this.doc, choice));
    });
    row.append(select);
    if (mode === "cap") {
      row.append(numberInput(current?.cap ?? 0, (v) => {
        this.update(setBudget(this.doc, { mode: "cap", cap: v ?? 0 }));
      }, "1000"));
    }
    this.root.append(row);
  }

  private renderObjective(): void {
    const row = el("div", { class: "field" });
    row.append(el("label", {}, "objective"));
    const select = el("select");
    const options: [string, string][] = [
      ["feasibility", "any feasible system"],
      ["min_revenue_loss", "cheapest reform"],
      ["min_complexity", "fewest active rules"],
      ["lexicographic", "cheapest, then simplest"],
    ];
    for (const [value, label] of options) {
      const option = el("option", { value }, label);
      if (this.doc.objective.kind === value) {
        option.selected = true;
      }
      select.append(option);
    }
    select.addEventListener("change", () => {
      const kind = select.value as ReformDoc["objective"]["kind"];
      const objective = kind === "lexicographic"
        ? { kind, first: { kind: "min_revenue_loss" as const },
            then: { kind: "min_complexity" as const, income_weight: 2 }, slack: 0 }
        : { kind };
      this.update(setObjective(this.doc, objective));
    });
    row.append(select);
    this.root.append(row);
  }

  private renderRules(): void {
    const section = el("section", { class: "rules" });
    section.append(el("h3", {}, "rules (check to freeze at current values)"));
    const table = el("table");
    const head = el("tr");
    for (const h of ["freeze", "rule", "topic", "kind"]) {
      head.append(el("th", {}, h));
    }
    table.append(head);
    for (const rule of this.code.rules) {
      const tr = el("tr");
      const cell = el("td");
      const box = el("input", { type: "checkbox" });
      if (rule.frozen) {
        // Red lines declared in the code itself cannot be reopened here.
        box.checked = true;
        box.disabled = true;
        tr.classList.add("excluded");
        tr.title = "excluded from reform by the tax code";
      } else {
        box.checked = rule.id in this.doc.frozen_rules;
        box.addEventListener("change", () => {
          this.update(toggleFreeze(this.doc, rule.id));
        });
      }
      cell.append(box);
      tr.append(cell);
      tr.append(el("td", {}, rule.id));
      tr.append(el("td", {}, rule.topic ?? ""));
      tr.append(el("td", {}, rule.kind));
      table.append(tr);
    }
    section.append(table);
    this.root.append(section);
  }

  private renderMerges(): void {
    const dims = this.code.dimensions ?? [];
    if (dims.length === 0) {
      return;
    }
    const section = el("section", { class: "merges" });
    section.append(el("h3", {}, "merge group dimensions"));
    for (const dim of dims) {
      const label = el("label", { class: "merge-toggle" });
      const box = el("input", { type: "checkbox" });
      box.checked = this.doc.merge_dimensions.includes(dim.name);
      box.addEventListener("change", () => {
        this.update(toggleMerge(this.doc, dim.name));
      });
      label.append(box, document.createTextNode(` ${dim.name}`));
      section.append(label);
    }
    this.root.append(section);
  }

  private renderJson(): void {
    const details = el("details", { class: "json-view" });
    details.append(el("summary", {}, "recipe document (JSON)"));
    const area = el("textarea", { rows: "12", spellcheck: "false" });
    area.value = JSON.stringify(this.doc, null, 2);
    const apply = el("button", { type: "button" }, "apply JSON");
    const note = el("span", { class: "json-note" });
    apply.addEventListener("click", () => {
      try {
        this.update(JSON.parse(area.value) as ReformDoc);
        note.textContent = "";
      } catch (err) {
        note.textContent = `not valid JSON: ${(err as Error).message}`;
      }
    });
    details.append(area, apply, note);
    this.root.append(details);
  }

  private renderActions(): void {
    const issues = validateReform(this.doc, this.code);
    const list = el("ul", { class: "issues" });
    for (const issue of issues) {
      list.append(el("li", {}, issue));
    }
    this.root.append(list);

    const actions = el("div", { class: "actions" });
    const submit = el("button", { type: "button", class: "submit" }, "solve");
    submit.disabled = issues.length > 0;
    submit.addEventListener("click", () => this.hooks.onSubmit());
    actions.append(submit);

    const capsInput = el("input", {
      type: "text", placeholder: "0.65,0.70,0.75,0.80", class: "caps",
    });
    const sweep = el("button", { type: "button" }, "sweep caps");
    sweep.disabled = issues.length > 0;
    sweep.addEventListener("click", () => {
      const caps = capsInput.value.split(",").map((c) => Number(c.trim()))
        .filter((c) => !Number.isNaN(c));
      this.hooks.onSweep(caps);
    });
    actions.append(capsInput, sweep);
    this.root.append(actions);
  }
}
