/** Payload shapes shared with the JSON service (version 1 documents). */

export type SelectorKind = "all" | "ids" | "input_range" | "quantile" | "characteristic";

export interface SelectorDoc {
  kind: SelectorKind;
  ids?: string[];
  input?: string;
  minimum?: number | null;
  maximum?: number | null;
  lower_quantile?: number | null;
  upper_quantile?: number | null;
  characteristic?: string | null;
  values?: string[];
}

export type ConstraintKind =
  | "income_relative"
  | "income_absolute"
  | "income_tight"
  | "rate_bound"
  | "rate_monotone"
  | "budget"
  | "mirror";

export interface ConstraintDoc {
  kind: ConstraintKind;
  label?: string | null;
  selector?: SelectorDoc;
  epsilon?: number;
  direction?: string;
  level?: "taxpayer" | "household" | "group";
  basis?: "net" | "gross";
  floor?: number | null;
  ceiling?: number | null;
  upper?: number | null;
  lower?: number | null;
  input?: string | null;
  cap?: number | null;
  taxpayer?: string;
  mirror?: string;
}

export interface ObjectiveDoc {
  kind: "feasibility" | "min_revenue_loss" | "min_complexity" | "lexicographic";
  big_m?: number | null;
  income_weight?: number;
  first?: ObjectiveDoc;
  then?: ObjectiveDoc;
  slack?: number;
}

export interface ReformDoc {
  version: 1;
  name: string;
  variable_mode: "rates" | "rule_scales";
  objective: ObjectiveDoc;
  constraints: ConstraintDoc[];
  frozen_rules: Record<string, unknown | null>;
  support_overrides: Record<string, number[] | null>;
  merge_dimensions: string[];
  rate_bounds?: number[];
  amount_bounds?: number[];
  scale_bounds?: number[];
}

export interface RuleDoc {
  id: string;
  kind: string;
  input: string;
  topic?: string;
  frozen?: boolean;
  varies_by?: string | null;
  eligibility?: Record<string, string[]> | null;
  schedules?: Record<string, { cutoffs: number[]; rates: number[]; lump_sum?: number }>;
}

export interface CodeDoc {
  version?: 1;
  name: string;
  rules: RuleDoc[];
  dimensions?: { name: string; characteristic: string; groups: Record<string, string[]> }[];
  inputs?: Record<string, { unit?: string; income_like?: boolean }>;
  comovements?: Record<string, string>;
}

export interface ScenarioEntry {
  name: string;
  description: string;
  code: CodeDoc;
  population: unknown;
  reform: ReformDoc;
}

export interface RateRow {
  kind: "rate" | "lump" | "scale";
  name: string;
  input: string;
  group: string;
  from?: number;
  to?: number | null;
  old: number | null;
  new: number;
}

export interface TaxpayerRow {
  taxpayer_id: string;
  household_id: string;
  weight: number;
  income: number;
  old_tax: number;
  new_tax: number;
  old_net: number;
  new_net: number;
}

export interface MarginalPoint {
  taxpayer_id: string;
  income: number;
  old: number;
  new: number;
}

export interface CensusRow {
  name: string;
  topic: string;
  kind: string;
  active: boolean;
  income_dependent: boolean;
  scale?: number;
}

export interface ReportDoc {
  version: 1;
  name: string;
  status: "optimal";
  objective: number;
  revenue_loss: number;
  budget_tolerance: number;
  rates: RateRow[];
  taxpayers: TaxpayerRow[];
  marginal_series: MarginalPoint[];
  rule_census: CensusRow[];
  census_totals: { active: number; income_dependent: number };
  solve_statistics: { iterations: number; nodes: number; wall_time: number };
}

export interface InfeasibleDoc {
  status: "infeasible";
  conflicts: string[];
  rule_census: CensusRow[];
}

export type JobStatus = "queued" | "running" | "optimal" | "infeasible" | "error";

export interface JobPayload {
  id: string;
  kind: "solve" | "sweep";
  status: JobStatus;
  report?: ReportDoc | InfeasibleDoc;
  error?: string;
  frontier_available?: boolean;
}

export interface FrontierEntry {
  cap: number;
  status: string;
  revenue_loss: number | null;
  active_rules: number | null;
  conflicts: string[];
}
