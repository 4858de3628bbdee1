/** Wire documents served by the manufacturer API. */

export interface SupplierGate {
  feasible: boolean;
  reason: string;
  detail: string;
  minvf: number | null;
}

export interface MatrixCombination {
  method: string;
  material: string;
  orientations: string[];
  feasible: boolean;
  per_supplier: Record<string, SupplierGate>;
}

export interface MatrixDoc {
  schema_version: number;
  iteration_id: number;
  combinations: MatrixCombination[];
}

export interface RecordDoc {
  schema_version: number;
  record_id: string;
  method: string;
  material: string;
  supplier_id: string | null;
  orientations: string[];
  compliance: number;
  mass_kg: number;
  nominal_cost_cents: number | null;
  nominal_time_hours: number | null;
  quoted_cost_cents: number | null;
  quoted_lead_hours: number | null;
  feasible: boolean;
  feasibility: Record<string, boolean>;
  iteration_id: number;
  grid_ref: string | null;
  mesh_ref: string | null;
  failed?: boolean;
}

export interface TreeNodeDoc {
  count: number;
  mean: number;
  percent: number | null;
  contains_current: boolean;
  feature?: string;
  kind?: string;
  threshold?: number;
  left_label?: string;
  right_label?: string;
  left?: TreeNodeDoc;
  right?: TreeNodeDoc;
}

export interface TreeDoc {
  schema_version: number;
  status?: string;
  target: string;
  total_rows: number;
  features: { name: string; kind: string }[];
  root: TreeNodeDoc;
  iteration_ids?: number[];
}

/** Draft of a problem spec being edited in the constraint form. */
export interface ProblemSpecDraft {
  name: string;
  seed: number;
  domain: { resolution: number[]; size_m: number[] };
  regions: {
    fixed: { box: number[][] }[];
    loads: { box: number[][]; force_n: number[] }[];
    no_design?: { box: number[][] }[];
  };
  methods: { kind: string; orientations: string[] }[];
  materials: string[];
  constraints: {
    masscon_kg?: number | null;
    costcon_cents?: number | null;
    timecon_days?: number | null;
  };
  quantity: number;
  suppliers: { id: string; url?: string; config?: string }[];
}
