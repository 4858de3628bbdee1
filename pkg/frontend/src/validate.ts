/** Client-side validation mirroring the server's problem-spec invariants.
 *
 * The form blocks obviously invalid drafts before submission; server reason
 * codes are surfaced verbatim when the server still rejects.
 */

import { ProblemSpecDraft } from "./types.js";

export interface FieldError {
  field: string;
  message: string;
}

export function validateSpec(draft: ProblemSpecDraft): FieldError[] {
  const errors: FieldError[] = [];

  const res = draft.domain?.resolution ?? [];
  if (res.length !== 3 || res.some((n) => !Number.isInteger(n) || n < 1)) {
    errors.push({ field: "domain.resolution",
                  message: "resolution must be three positive integers" });
  }
  const size = draft.domain?.size_m ?? [];
  if (size.length !== 3 || size.some((v) => !(v > 0))) {
    errors.push({ field: "domain.size_m",
                  message: "size must be three positive lengths" });
  }

  if (!draft.regions?.fixed?.length) {
    errors.push({ field: "regions.fixed",
                  message: "at least one fixed region is required" });
  }
  if (!draft.regions?.loads?.length) {
    errors.push({ field: "regions.loads",
                  message: "at least one load region is required" });
  }
  for (const [label, boxes] of [
    ["fixed", draft.regions?.fixed ?? []],
    ["loads", draft.regions?.loads ?? []],
    ["no_design", draft.regions?.no_design ?? []],
  ] as const) {
    boxes.forEach((region, i) => {
      if (!boxInUnitCube(region.box)) {
        errors.push({ field: `regions.${label}[${i}]`,
                      message: "box bounds must satisfy 0 <= lo <= hi <= 1" });
      }
    });
  }

  if (!draft.methods?.length || !draft.materials?.length) {
    errors.push({ field: "methods",
                  message: "at least one method and one material are required" });
  }

  const c = draft.constraints ?? {};
  const values = [c.masscon_kg, c.costcon_cents, c.timecon_days];
  if (values.every((v) => v === null || v === undefined)) {
    errors.push({ field: "constraints",
                  message: "at least one constraint must be present" });
  }
  for (const [name, value] of [
    ["masscon_kg", c.masscon_kg],
    ["costcon_cents", c.costcon_cents],
    ["timecon_days", c.timecon_days],
  ] as const) {
    if (value !== null && value !== undefined && !(value > 0)) {
      errors.push({ field: `constraints.${name}`,
                    message: "constraints must be positive" });
    }
  }

  if (!Number.isInteger(draft.quantity) || draft.quantity < 1) {
    errors.push({ field: "quantity", message: "quantity must be at least 1" });
  }

  const ids = (draft.suppliers ?? []).map((s) => s.id);
  if (!ids.length) {
    errors.push({ field: "suppliers",
                  message: "at least one supplier is required" });
  } else if (new Set(ids).size !== ids.length) {
    errors.push({ field: "suppliers",
                  message: "supplier ids must be unique" });
  }

  return errors;
}

function boxInUnitCube(box: number[][] | undefined): boolean {
  if (!box || box.length !== 2) return false;
  const [lo, hi] = box;
  if (lo.length !== 3 || hi.length !== 3) return false;
  return lo.every((a, i) => 0 <= a && a <= hi[i] && hi[i] <= 1);
}
