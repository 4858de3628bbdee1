/** Design record cards, stable sorting, and per-combination supplier
 * comparison.  All numbers come from server documents untouched. */

import { formatCents, formatLeadHours, formatMassKg } from "./format.js";
import { methodLabel } from "./feasibilityGrid.js";
import { RecordDoc } from "./types.js";

export type SortKey = "compliance" | "cost" | "lead_time" | "mass";

export interface ResultCard {
  record: RecordDoc;
  title: string;
  metrics: { label: string; value: string }[];
  meshUrl: string | null;
  feasible: boolean;
}

export function buildCards(records: RecordDoc[],
                           meshUrl?: (r: RecordDoc) => string | null,
                           ): ResultCard[] {
  return records
    .filter((r) => !r.failed)
    .map((record) => ({
      record,
      title: `${methodLabel(record.method)} / ${record.material} / ` +
             `${record.supplier_id ?? "?"}`,
      metrics: [
        { label: "compliance", value: record.compliance.toPrecision(4) },
        { label: "mass", value: formatMassKg(record.mass_kg) },
        { label: "cost", value: formatCents(record.quoted_cost_cents) },
        { label: "lead time", value: formatLeadHours(record.quoted_lead_hours) },
      ],
      meshUrl: meshUrl ? meshUrl(record) : null,
      feasible: record.feasible,
    }));
}

const SORT_ACCESSORS: Record<SortKey, (r: RecordDoc) => number> = {
  compliance: (r) => r.compliance,
  cost: (r) => r.quoted_cost_cents ?? Number.POSITIVE_INFINITY,
  lead_time: (r) => r.quoted_lead_hours ?? Number.POSITIVE_INFINITY,
  mass: (r) => r.mass_kg,
};

/** Stable ascending sort on the chosen metric. */
export function sortCards(cards: ResultCard[], key: SortKey): ResultCard[] {
  const accessor = SORT_ACCESSORS[key];
  return cards
    .map((card, index) => ({ card, index }))
    .sort((a, b) => {
      const diff = accessor(a.card.record) - accessor(b.card.record);
      return diff !== 0 ? diff : a.index - b.index;
    })
    .map(({ card }) => card);
}

export interface SupplierComparison {
  method: string;
  material: string;
  suppliers: ResultCard[];        // one card per supplier, side by side
  deltas: Record<string, { cost: number | null; lead_hours: number | null }>;
}

/** Group records of one (method, material) combination across suppliers and
 * compute metric deltas against the best value in the group. */
export function compareSuppliers(records: RecordDoc[], method: string,
                                 material: string): SupplierComparison {
  const group = records.filter(
    (r) => !r.failed && r.method === method && r.material === material);
  const cards = buildCards(group);
  const costs = group.map((r) => r.quoted_cost_cents)
    .filter((v): v is number => v !== null);
  const leads = group.map((r) => r.quoted_lead_hours)
    .filter((v): v is number => v !== null);
  const bestCost = costs.length ? Math.min(...costs) : null;
  const bestLead = leads.length ? Math.min(...leads) : null;
  const deltas: SupplierComparison["deltas"] = {};
  for (const r of group) {
    deltas[r.supplier_id ?? "?"] = {
      cost: r.quoted_cost_cents !== null && bestCost !== null
        ? r.quoted_cost_cents - bestCost : null,
      lead_hours: r.quoted_lead_hours !== null && bestLead !== null
        ? r.quoted_lead_hours - bestLead : null,
    };
  }
  return { method, material, suppliers: cards, deltas };
}

export function renderCardsHtml(cards: ResultCard[]): string {
  if (!cards.length) return '<p class="empty">No designs generated.</p>';
  return cards
    .map((card) => {
      const rows = card.metrics
        .map((m) => `<dt>${m.label}</dt><dd>${m.value}</dd>`)
        .join("");
      const badge = card.feasible ? "" : '<span class="violated">violated</span>';
      const mesh = card.meshUrl
        ? `<a class="mesh" href="${card.meshUrl}">mesh</a>` : "";
      return `<div class="card" data-record="${card.record.record_id}">` +
             `<h3>${card.title}${badge}</h3><dl>${rows}</dl>${mesh}</div>`;
    })
    .join("\n");
}
