/** Method x material feasibility grid with per-supplier reason tooltips. */

import { MatrixDoc } from "./types.js";

export interface GridCell {
  method: string;
  material: string;
  feasible: boolean;
  suppliersOk: string[];
  tooltip: string;
}

export interface GridModel {
  methods: string[];
  materials: string[];
  cells: GridCell[][];           // [material][method]
  empty: boolean;
}

const METHOD_LABELS: Record<string, string> = {
  additive: "Additive",
  mill3axis: "3-axis Milling",
  cut2axis: "2-axis Cutting",
};

export function methodLabel(method: string): string {
  return METHOD_LABELS[method] ?? method;
}

export function buildGrid(matrix: MatrixDoc): GridModel {
  const methods = [...new Set(matrix.combinations.map((c) => c.method))];
  const materials = [...new Set(matrix.combinations.map((c) => c.material))];
  const cells = materials.map((material) =>
    methods.map((method) => {
      const combo = matrix.combinations.find(
        (c) => c.method === method && c.material === material,
      );
      if (!combo) {
        return { method, material, feasible: false, suppliersOk: [],
                 tooltip: "not probed" };
      }
      const ok = Object.entries(combo.per_supplier)
        .filter(([, gate]) => gate.feasible)
        .map(([sid]) => sid)
        .sort();
      const tooltip = Object.entries(combo.per_supplier)
        .sort(([a], [b]) => a.localeCompare(b))
        .map(([sid, gate]) =>
          gate.feasible ? `${sid}: ok` : `${sid}: ${gate.reason}`)
        .join("\n");
      return { method, material, feasible: combo.feasible,
               suppliersOk: ok, tooltip };
    }),
  );
  return { methods, materials, cells, empty: matrix.combinations.length === 0 };
}

/** Static HTML table; interactivity is wiring, the model above is the logic. */
export function renderGridHtml(grid: GridModel): string {
  if (grid.empty) {
    return '<p class="empty">No feasible options - no combinations probed.</p>';
  }
  const header = ["<th></th>",
                  ...grid.methods.map((m) => `<th>${methodLabel(m)}</th>`)];
  const rows = grid.materials.map((material, i) => {
    const cells = grid.cells[i].map((cell) => {
      const cls = cell.feasible ? "feasible" : "infeasible";
      const mark = cell.feasible ? "&#10003;" : "&#10007;";
      return `<td class="${cls}" title="${cell.tooltip}">${mark}</td>`;
    });
    return `<tr><th>${material}</th>${cells.join("")}</tr>`;
  });
  return `<table class="feasibility"><tr>${header.join("")}</tr>` +
         rows.map((r) => r).join("") + "</table>";
}
