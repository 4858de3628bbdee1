/** Page wiring: a single-session explorer against the manufacturer API.
 *
 * Flow mirrors the iterative loop: edit constraints -> create iteration +
 * probe -> inspect the feasibility grid -> generate -> compare designs and
 * suppliers -> explore the decision tree -> tighten constraints and repeat.
 */

import { ManufacturerClient } from "./api.js";
import { buildGrid, renderGridHtml } from "./feasibilityGrid.js";
import { buildCards, renderCardsHtml, sortCards, SortKey } from "./resultsGrid.js";
import { renderTreeHtml, TreeExplorer } from "./treeExplorer.js";
import { Session } from "./session.js";
import { ProblemSpecDraft, RecordDoc } from "./types.js";

const DEFAULT_DRAFT: ProblemSpecDraft = {
  name: "bracket",
  seed: 7,
  domain: { resolution: [32, 16, 8], size_m: [0.2, 0.1, 0.05] },
  regions: {
    fixed: [{ box: [[0, 0, 0], [0, 1, 1]] }],
    loads: [{ box: [[1, 0, 0], [1, 0.2, 1]], force_n: [0, -1000, 0] }],
  },
  methods: [
    { kind: "additive", orientations: ["y+"] },
    { kind: "mill3axis", orientations: ["x+", "x-", "y+", "y-", "z+", "z-"] },
    { kind: "cut2axis", orientations: ["y"] },
  ],
  materials: ["Al6061", "Ti6Al4V", "ABS"],
  constraints: { masscon_kg: 0.5, costcon_cents: 5_000_000, timecon_days: 30 },
  quantity: 10,
  suppliers: [],
};

export function mount(root: HTMLElement, baseUrl: string): void {
  const client = new ManufacturerClient(baseUrl);
  const session = new Session(DEFAULT_DRAFT);
  let records: RecordDoc[] = [];
  let iterationId: number | null = null;
  let explorer: TreeExplorer | null = null;
  let sortKey: SortKey = "compliance";

  root.innerHTML = `
    <section id="form">
      <h2>Constraints</h2>
      <label>mass [kg] <input id="mass" type="number" step="0.05"></label>
      <label>cost [$] <input id="cost" type="number" step="100"></label>
      <label>lead time [days] <input id="time" type="number" step="1"></label>
      <div id="form-errors" class="errors"></div>
      <button id="probe">Create iteration + probe</button>
      <button id="generate" disabled>Generate designs</button>
    </section>
    <section><h2>Feasibility</h2><div id="grid"></div></section>
    <section>
      <h2>Designs</h2>
      <label>sort by <select id="sort">
        <option>compliance</option><option>cost</option>
        <option>lead_time</option><option>mass</option>
      </select></label>
      <div id="cards"></div>
    </section>
    <section><h2>Why these costs?</h2><ul id="tree"></ul>
      <div id="leaf-designs"></div></section>
  `;

  const el = <T extends HTMLElement>(id: string) =>
    root.querySelector<T>(`#${id}`)!;

  function readDraft(): void {
    const mass = parseFloat(el<HTMLInputElement>("mass").value);
    const cost = parseFloat(el<HTMLInputElement>("cost").value);
    const days = parseFloat(el<HTMLInputElement>("time").value);
    const errors = session.editDraft({
      constraints: {
        masscon_kg: Number.isFinite(mass) ? mass : null,
        costcon_cents: Number.isFinite(cost) ? Math.round(cost * 100) : null,
        timecon_days: Number.isFinite(days) ? days : null,
      },
    });
    el("form-errors").textContent =
      errors.map((e) => `${e.field}: ${e.message}`).join("; ");
    el<HTMLButtonElement>("probe").disabled = errors.length > 0;
  }

  for (const id of ["mass", "cost", "time"]) {
    el<HTMLInputElement>(id).addEventListener("input", readDraft);
  }

  el("probe").addEventListener("click", async () => {
    const { iteration_id } = await client.createIteration(session.draft);
    iterationId = iteration_id;
    const matrix = await client.probe(iteration_id);
    el("grid").innerHTML = renderGridHtml(buildGrid(matrix));
    el<HTMLButtonElement>("generate").disabled = false;
  });

  el("generate").addEventListener("click", async () => {
    if (iterationId === null) return;
    records = (await client.generate(iterationId, true)).records;
    session.closeIteration({ id: iterationId, specName: session.draft.name,
                             recordCount: records.length });
    renderCards();
    const ids = session.iterations.map((it) => it.id);
    const tree = await client.explain(ids, session.selection.target);
    if (tree.status === "ok") {
      explorer = new TreeExplorer(tree);
      explorer.expandAll();
      renderTree();
    }
  });

  el("sort").addEventListener("change", (ev) => {
    sortKey = (ev.target as HTMLSelectElement).value as SortKey;
    renderCards();
  });

  function renderCards(): void {
    const cards = sortCards(
      buildCards(records, (r) =>
        iterationId === null ? null : client.meshUrl(iterationId, r.record_id)),
      sortKey);
    el("cards").innerHTML = renderCardsHtml(cards);
  }

  el("tree").addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest("[data-path]");
    if (!target || !explorer) return;
    const path = target.getAttribute("data-path")!;
    explorer.toggle(path);
    explorer.select(path);
    renderTree();
    const designs = explorer.leafRecords(path, records);
    el("leaf-designs").innerHTML = renderCardsHtml(buildCards(designs));
  });

  function renderTree(): void {
    if (explorer) el("tree").innerHTML = renderTreeHtml(explorer.view());
  }

  readDraft();
}
