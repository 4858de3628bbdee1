"""Regenerate the golden fixtures from the primary package.

Run from the repository root:

    python3 frontend/fixtures/generate_golden.py

Produces matrix.json (a real probe over two in-process suppliers),
records.json (15 records across two iterations), and tree.json (cost tree
with the second iteration highlighted).  Committed outputs are what the UI
tests consume; tests never run the primary pipeline.
"""

import json
from pathlib import Path

from partforge import explain
from partforge.designgen import DesignRecord
from partforge.orchestrator import IterationStore, Orchestrator
from partforge.orchestrator.persist import record_to_document
from partforge.orchestrator.pipeline import build_design_dataset
from partforge.probe import ConstraintSet

OUT = Path(__file__).parent / "golden"

SHOP_A = {
    "id": "supplier-a",
    "machines": [
        {"id": "mill-1", "capabilities": ["mill3"]},
        {"id": "fin-1", "capabilities": ["finishing"]},
        {"id": "cmm-1", "capabilities": ["inspect"]},
    ],
    "inventory": [
        {"material": "Al6061", "on_hand_kg": 500,
         "unit_cost_cents_per_kg": 1000},
        {"material": "ABS", "on_hand_kg": 300, "unit_cost_cents_per_kg": 300},
    ],
}
SHOP_B = {
    "id": "supplier-b",
    "machines": [
        {"id": "lpbf-1", "capabilities": ["print-lpbf"], "batch_capacity": 4},
        {"id": "fdm-1", "capabilities": ["print-fdm"], "batch_capacity": 4},
        {"id": "fin-1", "capabilities": ["finishing"]},
        {"id": "cmm-1", "capabilities": ["inspect"]},
    ],
    "inventory": [
        {"material": "Al6061", "on_hand_kg": 300,
         "unit_cost_cents_per_kg": 1200},
        {"material": "ABS", "on_hand_kg": 200, "unit_cost_cents_per_kg": 330},
    ],
}

SPEC = {
    "schema_version": 1,
    "name": "golden",
    "seed": 1,
    "domain": {"resolution": [8, 4, 4], "size_m": [0.2, 0.1, 0.1]},
    "regions": {
        "fixed": [{"box": [[0.0, 0.0, 0.0], [0.0, 1.0, 1.0]]}],
        "loads": [{"box": [[1.0, 0.0, 0.0], [1.0, 0.3, 1.0]],
                   "force_n": [0.0, -500.0, 0.0]}],
    },
    "methods": [
        {"kind": "additive", "orientations": ["y+"]},
        {"kind": "mill3axis", "orientations": ["x+", "y+", "z+"]},
        {"kind": "cut2axis", "orientations": ["y"]},
    ],
    "materials": ["Al6061", "ABS"],
    "constraints": {"masscon_kg": 2.0, "costcon_cents": 100000000,
                    "timecon_days": 90},
    "quantity": 2,
    "suppliers": [{"id": "supplier-a", "inline": SHOP_A},
                  {"id": "supplier-b", "inline": SHOP_B}],
}


def make_matrix(tmpdir: Path) -> dict:
    orch = Orchestrator(IterationStore(tmpdir))
    return orch.run_probe(orch.create_iteration(SPEC))


def make_records() -> list[dict]:
    # 15 designs over two iterations; exactly 4 have lead time <= 15 days
    # and they are cheap, so the cost tree splits on lead_time first
    rows = [
        # (iteration, method, material, supplier, lead_days, cost, mass, c)
        (1, "mill3axis", "Al6061", "supplier-a", 10.0, 9_000, 1.8, 120.0),
        (1, "mill3axis", "ABS", "supplier-a", 12.0, 8_000, 0.9, 310.0),
        (1, "mill3axis", "Al6061", "supplier-a", 13.0, 10_500, 1.9, 115.0),
        (1, "cut2axis", "Al6061", "supplier-a", 14.0, 11_000, 1.7, 140.0),
        (1, "additive", "Al6061", "supplier-b", 16.0, 38_000, 1.2, 95.0),
        (1, "additive", "ABS", "supplier-b", 18.0, 36_000, 0.6, 280.0),
        (1, "additive", "Al6061", "supplier-b", 20.0, 41_000, 1.3, 90.0),
        (1, "additive", "ABS", "supplier-b", 22.0, 37_500, 0.7, 275.0),
        (1, "additive", "Al6061", "supplier-b", 24.0, 43_000, 1.1, 99.0),
        (2, "additive", "Al6061", "supplier-b", 17.0, 39_500, 0.9, 130.0),
        (2, "additive", "ABS", "supplier-b", 19.0, 36_800, 0.5, 320.0),
        (2, "additive", "Al6061", "supplier-b", 21.0, 42_000, 0.8, 135.0),
        (2, "additive", "ABS", "supplier-b", 23.0, 38_200, 0.55, 305.0),
        (2, "additive", "Al6061", "supplier-b", 25.0, 44_000, 0.85, 128.0),
        (2, "additive", "Al6061", "supplier-b", 27.0, 45_500, 0.95, 122.0),
    ]
    constraints = ConstraintSet(masscon_kg=2.0, costcon=1_000_000.0,
                                timecon_days=90.0)
    docs = []
    for i, (it, method, material, supplier, lead, cost, mass, c) in \
            enumerate(rows):
        record = DesignRecord(
            method=method, material=material, supplier_id=supplier,
            orientations=("y+",) if method != "mill3axis"
            else ("x+", "y+", "z+"),
            compliance=c, mass_kg=mass, nominal_cost=cost * 0.8,
            nominal_time_hours=lead * 20.0, quoted_cost=float(cost),
            quoted_lead_days=lead, constraints=constraints, feasible=True,
            feasibility={"mass": True, "cost": True, "time": True},
            final_loss=0.1 + 0.01 * i, milling_loss=0.0, minvf=0.3, seed=i,
            iteration_id=it)
        doc = record_to_document(record)
        doc["record_id"] = f"record-{i:03d}"
        doc["grid_ref"] = None
        doc["mesh_ref"] = None
        docs.append(doc)
    return docs


def make_tree(records: list[dict]) -> dict:
    dataset = build_design_dataset(records, "cost")
    tree = explain.fit_tree(dataset)
    explain.annotate(tree, dataset, current_iteration=2)
    doc = explain.render(tree)
    doc["status"] = "ok"
    doc["iteration_ids"] = [1, 2]
    return doc


def main():
    import tempfile

    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        matrix = make_matrix(Path(tmp))
    records = make_records()
    tree = make_tree(records)
    (OUT / "matrix.json").write_text(json.dumps(matrix, indent=2,
                                                sort_keys=True))
    (OUT / "records.json").write_text(json.dumps(records, indent=2,
                                                 sort_keys=True))
    (OUT / "tree.json").write_text(json.dumps(tree, indent=2, sort_keys=True))
    print(f"wrote fixtures to {OUT}")
    root = tree["root"]
    print("tree root:", root["percent"], "left:",
          root["left"]["count"], root["left"]["percent"])


if __name__ == "__main__":
    main()
