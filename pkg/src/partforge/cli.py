"""Command line interface.

Verbs: probe, generate, explain, serve, export, report.  All verbs read the
same JSON documents the service consumes; runs persist under --runs as an
append-only iteration ledger.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .explain import render_text, tree_from_document
from .orchestrator import IterationStore, Orchestrator
from .orchestrator.persist import read_density_grid


def _orchestrator(args) -> Orchestrator:
    store = IterationStore(Path(args.runs))
    base = Path(args.spec).resolve().parent if getattr(args, "spec", None) \
        else Path(args.runs).resolve().parent
    return Orchestrator(store, base_dir=base)


def _load_spec(path: str) -> dict:
    from .orchestrator.specs import absolutize_supplier_paths

    doc = json.loads(Path(path).read_text())
    return absolutize_supplier_paths(doc, Path(path).resolve().parent)


def cmd_probe(args) -> int:
    orch = _orchestrator(args)
    iteration_id = orch.create_iteration(_load_spec(args.spec))
    matrix = orch.run_probe(iteration_id)
    print(f"iteration {iteration_id}: probed "
          f"{len(matrix['combinations'])} combinations")
    for combo in matrix["combinations"]:
        status = "feasible" if combo["feasible"] else "infeasible"
        reasons = {s: d["reason"] for s, d in combo["per_supplier"].items()}
        print(f"  {combo['method']:<10} {combo['material']:<8} {status:<10} "
              + " ".join(f"{s}={r}" for s, r in sorted(reasons.items())))
    return 0


def cmd_generate(args) -> int:
    orch = _orchestrator(args)
    if args.iteration is None:
        iteration_id = orch.create_iteration(_load_spec(args.spec))
        orch.run_probe(iteration_id)
    else:
        iteration_id = args.iteration
    records = orch.run_generation(iteration_id,
                                  per_supplier=args.per_supplier)
    print(f"iteration {iteration_id}: {len(records)} design records")
    for rec in records:
        if rec.get("failed"):
            print(f"  FAILED {rec['method']}/{rec['material']}: "
                  f"{rec['error']}")
            continue
        cost = rec.get("quoted_cost_cents")
        lead = rec.get("quoted_lead_hours")
        print(f"  {rec['method']:<10} {rec['material']:<8} "
              f"{rec.get('supplier_id', '?'):<12} "
              f"c={rec['compliance']:.4g} m={rec['mass_kg']:.3f}kg "
              f"cost={'?' if cost is None else f'${cost / 100:,.0f}'} "
              f"lead={'?' if lead is None else f'{lead / 24:.1f}d'} "
              f"{'ok' if rec['feasible'] else 'violated'}")
    return 0


def cmd_explain(args) -> int:
    orch = _orchestrator(args)
    iteration_ids = [int(v) for v in args.iterations.split(",")] \
        if args.iterations else orch.store.list_iterations()
    doc = orch.run_explain(iteration_ids, target=args.target)
    if doc.get("status") != "ok":
        print(f"no explanation: {doc.get('detail', doc.get('status'))}")
        return 1
    print(render_text(tree_from_document(doc)))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    if args.supplier:
        from .orchestrator.service import make_supplier_app
        from .orchestrator.suppliers import shop_from_config

        shop = shop_from_config(json.loads(Path(args.supplier).read_text()))
        app = make_supplier_app(shop)
    else:
        from .orchestrator.service import make_manufacturer_app

        app = make_manufacturer_app(_orchestrator(args))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_export(args) -> int:
    store = IterationStore(Path(args.runs))
    doc = store.read_record(args.iteration, args.record)
    out = Path(args.out)
    if out.suffix == ".stl":
        if doc.get("mesh_ref"):
            out.write_bytes(store.resolve(doc["mesh_ref"]).read_bytes())
        elif doc.get("grid_ref"):
            from . import mesh

            rho, voxel = read_density_grid(store.resolve(doc["grid_ref"]))
            tri = mesh.export_mesh(rho, voxel, iso_level=args.iso)
            mesh.write_stl(tri, out)
        else:
            print("record carries no grid or mesh", file=sys.stderr)
            return 1
    elif out.suffix == ".json":
        out.write_text(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"unsupported export format {out.suffix!r}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


def cmd_report(args) -> int:
    from .report import write_report

    store = IterationStore(Path(args.runs))
    produced = write_report(store, args.iteration, Path(args.out))
    for path in produced:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="partforge",
        description="requirements- and resource-driven part-making compiler")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probe", help="create an iteration and probe suppliers")
    p.add_argument("spec", help="problem spec JSON")
    p.add_argument("--runs", default="runs", help="iteration ledger root")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("generate", help="run design jobs for feasible combos")
    p.add_argument("spec", nargs="?", help="problem spec JSON (new iteration)")
    p.add_argument("--runs", default="runs")
    p.add_argument("--iteration", type=int, default=None,
                   help="existing iteration id (skips creating a new one)")
    p.add_argument("--per-supplier", action="store_true",
                   help="one design per feasible supplier")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("explain", help="fit and print the decision tree")
    p.add_argument("--runs", default="runs")
    p.add_argument("--iterations", default=None,
                   help="comma-separated iteration ids (default: all)")
    p.add_argument("--target", default="cost",
                   choices=["cost", "lead_time", "mass", "compliance"])
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("serve", help="run the manufacturer or a supplier API")
    p.add_argument("--runs", default="runs")
    p.add_argument("--supplier", default=None,
                   help="shop config JSON: serve this supplier instead")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="export a record (mesh or JSON)")
    p.add_argument("--runs", default="runs")
    p.add_argument("--iteration", type=int, required=True)
    p.add_argument("--record", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iso", type=float, default=0.5)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("report", help="write CSV summaries and figures")
    p.add_argument("--runs", default="runs")
    p.add_argument("--iteration", type=int, required=True)
    p.add_argument("--out", default="report")
    p.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    if args.command == "generate" and args.spec is None \
            and args.iteration is None:
        parser.error("generate needs a spec file or --iteration")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
