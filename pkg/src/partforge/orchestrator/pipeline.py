"""The compiler pipeline: probe suppliers, generate designs, explain results.

Fan-out to supplier schedulers is concurrent per supplier; design jobs run
in a bounded worker pool; every quoted number in a persisted record traces
back to a bid from a supplier client.  In-process supplier shops are cached
per iteration so probing and generation see the same shop state.
"""

from __future__ import annotations

import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import catalog, explain, mesh, probe
from ..designgen import JobConfig, run_optimization

from ..probe import AffineFit, GateResult, SurrogateModel
from ..scheduling import Bid, NoBid
from . import specs as spec_mod
from .persist import IterationStore, record_to_document
from .specs import ProblemSpec, parse_problem_spec
from .suppliers import bid_to_document, make_supplier

JOB_CONFIG_KEYS = ("iterations", "learning_rate", "kernel_grid",
                   "kernel_range", "weight_scale", "fem_rtol", "export_mesh",
                   "iso_level")

class Orchestrator:
    def __init__(self, store: IterationStore, base_dir: Path | None = None,
                 max_workers: int = 4):
        self.store = store
        self.base_dir = base_dir
        self.max_workers = max_workers
        self._clients_cache: dict[int, dict[str, object]] = {}

    # -- plumbing ---------------------------------------------------------------

    def create_iteration(self, spec_doc: dict) -> int:
        parse_problem_spec(spec_doc)        # validate before persisting
        return self.store.create_iteration(spec_doc)

    def _spec(self, iteration_id: int) -> ProblemSpec:
        return parse_problem_spec(self.store.read_spec(iteration_id))

    def _clients(self, iteration_id: int, spec: ProblemSpec):
        if iteration_id not in self._clients_cache:
            self._clients_cache[iteration_id] = {
                ref.id: make_supplier(ref, self.base_dir)
                for ref in spec.suppliers}
        return self._clients_cache[iteration_id]

    # -- probe ---------------------------------------------------------------

    def run_probe(self, iteration_id: int) -> dict:
        spec = self._spec(iteration_id)
        domain = spec_mod.domain_from_spec(spec)
        geometry = spec_mod.probe_geometry_from_spec(spec, domain)
        clients = self._clients(iteration_id, spec)

        combos = []
        for kind, orientations, overrides in spec.methods:
            for material in spec.materials:
                mspec = catalog.method_spec(kind, orientations, material.name,
                                            overrides)
                combos.append((mspec, material))

        matrix_doc = {"schema_version": 1, "iteration_id": iteration_id,
                      "combinations": []}
        for mspec, material in combos:
            points = probe.build_probe_plans(geometry, material, mspec)
            plans = [p.plan for p in points]

            def ask(client):
                return client.quote(plans, spec.quantity,
                                    spec.needed_by_hours)

            with ThreadPoolExecutor(max_workers=max(len(clients), 1)) as pool:
                futures = {sid: pool.submit(ask, client)
                           for sid, client in clients.items()}
            per_supplier = {}
            for sid in sorted(clients):
                bids = futures[sid].result()
                supplier_points = [probe.ProbePoint(p.vf, p.estimate, p.plan)
                                   for p in points]
                reasons = []
                for point, bid in zip(supplier_points, bids):
                    if isinstance(bid, Bid):
                        point.supplier_id = sid
                        point.quoted_cost = bid.cost
                        point.quoted_lead_days = bid.lead_time_hours / 24.0
                    else:
                        reasons.append(bid.reason)
                quoted = [p for p in supplier_points if p.has_quote]
                surrogate = None
                if len(quoted) >= 2:
                    surrogate = probe.fit_surrogate(supplier_points)
                gate = probe.feasibility_gate(
                    mspec, material, spec.constraints, geometry, surrogate,
                    supplier_points, error_margin=spec.error_margin)
                if surrogate is None and reasons \
                        and any("transport-error" in r for r in reasons):
                    gate = GateResult(False, probe.REASON_TRANSPORT,
                                      detail=reasons[0])
                per_supplier[sid] = self._supplier_doc(gate, surrogate,
                                                       supplier_points)
            matrix_doc["combinations"].append({
                "method": mspec.kind,
                "material": material.name,
                "orientations": list(mspec.orientations),
                "feasible": any(d["feasible"] for d in per_supplier.values()),
                "per_supplier": per_supplier,
            })
        self.store.write_matrix(iteration_id, matrix_doc)
        return matrix_doc

    @staticmethod
    def _supplier_doc(gate: GateResult, surrogate: SurrogateModel | None,
                      points=None) -> dict:
        doc = {"feasible": gate.feasible, "reason": gate.reason,
               "detail": gate.detail, "minvf": gate.minvf}
        if points:
            doc["probe_points"] = [
                {"vf": p.vf,
                 "quoted_cost_cents": int(round(p.quoted_cost * 100)),
                 "quoted_lead_hours": p.quoted_lead_days * 24.0}
                for p in points if p.has_quote]
        if surrogate is not None:
            doc["surrogate"] = {
                "cost_slope": surrogate.cost.slope,
                "cost_intercept": surrogate.cost.intercept,
                "cost_residual": surrogate.cost.max_residual,
                "lead_slope": surrogate.lead_days.slope,
                "lead_intercept": surrogate.lead_days.intercept,
                "lead_residual": surrogate.lead_days.max_residual,
                "vf_range": list(surrogate.vf_range),
            }
        return doc

    @staticmethod
    def _surrogate_from_doc(sid: str, doc: dict) -> SurrogateModel | None:
        s = doc.get("surrogate")
        if s is None:
            return None
        return SurrogateModel(
            supplier_id=sid,
            cost=AffineFit(s["cost_slope"], s["cost_intercept"],
                           s["cost_residual"]),
            lead_days=AffineFit(s["lead_slope"], s["lead_intercept"],
                                s["lead_residual"]),
            vf_range=tuple(s["vf_range"]))

    # -- generation ---------------------------------------------------------------

    def run_generation(self, iteration_id: int,
                       per_supplier: bool = False) -> list[dict]:
        spec = self._spec(iteration_id)
        if not self.store.has_matrix(iteration_id):
            self.run_probe(iteration_id)
        matrix = self.store.read_matrix(iteration_id)
        domain = spec_mod.domain_from_spec(spec)
        bc = spec_mod.boundary_conditions_from_spec(spec, domain)
        geometry = spec_mod.probe_geometry_from_spec(spec, domain)
        clients = self._clients(iteration_id, spec)

        jobs = []
        for combo in matrix["combinations"]:
            if not combo["feasible"]:
                continue
            material = catalog.material(combo["material"])
            overrides = next((o for k, _, o in spec.methods
                              if k == combo["method"]), None)
            mspec = catalog.method_spec(combo["method"],
                                        tuple(combo["orientations"]),
                                        material.name, overrides)
            feasible = {sid: doc for sid, doc in combo["per_supplier"].items()
                        if doc["feasible"]}
            chosen = sorted(feasible) if per_supplier \
                else [self._best_supplier(feasible)]
            for sid in chosen:
                jobs.append((mspec, material, sid, feasible[sid]))

        produced = []
        for index, (mspec, material, sid, sdoc) in enumerate(jobs):
            try:
                doc = self._run_job(spec, domain, bc, geometry, mspec,
                                    material, sid, sdoc, clients[sid],
                                    index, iteration_id)
            except Exception as exc:      # job isolation: record and continue
                doc = {"schema_version": 1, "failed": True,
                       "method": mspec.kind, "material": material.name,
                       "supplier_id": sid, "iteration_id": iteration_id,
                       "error": f"{type(exc).__name__}: {exc}",
                       "traceback": traceback.format_exc()}
                self.store.write_record(iteration_id, doc)
            produced.append(doc)
        return produced

    @staticmethod
    def _best_supplier(feasible: dict[str, dict]) -> str:
        """Largest minvf admits the most material (stiffest design); break
        ties on the predicted quote at that volume fraction."""
        def key(sid):
            doc = feasible[sid]
            minvf = doc.get("minvf") or 0.0
            s = doc.get("surrogate") or {}
            predicted = s.get("cost_slope", 0.0) * minvf \
                + s.get("cost_intercept", 0.0)
            return (-minvf, predicted, sid)
        return min(feasible, key=key)

    def _run_job(self, spec, domain, bc, geometry, mspec, material, sid,
                 sdoc, client, index, iteration_id) -> dict:
        surrogate = self._surrogate_from_doc(sid, sdoc)
        gate = GateResult(True, sdoc["reason"], minvf=sdoc["minvf"])
        bounds = probe.minvf_and_bounds(mspec, material, spec.constraints,
                                        geometry, surrogate, gate)
        kwargs = {k: v for k, v in spec.optimization.items()
                  if k in JOB_CONFIG_KEYS}
        if "kernel_grid" in kwargs:
            kwargs["kernel_grid"] = tuple(kwargs["kernel_grid"])
        if "kernel_range" in kwargs:
            kwargs["kernel_range"] = tuple(kwargs["kernel_range"])
        config = JobConfig(seed=spec.seed + 1000 * index,
                           quantity=spec.quantity, **kwargs)

        def quote(plan, quantity):
            bids = client.quote([plan], quantity, spec.needed_by_hours)
            return bids[0] if bids else NoBid(sid, plan.name, "no-response")

        result = run_optimization(domain, bc, material, mspec, bounds,
                                  spec.constraints,
                                  stock_volume=geometry.stock_volume,
                                  config=config, supplier_id=sid,
                                  quote=quote, iteration_id=iteration_id)
        mesh_bytes = None
        if config.export_mesh:
            mesh_bytes = self._mesh_bytes(result.density, domain.voxel_size,
                                          config.iso_level)
        doc = record_to_document(result.record)
        bid_doc = None
        if result.bid is not None:
            bid_doc = bid_to_document(result.bid)
        self.store.write_record(iteration_id, doc, density=result.density,
                                voxel_size=domain.voxel_size,
                                mesh_bytes=mesh_bytes, bid_doc=bid_doc)
        return doc

    @staticmethod
    def _mesh_bytes(density, voxel_size, iso_level) -> bytes | None:
        try:
            tri = mesh.export_mesh(density, voxel_size, iso_level)
        except mesh.EmptyMeshError:
            return None
        return mesh.stl_bytes(tri)

    # -- explanation -----------------------------------------------------------

    def run_explain(self, iteration_ids: list[int],
                    target: str = "cost") -> dict:
        docs = []
        for it in iteration_ids:
            docs.extend(self.store.read_records(it))
        dataset = build_design_dataset(docs, target)
        if dataset is None:
            return {"status": "empty", "target": target,
                    "detail": "no quoted records across the requested "
                              "iterations"}
        newest = max(iteration_ids)
        tree = explain.fit_tree(dataset)
        explain.annotate(tree, dataset, newest)
        doc = explain.render(tree)
        doc["status"] = "ok"
        doc["iteration_ids"] = sorted(iteration_ids)
        self.store.write_tree(newest, target, doc)
        return doc

NUMERIC_COLUMNS = ("cost", "lead_time", "mass", "compliance")

def build_design_dataset(record_docs: list[dict],
                         target: str) -> explain.DesignDataset | None:
    """Assemble the explainer dataset from quoted record documents."""
    if target not in NUMERIC_COLUMNS:
        raise ValueError(f"target must be one of {NUMERIC_COLUMNS}")
    rows = []
    for doc in record_docs:
        if doc.get("failed") or doc.get("quoted_cost_cents") is None:
            continue
        rows.append({
            "cost": doc["quoted_cost_cents"] / 100.0,
            "lead_time": doc["quoted_lead_hours"] / 24.0,
            "mass": doc["mass_kg"],
            "compliance": doc["compliance"],
            "material": doc["material"],
            "method": doc["method"],
            "supplier": doc.get("supplier_id") or "unknown",
            "iteration": doc.get("iteration_id", 0),
        })
    if not rows:
        return None

    features: list[explain.Feature] = []
    columns: list[list[float]] = []
    pretty = {"cost": "cost", "lead_time": "lead_time", "mass": "mass",
              "compliance": "compliance"}
    for name in NUMERIC_COLUMNS:
        if name == target:
            continue
        kind = explain.DURATION_DAYS if name == "lead_time" \
            else explain.NUMERIC
        features.append(explain.Feature(pretty[name], kind))
        columns.append([r[name] for r in rows])
    for column, label in (("material", "material"), ("method", "method"),
                          ("supplier", "supplier")):
        for value in sorted({r[column] for r in rows}):
            features.append(explain.Feature(f"{label} is {value}",
                                            explain.ONE_HOT))
            columns.append([1.0 if r[column] == value else 0.0 for r in rows])

    x = np.array(columns, dtype=float).T
    y = np.array([r[target] for r in rows])
    iteration_ids = np.array([r["iteration"] for r in rows], dtype=int)
    return explain.DesignDataset(features, x, y, iteration_ids,
                                 target_name=target)
