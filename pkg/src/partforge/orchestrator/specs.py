"""Problem specification documents: parsing, validation, geometry builders.

Wire units: kilograms, hours, ISO-8601 dates, integer currency cents.  The
parsed spec carries engineering units (dollars, hours, kg) and everything a
run needs: domain, regions, method/material candidates, constraints, order
quantity, and supplier references.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field as dc_field

import numpy as np

from .. import catalog, fem
from ..mfgmodel import Material, MethodSpec
from ..probe import ConstraintSet, ProbeGeometry

HOURS_PER_DAY = 24.0


class SpecError(ValueError):
    """Problem specification failed validation."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in fractional domain coordinates, bounds in [0, 1]."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        for a, b in zip(self.lo, self.hi):
            if not (0.0 <= a <= b <= 1.0):
                raise SpecError(f"box bounds must satisfy 0 <= lo <= hi <= 1, "
                                f"got {self.lo} .. {self.hi}")

    @classmethod
    def from_doc(cls, doc) -> "Box":
        lo, hi = doc
        return cls(tuple(float(v) for v in lo), tuple(float(v) for v in hi))

    def to_doc(self):
        return [list(self.lo), list(self.hi)]


@dataclass
class LoadRegion:
    box: Box
    force_n: tuple[float, float, float]


@dataclass
class SupplierRef:
    id: str
    url: str | None = None
    config: str | None = None            # path to a shop config document
    inline: dict | None = None           # embedded shop config


@dataclass
class ProblemSpec:
    name: str
    seed: int
    resolution: tuple[int, int, int]
    size_m: tuple[float, float, float]
    fixed: list[Box]
    loads: list[LoadRegion]
    no_design: list[Box]
    methods: list[MethodSpec]
    materials: list[Material]
    constraints: ConstraintSet
    quantity: int
    suppliers: list[SupplierRef]
    needed_by_hours: float | None = None
    optimization: dict = dc_field(default_factory=dict)
    error_margin: float = 0.10
    document: dict = dc_field(default_factory=dict)


def parse_problem_spec(doc: dict) -> ProblemSpec:
    try:
        return _parse(doc)
    except KeyError as exc:
        raise SpecError(f"missing required field {exc}") from exc


def absolutize_supplier_paths(doc: dict, base_dir) -> dict:
    """Rewrite relative supplier config paths against the spec's location.

    Persisted iteration snapshots must stay valid when re-run from another
    working directory, so paths are resolved once at ingestion.
    """
    import pathlib

    base = pathlib.Path(base_dir)
    for ref in doc.get("suppliers", []):
        config = ref.get("config")
        if config and not pathlib.Path(config).is_absolute():
            ref["config"] = str((base / config).resolve())
    return doc


def _parse(doc: dict) -> ProblemSpec:
    domain_doc = doc["domain"]
    resolution = tuple(int(v) for v in domain_doc["resolution"])
    size = tuple(float(v) for v in domain_doc["size_m"])
    if len(resolution) != 3 or min(resolution) < 1:
        raise SpecError("domain resolution must be three positive ints")
    if len(size) != 3 or min(size) <= 0:
        raise SpecError("domain size must be three positive lengths")

    regions = doc.get("regions", {})
    fixed = [Box.from_doc(r["box"]) for r in regions.get("fixed", [])]
    loads = [LoadRegion(Box.from_doc(r["box"]),
                        tuple(float(v) for v in r["force_n"]))
             for r in regions.get("loads", [])]
    no_design = [Box.from_doc(r["box"]) for r in regions.get("no_design", [])]
    if not fixed:
        raise SpecError("at least one fixed region is required")
    if not loads:
        raise SpecError("at least one load region is required")

    methods = []
    for m in doc["methods"]:
        methods.append((m["kind"], tuple(m.get("orientations", ())),
                        m.get("overrides")))
    materials = [catalog.material(name) for name in doc["materials"]]
    if not methods or not materials:
        raise SpecError("at least one method and one material are required")

    con = doc["constraints"]
    constraints = ConstraintSet(
        masscon_kg=con.get("masscon_kg"),
        costcon=None if con.get("costcon_cents") is None
        else con["costcon_cents"] / 100.0,
        timecon_days=con.get("timecon_days"))

    quantity = int(doc.get("quantity", 1))
    if quantity < 1:
        raise SpecError("quantity must be at least 1")

    suppliers = [SupplierRef(id=s["id"], url=s.get("url"),
                             config=s.get("config"), inline=s.get("inline"))
                 for s in doc["suppliers"]]
    if not suppliers:
        raise SpecError("at least one supplier is required")
    ids = [s.id for s in suppliers]
    if len(set(ids)) != len(ids):
        raise SpecError("supplier ids must be unique")

    needed_by_hours = doc.get("needed_by_hours")
    if needed_by_hours is None and doc.get("needed_by"):
        created = doc.get("created") or _dt.date.today().isoformat()
        delta = (_dt.date.fromisoformat(doc["needed_by"])
                 - _dt.date.fromisoformat(created)).days
        needed_by_hours = delta * HOURS_PER_DAY

    spec = ProblemSpec(
        name=str(doc.get("name", "problem")),
        seed=int(doc.get("seed", 0)),
        resolution=resolution, size_m=size, fixed=fixed, loads=loads,
        no_design=no_design, methods=[], materials=materials,
        constraints=constraints, quantity=quantity, suppliers=suppliers,
        needed_by_hours=needed_by_hours,
        optimization=dict(doc.get("optimization", {})),
        error_margin=float(doc.get("error_margin", 0.10)),
        document=doc)
    # method specs may depend on the material (removal rates), so store
    # builders and expand per material on demand
    spec.methods = [(kind, orientations, overrides)
                    for (kind, orientations, overrides) in methods]
    return spec


def method_spec_for(spec: ProblemSpec, kind: str, orientations,
                    overrides, material: Material) -> MethodSpec:
    return catalog.method_spec(kind, orientations, material.name, overrides)


def domain_from_spec(spec: ProblemSpec) -> fem.VoxelDomain:
    nx, ny, nz = spec.resolution
    voxel = (spec.size_m[0] / nx, spec.size_m[1] / ny, spec.size_m[2] / nz)
    mask = None
    if spec.no_design:
        mask = np.ones(spec.resolution, dtype=bool)
        centers = _voxel_center_fractions(spec.resolution)
        for box in spec.no_design:
            inside = _inside(centers, box)
            mask &= ~inside
    return fem.VoxelDomain(spec.resolution, voxel, design_mask=mask)


def _voxel_center_fractions(resolution):
    axes = [(np.arange(n) + 0.5) / n for n in resolution]
    return np.meshgrid(*axes, indexing="ij")


def _inside(centers, box: Box):
    xs, ys, zs = centers
    inside = np.ones(xs.shape, dtype=bool)
    for arr, lo, hi in zip((xs, ys, zs), box.lo, box.hi):
        inside &= (arr >= lo - 1e-12) & (arr <= hi + 1e-12)
    return inside


def boundary_conditions_from_spec(spec: ProblemSpec,
                                  domain: fem.VoxelDomain
                                  ) -> fem.BoundaryConditions:
    nx, ny, nz = domain.resolution
    gx, gy, gz = np.meshgrid(np.arange(nx + 1) / nx, np.arange(ny + 1) / ny,
                             np.arange(nz + 1) / nz, indexing="ij")
    node_ids = domain.node_id(*np.meshgrid(np.arange(nx + 1),
                                           np.arange(ny + 1),
                                           np.arange(nz + 1), indexing="ij"))

    def nodes_in(box: Box):
        sel = np.ones(gx.shape, dtype=bool)
        for arr, lo, hi in zip((gx, gy, gz), box.lo, box.hi):
            sel &= (arr >= lo - 1e-9) & (arr <= hi + 1e-9)
        return node_ids[sel]

    fixed_dofs = []
    for box in spec.fixed:
        nodes = nodes_in(box)
        if nodes.size == 0:
            raise SpecError(f"fixed region selects no nodes: {box}")
        for node in nodes.ravel():
            fixed_dofs.extend((3 * node, 3 * node + 1, 3 * node + 2))

    force = np.zeros(domain.num_dofs)
    for load in spec.loads:
        nodes = nodes_in(load.box).ravel()
        if nodes.size == 0:
            raise SpecError(f"load region selects no nodes: {load.box}")
        for axis in range(3):
            force[3 * nodes + axis] += load.force_n[axis] / nodes.size
    return fem.BoundaryConditions(np.array(fixed_dofs, dtype=np.int64), force)


def probe_geometry_from_spec(spec: ProblemSpec,
                             domain: fem.VoxelDomain) -> ProbeGeometry:
    v = domain.voxel_volume
    designable = domain.num_elements if domain.design_mask is None \
        else int(domain.design_mask.sum())
    stock = float(np.prod(domain.lengths))
    return ProbeGeometry(design_volume=designable * v, stock_volume=stock)
