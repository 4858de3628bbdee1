"""Supplier probing and feasibility gating.

Thirteen uniform-density topologies spanning volume fractions 1.0 down to
0.005 are priced with the nominal models, sent to every supplier for quotes,
and turned into per-supplier affine surrogates vf -> (quoted cost, lead
time).  Inverting a surrogate maps business constraints into the nominal
domain the optimizer can differentiate, determines the expected active
constraint (minvf), and eliminates infeasible method/material combinations
before any expensive design generation runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import mfgmodel
from .mfgmodel import Material, MethodSpec, NominalEstimate
from .plans import build_process_plan
from .scheduling import ProcessPlan

PROBE_VOLUME_FRACTIONS = (1.0, 0.8, 0.6, 0.5, 0.4, 0.3, 0.2, 0.15, 0.1,
                          0.05, 0.02, 0.01, 0.005)
ADDITIVE_SUPPORT_FRACTION = 0.1        # assumed support volume = 0.1 vf V
DEFAULT_ERROR_MARGIN = 0.10            # e_p slack on the vf comparison

REASON_OK = "ok"
REASON_NO_MACHINE = "no-machine"
REASON_COST_FLOOR = "cost-floor"
REASON_TIME_FLOOR = "time-floor"
REASON_MASS_COST = "mass-vs-cost-conflict"
REASON_MASS_TIME = "mass-vs-time-conflict"
REASON_TRANSPORT = "transport-error"


class UnmappableConstraintError(ValueError):
    """Surrogate slope too small to invert a constraint to a volume fraction."""


@dataclass(frozen=True)
class ConstraintSet:
    """Business constraints; at least one must be present, all positive."""

    masscon_kg: float | None = None
    costcon: float | None = None
    timecon_days: float | None = None

    def __post_init__(self):
        values = (self.masscon_kg, self.costcon, self.timecon_days)
        if all(v is None for v in values):
            raise ValueError("at least one constraint must be present")
        if any(v is not None and v <= 0 for v in values):
            raise ValueError("constraints must be positive")


@dataclass
class ProbePoint:
    """One canonical topology with its nominal estimate and supplier quote."""

    vf: float
    estimate: NominalEstimate
    plan: ProcessPlan
    supplier_id: str | None = None
    quoted_cost: float | None = None
    quoted_lead_days: float | None = None

    @property
    def has_quote(self) -> bool:
        return self.quoted_cost is not None and self.quoted_lead_days is not None


@dataclass
class AffineFit:
    slope: float
    intercept: float
    max_residual: float

    def predict(self, vf: float) -> float:
        return self.slope * vf + self.intercept


@dataclass
class SurrogateModel:
    """Affine vf -> quote maps for one (supplier, method, material)."""

    supplier_id: str
    cost: AffineFit
    lead_days: AffineFit
    vf_range: tuple[float, float]

    def in_range(self, vf: float) -> bool:
        return self.vf_range[0] - 1e-12 <= vf <= self.vf_range[1] + 1e-12


@dataclass
class GateResult:
    feasible: bool
    reason: str
    detail: str = ""
    minvf: float | None = None
    extrapolated: bool = False


@dataclass
class FeasibilityEntry:
    method: str
    material: str
    per_supplier: dict[str, GateResult] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return any(r.feasible for r in self.per_supplier.values())

    def feasible_suppliers(self) -> list[str]:
        return sorted(s for s, r in self.per_supplier.items() if r.feasible)


@dataclass
class FeasibilityMatrix:
    entries: dict[tuple[str, str], FeasibilityEntry] = field(default_factory=dict)

    def entry(self, method: str, material: str) -> FeasibilityEntry:
        return self.entries[(method, material)]

    def feasible_combinations(self) -> list[tuple[str, str]]:
        return sorted(k for k, e in self.entries.items() if e.feasible)


@dataclass(frozen=True)
class ProbeGeometry:
    """Volumes the probe topologies are built from."""

    design_volume: float      # m^3 of designable voxels
    stock_volume: float       # m^3, bounding box priced for subtractive stock

    def __post_init__(self):
        if self.design_volume <= 0 or self.stock_volume <= 0:
            raise ValueError("probe volumes must be positive")
        if self.stock_volume < self.design_volume - 1e-12:
            raise ValueError("stock must cover the design volume")


def probe_vf_set() -> tuple[float, ...]:
    return PROBE_VOLUME_FRACTIONS


def nominal_for_vf(vf: float, geometry: ProbeGeometry, material: Material,
                   spec: MethodSpec) -> NominalEstimate:
    """Nominal estimate of the uniform-density topology at a volume fraction."""
    part_volume = vf * geometry.design_volume
    if spec.kind == "additive":
        part_mass = part_volume * material.density
        support_volume = ADDITIVE_SUPPORT_FRACTION * vf * geometry.design_volume
        support_mass = support_volume * spec.support_density_ratio * material.density
        return mfgmodel.am_nominal(part_mass, support_mass, material, spec)
    if spec.kind == "mill3axis":
        return mfgmodel.mill_nominal(part_volume, material, spec,
                                     geometry.stock_volume)
    # conservative 2-axis probe: cut area approximated by the void volume,
    # read in the reference feed rate's inch unit system (in^3 -> in^2);
    # deliberately pessimistic, it prunes aggressively on large parts
    area_proxy = (1.0 - vf) * geometry.design_volume / mfgmodel.METERS_PER_INCH
    stock_mass = geometry.stock_volume * material.density
    return mfgmodel.edm_nominal(area_proxy, material, spec, stock_mass)


def build_probe_plans(geometry: ProbeGeometry, material: Material,
                      spec: MethodSpec,
                      vf_set: tuple[float, ...] = PROBE_VOLUME_FRACTIONS
                      ) -> list[ProbePoint]:
    """Probe points for every canonical volume fraction, ready to quote."""
    points = []
    for vf in vf_set:
        estimate = nominal_for_vf(vf, geometry, material, spec)
        plan = build_process_plan(f"probe-vf{vf:g}", estimate, spec, material)
        points.append(ProbePoint(vf=vf, estimate=estimate, plan=plan))
    return points


def _fit_affine(x: np.ndarray, y: np.ndarray) -> AffineFit:
    if len(np.unique(x)) < 2:
        raise ValueError("surrogate fit needs at least two distinct volume "
                         "fractions")
    design = np.stack([x, np.ones_like(x)], axis=1)
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.max(np.abs(design @ coeffs - y)))
    return AffineFit(slope=float(coeffs[0]), intercept=float(coeffs[1]),
                     max_residual=residual)


def fit_surrogate(points: list[ProbePoint]) -> SurrogateModel:
    """Ordinary least squares over the quoted probe points."""
    quoted = [p for p in points if p.has_quote]
    if len(quoted) < 2:
        raise ValueError("surrogate fit needs at least two quoted probe points")
    supplier = quoted[0].supplier_id or "unknown"
    vf = np.array([p.vf for p in quoted])
    cost = _fit_affine(vf, np.array([p.quoted_cost for p in quoted]))
    lead = _fit_affine(vf, np.array([p.quoted_lead_days for p in quoted]))
    return SurrogateModel(supplier_id=supplier, cost=cost, lead_days=lead,
                          vf_range=(float(vf.min()), float(vf.max())))


def constraint_to_vf(fit: AffineFit, constraint: float,
                     vf_range: tuple[float, float],
                     slope_tol: float = 1e-9) -> tuple[float, bool]:
    """Invert an affine quote model at a constraint value.

    Returns (vf, extrapolated); the vf is clamped to the probed range and
    flagged when the raw inversion falls outside it.
    """
    if abs(fit.slope) < slope_tol:
        raise UnmappableConstraintError(
            f"surrogate slope {fit.slope:.3e} cannot map the constraint")
    vf = (constraint - fit.intercept) / fit.slope
    lo, hi = vf_range
    if vf < lo:
        return lo, True
    if vf > hi:
        return hi, True
    return vf, False


def _quote_floor(points: list[ProbePoint], attr: str) -> float:
    return min(getattr(p, attr) for p in points if p.has_quote)


def feasibility_gate(spec: MethodSpec, material: Material,
                     constraints: ConstraintSet, geometry: ProbeGeometry,
                     surrogate: SurrogateModel | None,
                     points: list[ProbePoint],
                     error_margin: float = DEFAULT_ERROR_MARGIN) -> GateResult:
    """Decide whether one (supplier, method, material) combination is worth
    optimizing, mirroring the probe elimination logic.

    Additive: quotes grow with vf, so each constraint caps vf from above and
    minvf is the tightest cap; a quote floor above a constraint kills the
    combination.  Subtractive: quotes shrink as vf approaches solid, so cost
    and time give vf lower bounds which must stay below the mass cap vf_mass
    (within the e_p margin).
    """
    if spec.kind == "mill3axis" and not material.millable:
        return GateResult(False, REASON_NO_MACHINE,
                          detail=f"{material.name} cannot be milled")
    if surrogate is None or not any(p.has_quote for p in points):
        return GateResult(False, REASON_NO_MACHINE,
                          detail="supplier returned no bids")

    vf_mass = 1.0
    if constraints.masscon_kg is not None:
        vf_mass = min(constraints.masscon_kg
                      / (geometry.design_volume * material.density), 1.0)

    if spec.kind == "additive":
        candidates = [vf_mass]
        if constraints.costcon is not None:
            if _quote_floor(points, "quoted_cost") > constraints.costcon:
                return GateResult(False, REASON_COST_FLOOR,
                                  detail="cheapest probe quote exceeds the "
                                         "cost constraint")
            vf_cost, _ = constraint_to_vf(surrogate.cost, constraints.costcon,
                                          surrogate.vf_range)
            candidates.append(vf_cost)
        if constraints.timecon_days is not None:
            if _quote_floor(points, "quoted_lead_days") > constraints.timecon_days:
                return GateResult(False, REASON_TIME_FLOOR,
                                  detail="fastest probe quote exceeds the "
                                         "time constraint")
            vf_time, _ = constraint_to_vf(surrogate.lead_days,
                                          constraints.timecon_days,
                                          surrogate.vf_range)
            candidates.append(vf_time)
        return GateResult(True, REASON_OK, minvf=min(candidates))

    # subtractive: milling and 2-axis cutting
    slack = vf_mass * (1.0 + error_margin)
    if constraints.costcon is not None:
        if _quote_floor(points, "quoted_cost") > constraints.costcon:
            return GateResult(False, REASON_COST_FLOOR,
                              detail="even the solid block exceeds the cost "
                                     "constraint")
        vf_cost, _ = constraint_to_vf(surrogate.cost, constraints.costcon,
                                      surrogate.vf_range)
        if vf_cost > slack:
            return GateResult(False, REASON_MASS_COST,
                              detail=f"vf(cost)={vf_cost:.3f} exceeds "
                                     f"vf_mass={vf_mass:.3f} (+e_p)")
    if constraints.timecon_days is not None:
        if _quote_floor(points, "quoted_lead_days") > constraints.timecon_days:
            return GateResult(False, REASON_TIME_FLOOR,
                              detail="even the solid block exceeds the time "
                                     "constraint")
        vf_time, _ = constraint_to_vf(surrogate.lead_days,
                                      constraints.timecon_days,
                                      surrogate.vf_range)
        if vf_time > slack:
            return GateResult(False, REASON_MASS_TIME,
                              detail=f"vf(time)={vf_time:.3f} exceeds "
                                     f"vf_mass={vf_mass:.3f} (+e_p)")
    return GateResult(True, REASON_OK, minvf=vf_mass)


@dataclass
class NominalBounds:
    """Optimizer-facing constraint values in the nominal domain."""

    minvf: float
    masscon_kg: float | None
    costcon_nominal: float | None
    timecon_nominal_hours: float | None


def minvf_and_bounds(spec: MethodSpec, material: Material,
                     constraints: ConstraintSet, geometry: ProbeGeometry,
                     surrogate: SurrogateModel,
                     gate: GateResult) -> NominalBounds:
    """Translate quoted-domain constraints into nominal-domain bounds.

    Each probe vf links a nominal value to a quoted value, so the nominal
    bound is the nominal model evaluated at the constraint-implied vf.
    """
    if not gate.feasible or gate.minvf is None:
        raise ValueError(f"combination gated infeasible: {gate.reason}")
    cost_bound = None
    time_bound = None
    if constraints.costcon is not None:
        vf_cost, _ = constraint_to_vf(surrogate.cost, constraints.costcon,
                                      surrogate.vf_range)
        cost_bound = nominal_for_vf(vf_cost, geometry, material, spec).total_cost
    if constraints.timecon_days is not None:
        vf_time, _ = constraint_to_vf(surrogate.lead_days,
                                      constraints.timecon_days,
                                      surrogate.vf_range)
        time_bound = nominal_for_vf(vf_time, geometry, material,
                                    spec).total_time
    return NominalBounds(minvf=gate.minvf, masscon_kg=constraints.masscon_kg,
                         costcon_nominal=cost_bound,
                         timecon_nominal_hours=time_bound)
