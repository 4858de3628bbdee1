"""Differentiable manufacturing quantities and nominal time/cost models.

Covers the three process families: additive (print time from part plus
support mass), 3-axis milling (machined volume and a differentiable
reachability loss), and 2-axis cutting (cut area from the density gradient).
All quantity functions expose vector-Jacobian products so the design
optimizer can backpropagate through them; nominal estimates carry a per-stage
breakdown whose sum is the total by construction.

Voxel arrays are shaped (nx, ny, nz); gradients are expressed in the
normalized field coordinates (longest domain dimension spanning [-0.5, 0.5]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}
ORIENTATIONS = ("x+", "x-", "y+", "y-", "z+", "z-")
SQ_IN_PER_SQ_M = 1550.0031000062
METERS_PER_INCH = 0.0254


def logistic(x: Array | float) -> Array | float:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -500.0, 500.0)))


@dataclass(frozen=True)
class Material:
    """Stock/print material with the physical constants the models need."""

    name: str
    density: float            # kg/m^3
    youngs_modulus: float     # Pa
    cost_per_kg: float        # currency/kg
    print_rate: float         # kg/hr deposited by the reference printer
    millable: bool = True
    conductive: bool = True   # gates EDM; non-conductive needs a water-jet class
    print_process: str = "lpbf"   # lpbf (metals) | fdm (plastics)

    def __post_init__(self):
        for name in ("density", "youngs_modulus", "cost_per_kg", "print_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive for {self.name}")
        if self.print_process not in ("lpbf", "fdm"):
            raise ValueError(f"unknown print process {self.print_process!r}")


@dataclass(frozen=True)
class MethodSpec:
    """Per-method machine rates, fixed-stage times (hours) and costs."""

    kind: str                             # additive | mill3axis | cut2axis
    orientations: tuple[str, ...]         # build dir / milling dirs / cut axis
    stage_times: dict[str, float]         # fixed stages only, hours
    stage_costs: dict[str, float]         # fixed stages only, currency
    operation_cost_per_min: float = 0.0   # print/machining/cutting cost per minute
    removal_rate: float = 0.0             # m^3/hr, milling
    edm_feed_rate: float = 0.0            # m^2/hr, 2-axis cutting
    overhang_threshold_deg: float = 45.0
    overhang_gain: float = 20.0
    support_density_ratio: float = 0.3    # support mass = ratio * material density

    def __post_init__(self):
        if self.kind not in ("additive", "mill3axis", "cut2axis"):
            raise ValueError(f"unknown method kind {self.kind!r}")
        if self.kind == "additive":
            if len(self.orientations) != 1 or self.orientations[0] not in ORIENTATIONS:
                raise ValueError("additive jobs use exactly one build orientation")
        elif self.kind == "mill3axis":
            if not 1 <= len(self.orientations) <= 6 \
                    or any(o not in ORIENTATIONS for o in self.orientations):
                raise ValueError("milling uses between 1 and 6 principal directions")
        else:
            if len(self.orientations) != 1 or self.orientations[0] not in AXIS_INDEX:
                raise ValueError("cutting uses a single axis of x, y, z")


@dataclass
class NominalEstimate:
    """Supplier-independent parametric time/cost with stage breakdown."""

    method: str
    time_hours: dict[str, float]
    cost: dict[str, float]
    part_mass: float = 0.0           # kg
    support_mass: float = 0.0        # kg, additive only
    machined_volume: float = 0.0     # m^3, milling only
    cut_area: float = 0.0            # m^2, cutting only

    @property
    def total_time(self) -> float:
        return sum(self.time_hours.values())

    @property
    def total_cost(self) -> float:
        return sum(self.cost.values())


# ---------------------------------------------------------------------------
# scalar quantities

def volume_fraction(rho: Array) -> float:
    rho = np.asarray(rho)
    if rho.size == 0:
        raise ValueError("empty density grid")
    return float(rho.mean())


def mass(rho: Array, voxel_volume: float, density: float) -> float:
    """Part mass = sum(rho) * voxel volume * material density."""
    if voxel_volume <= 0 or density <= 0:
        raise ValueError("voxel volume and material density must be positive")
    return float(np.asarray(rho).sum() * voxel_volume * density)


def mass_gradient(voxel_volume: float, density: float) -> float:
    """d(mass)/d(rho_i), identical for every voxel."""
    return voxel_volume * density


# ---------------------------------------------------------------------------
# additive: overhang + support structure

def _parse_direction(direction: str) -> tuple[int, float]:
    if len(direction) != 2 or direction[0] not in AXIS_INDEX \
            or direction[1] not in "+-":
        raise ValueError(f"direction must look like 'z+', got {direction!r}")
    return AXIS_INDEX[direction[0]], 1.0 if direction[1] == "+" else -1.0


@dataclass
class SupportResult:
    """Forward state of the overhang/support pipeline, kept for the VJP."""

    overhang: Array          # P
    cumulative: Array        # Pcs, summed from the top of the build downward
    heaviside: Array         # Ph
    support_field: Array     # Pv = Ph * (1 - rho)
    support_cells: float     # sum(Pv), dimensionless
    volume: float            # m^3
    build_dir: str
    active: Array            # mask where the overhang hinge is active
    grad_norm: Array         # |g| per voxel
    unit_grad: Array         # g / max(|g|, eps)
    rho: Array
    gain_spacing: float      # gain * voxel spacing along the build axis


def overhang_field(rho: Array, grad: Array, build_dir: str,
                   spacing: tuple[float, float, float],
                   threshold_deg: float = 45.0, gain: float = 20.0,
                   eps: float = 1e-12):
    """Differentiable overhang intensity per voxel.

    A voxel contributes where the density gradient leans into the build
    direction more steeply than the printable angle:

        P = gain * h * max(0, g . b_hat - cos(threshold) * |g|)

    with h the voxel spacing along the build axis.  The raw gradient
    magnitude makes a sharp interface integrate to a fixed budget across its
    transition zone, so a single overhanging face pushes the downstream
    cumulative sum past the support threshold regardless of how wide the
    interface is.
    """
    axis, sign = _parse_direction(build_dir)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != rho.shape + (3,):
        raise ValueError("gradient field must be shaped like rho x 3")
    cos_t = float(np.cos(np.deg2rad(threshold_deg)))
    norm = np.sqrt((grad * grad).sum(axis=-1))
    dotted = sign * grad[..., axis]
    raw = dotted - cos_t * norm
    active = raw > 0.0
    gh = gain * spacing[axis]
    p = gh * np.where(active, raw, 0.0)
    unit = grad / np.maximum(norm, eps)[..., None]
    return p, active, norm, unit, gh


def support_pipeline(p: Array, rho: Array, build_dir: str,
                     voxel_volume: float) -> tuple[Array, Array, Array, float]:
    """Pcs -> Ph -> Pv stages given an overhang field P.

    Pcs accumulates P from the top of the build volume downward (inclusive),
    Ph = logistic(10 (Pcs - 2)), and Pv = Ph * (1 - rho) marks void voxels
    that must be filled by support material.
    """
    axis, sign = _parse_direction(build_dir)
    if sign > 0:
        pcs = np.flip(np.cumsum(np.flip(p, axis=axis), axis=axis), axis=axis)
    else:
        pcs = np.cumsum(p, axis=axis)
    ph = logistic(10.0 * (pcs - 2.0))
    pv = ph * (1.0 - rho)
    return pcs, ph, pv, float(pv.sum() * voxel_volume)


def support_volume(rho: Array, grad: Array, build_dir: str,
                   spacing: tuple[float, float, float], voxel_volume: float,
                   threshold_deg: float = 45.0, gain: float = 20.0) -> SupportResult:
    """Full differentiable support-structure volume for one build direction."""
    rho = np.asarray(rho, dtype=np.float64)
    p, active, norm, unit, gh = overhang_field(rho, grad, build_dir, spacing,
                                               threshold_deg, gain)
    pcs, ph, pv, volume = support_pipeline(p, rho, build_dir, voxel_volume)
    return SupportResult(overhang=p, cumulative=pcs, heaviside=ph,
                         support_field=pv, support_cells=float(pv.sum()),
                         volume=volume, build_dir=build_dir, active=active,
                         grad_norm=norm, unit_grad=unit, rho=rho,
                         gain_spacing=gh)


def support_volume_vjp(result: SupportResult, upstream: float,
                       threshold_deg: float = 45.0,
                       voxel_volume: float = 1.0) -> tuple[Array, Array]:
    """Backpropagate d(loss)/d(volume) to (d_rho, d_grad)."""
    axis, sign = _parse_direction(result.build_dir)
    cos_t = float(np.cos(np.deg2rad(threshold_deg)))
    d_pv = np.full_like(result.heaviside, upstream * voxel_volume)
    d_rho = -result.heaviside * d_pv
    d_ph = (1.0 - result.rho) * d_pv
    d_pcs = d_ph * 10.0 * result.heaviside * (1.0 - result.heaviside)
    # adjoint of the top-down cumulative sum is the bottom-up one
    if sign > 0:
        d_p = np.cumsum(d_pcs, axis=axis)
    else:
        d_p = np.flip(np.cumsum(np.flip(d_pcs, axis=axis), axis=axis), axis=axis)
    scale = result.gain_spacing * np.where(result.active, d_p, 0.0)
    d_grad = np.zeros(result.rho.shape + (3,))
    d_grad[..., axis] = sign * scale
    d_grad -= (cos_t * scale)[..., None] * result.unit_grad
    return d_rho, d_grad


def support_oracle(rho_binary: Array, build_dir: str) -> Array:
    """Ray-cast reference: void voxels lying beneath solid material.

    Walks each column along the build axis from the top; every void voxel with
    solid material somewhere above it (in the build direction) needs support.
    Used by tests as the independent check of the differentiable pipeline.
    """
    axis, sign = _parse_direction(build_dir)
    solid = np.asarray(rho_binary) > 0.5
    moved = np.moveaxis(solid, axis, -1)
    if sign < 0:
        moved = moved[..., ::-1]
    seen_above = np.flip(np.cumsum(np.flip(moved, axis=-1), axis=-1), axis=-1) \
        - moved.astype(np.int64)
    needs = (~moved) & (seen_above > 0)
    if sign < 0:
        needs = needs[..., ::-1]
    return np.moveaxis(needs, -1, axis)


# ---------------------------------------------------------------------------
# additive nominal time / cost

def am_nominal(part_mass: float, support_mass: float, material: Material,
               spec: MethodSpec) -> NominalEstimate:
    """Print time from total deposited mass plus fixed stages."""
    if material.print_rate <= 0:
        raise ValueError("print rate must be positive")
    t_print = (part_mass + support_mass) / material.print_rate
    times = {
        "setup": spec.stage_times.get("setup", 0.0),
        "print": t_print,
        "support_removal": spec.stage_times.get("support_removal", 0.0),
        "inspection": spec.stage_times.get("inspection", 0.0),
    }
    costs = {
        "setup": spec.stage_costs.get("setup", 0.0),
        "print": t_print * 60.0 * spec.operation_cost_per_min,
        "material": (part_mass + support_mass) * material.cost_per_kg,
        "support_removal": spec.stage_costs.get("support_removal", 0.0),
        "inspection": spec.stage_costs.get("inspection", 0.0),
    }
    return NominalEstimate(method="additive", time_hours=times, cost=costs,
                           part_mass=part_mass, support_mass=support_mass)


# ---------------------------------------------------------------------------
# 3-axis milling

@dataclass
class MillingLossResult:
    value: float
    per_direction: list[Array]       # hs * (1 - rho) per direction
    heavisides: list[Array]
    directions: tuple[str, ...]
    rho: Array


def _directional_cumsum(arr: Array, direction: str) -> Array:
    axis, sign = _parse_direction(direction)
    if sign > 0:
        return np.cumsum(arr, axis=axis)
    return np.flip(np.cumsum(np.flip(arr, axis=axis), axis=axis), axis=axis)


def _directional_cumsum_adjoint(arr: Array, direction: str) -> Array:
    axis, sign = _parse_direction(direction)
    if sign > 0:
        return np.flip(np.cumsum(np.flip(arr, axis=axis), axis=axis), axis=axis)
    return np.cumsum(arr, axis=axis)


def milling_loss(rho: Array, directions: tuple[str, ...]) -> MillingLossResult:
    """Mean unreachable-void intensity, intersected over tool directions.

    Per direction: a running density sum marks everything behind the first
    surface the tool meets; a sharp logistic turns that into a 0/1 shadow
    mask whose product with (1 - rho) penalizes only enclosed void.  Taking
    the elementwise product across directions keeps a voxel penalized only
    when no direction can reach it.
    """
    if not directions:
        raise ValueError("at least one milling direction is required")
    rho = np.asarray(rho, dtype=np.float64)
    fields, heavisides = [], []
    for d in directions:
        cs = _directional_cumsum(rho, d)
        hs = logistic(10.0 * (cs - 0.5))
        heavisides.append(hs)
        fields.append(hs * (1.0 - rho))
    total = fields[0].copy()
    for f in fields[1:]:
        total = total * f
    return MillingLossResult(value=float(total.mean()), per_direction=fields,
                             heavisides=heavisides,
                             directions=tuple(directions), rho=rho)


def milling_loss_vjp(result: MillingLossResult, upstream: float) -> Array:
    """d(loss)/d(rho) via leave-one-out products over the direction fields."""
    n = len(result.per_direction)
    size = result.rho.size
    # prefix/suffix products avoid dividing by per-direction zeros
    prefix = [np.ones_like(result.rho)]
    for f in result.per_direction[:-1]:
        prefix.append(prefix[-1] * f)
    suffix = [np.ones_like(result.rho)]
    for f in reversed(result.per_direction[1:]):
        suffix.append(suffix[-1] * f)
    suffix.reverse()

    d_rho = np.zeros_like(result.rho)
    base = upstream / size
    for i, d in enumerate(result.directions):
        others = prefix[i] * suffix[i]
        d_field = base * others
        hs = result.heavisides[i]
        d_rho += d_field * (-hs)
        d_cs = d_field * (1.0 - result.rho) * 10.0 * hs * (1.0 - hs)
        d_rho += _directional_cumsum_adjoint(d_cs, d)
    return d_rho


def milling_reachability_oracle(rho_binary: Array,
                                directions: tuple[str, ...]) -> Array:
    """Discrete shadow test: void voxels unreachable from every direction."""
    solid = np.asarray(rho_binary) > 0.5
    blocked = np.ones(solid.shape, dtype=bool)
    for d in directions:
        cs = _directional_cumsum(solid.astype(np.int64), d)
        blocked &= cs > 0
    return blocked & ~solid


def mill_nominal(part_volume: float, material: Material, spec: MethodSpec,
                 stock_volume: float) -> NominalEstimate:
    """Machining time from removed volume; fixture stage repeats per direction."""
    v_removed = stock_volume - part_volume
    if v_removed < -1e-12 * max(stock_volume, 1.0):
        raise ValueError("stock volume must cover the part volume")
    v_removed = max(v_removed, 0.0)
    if spec.removal_rate <= 0:
        raise ValueError("removal rate must be positive for milling")
    n = len(spec.orientations)
    t_machine = v_removed / spec.removal_rate
    times = {
        "setup": spec.stage_times.get("setup", 0.0),
        "fixture": n * spec.stage_times.get("fixture", 0.0),
        "machining": t_machine,
        "polishing": spec.stage_times.get("polishing", 0.0),
        "inspection": spec.stage_times.get("inspection", 0.0),
    }
    stock_mass = stock_volume * material.density
    costs = {
        "setup": spec.stage_costs.get("setup", 0.0),
        "fixture": n * spec.stage_costs.get("fixture", 0.0),
        "machining": t_machine * 60.0 * spec.operation_cost_per_min,
        "material": stock_mass * material.cost_per_kg,
        "polishing": spec.stage_costs.get("polishing", 0.0),
        "inspection": spec.stage_costs.get("inspection", 0.0),
    }
    return NominalEstimate(method="mill3axis", time_hours=times, cost=costs,
                           part_mass=part_volume * material.density,
                           machined_volume=v_removed)


# ---------------------------------------------------------------------------
# 2-axis cutting

def heaviside_area_filter(x: Array | float) -> Array | float:
    """Surface detector on gradient magnitude: 1/(1 + exp(-x + 5))."""
    return logistic(np.asarray(x, dtype=np.float64) - 5.0)


@dataclass
class EdmAreaResult:
    area: float                  # m^2
    grad_norm: Array
    unit_grad: Array
    cell_area: float


def edm_area(grad: Array, cell_area: float, eps: float = 1e-12) -> EdmAreaResult:
    """Differentiable cut area from the density gradient magnitude.

    Each cell contributes H_a(|g|) of a half face patch; the half accounts
    for a sharp interface activating the detector on both flanking cells.
    """
    grad = np.asarray(grad, dtype=np.float64)
    norm = np.sqrt((grad * grad).sum(axis=-1))
    unit = grad / np.maximum(norm, eps)[..., None]
    area = float(heaviside_area_filter(norm).sum() * 0.5 * cell_area)
    return EdmAreaResult(area=area, grad_norm=norm, unit_grad=unit,
                         cell_area=cell_area)


def edm_area_vjp(result: EdmAreaResult, upstream: float) -> Array:
    h = heaviside_area_filter(result.grad_norm)
    d_norm = upstream * 0.5 * result.cell_area * h * (1.0 - h)
    return d_norm[..., None] * result.unit_grad


def edm_nominal(cut_area: float, material: Material, spec: MethodSpec,
                stock_mass: float) -> NominalEstimate:
    """Cutting time from area over feed rate plus fixed stages."""
    if cut_area < 0:
        raise ValueError("cut area must be non-negative")
    if spec.edm_feed_rate <= 0:
        raise ValueError("EDM feed rate must be positive")
    t_cut = cut_area / spec.edm_feed_rate
    times = {
        "setup": spec.stage_times.get("setup", 0.0),
        "cutting": t_cut,
        "polishing": spec.stage_times.get("polishing", 0.0),
        "inspection": spec.stage_times.get("inspection", 0.0),
    }
    costs = {
        "setup": spec.stage_costs.get("setup", 0.0),
        "cutting": t_cut * 60.0 * spec.operation_cost_per_min,
        "material": stock_mass * material.cost_per_kg,
        "polishing": spec.stage_costs.get("polishing", 0.0),
        "inspection": spec.stage_costs.get("inspection", 0.0),
    }
    return NominalEstimate(method="cut2axis", time_hours=times, cost=costs,
                           part_mass=stock_mass, cut_area=cut_area)
