"""Manufacturing-constrained topology optimization jobs.

One job owns an implicit density field, a FEM problem, and a penalty state,
and iterates: evaluate field -> solve FEM -> manufacturing quantities ->
loss -> analytic backprop -> Adam.  The loss is compliance (normalized by
the uniform-density compliance at the expected active volume fraction) plus
squared-hinge penalties on mass, nominal cost, and nominal time; milling
adds an augmented-Lagrangian reachability term; 2-axis cutting optimizes a
2-D profile extruded along the cutting axis.

Business constraints arrive already mapped to the nominal domain by the
probe stage; quoted cost and lead time of the finished design come from a
supplier bid on the final process plan, never from nominal values alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fem, field, mesh, mfgmodel
from .mfgmodel import AXIS_INDEX, Material, MethodSpec, NominalEstimate
from .plans import build_process_plan
from .probe import ConstraintSet, NominalBounds
from .scheduling import Bid, NoBid, ProcessPlan

Array = np.ndarray

ALPHA_CAP = 100.0
GAMMA_CAP = 10.0
BETA_CAP = 10.0
FEASIBILITY_TOLERANCE = 1.01


def alpha_schedule(iteration: int) -> float:
    """Penalty coefficient: +0.5 per iteration for 100 iterations, then a
    cubic ramp (i/100)^3 per iteration, capped at 100."""
    if iteration < 0:
        raise ValueError("iteration must be non-negative")
    if iteration <= 100:
        return 0.5 * iteration
    alpha = 50.0
    for i in range(101, iteration + 1):
        alpha += (i / 100.0) ** 3
        if alpha >= ALPHA_CAP:
            return ALPHA_CAP
    return min(alpha, ALPHA_CAP)


def gamma_schedule(iteration: int) -> float:
    """Multiplier step: +0.1 per iteration until capped at 10."""
    return min(0.1 * iteration, GAMMA_CAP)


def beta_schedule(iteration: int) -> float:
    """Milling penalty coefficient: alpha scaled by 0.1, capped at 10."""
    return min(0.1 * alpha_schedule(iteration), BETA_CAP)


def initial_offset(minvf: float) -> float:
    """Logit of the expected active volume fraction; with near-zero weights
    the initial field is uniform at minvf."""
    if not 0.0 < minvf < 1.0:
        raise ValueError(f"minvf must lie strictly in (0, 1), got {minvf}")
    return math.log(minvf / (1.0 - minvf))


@dataclass
class PenaltyState:
    """Schedules and the Lagrange multiplier for one job."""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    multiplier: float = 0.0
    iteration: int = 0

    def start_iteration(self) -> None:
        self.iteration += 1
        self.alpha = alpha_schedule(self.iteration)
        self.beta = beta_schedule(self.iteration)
        self.gamma = gamma_schedule(self.iteration)

    def update_multiplier(self, milling_loss_value: float) -> None:
        if milling_loss_value < 0:
            raise ValueError("milling loss must be non-negative")
        self.multiplier += self.gamma * milling_loss_value


def _hinge(value: float, bound: float | None) -> float:
    if bound is None:
        return 0.0
    return max(0.0, value / bound - 1.0)


def grid_gradient_to_batch(grid_grad: Array) -> Array:
    """(nx, ny, nz, 3) gradient field -> (B, 3) in x-fastest batch order."""
    return np.stack([grid_grad[..., c].ravel(order="F") for c in range(3)],
                    axis=1)


def batch_gradient_to_grid(batch_grad: Array, shape: tuple[int, ...]) -> Array:
    """(B, C) gradient batch -> shape + (C,) grid in x-fastest order."""
    comps = [batch_grad[:, c].reshape(shape, order="F")
             for c in range(batch_grad.shape[1])]
    return np.stack(comps, axis=-1)


@dataclass
class LossTerms:
    """One iteration's loss value and the quantities behind it."""

    total: float
    compliance: float
    compliance_ratio: float
    mass_kg: float
    nominal_cost: float
    nominal_time_hours: float
    mass_hinge: float = 0.0
    cost_hinge: float = 0.0
    time_hinge: float = 0.0
    support_mass_kg: float = 0.0
    milling_loss: float = 0.0
    cut_area_m2: float = 0.0
    alpha: float = 0.0


@dataclass
class DesignRecord:
    """Converged metrics of one optimized design."""

    method: str
    material: str
    supplier_id: str | None
    orientations: tuple[str, ...]
    compliance: float
    mass_kg: float
    nominal_cost: float
    nominal_time_hours: float
    quoted_cost: float | None
    quoted_lead_days: float | None
    constraints: ConstraintSet
    feasible: bool
    feasibility: dict[str, bool]
    final_loss: float
    milling_loss: float
    minvf: float
    seed: int
    iteration_id: int = 0
    grid_ref: str | None = None
    mesh_ref: str | None = None


@dataclass
class DesignResult:
    record: DesignRecord
    density: Array                     # (nx, ny, nz) final masked field
    estimate: NominalEstimate
    plan: ProcessPlan
    history: list[LossTerms]
    bid: Bid | None = None


@dataclass
class JobConfig:
    iterations: int = 500
    learning_rate: float = 2.0e-3
    kernel_grid: tuple[int, int, int] = (16, 16, 16)
    kernel_range: tuple[float, float] = (-25.0, 25.0)
    weight_scale: float = 1e-4
    fem_rtol: float = 1e-6
    seed: int = 0
    quantity: int = 1
    export_mesh: bool = False
    iso_level: float = 0.5
    # SIMP penalization continuation: ramping the exponent drives the field
    # from a soft variable-thickness optimum toward a crisp 0/1 design
    penal_start: float = 1.0
    penal_step: float = 0.02
    penal_max: float = 8.0
    report_penal: float = 3.0      # analysis exponent for reported metrics


class DesignJob:
    """State of one optimization job; single-threaded, deterministic."""

    def __init__(self, domain: fem.VoxelDomain, bc: fem.BoundaryConditions,
                 material: Material, spec: MethodSpec, bounds: NominalBounds,
                 stock_volume: float | None = None,
                 config: JobConfig | None = None,
                 supplier_id: str | None = None):
        self.domain = domain
        self.bc = bc
        self.material = material
        self.spec = spec
        self.bounds = bounds
        self.config = config or JobConfig()
        self.supplier_id = supplier_id
        self.stock_volume = stock_volume if stock_volume is not None \
            else float(np.prod(domain.lengths))

        res = domain.resolution
        lengths = domain.lengths
        longest = max(lengths)
        self.norm_spacing = tuple((lengths[i] / longest) / res[i]
                                  for i in range(3))
        self.cut_axis = AXIS_INDEX[spec.orientations[0]] \
            if spec.kind == "cut2axis" else None
        self.coords = self._build_coords()

        kernel = field.build_kernel(self.config.kernel_grid,
                                    self.config.kernel_range)
        rng = np.random.default_rng(self.config.seed)
        # saturation guard: vf_mass can reach exactly 1.0 on solid-feasible
        # subtractive cases where the block itself satisfies the constraints
        self.minvf = float(np.clip(bounds.minvf, 0.005, 0.995))
        self.params = field.init_params(kernel, initial_offset(self.minvf),
                                        rng, self.config.weight_scale)
        self.adam = field.AdamState.for_params(self.params,
                                               self.config.learning_rate)
        self.fem = fem.FemProblem(domain, bc, e0=material.youngs_modulus)
        # normalize against the uniform-minvf compliance at the reporting
        # exponent so the hinge terms keep a stable relative weight across
        # the penalization continuation
        self.c0 = self._normalizer(self.config.report_penal)
        self.penalty = PenaltyState()
        self.history: list[LossTerms] = []

    def _normalizer(self, penal: float) -> float:
        rho = np.full(self.domain.num_elements, self.minvf)
        sol = self.fem.solve(rho, rtol=self.config.fem_rtol,
                             warm_start=False, penal=penal)
        return sol.compliance

    def _penal(self) -> float:
        return min(self.config.penal_max,
                   self.config.penal_start
                   + self.config.penal_step * self.penalty.iteration)

    # -- coordinates and field evaluation ------------------------------------

    def _build_coords(self) -> Array:
        full = field.grid_coordinates(self.domain.resolution,
                                      self.domain.lengths)
        if self.cut_axis is None:
            return full
        # 2-D profile: one sample per cross-section cell on the mid-plane
        grid = full.reshape(self.domain.resolution + (3,), order="F")
        slicer = [slice(None)] * 3
        slicer[self.cut_axis] = slice(0, 1)
        profile = grid[tuple(slicer)].copy()
        profile[..., self.cut_axis] = 0.0
        self._profile_shape = tuple(n for i, n in
                                    enumerate(self.domain.resolution)
                                    if i != self.cut_axis)
        return profile.reshape(-1, 3)

    def _to_grid(self, batch_values: Array) -> Array:
        """Batch vector -> (nx, ny, nz) grid, broadcasting cut profiles."""
        if self.cut_axis is None:
            return batch_values.reshape(self.domain.resolution, order="F")
        shape = list(self.domain.resolution)
        shape[self.cut_axis] = 1
        profile = batch_values.reshape(tuple(shape), order="F")
        return np.repeat(profile, self.domain.resolution[self.cut_axis],
                         axis=self.cut_axis)

    def _collapse(self, d_grid: Array) -> Array:
        """Grid gradient -> batch gradient (sum over the extruded axis)."""
        if self.cut_axis is None:
            return d_grid.ravel(order="F")
        return d_grid.sum(axis=self.cut_axis).ravel(order="F")

    # -- one iteration --------------------------------------------------------

    def step(self) -> LossTerms:
        self.penalty.start_iteration()
        terms, grads = self._evaluate(compute_gradients=True)
        self.params = field.adam_step(self.adam, self.params, grads)
        self.penalty.update_multiplier(terms.milling_loss)
        self.history.append(terms)
        return terms

    def run(self) -> tuple[LossTerms, Array]:
        for _ in range(self.config.iterations):
            self.step()
        final, _ = self._evaluate(compute_gradients=False,
                                  penal=self.config.report_penal)
        return final, self._current_density()

    def _current_density(self) -> Array:
        rho = field.forward(self.params, self.coords)
        return self.domain.apply_mask(self._to_grid(rho))

    def _evaluate(self, compute_gradients: bool, penal: float | None = None):
        cfg = self.config
        dom = self.domain
        rho_batch, cache = field.forward(self.params, self.coords, cache=True)
        rho = dom.apply_mask(self._to_grid(rho_batch))
        sol = self.fem.solve(rho.ravel(order="F"), rtol=cfg.fem_rtol,
                             penal=self._penal() if penal is None else penal)
        sens = sol.sensitivity.reshape(dom.resolution, order="F")

        v = dom.voxel_volume
        d = self.material.density
        alpha = self.penalty.alpha
        mass_kg = mfgmodel.mass(rho, v, d)
        d_rho = sens / self.c0
        d_spatial_batch = None

        if self.spec.kind == "additive":
            terms, d_rho, d_spatial_batch = self._additive_terms(
                rho, cache, sol.compliance, mass_kg, d_rho, compute_gradients)
        elif self.spec.kind == "mill3axis":
            terms, d_rho = self._milling_terms(
                rho, sol.compliance, mass_kg, d_rho, compute_gradients)
        else:
            terms, d_rho, d_spatial_batch = self._cutting_terms(
                rho, cache, sol.compliance, mass_kg, d_rho, compute_gradients)

        if not compute_gradients:
            return terms, None
        if dom.design_mask is not None:
            d_rho = np.where(dom.design_mask, d_rho, 0.0)
        grads = field.parameter_gradient(self.params, self.coords,
                                         self._collapse(d_rho),
                                         d_spatial=d_spatial_batch,
                                         cache=cache)
        return terms, grads

    def _hinge_coeffs(self, mass_kg: float, cost: float, time_hours: float):
        """Hinge values and dL/d(quantity) prefactors for the three bounds."""
        alpha = self.penalty.alpha
        b = self.bounds
        h_m = _hinge(mass_kg, b.masscon_kg)
        h_c = _hinge(cost, b.costcon_nominal)
        h_t = _hinge(time_hours, b.timecon_nominal_hours)
        dl_dmass = 2 * alpha * h_m / b.masscon_kg if b.masscon_kg else 0.0
        dl_dcost = 2 * alpha * h_c / b.costcon_nominal \
            if b.costcon_nominal else 0.0
        dl_dtime = 2 * alpha * h_t / b.timecon_nominal_hours \
            if b.timecon_nominal_hours else 0.0
        penalty = alpha * (h_m ** 2 + h_c ** 2 + h_t ** 2)
        return h_m, h_c, h_t, dl_dmass, dl_dcost, dl_dtime, penalty

    # -- per-method loss assembly ---------------------------------------------

    def _additive_terms(self, rho, cache, compliance, mass_kg, d_rho,
                        compute_gradients):
        v = self.domain.voxel_volume
        d = self.material.density
        spec = self.spec
        k = spec.support_density_ratio

        need_support = self.bounds.costcon_nominal is not None \
            or self.bounds.timecon_nominal_hours is not None
        support = None
        support_mass = 0.0
        if need_support:
            g = field.spatial_gradient(self.params, self.coords, cache)
            g_grid = batch_gradient_to_grid(g, self.domain.resolution)
            support = mfgmodel.support_volume(
                rho, g_grid, spec.orientations[0], self.norm_spacing, v,
                threshold_deg=spec.overhang_threshold_deg,
                gain=spec.overhang_gain)
            support_mass = support.volume * k * d

        est = mfgmodel.am_nominal(mass_kg, support_mass, self.material, spec)
        h_m, h_c, h_t, dl_dmass, dl_dcost, dl_dtime, penalty = \
            self._hinge_coeffs(mass_kg, est.total_cost, est.total_time)
        ratio = compliance / self.c0
        terms = LossTerms(total=ratio + penalty, compliance=compliance,
                          compliance_ratio=ratio, mass_kg=mass_kg,
                          nominal_cost=est.total_cost,
                          nominal_time_hours=est.total_time,
                          mass_hinge=h_m, cost_hinge=h_c, time_hinge=h_t,
                          support_mass_kg=support_mass,
                          alpha=self.penalty.alpha)
        if not compute_gradients:
            return terms, d_rho, None

        q = self.material.print_rate
        dcost_dm = 60.0 * spec.operation_cost_per_min / q \
            + self.material.cost_per_kg
        dtime_dm = 1.0 / q
        dl_dm_part = dl_dmass + dl_dcost * dcost_dm + dl_dtime * dtime_dm
        d_rho = d_rho + dl_dm_part * v * d

        d_spatial = None
        if support is not None:
            dl_dm_support = dl_dcost * dcost_dm + dl_dtime * dtime_dm
            dl_dvolume = dl_dm_support * k * d
            if dl_dvolume != 0.0:
                dr, dg = mfgmodel.support_volume_vjp(
                    support, dl_dvolume,
                    threshold_deg=spec.overhang_threshold_deg, voxel_volume=v)
                d_rho = d_rho + dr
                d_spatial = grid_gradient_to_batch(dg)
        return terms, d_rho, d_spatial

    def _milling_terms(self, rho, compliance, mass_kg, d_rho,
                       compute_gradients):
        v = self.domain.voxel_volume
        spec = self.spec
        part_volume = float(rho.sum()) * v
        ml = mfgmodel.milling_loss(rho, spec.orientations)
        est = mfgmodel.mill_nominal(part_volume, self.material, spec,
                                    self.stock_volume)
        h_m, h_c, h_t, dl_dmass, dl_dcost, dl_dtime, penalty = \
            self._hinge_coeffs(mass_kg, est.total_cost, est.total_time)
        ratio = compliance / self.c0
        lagrangian = self.penalty.beta * ml.value ** 2 \
            + self.penalty.multiplier * ml.value
        terms = LossTerms(total=ratio + penalty + lagrangian,
                          compliance=compliance, compliance_ratio=ratio,
                          mass_kg=mass_kg, nominal_cost=est.total_cost,
                          nominal_time_hours=est.total_time,
                          mass_hinge=h_m, cost_hinge=h_c, time_hinge=h_t,
                          milling_loss=ml.value, alpha=self.penalty.alpha)
        if not compute_gradients:
            return terms, d_rho

        d = self.material.density
        q_v = spec.removal_rate
        # removed volume shrinks as density grows
        dcost_drho = -(v / q_v) * 60.0 * spec.operation_cost_per_min
        dtime_drho = -(v / q_v)
        d_rho = d_rho + dl_dmass * v * d \
            + dl_dcost * dcost_drho + dl_dtime * dtime_drho
        dl_dml = 2 * self.penalty.beta * ml.value + self.penalty.multiplier
        if dl_dml != 0.0:
            d_rho = d_rho + mfgmodel.milling_loss_vjp(ml, dl_dml)
        return terms, d_rho

    def _cutting_terms(self, rho, cache, compliance, mass_kg, d_rho,
                       compute_gradients):
        spec = self.spec
        dom = self.domain
        axis = self.cut_axis
        inplane = [i for i in range(3) if i != axis]
        h1, h2 = dom.voxel_size[inplane[0]], dom.voxel_size[inplane[1]]
        depth = dom.voxel_size[axis] * dom.resolution[axis]
        cell_area = math.sqrt(h1 * h2) * depth

        g = field.spatial_gradient(self.params, self.coords, cache)
        g_inplane = batch_gradient_to_grid(g[:, inplane], self._profile_shape)
        area = mfgmodel.edm_area(g_inplane, cell_area)
        stock_mass = self.stock_volume * self.material.density
        est = mfgmodel.edm_nominal(area.area, self.material, spec, stock_mass)

        h_m, h_c, h_t, dl_dmass, dl_dcost, dl_dtime, penalty = \
            self._hinge_coeffs(mass_kg, est.total_cost, est.total_time)
        ratio = compliance / self.c0
        terms = LossTerms(total=ratio + penalty, compliance=compliance,
                          compliance_ratio=ratio, mass_kg=mass_kg,
                          nominal_cost=est.total_cost,
                          nominal_time_hours=est.total_time,
                          mass_hinge=h_m, cost_hinge=h_c, time_hinge=h_t,
                          cut_area_m2=area.area, alpha=self.penalty.alpha)
        if not compute_gradients:
            return terms, d_rho, None

        v = dom.voxel_volume
        d = self.material.density
        d_rho = d_rho + dl_dmass * v * d

        q = spec.edm_feed_rate
        dl_darea = dl_dcost * (60.0 * spec.operation_cost_per_min / q) \
            + dl_dtime / q
        d_spatial = None
        if dl_darea != 0.0:
            dg2 = mfgmodel.edm_area_vjp(area, dl_darea)     # profile x 2
            d_spatial = np.zeros((len(self.coords), 3))
            d_spatial[:, inplane[0]] = dg2[..., 0].ravel(order="F")
            d_spatial[:, inplane[1]] = dg2[..., 1].ravel(order="F")
        return terms, d_rho, d_spatial


def run_optimization(domain: fem.VoxelDomain, bc: fem.BoundaryConditions,
                     material: Material, spec: MethodSpec,
                     bounds: NominalBounds, constraints: ConstraintSet,
                     stock_volume: float | None = None,
                     config: JobConfig | None = None,
                     supplier_id: str | None = None,
                     quote=None, iteration_id: int = 0) -> DesignResult:
    """Run one design job end to end and assemble its record.

    ``quote`` is a callable (plan, quantity) -> Bid | NoBid used to price the
    final process plan with the supplier's scheduler; quoted values in the
    record always come from such a bid.
    """
    job = DesignJob(domain, bc, material, spec, bounds,
                    stock_volume=stock_volume, config=config,
                    supplier_id=supplier_id)
    final, density = job.run()

    if spec.kind == "additive":
        estimate = mfgmodel.am_nominal(final.mass_kg, final.support_mass_kg,
                                       material, spec)
    elif spec.kind == "mill3axis":
        part_volume = float(density.sum()) * domain.voxel_volume
        estimate = mfgmodel.mill_nominal(part_volume, material, spec,
                                         job.stock_volume)
    else:
        estimate = mfgmodel.edm_nominal(final.cut_area_m2, material, spec,
                                        job.stock_volume * material.density)
    plan = build_process_plan(f"design-{material.name}-{spec.kind}",
                              estimate, spec, material)

    bid = None
    quoted_cost = quoted_lead_days = None
    if quote is not None:
        maybe = quote(plan, job.config.quantity)
        if isinstance(maybe, Bid):
            bid = maybe
            quoted_cost = maybe.cost
            quoted_lead_days = maybe.lead_time_days

    flags = {}
    if constraints.masscon_kg is not None:
        flags["mass"] = final.mass_kg <= FEASIBILITY_TOLERANCE * constraints.masscon_kg
    if bounds.costcon_nominal is not None:
        flags["cost"] = final.nominal_cost \
            <= FEASIBILITY_TOLERANCE * bounds.costcon_nominal
    if bounds.timecon_nominal_hours is not None:
        flags["time"] = final.nominal_time_hours \
            <= FEASIBILITY_TOLERANCE * bounds.timecon_nominal_hours
    if spec.kind == "mill3axis":
        flags["milling"] = final.milling_loss < 1e-3

    record = DesignRecord(
        method=spec.kind, material=material.name, supplier_id=supplier_id,
        orientations=spec.orientations, compliance=final.compliance,
        mass_kg=final.mass_kg, nominal_cost=final.nominal_cost,
        nominal_time_hours=final.nominal_time_hours,
        quoted_cost=quoted_cost, quoted_lead_days=quoted_lead_days,
        constraints=constraints, feasible=all(flags.values()),
        feasibility=flags, final_loss=final.total,
        milling_loss=final.milling_loss, minvf=job.minvf,
        seed=job.config.seed, iteration_id=iteration_id)
    return DesignResult(record=record, density=density, estimate=estimate,
                        plan=plan, history=job.history, bid=bid)


def export_design_mesh(density: Array, voxel_size, iso_level: float = 0.5):
    return mesh.export_mesh(density, tuple(voxel_size), iso_level)
