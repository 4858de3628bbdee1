"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.  Heavy optimization runs (constraint satisfaction,
baseline parity) sit at the end; every tolerance here is pinned by the
criterion it implements.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest
import scipy.sparse.csgraph

from partforge import fem, field, mfgmodel, probe
from partforge.baselines import optimality_criteria_simp
from partforge.designgen import (DesignJob, JobConfig, PenaltyState,
                                 alpha_schedule, gamma_schedule)
from partforge.orchestrator import IterationStore, Orchestrator
from partforge.probe import ConstraintSet, NominalBounds
from partforge.scheduling import STN, Bid, Machine, MaterialInventory, NoBid, ShopState
from partforge.scheduling import combinatorial_auction
from tests import scenarios
from tests.conftest import (make_additive_spec, make_cutting_spec,
                            make_milling_spec)
from tests.test_scheduling import (brute_force_min_lead, exhaustive_auction,
                                   make_shop, simple_plan)

UNIT_MATERIAL = mfgmodel.Material(name="unit", density=1.0,
                                  youngs_modulus=1.0, cost_per_kg=1.0,
                                  print_rate=1.0)
ALUMINUM = mfgmodel.Material(name="Al6061", density=2700.0,
                             youngs_modulus=68.9e9, cost_per_kg=10.0,
                             print_rate=0.08)


@contextmanager
def criterion(name):
    start = time.time()
    try:
        yield
    except Exception:
        print(f"\n[criterion] {name}: FAIL ({time.time() - start:.0f}s)")
        raise
    print(f"\n[criterion] {name}: PASS ({time.time() - start:.0f}s)")


def cantilever(nx, ny, nz, h, plane_strain=False):
    domain = fem.VoxelDomain((nx, ny, nz), (h, h, h))
    fixed = []
    for iy in range(ny + 1):
        for iz in range(nz + 1):
            node = domain.node_id(0, iy, iz)
            fixed.extend((3 * node, 3 * node + 1, 3 * node + 2))
    if plane_strain:
        fixed.extend(3 * np.arange(domain.num_nodes) + 2)
    force = np.zeros(domain.num_dofs)
    tips = [domain.node_id(nx, 0, iz) for iz in range(nz + 1)]
    for node in tips:
        force[3 * node + 1] = -1.0 / len(tips)
    return domain, fem.BoundaryConditions(np.array(fixed), force)


# ---------------------------------------------------------------------------
# criterion: gradient suite

class TestGradientSuite:
    def test_end_to_end_gradients_all_families(self):
        with criterion("gradient suite (3 loss families, 50 draws each, "
                       "rel err < 1e-3, < 5 min)"):
            start = time.time()
            specs = {
                "additive": make_additive_spec("z+"),
                "mill3axis": make_milling_spec(("x+", "y-", "z+")),
                "cut2axis": make_cutting_spec("y"),
            }
            domain, bc = cantilever(6, 6, 6, 0.01)
            rng = np.random.default_rng(2024)
            worst = 0.0
            for family, spec in specs.items():
                for draw in range(50):
                    seed = int(rng.integers(0, 2 ** 31))
                    bounds = NominalBounds(minvf=0.4, masscon_kg=None,
                                           costcon_nominal=None,
                                           timecon_nominal_hours=None)
                    config = JobConfig(iterations=1, kernel_grid=(2, 2, 2),
                                       kernel_range=(-8.0, 8.0),
                                       fem_rtol=1e-12, seed=seed,
                                       weight_scale=0.3)
                    job = DesignJob(domain, bc, ALUMINUM, spec, bounds,
                                    stock_volume=None, config=config)
                    terms, _ = job._evaluate(compute_gradients=False)
                    job.bounds.masscon_kg = terms.mass_kg / 1.5
                    job.bounds.costcon_nominal = terms.nominal_cost / 1.3
                    job.bounds.timecon_nominal_hours = \
                        terms.nominal_time_hours / 1.2
                    job.penalty.alpha = 7.0
                    job.penalty.beta = 4.0
                    job.penalty.multiplier = 0.8
                    _, grads = job._evaluate(compute_gradients=True)
                    g = grads.as_vector()
                    for _ in range(2):
                        d = rng.normal(size=g.shape)
                        d /= np.linalg.norm(d)
                        h = 1e-6
                        base = job.params.trainable_vector()

                        def loss_at(vec):
                            saved = job.params
                            job.params = job.params.with_trainable_vector(vec)
                            t, _ = job._evaluate(compute_gradients=False)
                            job.params = saved
                            return t.total

                        fd = (loss_at(base + h * d) - loss_at(base - h * d)) \
                            / (2 * h)
                        analytic = float(g @ d)
                        denom = max(abs(fd), 1e-8)
                        rel = abs(analytic - fd) / denom
                        worst = max(worst, rel)
                        assert rel < 1e-3, (family, draw, rel)
            elapsed = time.time() - start
            print(f"  worst relative error {worst:.2e}, {elapsed:.0f}s")
            assert elapsed < 300.0


# ---------------------------------------------------------------------------
# criterion: schedule arithmetic

class TestScheduleArithmetic:
    def test_alpha_gamma_lambda(self):
        with criterion("schedule arithmetic (alpha/gamma/lambda)"):
            assert alpha_schedule(50) == pytest.approx(25.0)
            assert alpha_schedule(100) == pytest.approx(50.0)
            oracle = 50.0 + sum((i / 100.0) ** 3 for i in range(101, 121))
            assert alpha_schedule(120) == pytest.approx(oracle)
            assert alpha_schedule(120) == pytest.approx(77.205, abs=1e-3)
            assert alpha_schedule(500) == 100.0
            assert gamma_schedule(200) == 10.0
            state = PenaltyState()
            rng = np.random.default_rng(0)
            prev = 0.0
            for _ in range(300):
                state.start_iteration()
                state.update_multiplier(float(rng.uniform(0.0, 0.2)))
                assert state.multiplier >= prev
                prev = state.multiplier
            assert state.gamma == 10.0
            assert state.alpha == 100.0


# ---------------------------------------------------------------------------
# criterion: support / milling oracles

class TestManufacturingOracles:
    def test_support_volume_against_raycast(self):
        with criterion("support volume within 2% of ray-cast oracle "
                       "(20 staircase shapes)"):
            from tests.test_mfgmodel import make_staircase
            for seed in range(20):
                rho = make_staircase(np.random.default_rng(seed))
                h = 1.0 / 8
                grad = np.stack(np.gradient(rho, h, h, h), axis=-1)
                res = mfgmodel.support_volume(rho, grad, "z+", (h, h, h), 1.0)
                oracle = mfgmodel.support_oracle(rho, "z+").sum()
                assert oracle > 0
                assert abs(res.volume - oracle) / oracle < 0.02, seed

    def test_milling_loss_values(self):
        with criterion("milling loss: 0 on solid, 0.33110 on 3-voxel column"):
            assert mfgmodel.milling_loss(np.ones((5, 5, 5)),
                                         ("x+", "y-", "z+")).value == 0.0
            rho = np.array([1.0, 0.0, 1.0]).reshape(3, 1, 1)
            value = mfgmodel.milling_loss(rho, ("x+",)).value
            assert value == pytest.approx(0.33110, abs=1e-5)


# ---------------------------------------------------------------------------
# criterion: scheduler oracle equivalence

class TestSchedulerOracles:
    def test_quotes_and_stn_match_oracles(self):
        with criterion("scheduler = exhaustive oracle on 200 instances, "
                       "STN = all-pairs oracle, < 2 min"):
            start = time.time()
            rng = np.random.default_rng(7)
            for trial in range(200):
                n_machines = int(rng.integers(1, 4))
                machines = [
                    Machine(f"m{i}", {"mill"},
                            duration_coeff=float(rng.choice([1.0, 1.5, 2.0])))
                    for i in range(n_machines)]
                shop = make_shop(machines)
                for _ in range(int(rng.integers(0, 6))):
                    mid = f"m{int(rng.integers(0, n_machines))}"
                    s = float(rng.uniform(0, 30))
                    shop.timelines[mid].append((s, s + float(rng.uniform(1, 8))))
                plan = simple_plan(*rng.uniform(0.5, 6.0,
                                                int(rng.integers(1, 5))))
                bid = shop.quote_min_leadtime(plan, 1)
                oracle = brute_force_min_lead(shop, plan, 1)
                assert not isinstance(bid, NoBid)
                assert bid.lead_time_hours == pytest.approx(oracle, abs=1e-6)

            for trial in range(200):
                n = int(rng.integers(3, 8))
                stn = STN()
                for _ in range(n - 1):
                    stn.add_point()
                dense = np.full((n, n), np.inf)
                np.fill_diagonal(dense, 0.0)
                for _ in range(int(rng.integers(2, 12))):
                    i, j = rng.integers(0, n, 2)
                    if i == j:
                        continue
                    w = float(rng.uniform(-3, 8))
                    stn.add_edge(int(i), int(j), w)
                    dense[i, j] = min(dense[i, j], w)
                result = stn.propagate()
                try:
                    oracle = scipy.sparse.csgraph.floyd_warshall(dense)
                except scipy.sparse.csgraph.NegativeCycleError:
                    assert not result.consistent
                    continue
                assert result.consistent
                assert np.allclose(result.distance, oracle)
            elapsed = time.time() - start
            print(f"  {elapsed:.0f}s")
            assert elapsed < 120.0


# ---------------------------------------------------------------------------
# criterion: auction optimality

class TestAuctionOptimality:
    def test_matches_exhaustive_for_all_small_instances(self):
        with criterion("auction = exhaustive subset oracle, both criteria"):
            rng = np.random.default_rng(13)
            for trial in range(150):
                bids = []
                for s in "ABC"[:int(rng.integers(1, 4))]:
                    for i in range(int(rng.integers(1, 5))):
                        bids.append(Bid(s, f"o{i}",
                                        cost=float(rng.integers(1, 30)) * 25,
                                        lead_time_hours=float(rng.integers(1, 40)),
                                        quantity=int(rng.integers(5, 130))))
                demand = int(rng.integers(1, 260))
                for crit in ("min-cost", "min-suppliers-then-cost"):
                    result = combinatorial_auction(bids, demand, crit)
                    oracle = exhaustive_auction(bids, demand, crit)
                    if oracle is None:
                        assert not result.covered
                        continue
                    assert result.covered
                    best = result.best
                    if crit == "min-cost":
                        assert best.total_cost == pytest.approx(oracle.total_cost)
                    else:
                        assert len(best.parts) == len(oracle.parts)
                        assert best.total_cost == pytest.approx(oracle.total_cost)


# ---------------------------------------------------------------------------
# criterion: probe pipeline

class TestProbePipeline:
    def test_affine_round_trip(self):
        with criterion("probe round trip on affine suppliers, rel err < 1e-6"):
            geometry = probe.ProbeGeometry(design_volume=0.001,
                                           stock_volume=0.001)
            spec = make_additive_spec()
            points = probe.build_probe_plans(geometry, ALUMINUM, spec)
            for p in points:
                p.supplier_id = "affine"
                p.quoted_cost = 137.0 + 412.0 * p.vf
                p.quoted_lead_days = 3.0 + 17.0 * p.vf
            model = probe.fit_surrogate(points)
            for costcon in (200.0, 320.0, 480.0):
                vf, _ = probe.constraint_to_vf(model.cost, costcon,
                                               model.vf_range)
                assert abs(model.cost.predict(vf) - costcon) / costcon < 1e-6
            for timecon in (6.0, 12.0, 18.0):
                vf, _ = probe.constraint_to_vf(model.lead_days, timecon,
                                               model.vf_range)
                assert abs(model.lead_days.predict(vf) - timecon) / timecon \
                    < 1e-6

    @staticmethod
    def _matrix_for(spec_doc, tmp_path):
        orch = Orchestrator(IterationStore(tmp_path))
        matrix = orch.run_probe(orch.create_iteration(spec_doc))
        return {(c["method"], c["material"]): c
                for c in matrix["combinations"]}

    def test_no_cutter_landscape(self, tmp_path):
        with criterion("probe pattern: no 2-axis machines => 2-axis "
                       "infeasible; tight mass kills Ti milling"):
            combos = self._matrix_for(scenarios.bracket_no_cutters(),
                                      tmp_path / "a")
            for material in ("Al6061", "Ti6Al4V", "ABS"):
                assert combos[("additive", material)]["feasible"]
                cut = combos[("cut2axis", material)]
                assert not cut["feasible"]
                assert all(d["reason"] == "no-machine"
                           for d in cut["per_supplier"].values())
            assert combos[("mill3axis", "Al6061")]["feasible"]
            assert combos[("mill3axis", "ABS")]["feasible"]
            ti_mill = combos[("mill3axis", "Ti6Al4V")]
            assert not ti_mill["feasible"]
            assert ti_mill["per_supplier"]["supplier-a"]["reason"] \
                == "mass-vs-cost-conflict"

    def test_heavy_stock_landscape(self, tmp_path):
        with criterion("probe pattern: vf(cost) > vf_mass(1+e_p) gates "
                       "Ti subtractive routes"):
            combos = self._matrix_for(scenarios.engine_first_iteration(),
                                      tmp_path / "b")
            for material in ("Al6061", "Ti6Al4V", "ABS"):
                assert combos[("additive", material)]["feasible"]
            for method in ("mill3axis", "cut2axis"):
                assert combos[(method, "Al6061")]["feasible"]
                assert combos[(method, "ABS")]["feasible"]
                entry = combos[(method, "Ti6Al4V")]
                assert not entry["feasible"]
                reasons = {d["reason"]
                           for d in entry["per_supplier"].values()}
                assert "mass-vs-cost-conflict" in reasons

    def test_tightened_constraints_leave_additive_only(self, tmp_path):
        with criterion("probe pattern: tightened mass+cost leave only "
                       "additive Al6061 and ABS"):
            combos = self._matrix_for(scenarios.engine_second_iteration(),
                                      tmp_path / "c")
            feasible = {k for k, c in combos.items() if c["feasible"]}
            assert feasible == {("additive", "Al6061"), ("additive", "ABS")}
            ti_add = combos[("additive", "Ti6Al4V")]
            assert ti_add["per_supplier"]["supplier-b"]["reason"] == "cost-floor"

    def test_shifted_landscape_time_floor(self, tmp_path):
        with criterion("probe pattern: booked printers + 10-day limit => "
                       "additive time-floor, discounted milling survives"):
            combos = self._matrix_for(scenarios.shifted_supplier_landscape(),
                                      tmp_path / "d")
            for material in ("Al6061", "Ti6Al4V", "ABS"):
                add = combos[("additive", material)]
                assert not add["feasible"]
                reasons = {sid: d["reason"]
                           for sid, d in add["per_supplier"].items()
                           if sid != "supplier-a"}
                assert set(reasons.values()) == {"time-floor"}
                assert not combos[("cut2axis", material)]["feasible"]
            assert combos[("mill3axis", "Al6061")]["feasible"]
            assert combos[("mill3axis", "ABS")]["feasible"]
            assert not combos[("mill3axis", "Ti6Al4V")]["feasible"]


# ---------------------------------------------------------------------------
# criterion: determinism

class TestDeterminism:
    def test_rerun_from_persisted_spec_is_bitwise_identical(self, tmp_path):
        with criterion("job re-run from persisted spec + seed is bitwise "
                       "identical"):
            from tests.test_orchestrator import small_spec_doc
            orch = Orchestrator(IterationStore(tmp_path / "runs"))
            doc = small_spec_doc()
            outputs = []
            for _ in range(2):
                it = orch.create_iteration(doc)
                orch.run_probe(it)
                records = orch.run_generation(it)
                skip = {"iteration_id", "grid_ref", "mesh_ref", "bid_ref", "record_id"}
                outputs.append([{k: v for k, v in rec.items()
                                 if k not in skip} for rec in records])
            assert outputs[0] == outputs[1]


# ---------------------------------------------------------------------------
# criterion: constraint satisfaction (heavy)

def affine_supplier_bounds(spec, geometry, material, constraints,
                           cost_line=(2000.0, 8000.0), lead_line=(2.0, 20.0)):
    """Fit a surrogate from an exact affine synthetic supplier and map the
    business constraints into the nominal domain."""
    points = probe.build_probe_plans(geometry, material, spec)
    for p in points:
        p.supplier_id = "affine"
        p.quoted_cost = cost_line[0] + cost_line[1] * p.vf
        p.quoted_lead_days = lead_line[0] + lead_line[1] * p.vf
    model = probe.fit_surrogate(points)
    gate = probe.feasibility_gate(spec, material, constraints, geometry,
                                  model, points)
    assert gate.feasible, gate
    return probe.minvf_and_bounds(spec, material, constraints, geometry,
                                  model, gate)


@pytest.mark.slow
class TestConstraintSatisfaction:
    RES = (32, 16, 8)
    H = 0.2 / 32

    def _domain(self):
        return cantilever(*self.RES, self.H)

    def test_additive_mass_constraint(self):
        with criterion("cantilever 32x16x8, mass constraint active: "
                       "mass <= 1.01 bound, < 10 min"):
            start = time.time()
            domain, bc = self._domain()
            volume = domain.num_elements * domain.voxel_volume
            masscon = 0.35 * volume * ALUMINUM.density
            bounds = NominalBounds(minvf=0.35, masscon_kg=masscon,
                                   costcon_nominal=None,
                                   timecon_nominal_hours=None)
            config = JobConfig(iterations=220, kernel_grid=(8, 8, 8), seed=1)
            job = DesignJob(domain, bc, ALUMINUM, make_additive_spec("y+"),
                            bounds, config=config)
            final, _ = job.run()
            elapsed = time.time() - start
            print(f"  mass ratio {final.mass_kg / masscon:.4f}, {elapsed:.0f}s")
            assert final.mass_kg <= 1.01 * masscon
            assert elapsed < 600.0

    def test_additive_cost_constraint(self):
        with criterion("cantilever, cost constraint active: nominal cost "
                       "<= 1.01 bound, < 10 min"):
            start = time.time()
            domain, bc = self._domain()
            geometry = probe.ProbeGeometry(
                design_volume=domain.num_elements * domain.voxel_volume,
                stock_volume=float(np.prod(domain.lengths)))
            spec = make_additive_spec("y+")
            costcon = 2000.0 + 8000.0 * 0.35        # implies vf_cost = 0.35
            constraints = ConstraintSet(costcon=costcon)
            bounds = affine_supplier_bounds(spec, geometry, ALUMINUM,
                                            constraints)
            assert bounds.minvf == pytest.approx(0.35, abs=1e-9)
            config = JobConfig(iterations=220, kernel_grid=(8, 8, 8), seed=2)
            job = DesignJob(domain, bc, ALUMINUM, spec, bounds, config=config)
            final, _ = job.run()
            elapsed = time.time() - start
            ratio = final.nominal_cost / bounds.costcon_nominal
            print(f"  nominal cost ratio {ratio:.4f}, {elapsed:.0f}s")
            assert final.nominal_cost <= 1.01 * bounds.costcon_nominal
            assert elapsed < 600.0

    def test_additive_time_constraint(self):
        with criterion("cantilever, time constraint active: nominal time "
                       "<= 1.01 bound, < 10 min"):
            start = time.time()
            domain, bc = self._domain()
            geometry = probe.ProbeGeometry(
                design_volume=domain.num_elements * domain.voxel_volume,
                stock_volume=float(np.prod(domain.lengths)))
            spec = make_additive_spec("y+")
            timecon = 2.0 + 20.0 * 0.35             # implies vf_time = 0.35
            constraints = ConstraintSet(timecon_days=timecon)
            bounds = affine_supplier_bounds(spec, geometry, ALUMINUM,
                                            constraints)
            assert bounds.minvf == pytest.approx(0.35, abs=1e-9)
            config = JobConfig(iterations=220, kernel_grid=(8, 8, 8), seed=3)
            job = DesignJob(domain, bc, ALUMINUM, spec, bounds, config=config)
            final, _ = job.run()
            elapsed = time.time() - start
            ratio = final.nominal_time_hours / bounds.timecon_nominal_hours
            print(f"  nominal time ratio {ratio:.4f}, {elapsed:.0f}s")
            assert final.nominal_time_hours \
                <= 1.01 * bounds.timecon_nominal_hours
            assert elapsed < 600.0

    def test_milling_constraint_and_reachability(self):
        with criterion("cantilever milling job: mass <= 1.01 bound and "
                       "milling loss < 1e-3, < 10 min"):
            start = time.time()
            domain, bc = self._domain()
            volume = domain.num_elements * domain.voxel_volume
            masscon = 0.35 * volume * ALUMINUM.density
            bounds = NominalBounds(minvf=0.35, masscon_kg=masscon,
                                   costcon_nominal=None,
                                   timecon_nominal_hours=None)
            config = JobConfig(iterations=420, kernel_grid=(8, 8, 8), seed=2)
            job = DesignJob(domain, bc, ALUMINUM, make_milling_spec(),
                            bounds, stock_volume=float(np.prod(domain.lengths)),
                            config=config)
            final, _ = job.run()
            elapsed = time.time() - start
            print(f"  mass ratio {final.mass_kg / masscon:.4f}, "
                  f"milling loss {final.milling_loss:.2e}, {elapsed:.0f}s")
            assert final.mass_kg <= 1.01 * masscon
            assert final.milling_loss < 1e-3
            assert elapsed < 600.0


# ---------------------------------------------------------------------------
# criterion: SIMP parity (heavy)

@pytest.mark.slow
class TestSimpParity:
    def test_neural_field_matches_oc_baseline(self):
        with criterion("60x20 cantilever: compliance within 15% of the OC "
                       "baseline at matched vf, mass within 1%"):
            nx, ny = 60, 20
            domain, bc = cantilever(nx, ny, 1, 1.0 / nx, plane_strain=True)
            volume = domain.num_elements * domain.voxel_volume
            vf_target = 0.4
            masscon = vf_target * volume * UNIT_MATERIAL.density
            bounds = NominalBounds(minvf=vf_target, masscon_kg=masscon,
                                   costcon_nominal=None,
                                   timecon_nominal_hours=None)
            config = JobConfig(iterations=800, kernel_grid=(14, 14, 1),
                               kernel_range=(-40.0, 40.0), seed=5,
                               penal_step=0.01)
            job = DesignJob(domain, bc, UNIT_MATERIAL,
                            make_additive_spec("y+"), bounds, config=config)
            final, _ = job.run()
            mass_err = abs(final.mass_kg - masscon) / masscon
            vf_reached = final.mass_kg / volume
            problem = fem.FemProblem(domain, bc, e0=1.0)
            _, c_oc = optimality_criteria_simp(problem, vf_reached,
                                               iterations=60)
            ratio = final.compliance / c_oc
            print(f"  compliance ratio vs OC {ratio:.3f}, "
                  f"mass error {mass_err:.4f}")
            assert mass_err <= 0.01
            assert abs(ratio - 1.0) <= 0.15
