"""Built-in material and method-spec defaults.

Reference-machine stage constants are shop-floor estimates shipped as
configuration; supplier configs and problem specs may override any of them.
"""

from __future__ import annotations

from .mfgmodel import SQ_IN_PER_SQ_M, Material, MethodSpec

MATERIALS: dict[str, Material] = {
    "Al6061": Material(name="Al6061", density=2700.0, youngs_modulus=68.9e9,
                       cost_per_kg=10.0, print_rate=0.08, millable=True,
                       conductive=True, print_process="lpbf"),
    "Ti6Al4V": Material(name="Ti6Al4V", density=4430.0,
                        youngs_modulus=113.8e9, cost_per_kg=60.0,
                        print_rate=0.06, millable=True, conductive=True,
                        print_process="lpbf"),
    "ABS": Material(name="ABS", density=1050.0, youngs_modulus=2.3e9,
                    cost_per_kg=3.0, print_rate=0.02, millable=True,
                    conductive=False, print_process="fdm"),
}

# per-material volumetric removal rate for 3-axis milling, m^3/hr
REMOVAL_RATES: dict[str, float] = {
    "Al6061": 0.0020,
    "Ti6Al4V": 0.0002,
    "ABS": 0.0040,
}

_ADDITIVE_TIMES = {"setup": 4.0, "support_removal": 2.0, "inspection": 1.0}
_ADDITIVE_COSTS = {"setup": 400.0, "support_removal": 150.0,
                   "inspection": 100.0}
_MILL_TIMES = {"setup": 1.0, "fixture": 0.5, "polishing": 1.0,
               "inspection": 1.0}
_MILL_COSTS = {"setup": 100.0, "fixture": 50.0, "polishing": 80.0,
               "inspection": 100.0}
_CUT_TIMES = {"setup": 1.0, "polishing": 0.5, "inspection": 1.0}
_CUT_COSTS = {"setup": 100.0, "polishing": 50.0, "inspection": 100.0}


def material(name: str) -> Material:
    try:
        return MATERIALS[name]
    except KeyError:
        raise KeyError(f"unknown material {name!r}; catalog has "
                       f"{sorted(MATERIALS)}") from None


def method_spec(kind: str, orientations: tuple[str, ...],
                material_name: str | None = None,
                overrides: dict | None = None) -> MethodSpec:
    """Assemble a MethodSpec from catalog defaults plus optional overrides."""
    overrides = dict(overrides or {})
    if kind == "additive":
        base = dict(stage_times=dict(_ADDITIVE_TIMES),
                    stage_costs=dict(_ADDITIVE_COSTS),
                    operation_cost_per_min=1.0)
    elif kind == "mill3axis":
        rate = REMOVAL_RATES.get(material_name or "", 0.0015)
        base = dict(stage_times=dict(_MILL_TIMES),
                    stage_costs=dict(_MILL_COSTS),
                    operation_cost_per_min=2.0, removal_rate=rate)
    elif kind == "cut2axis":
        base = dict(stage_times=dict(_CUT_TIMES), stage_costs=dict(_CUT_COSTS),
                    operation_cost_per_min=1.5,
                    edm_feed_rate=40.0 / SQ_IN_PER_SQ_M)
    else:
        raise ValueError(f"unknown method kind {kind!r}")
    for key in ("stage_times", "stage_costs"):
        if key in overrides:
            base[key].update(overrides.pop(key))
    base.update(overrides)
    return MethodSpec(kind=kind, orientations=tuple(orientations), **base)
