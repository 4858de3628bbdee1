"""Bridge from nominal estimates to schedulable process plans.

Maps each manufacturing stage to a task with the machine capability it
needs.  Capability strings let a material pick its machine class: metals
print on LPBF machines, plastics on FDM; conductive stock may use any 2-axis
cutter while non-conductive stock requires a water-jet.
"""

from __future__ import annotations

from .mfgmodel import Material, MethodSpec, NominalEstimate
from .scheduling import ProcessPlan, Task


def print_capability(material: Material) -> str:
    return f"print-{material.print_process}"


def cut_capability(material: Material) -> str:
    # any 2-axis cutter handles conductive stock; water-jet is the only
    # machine class that also cuts non-conductive materials
    return "cut2" if material.conductive else "cut2-waterjet"


def build_process_plan(name: str, estimate: NominalEstimate,
                       spec: MethodSpec, material: Material) -> ProcessPlan:
    """Translate a per-part nominal estimate into scheduler tasks.

    Operation stages scale with the number of parts in a lot; setup-like
    stages run once per lot.  Material consumption rides on the first task.
    """
    times, costs = estimate.time_hours, estimate.cost
    if estimate.method == "additive":
        printed_kg = estimate.part_mass + estimate.support_mass
        cap = print_capability(material)
        tasks = (
            Task("setup", cap, times["setup"], costs["setup"], scale="lot"),
            Task("print", cap, times["print"], costs["print"],
                 material_kg=printed_kg, scale="part"),
            Task("support-removal", "finishing", times["support_removal"],
                 costs["support_removal"], scale="lot"),
            Task("inspection", "inspect", times["inspection"],
                 costs["inspection"], scale="lot"),
        )
    elif estimate.method == "mill3axis":
        n = max(len(spec.orientations), 1)
        stock_kg = costs["material"] / material.cost_per_kg \
            if material.cost_per_kg else 0.0
        tasks = [Task("setup", "mill3", times["setup"], costs["setup"],
                      material_kg=stock_kg, scale="lot")]
        for i, orientation in enumerate(spec.orientations):
            tasks.append(Task(f"fixture-{orientation}", "mill3",
                              times["fixture"] / n, costs["fixture"] / n,
                              scale="lot"))
            tasks.append(Task(f"machining-{orientation}", "mill3",
                              times["machining"] / n, costs["machining"] / n,
                              scale="part"))
        tasks.append(Task("polishing", "finishing", times["polishing"],
                          costs["polishing"], scale="lot"))
        tasks.append(Task("inspection", "inspect", times["inspection"],
                          costs["inspection"], scale="lot"))
        tasks = tuple(tasks)
    elif estimate.method == "cut2axis":
        stock_kg = costs["material"] / material.cost_per_kg \
            if material.cost_per_kg else 0.0
        cap = cut_capability(material)
        tasks = (
            Task("setup", cap, times["setup"], costs["setup"],
                 material_kg=stock_kg, scale="lot"),
            Task("cutting", cap, times["cutting"], costs["cutting"],
                 scale="part"),
            Task("polishing", "finishing", times["polishing"],
                 costs["polishing"], scale="lot"),
            Task("inspection", "inspect", times["inspection"],
                 costs["inspection"], scale="lot"),
        )
    else:
        raise ValueError(f"unknown method {estimate.method!r}")
    return ProcessPlan(name=name, material=material.name, tasks=tasks)
