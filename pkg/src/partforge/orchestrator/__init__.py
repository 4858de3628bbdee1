"""Pipeline, persistence, supplier clients, and service surfaces."""

from .persist import IterationStore, read_density_grid, write_density_grid
from .pipeline import Orchestrator, build_design_dataset
from .specs import (ProblemSpec, SpecError, boundary_conditions_from_spec,
                    domain_from_spec, parse_problem_spec,
                    probe_geometry_from_spec)
from .suppliers import (HttpSupplier, InProcessSupplier, make_supplier,
                        shop_from_config)

__all__ = [
    "IterationStore", "read_density_grid", "write_density_grid",
    "Orchestrator", "build_design_dataset",
    "ProblemSpec", "SpecError", "boundary_conditions_from_spec",
    "domain_from_spec", "parse_problem_spec", "probe_geometry_from_spec",
    "HttpSupplier", "InProcessSupplier", "make_supplier", "shop_from_config",
]
