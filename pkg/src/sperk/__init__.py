"""Spatially partitioned embedded Runge-Kutta (SPERK) time stepping for 1-D conservation laws."""

__version__ = "0.1.0"

from .tableaux import (  # noqa: E402
    EmbeddedTableau,
    WeightSet,
    builtin_pair,
    order_residuals,
    ssp_coefficient,
    stability_measures,
    stability_polynomial,
)
from .spatial import GridField, InterfaceFluxes, weno5_interface_flux  # noqa: E402
from .masks import Mask, MaskStrategy, node_to_interface, widen_mask  # noqa: E402
from .integrators import (  # noqa: E402
    RunResult,
    StepSpec,
    advance,
    rk_stages,
    step_blended,
    step_equation_partitioned,
    step_flux_partitioned,
    step_godunov_split,
    step_single,
)
from .problems import SemiDiscreteProblem, make_problem  # noqa: E402
from .experiments import run_experiment  # noqa: E402

__all__ = [
    "EmbeddedTableau", "WeightSet", "builtin_pair", "order_residuals", "ssp_coefficient",
    "stability_measures", "stability_polynomial", "GridField", "InterfaceFluxes", "weno5_interface_flux",
    "Mask", "MaskStrategy", "node_to_interface", "widen_mask", "RunResult", "StepSpec", "advance",
    "rk_stages", "step_blended", "step_equation_partitioned", "step_flux_partitioned",
    "step_godunov_split", "step_single", "SemiDiscreteProblem", "make_problem", "run_experiment",
]
