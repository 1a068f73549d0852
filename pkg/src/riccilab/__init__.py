"""Numerical checks of curvature estimates for three-dimensional Ricci flow.

The package has four layers:

* ``curvature``: algebra of the diagonal curvature operator, pinching
  barriers, the Hamilton-Ivey quantity and two-form splitting.
* ``flow``: closed-form model flows, the reaction ODE and rescaling.
* ``estimates``: checks that turn a trajectory into pass/fail reports.
* ``metric``: finite metric spaces, Gromov-Hausdorff bounds and
  triangle comparison.

``scenario`` and ``cli`` drive all of it from INI files. ``BACKEND`` names
the kernel implementation in use ("cython" or "python").
"""
from ._backend import NAME as BACKEND
from .curvature import (OperatorSpectrum, PinchingParams, RicciSpectrum,
                        hamilton_ivey_defect, ricci_from_operator,
                        scalar_curvature)
from .estimates import KINDS, EstimateReport
from .flow import (FAMILIES, Trajectory, blow_up_time, exact_flow,
                   flow_trajectory, integrate_reaction, make_family, rescale)
from .metric import (FiniteMetricSpace, alexandrov_check,
                     glue_disjoint_union, gh_upper_bound, sample_sphere)
from .scenario import (ConfigError, builtin_config, list_builtin_scenarios,
                       parse_config, run_scenario)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "EstimateReport", "FAMILIES", "FiniteMetricSpace",
    "KINDS", "OperatorSpectrum", "PinchingParams", "RicciSpectrum", "Trajectory",
    "alexandrov_check", "blow_up_time", "builtin_config", "exact_flow",
    "flow_trajectory", "gh_upper_bound", "glue_disjoint_union",
    "hamilton_ivey_defect", "integrate_reaction", "list_builtin_scenarios",
    "make_family", "parse_config", "rescale", "ricci_from_operator",
    "run_scenario", "sample_sphere", "scalar_curvature",
]
