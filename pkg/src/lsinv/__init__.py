"""lsinv: level set inversion toolkit for the 2D inverse potential problem.

Recovers a binary inclusion in the Poisson equation from full-domain data by
evolving a level set function, and numerically cross-validates the level set
derivative of the forward map against the shape derivative constructed from
potential theory.
"""

from .elliptic import (SolverConfig, adjoint_residual, forward,
                       solve_dirichlet, solve_neumann_helmholtz)
from .errors import ConfigError, EmptyLevelSetError, SolverError
from .estimator import LevelSetInversion
from .geometry import (CurveSet, Polyline, coarea_check, curve_integral,
                       curve_length, extract_zero_level, region_area,
                       symmetric_difference_area)
from .grid import GridSpec, ScalarField, gradient, grad_norm, inner_product, norm_l2
from .harness import (ExperimentConfig, ShapeDescriptor, add_noise,
                      load_config, make_phantom, parse_config, run_experiment)
from .levelset import (EvolutionConfig, EvolutionTrace, optimality_residual,
                       reinitialize, run, step, velocity_iss, velocity_santosa)
from .projection import (SmoothingParam, apply_P, apply_P_eps, apply_Q_eps,
                         deriv_P_eps)
from .shapederiv import (BoundaryDensity, harmonic_correction,
                         level_set_derivative, shape_derivative,
                         single_layer_potential, verify_relation)

__version__ = "0.1.0"

__all__ = [
    "GridSpec", "ScalarField", "gradient", "grad_norm", "inner_product", "norm_l2",
    "SmoothingParam", "apply_P", "apply_P_eps", "apply_Q_eps", "deriv_P_eps",
    "SolverConfig", "solve_dirichlet", "forward", "adjoint_residual",
    "solve_neumann_helmholtz",
    "CurveSet", "Polyline", "extract_zero_level", "curve_length", "curve_integral",
    "coarea_check", "region_area", "symmetric_difference_area",
    "EvolutionConfig", "EvolutionTrace", "run", "step", "reinitialize",
    "velocity_iss", "velocity_santosa", "optimality_residual",
    "BoundaryDensity", "single_layer_potential", "harmonic_correction",
    "shape_derivative", "level_set_derivative", "verify_relation",
    "ExperimentConfig", "ShapeDescriptor", "make_phantom", "add_noise",
    "parse_config", "load_config", "run_experiment",
    "LevelSetInversion",
    "SolverError", "EmptyLevelSetError", "ConfigError",
]
