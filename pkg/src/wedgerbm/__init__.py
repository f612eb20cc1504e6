"""Stationary reflected Brownian motion in the three-quarter plane.

The Laplace transforms of the boundary measures solve a scalar
boundary value problem on a hyperbola; :mod:`wedgerbm.bvp` evaluates them
by quadrature, :mod:`wedgerbm.inversion` turns them into densities and
:mod:`wedgerbm.simulate` provides an independent Monte Carlo check.  The
quarter plane is available through ``wedge="quarter"`` for comparison.
"""
from .bvp import (
    DomainTag,
    TransformValue,
    comparison_table,
    eval_A,
    eval_B,
    eval_L,
    index_chi,
    pole_p0,
    solve,
)
from .curve import branch_P, branch_Q, branch_points, bvp_contour, uniformize
from .gluing import glue_w, glue_w_prime
from .inversion import invert_nu1, invert_nu2, invert_pi, nu_grid, pi_grid
from .model import (
    REFERENCE,
    ModelError,
    ModelParams,
    RawParams,
    Wedge,
    kernel_K,
    load_params,
    mass_constants,
    reflection_u,
    reflection_v,
    validate_params,
)
from .simulate import SimConfig, empirical_transform, run, validation_report

__version__ = "0.1.0"

__all__ = [
    "DomainTag", "TransformValue", "comparison_table", "eval_A", "eval_B", "eval_L",
    "index_chi", "pole_p0", "solve", "branch_P", "branch_Q", "branch_points",
    "bvp_contour", "uniformize", "glue_w", "glue_w_prime", "invert_nu1", "invert_nu2",
    "invert_pi", "nu_grid", "pi_grid", "REFERENCE", "ModelError", "ModelParams",
    "RawParams", "Wedge", "kernel_K", "load_params", "mass_constants", "reflection_u",
    "reflection_v", "validate_params", "SimConfig", "empirical_transform", "run",
    "validation_report",
]
