"""Numerical toolkit for fractional variational calculus with Caputo derivatives."""

from .expr import Lagrangian
from .grid import Grid, GridFunction, derivative_fd, make_grid, norms, sample, trapezoid_integral
from .mittag import MLParams, gamma, ml, ml_power
from .operators import (
    Order,
    OperatorKind,
    caputo_left,
    caputo_right,
    check_integration_by_parts,
    check_inverse_identities,
    rl_deriv_left,
    rl_deriv_right,
    rl_integral_left,
    rl_integral_right,
)
from .solver import IsoSolveResult, RitzConfig, abnormal_probe, alpha_sweep, iso_solve, ritz_minimize
from .varcalc import (
    Box,
    ELReport,
    IsoConstraint,
    Multipliers,
    VariationalProblem,
    augment,
    constraint_value,
    convexity_probe,
    el_residual,
    el_residual_free_endpoint,
    el_residual_restricted,
    iso_extremal_check,
    partial_fields,
    sufficiency_report,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
