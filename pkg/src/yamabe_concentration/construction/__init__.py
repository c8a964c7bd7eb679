"""Approximate solution of the scaled equation near K.

The subpackage holds the transverse fields with their linear theory, the
first-order error H1 with the reduced equations on K, and residual studies."""

from .fields import (
    SUBCRITICAL,
    SUPERCRITICAL,
    ConstructionState,
    ModeField,
    alpha_eps,
    alpha_identity_defect,
    direction_set,
    parse_sign,
)
from .linear import RadialSolver, linear_solve
from .norms import WeightedNormSpec, holder_seminorm, weighted_norm, weighted_sup
from .reduced import effective_potential, mu0_coefficients, solve_mu0, solve_mu1, solve_phi1
from .residual import ResidualResult, build_state, fit_slope, residual, scaling_study
from .terms import assemble_H1, assemble_T_terms, kernel_projections

__all__ = [
    "SUBCRITICAL", "SUPERCRITICAL", "ConstructionState", "ModeField", "alpha_eps",
    "alpha_identity_defect", "direction_set", "parse_sign", "RadialSolver", "linear_solve",
    "WeightedNormSpec", "holder_seminorm", "weighted_norm", "weighted_sup", "effective_potential",
    "mu0_coefficients", "solve_mu0", "solve_mu1", "solve_phi1", "ResidualResult", "build_state",
    "fit_slope", "residual", "scaling_study", "assemble_H1", "assemble_T_terms",
    "kernel_projections",
]
