"""Equations on K that fix the concentration parameters.

mu0 solves a singular equation and mu1 its linearization with a source; the
normal shift Phi1 solves a Jacobi system."""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from ..constants import ProjectionConstants, compute_constants
from ..errors import DegeneracyError, PreconditionError
from ..manifold import SubmanifoldModel, jacobi_nondegeneracy, jacobi_operator, laplacian_matrix, omega_field
from ..singular import (
    ATTRACTIVE,
    REPULSIVE,
    SingularProblem,
    SingularSolution,
    solve_attractive,
    solve_repulsive,
)
from .fields import SUPERCRITICAL, parse_sign

NORMALIZED = "normalized"
RAW = "raw"


def effective_potential(model: SubmanifoldModel, omega_sign: int = 1) -> np.ndarray:
    """H(y) = h(y) - Omega(y)."""
    return model.h - omega_field(model, omega_sign)


def mu0_coefficients(model: SubmanifoldModel, sign, constants: ProjectionConstants | None = None,
                     omega_sign: int = 1, convention: str = NORMALIZED):
    """(alpha, beta, H) of the mu0 equation -Delta mu + alpha mu +- beta / mu = 0.

    ``normalized``: alpha = (|c3|/c1) H as in the normalized limit equations.
    ``raw``: alpha = (c3/c1) H, keeping the sign of c3 < 0 from the Z0
    projection.  The numerically computed ratios are used in both.
    """
    s = parse_sign(sign)
    c = constants or compute_constants(model.N)
    H = effective_potential(model, omega_sign)
    if convention == NORMALIZED:
        alpha = c.ratio_a * H
    elif convention == RAW:
        alpha = (c.c3 / c.c1) * H
    else:
        raise ValueError(f"unknown convention {convention!r}")
    beta = np.full(model.size, c.ratio_b)
    if s == SUPERCRITICAL and not np.all(alpha < 0):
        raise PreconditionError("supercritical case needs a_N H < 0 at every node")
    if s != SUPERCRITICAL and not np.all(alpha > 0):
        raise PreconditionError("subcritical case needs a_N H > 0 at every node")
    return alpha, beta, H


def solve_mu0(model: SubmanifoldModel, sign, constants: ProjectionConstants | None = None,
              omega_sign: int = 1, convention: str = NORMALIZED, tol: float = 1e-12,
              seed=None) -> tuple[np.ndarray, SingularSolution]:
    """mu0 from -Delta mu0 + a H mu0 +- b / mu0 = 0 (upper sign supercritical)."""
    s = parse_sign(sign)
    alpha, beta, _ = mu0_coefficients(model, s, constants, omega_sign, convention)
    if s == SUPERCRITICAL:
        sol = solve_repulsive(SingularProblem(model, alpha, beta, REPULSIVE), tol=tol, seed=seed)
    else:
        sol = solve_attractive(SingularProblem(model, alpha, beta, ATTRACTIVE), tol=tol)
    return sol.u, sol


def mu1_system(model: SubmanifoldModel, mu0, sign, constants: ProjectionConstants | None = None,
               omega_sign: int = 1, rhs_scale: float = 1.0):
    """Matrix and right-hand side of -Delta mu1 + g mu1 -+ (b/mu0^2) mu1 = -+ (N-2)^2 b / (16 mu0)."""
    s = parse_sign(sign)
    c = constants or compute_constants(model.N)
    mu0 = np.asarray(mu0, dtype=float)
    g = c.ratio_a * effective_potential(model, omega_sign)
    b = c.ratio_b
    lap = laplacian_matrix(model, "stencil")
    A = (-lap + scipy.sparse.diags(g - s * b / mu0**2)).tocsc()
    rhs = -s * (model.N - 2) ** 2 * b / (16.0 * mu0) * rhs_scale
    return A, rhs


def solve_mu1(model: SubmanifoldModel, mu0, sign, constants: ProjectionConstants | None = None,
              omega_sign: int = 1, rhs_scale: float = 1.0, degeneracy_tol: float = 1e-8) -> np.ndarray:
    A, rhs = mu1_system(model, mu0, sign, constants, omega_sign, rhs_scale)
    ev = scipy.linalg.eigvalsh(A.toarray())
    if np.min(np.abs(ev)) < degeneracy_tol * max(1.0, np.max(np.abs(ev))):
        raise DegeneracyError("linearization of the mu0 equation is singular")
    mu1 = scipy.sparse.linalg.spsolve(A, rhs)
    return np.asarray(mu1)


def solve_phi1(model: SubmanifoldModel, G, potential=None) -> np.ndarray:
    """Phi1 from Delta_K Phi^s - sum_m J_sm Phi^m = G^s; G has shape (nodes, N)."""
    smin, degenerate = jacobi_nondegeneracy(model, potential)
    if degenerate:
        raise PreconditionError(f"Jacobi operator is degenerate (smallest singular value {smin:.3e})")
    G = np.asarray(G, dtype=float).reshape(model.size, model.N)
    A = jacobi_operator(model, potential)
    # Delta - J = -(Jacobi operator)
    if scipy.sparse.issparse(A):
        phi = scipy.sparse.linalg.spsolve(-A.tocsc(), G.ravel())
    else:
        phi = scipy.linalg.solve(-A, G.ravel())
    return np.asarray(phi).reshape(model.size, model.N)
