"""Mode-by-mode solver for L(phi) = -Delta phi - p w0^(p-1) phi + eps a phi = h
on the truncated ball, with phi orthogonal to the kernel directions.

Mode 0 is constrained against Z0, every mode-1 component against w0', and
mode 2 has no kernel.  Constraints are imposed with a Lagrange multiplier:

    L phi = h + c K,   int phi K = 0.

The multiplier comes from the Schur complement, c = -<L^-1 h, K> / <L^-1 K, K>,
so only banded solves are needed.  (A bordered sparse factorization is
hopeless here: the mass weights r^(N-1) span ~40 decades on graded grids.)
"""

from __future__ import annotations

import math

import numpy as np

from ..bubble import BubbleFamily
from ..errors import PreconditionError, SolverFailure
from ..radial import RadialGrid, fsum_dot, radial_operator_matrix
from .fields import ModeField, direction_set
from .norms import WeightedNormSpec, weighted_sup

ORTHO_TOL = 1e-2


def _schur_data(op, K):
    LK = op.solve(K)
    den = fsum_dot(op.weights * LK, K)
    if not np.isfinite(den) or den == 0.0:
        raise SolverFailure("constrained system is singular: kernel direction is annihilated")
    return LK, den


def orthogonality_defect(op, h_interior, K) -> float:
    w = op.weights
    num = abs(fsum_dot(w * h_interior, K))
    den = math.sqrt(fsum_dot(w * h_interior, h_interior) * fsum_dot(w * K, K))
    return num / den if den > 0 else 0.0


class RadialSolver:
    """Cached factorizations of the mode operators for one value of eps * a."""

    def __init__(self, grid: RadialGrid, N: int, shift: float):
        b = BubbleFamily(N)
        V = -b.potential(grid.nodes) + shift
        self.grid, self.N = grid, N
        self.ops = {ell: radial_operator_matrix(ell, N, V, grid) for ell in (0, 1, 2)}
        r = grid.nodes
        self.kernels = {0: b.z0(r)[self.ops[0].interior], 1: b.dw0(r)[self.ops[1].interior]}
        self._lu = {}

    def _factor(self, ell):
        if ell not in self._lu:
            self._lu[ell] = _schur_data(self.ops[ell], self.kernels[ell])
        return self._lu[ell]

    def solve_constrained(self, ell, h_full, ortho_tol):
        op = self.ops[ell]
        K = self.kernels[ell]
        hi = np.asarray(h_full, dtype=float)[op.interior]
        defect = orthogonality_defect(op, hi, K)
        if defect > ortho_tol:
            raise PreconditionError(
                f"right-hand side not orthogonal to the mode-{ell} kernel (relative defect {defect:.3e})"
            )
        LK, den = self._factor(ell)
        Lh = op.solve(hi)
        c = -fsum_dot(op.weights * Lh, K) / den
        phi = Lh + c * LK
        if not np.all(np.isfinite(phi)):
            raise SolverFailure("constrained solve produced non-finite values")
        w = op.weights
        cres = abs(fsum_dot(w * phi, K)) / max(math.sqrt(fsum_dot(w * phi, phi) * fsum_dot(w * K, K)), 1e-300)
        return op.to_full(phi), c, defect, cres

    def solve_free(self, ell, h_full):
        op = self.ops[ell]
        phi = op.solve(np.asarray(h_full, dtype=float)[op.interior])
        return op.to_full(phi)


def linear_solve(a, h: ModeField, spec: WeightedNormSpec, ortho_tol: float = ORTHO_TOL,
                 check_weight: bool = True):
    """Solve L(phi) = h node by node.  Returns (phi, info).

    ``a`` is a positive field on K (one value per node of ``h``).  ``info``
    holds the multipliers, orthogonality defects, constraint residuals and the
    ratio ||phi||_{eps, r-2} / ||h||_{eps, r} over the direction set.
    """
    grid, N = h.grid, h.N
    if check_weight:
        spec.check_dimension(N)
    a = np.broadcast_to(np.asarray(a, dtype=float), (h.n_nodes,))
    if not np.all(a > 0):
        raise PreconditionError("the coefficient a must be positive at every node")
    solvers = {}
    f0, f1, f2 = [], [], []
    mult, defects, cres = [], [], []
    for j in range(h.n_nodes):
        key = float(a[j])
        if key not in solvers:
            solvers[key] = RadialSolver(grid, N, spec.eps * key)
        sv = solvers[key]
        phi0, c0, d0, r0 = sv.solve_constrained(0, h.mode0[j], ortho_tol)
        f0.append(phi0)
        mult.append([c0])
        defects.append([d0])
        cres.append([r0])
        if h.mode1 is not None:
            comps = []
            for i in range(N):
                if np.any(h.mode1[j, i]):
                    phi1, c1, d1, r1 = sv.solve_constrained(1, h.mode1[j, i], ortho_tol)
                    mult[-1].append(c1)
                    defects[-1].append(d1)
                    cres[-1].append(r1)
                else:
                    phi1 = np.zeros(grid.M + 1)
                comps.append(phi1)
            f1.append(comps)
        if h.mode2 is not None:
            f2.append([sv.solve_free(2, g) for g in h.mode2[j]])
    phi = ModeField(
        grid,
        N,
        np.array(f0),
        None if h.mode1 is None else np.array(f1),
        None if h.mode2 is None else np.array(f2),
        h.tensors,
    )
    dirs = direction_set(N, h.tensors)
    num = weighted_sup(grid, phi.direction_samples(dirs), spec.r - 2)
    den = weighted_sup(grid, h.direction_samples(dirs), spec.r)
    info = {
        "multipliers": mult,
        "orthogonality_defect": float(np.max([max(d) for d in defects])),
        "constraint_residual": float(np.max([max(c) for c in cres])),
        "ratio": num / den if den > 0 else 0.0,
        "phi_norm": num,
        "h_norm": den,
    }
    return phi, info
