"""Radial grids with their quadrature, and the mode-reduced radial operators.

Every transverse field in the package is a function of ``r = |xi|`` sampled on a
graded grid ``r_i = R_out * (i/M)**s``.  Differential operators are discretized
with centred differences in the uniform parameter ``t = i/M``, which keeps them
second order on the graded grid and makes them symmetric with respect to the
trapezoid weights of ``int f(r) r^(N-1) dr``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import ContractViolation, InvalidFieldError, ModeOutOfRangeError

MAX_MODE = 2


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere S^(N-1) in R^N."""
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


@dataclass(frozen=True)
class RadialGrid:
    R_out: float
    M: int = 2048
    grading: float = 2.0

    def __post_init__(self):
        if not self.R_out > 1.0:
            raise ValueError(f"R_out must exceed 1, got {self.R_out}")
        if self.M < 64:
            raise ValueError(f"need at least 64 intervals, got M={self.M}")
        if self.grading < 1.0:
            raise ValueError("grading exponent must be >= 1")

    @property
    def dt(self) -> float:
        return 1.0 / self.M

    @cached_property
    def t(self) -> np.ndarray:
        return np.arange(self.M + 1) / self.M

    @cached_property
    def nodes(self) -> np.ndarray:
        r = self.R_out * self.t**self.grading
        r[0] = 0.0
        r[-1] = self.R_out
        return r

    def r_of_t(self, t):
        return self.R_out * np.asarray(t, dtype=float) ** self.grading

    def drdt(self, t):
        s = self.grading
        t = np.asarray(t, dtype=float)
        return s * self.R_out * t ** (s - 1.0)

    def refined(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.R_out, self.M * factor, self.grading)

    def trapezoid_weights(self, N: int) -> np.ndarray:
        """Weights w_i with sum_i w_i f_i ~ int_0^R_out f(r) r^(N-1) dr."""
        w = self.nodes ** (N - 1) * self.drdt(self.t) * self.dt
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def operator_weights(self, N: int) -> np.ndarray:
        """Mass weights of the radial operators.

        Equal to the trapezoid weights except at the origin, where the exact
        volume of the half cell is used so that the mass matrix stays positive.
        """
        w = self.nodes ** (N - 1) * self.drdt(self.t) * self.dt
        w[0] = self.r_of_t(0.5 * self.dt) ** N / N
        w[-1] *= 0.5
        return w

    def mode_weights(self, N: int, ell: int) -> np.ndarray:
        """Weights appropriate for an ``ell``-mode profile (origin excluded for ell >= 1)."""
        w = self.trapezoid_weights(N) if ell else self.operator_weights(N)
        return w


@dataclass(frozen=True)
class RadialField:
    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise InvalidFieldError(
                f"field has shape {v.shape}, grid expects {self.grid.nodes.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidFieldError("field contains non-finite samples")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: RadialGrid, f) -> "RadialField":
        return cls(grid, f(grid.nodes))

    def __mul__(self, other):
        other = other.values if isinstance(other, RadialField) else other
        return RadialField(self.grid, self.values * other)

    __rmul__ = __mul__

    def __add__(self, other):
        other = other.values if isinstance(other, RadialField) else other
        return RadialField(self.grid, self.values + other)

    def __sub__(self, other):
        other = other.values if isinstance(other, RadialField) else other
        return RadialField(self.grid, self.values - other)

    def __neg__(self):
        return RadialField(self.grid, -self.values)


def fsum_dot(a: np.ndarray, b: np.ndarray) -> float:
    # Exactly rounded, hence independent of summation order and thread count.
    return math.fsum((np.asarray(a, dtype=float) * np.asarray(b, dtype=float)).tolist())


def radial_quadrature(f, N: int) -> float:
    """Integral over R^N of the radial function ``f`` (truncated at R_out)."""
    values = f.values if isinstance(f, RadialField) else None
    if values is None:
        raise InvalidFieldError("radial_quadrature expects a RadialField")
    if not np.all(np.isfinite(values)):
        raise InvalidFieldError("non-finite samples")
    return sphere_area(N) * fsum_dot(f.grid.trapezoid_weights(N), values)


def radial_integral(grid: RadialGrid, values, N: int) -> float:
    """Same as :func:`radial_quadrature` for a bare array of samples."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidFieldError("non-finite samples")
    return sphere_area(N) * fsum_dot(grid.trapezoid_weights(N), values)


def _extrapolate_origin(r, g):
    # linear in r (not in t): exact for g ~ a + b r, O(r1 r2) otherwise
    return g[1] - r[1] * (g[2] - g[1]) / (r[2] - r[1])


def derivatives(grid: RadialGrid, values) -> tuple[np.ndarray, np.ndarray]:
    """First and second r-derivatives by centred differences in t.

    f'' is obtained by differencing f' = f_t / r_t once more rather than from
    the second t-difference: for even profiles on an integer grading the latter
    carries an O(1/i^2) error at node i that does not shrink with the grid.
    One-sided second-order stencils are used at both ends and the origin value
    is extrapolated linearly in r (f'(0) = 0 is not imposed, so odd profiles
    are fine).
    """
    f = np.asarray(values, dtype=float)
    dt = grid.dt
    t = grid.t
    r = grid.nodes
    rt = grid.drdt(t)
    ft = np.gradient(f, dt, edge_order=2)
    fr = np.empty_like(f)
    fr[1:] = ft[1:] / rt[1:]
    fr[0] = _extrapolate_origin(r, fr)
    frt = np.gradient(fr, dt, edge_order=2)
    frr = np.empty_like(f)
    frr[1:] = frt[1:] / rt[1:]
    frr[0] = _extrapolate_origin(r, frr)
    return fr, frr


@dataclass(frozen=True)
class RadialOperator:
    """Discretization of ``-phi'' - (N-1)/r phi' + ell(ell+N-2)/r^2 phi + V phi``.

    Stored in symmetric form ``S`` (diag/off) together with the mass weights
    ``w``: the action on interior nodes is ``(S phi)_i / w_i``.  Interior nodes
    are ``first .. M-1`` where ``first`` is 0 for ell = 0 (phi'(0) = 0 is
    natural) and 1 for ell >= 1 (phi(0) = 0).  Node M carries the Dirichlet
    value.
    """

    grid: RadialGrid
    N: int
    ell: int
    diag: np.ndarray = field(repr=False)
    off: np.ndarray = field(repr=False)
    coupling_left: float = field(repr=False, default=0.0)
    coupling_right: float = field(repr=False, default=0.0)
    weights: np.ndarray = field(repr=False, default=None)
    potential_floor: float = 0.0

    @property
    def first(self) -> int:
        return 0 if self.ell == 0 else 1

    @property
    def interior(self) -> slice:
        return slice(self.first, self.grid.M)

    @property
    def size(self) -> int:
        return self.grid.M - self.first

    def matvec(self, values) -> np.ndarray:
        """Apply to a full sampled field (all M+1 nodes); returns interior values.

        Boundary samples enter as inhomogeneous Dirichlet data, so a sampled
        exact solution yields a residual that is pure truncation error.
        """
        v = np.asarray(values, dtype=float)
        a = self.first
        M = self.grid.M
        x = v[a:M]
        out = self.diag * x
        out[:-1] += self.off * x[1:]
        out[1:] += self.off * x[:-1]
        out[-1] += self.coupling_right * v[M]
        if a == 1:
            out[0] += self.coupling_left * v[0]
        return out / self.weights

    def symmetric_dense(self) -> np.ndarray:
        S = np.diag(self.diag)
        S += np.diag(self.off, 1)
        S += np.diag(self.off, -1)
        return S

    def banded(self, shift: float = 0.0) -> np.ndarray:
        """(l=1, u=1) banded form of ``S + shift * W`` for scipy.linalg.solve_banded."""
        n = self.size
        ab = np.zeros((3, n))
        ab[0, 1:] = self.off
        ab[1, :] = self.diag + shift * self.weights
        ab[2, :-1] = self.off
        return ab

    def solve(self, rhs, shift: float = 0.0) -> np.ndarray:
        """Solve ``(L + shift) phi = rhs`` on interior nodes with zero boundary values."""
        rhs = np.asarray(rhs, dtype=float)
        ab = self.banded(shift)
        # symmetric diagonal equilibration: row scales span many decades
        # (r^(N-1) weights), which ruins an unscaled LU near the origin
        d = 1.0 / np.sqrt(np.abs(ab[1]))
        ab[0, 1:] *= d[1:] * d[:-1]
        ab[1] *= d * d
        ab[2, :-1] *= d[:-1] * d[1:]
        w = self.weights * d
        if rhs.ndim == 1:
            return d * scipy.linalg.solve_banded((1, 1), ab, w * rhs)
        return d[:, None] * scipy.linalg.solve_banded((1, 1), ab, w[:, None] * rhs)

    def to_full(self, interior_values) -> np.ndarray:
        full = np.zeros(self.grid.M + 1)
        full[self.interior] = interior_values
        return full


def radial_operator_matrix(ell: int, N: int, potential, grid: RadialGrid) -> RadialOperator:
    """Mode-``ell`` reduction of ``-Delta + potential`` with Dirichlet data at R_out."""
    if ell not in range(MAX_MODE + 1):
        raise ModeOutOfRangeError(f"mode {ell} not in 0..{MAX_MODE}")
    V = potential.values if isinstance(potential, RadialField) else np.asarray(potential, float)
    if V.ndim == 0:
        V = np.full(grid.M + 1, float(V))
    if V.shape != grid.nodes.shape:
        raise InvalidFieldError("potential does not match the grid")
    t_half = (np.arange(grid.M) + 0.5) * grid.dt
    r_half = grid.r_of_t(t_half)
    # flux coefficient r^(N-1) / r'(t) at half nodes, divided by dt
    flux = r_half ** (N - 1) / grid.drdt(t_half) / grid.dt
    w = grid.operator_weights(N)
    r = grid.nodes
    centrifugal = np.zeros_like(r)
    centrifugal[1:] = ell * (ell + N - 2) / r[1:] ** 2
    full_diag = np.zeros(grid.M + 1)
    full_diag[:-1] += flux
    full_diag[1:] += flux
    full_diag += w * (centrifugal + V)
    a = 0 if ell == 0 else 1
    M = grid.M
    return RadialOperator(
        grid=grid,
        N=N,
        ell=ell,
        diag=full_diag[a:M].copy(),
        off=-flux[a : M - 1].copy(),
        coupling_left=-flux[0],
        coupling_right=-flux[M - 1],
        weights=w[a:M].copy(),
        potential_floor=float(np.min(V)),
    )


def sym_eig_smallest(matrix, count: int, weights=None, tol: float = 1e-12):
    """The ``count`` algebraically smallest eigenpairs of a symmetric problem.

    ``matrix`` is either a :class:`RadialOperator` (generalized problem
    ``S x = lam W x`` solved as a symmetric tridiagonal problem) or a dense
    symmetric array, optionally with positive diagonal ``weights``.
    Eigenvectors are unit-normalized in the weighted inner product.
    """
    if isinstance(matrix, RadialOperator):
        # The graded grid makes the matrix norm ~M^4 near the origin, so
        # bisection loses the low end of the spectrum; shift-invert about a
        # lower bound (spectrum >= min potential) keeps relative accuracy.
        n = matrix.size
        S = scipy.sparse.diags(
            [matrix.off, matrix.diag, matrix.off], [-1, 0, 1], format="csc"
        )
        W = scipy.sparse.diags(matrix.weights, format="csc")
        sigma = matrix.potential_floor - 1.0
        k = min(count, n - 2)
        vals, vecs = scipy.sparse.linalg.eigsh(
            S, k=k, M=W, sigma=sigma, which="LM", v0=np.ones(n), tol=0.0
        )
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        norms = np.sqrt(np.einsum("ij,i,ij->j", vecs, matrix.weights, vecs))
        vecs = vecs / norms
    else:
        A = np.asarray(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ContractViolation("eigensolver needs a square matrix")
        scale = max(np.max(np.abs(A)), 1.0)
        if np.max(np.abs(A - A.T)) > tol * scale:
            raise ContractViolation("eigensolver needs a symmetric matrix")
        if weights is None:
            vals, vecs = scipy.linalg.eigh(A, subset_by_index=(0, count - 1))
        else:
            w = np.asarray(weights, dtype=float)
            isq = 1.0 / np.sqrt(w)
            vals, vecs = scipy.linalg.eigh(
                isq[:, None] * A * isq[None, :], subset_by_index=(0, count - 1)
            )
            vecs = vecs * isq[:, None]
    return [(float(vals[j]), vecs[:, j]) for j in range(len(vals))]


def sphere_cubature5(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree-5 cubature on S^(N-1): points +-e_i and (+-e_i +-e_j)/sqrt(2).

    Weights are normalized to sum to one (surface average).  The axis weight is
    negative for N > 4; the rule is still exact for polynomials of degree <= 5.
    """
    pts = []
    for i in range(N):
        for sgn in (1.0, -1.0):
            p = np.zeros(N)
            p[i] = sgn
            pts.append(p)
    n_axis = len(pts)
    inv = 1.0 / math.sqrt(2.0)
    for i in range(N):
        for j in range(i + 1, N):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    p = np.zeros(N)
                    p[i] = si * inv
                    p[j] = sj * inv
                    pts.append(p)
    pts = np.array(pts)
    A = (4.0 - N) / (2.0 * N * (N + 2))
    B = 1.0 / (N * (N + 2))
    w = np.full(len(pts), B)
    w[:n_axis] = A
    return pts, w
