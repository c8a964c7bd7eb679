"""The standard bubble w0 with its kernel functions, and the positive
eigenpair of the linearized operator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import mpmath
import numpy as np

from .errors import SpectralFailure
from .radial import (
    RadialField,
    RadialGrid,
    radial_integral,
    radial_operator_matrix,
    sym_eig_smallest,
)

DEFAULT_N = 7


def alpha_N(N: int) -> float:
    """(N(N-2))^((N-2)/4), evaluated with 40 significant digits then rounded."""
    with mpmath.workdps(40):
        return float(mpmath.power(mpmath.mpf(N * (N - 2)), mpmath.mpf(N - 2) / 4))


@dataclass(frozen=True)
class BubbleFamily:
    N: int = DEFAULT_N

    def __post_init__(self):
        if self.N < 5:
            raise ValueError(f"transverse dimension must be >= 5, got {self.N}")

    @cached_property
    def alpha(self) -> float:
        return alpha_N(self.N)

    @property
    def p(self) -> float:
        return (self.N + 2) / (self.N - 2)

    @property
    def gamma(self) -> float:
        return (self.N - 2) / 2

    # closed-form profile and derivatives of w0(r) = alpha (1+r^2)^(-gamma)
    def w0(self, r):
        r = np.asarray(r, dtype=float)
        return self.alpha * (1.0 + r * r) ** (-self.gamma)

    def log_w0(self, r):
        r = np.asarray(r, dtype=float)
        # ln(1 + r^2) = 2 ln r + ln(1 + r^-2) once r^2 would overflow
        big = r > 1e150
        with np.errstate(over="ignore", divide="ignore"):
            l1 = np.where(big, 2.0 * np.log(np.where(big, r, 1.0)) + np.log1p(np.where(big, r, 1.0) ** -2.0),
                          np.log1p(np.where(big, 0.0, r) ** 2))
        return math.log(self.alpha) - self.gamma * l1

    def dw0(self, r):
        r = np.asarray(r, dtype=float)
        g = self.gamma
        return -2.0 * g * self.alpha * r * (1.0 + r * r) ** (-g - 1.0)

    def d2w0(self, r):
        r = np.asarray(r, dtype=float)
        g = self.gamma
        q = 1.0 + r * r
        return -2.0 * g * self.alpha * q ** (-g - 2.0) * (q - 2.0 * (g + 1.0) * r * r)

    def z0(self, r):
        """Dilation kernel r w0' + gamma w0 = gamma alpha (1 - r^2)(1 + r^2)^(-N/2)."""
        r = np.asarray(r, dtype=float)
        return self.gamma * self.alpha * (1.0 - r * r) * (1.0 + r * r) ** (-self.N / 2)

    def potential(self, r):
        """p w0^(p-1) = N(N+2) / (1+r^2)^2."""
        r = np.asarray(r, dtype=float)
        return self.N * (self.N + 2) / (1.0 + r * r) ** 2


def eval_bubble(delta: float, center, x, N: int = DEFAULT_N) -> float:
    if not delta > 0:
        raise ValueError(f"bubble scale must be positive, got {delta}")
    center = np.atleast_1d(np.asarray(center, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d2 = float(np.sum((x - center) ** 2))
    return alpha_N(N) * (delta / (delta * delta + d2)) ** ((N - 2) / 2)


def sample_w0(grid: RadialGrid, N: int = DEFAULT_N) -> RadialField:
    return RadialField(grid, BubbleFamily(N).w0(grid.nodes))


@dataclass(frozen=True)
class KernelSet:
    Z0: RadialField
    Z_radial: RadialField
    Zeig: RadialField | None = None
    lambda0: float | None = None


def sample_kernels(grid: RadialGrid, N: int = DEFAULT_N) -> KernelSet:
    b = BubbleFamily(N)
    r = grid.nodes
    return KernelSet(Z0=RadialField(grid, b.z0(r)), Z_radial=RadialField(grid, b.dw0(r)))


def linearized_operator(grid: RadialGrid, N: int, ell: int):
    """Mode-ell reduction of -Delta - p w0^(p-1)."""
    b = BubbleFamily(N)
    return radial_operator_matrix(ell, N, -b.potential(grid.nodes), grid)


def eigenpair_grid(N: int = DEFAULT_N, M: int = 8192) -> RadialGrid:
    """Eigenfunction grid: exp(-sqrt(lambda0) r) is below 1e-17 at r = 15,
    while a short box keeps the core resolved."""
    return RadialGrid(R_out=15.0, M=M, grading=2.0)


def compute_eigenpair(grid: RadialGrid, N: int = DEFAULT_N) -> tuple[float, RadialField]:
    """Positive eigenvalue lambda0 of Delta phi + p w0^(p-1) phi = lambda0 phi.

    On the Dirichlet-truncated mode-0 problem this is minus the lowest
    eigenvalue of -Delta - p w0^(p-1).  The eigenfunction is normalized to
    unit L^2(R^N) norm and made positive at the origin.
    """
    op = linearized_operator(grid, N, 0)
    (lam, vec), = sym_eig_smallest(op, 1)
    lambda0 = -lam
    if not lambda0 > 0:
        raise SpectralFailure(f"no positive eigenvalue found (lowest {lam:.3e})")
    full = op.to_full(vec)
    if full[0] < 0:
        full = -full
    norm2 = radial_integral(grid, full**2, N)
    full /= math.sqrt(norm2)
    return lambda0, RadialField(grid, full)


def tail_slope(Z: RadialField, N: int = DEFAULT_N, window=(4.0, 10.0)) -> float:
    """Least-squares slope of ln(r^((N-1)/2) Z(r)) over ``window``.

    Mode-0 solutions of Delta phi = lambda0 phi decay like
    r^(-(N-1)/2) exp(-sqrt(lambda0) r), so the slope approximates -sqrt(lambda0).
    The window stays clear of the core and of the Dirichlet end.
    """
    r = Z.grid.nodes
    sel = (r >= window[0]) & (r <= window[1]) & (Z.values > 0)
    if np.count_nonzero(sel) < 3:
        raise ValueError("tail window holds fewer than three positive samples")
    y = np.log(Z.values[sel]) + 0.5 * (N - 1) * np.log(r[sel])
    slope, _ = np.polyfit(r[sel], y, 1)
    return float(slope)


def kernel_residuals(grid: RadialGrid, N: int = DEFAULT_N) -> dict:
    """Discrete residuals of the bubble equation and of the two kernel relations.

    ``w0``: -Delta w0 - w0^p;  ``Z0``: mode-0 linearized operator on Z0;
    ``dw0``: mode-1 linearized operator on w0'.  Each is measured in the
    discrete L^2(R^N) norm built from the operator's mass weights (the sup norm
    is dominated by the O(1) stencil error at the first few nodes).
    """
    b = BubbleFamily(N)
    r = grid.nodes
    lap0 = radial_operator_matrix(0, N, 0.0, grid)
    out = {}
    res = lap0.matvec(b.w0(r)) - (b.w0(r) ** b.p)[lap0.interior]
    out["w0"] = math.sqrt(float(np.sum(lap0.weights * res * res)))
    for ell, name, prof in ((0, "Z0", b.z0(r)), (1, "dw0", b.dw0(r))):
        op = linearized_operator(grid, N, ell)
        res = op.matvec(prof)
        out[name] = math.sqrt(float(np.sum(op.weights * res * res)))
    return out


def kernel_convergence_orders(N: int = DEFAULT_N, R_out: float = 20.0, M: int = 1024) -> dict:
    """Observed orders log2(res(M) / res(2M)) for the three kernel residuals."""
    coarse = kernel_residuals(RadialGrid(R_out, M, 2.0), N)
    fine = kernel_residuals(RadialGrid(R_out, 2 * M, 2.0), N)
    return {k: math.log2(coarse[k] / fine[k]) for k in coarse}
