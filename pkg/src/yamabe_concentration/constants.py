"""Projection constants c1..c4, C0 and the integral identities used in the
first step of the construction.

All integrals are over R^N.  Angular factors are reduced by hand so that every
quadrature is one dimensional:

    int xi_j d_j w0 Z0            = (1/N)      int r w0' Z0
    int |d_l w0|^2                = (1/N)      int w0'^2
    int xi_l d2_sl w0 d_s w0      = 1/(N(N+2)) int (r w0'' w0' - w0'^2)     (l != s)

the last one because d2_sl w0 = (w0'' - w0'/r) xi_s xi_l / r^2 for l != s and
the sphere average of xi_l^2 xi_s^2 / r^4 is 1/(N(N+2)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bubble import BubbleFamily
from .errors import ComputationFailed
from .radial import RadialGrid, radial_integral


def default_constants_grid() -> RadialGrid:
    # Integrands decay like r^(3-N) at worst (N=7: r^-4), so R_out = 1e4
    # leaves a relative tail of ~1e-12; grading 4 keeps the core resolved.
    return RadialGrid(R_out=1.0e4, M=4096, grading=4.0)


def a_closed(N: int) -> float:
    return 4.0 * (N - 1) / ((N - 2) * (N + 2))


def b_closed(N: int) -> float:
    return (N - 2) ** 2 * (N - 4) / (2.0 * (N + 2))


@dataclass(frozen=True)
class ProjectionConstants:
    N: int
    c1: float
    c2: float
    c3: float
    c4: float
    C0: float

    @property
    def a_N(self) -> float:
        return a_closed(self.N)

    @property
    def b_N(self) -> float:
        return b_closed(self.N)

    @property
    def ratio_a(self) -> float:
        """|c3|/c1, the numerical counterpart of a_N."""
        return abs(self.c3) / self.c1

    @property
    def ratio_b(self) -> float:
        """c4/c1, the numerical counterpart of b_N."""
        return self.c4 / self.c1

    @property
    def ratio_c2(self) -> float:
        return self.c2 / self.c1

    def relative_errors(self) -> dict:
        return {
            "a": self.ratio_a / self.a_N - 1.0,
            "b": self.ratio_b / self.b_N - 1.0,
            "c2": self.ratio_c2 * (self.N + 2) / 3.0 - 1.0,
        }


def compute_constants(N: int = 7, grid: RadialGrid | None = None) -> ProjectionConstants:
    grid = grid or default_constants_grid()
    b = BubbleFamily(N)
    r = grid.nodes
    w0, dw, z0 = b.w0(r), b.dw0(r), b.z0(r)

    c1 = radial_integral(grid, z0 * z0, N)
    c2 = radial_integral(grid, r * dw * z0, N) / N
    c3 = radial_integral(grid, w0 * z0, N)
    c4 = N / (b.p + 1.0) ** 2 * radial_integral(grid, w0 ** (b.p + 1.0), N)
    C0 = radial_integral(grid, dw * dw, N) / N

    out = ProjectionConstants(N, c1, c2, c3, c4, C0)
    bad = [name for name, v in (("c1", c1), ("c2", c2), ("c4", c4), ("C0", C0)) if not v > 0]
    if not c3 < 0:
        bad.append("c3")
    if bad:
        raise ComputationFailed(f"sign pattern violated for {bad} at N={N}: {out}")
    return out


def t1_profile(r, N: int) -> np.ndarray:
    """T1(w0) = r^2 w0'' + 2(1+gamma) r w0' + gamma(1+gamma) w0 (radial)."""
    b = BubbleFamily(N)
    g = b.gamma
    r = np.asarray(r, dtype=float)
    return r * r * b.d2w0(r) + 2.0 * (1.0 + g) * r * b.dw0(r) + g * (1.0 + g) * b.w0(r)


def verify_T1_orthogonality(N: int = 7, grid: RadialGrid | None = None, integrand=None) -> float:
    """int Z0 T1(w0).  ``integrand`` replaces T1 (e.g. w0 for a negative control)."""
    grid = grid or default_constants_grid()
    r = grid.nodes
    b = BubbleFamily(N)
    f = t1_profile(r, N) if integrand is None else np.asarray(integrand(r), dtype=float)
    return radial_integral(grid, b.z0(r) * f, N)


def verify_second_derivative_identity(N: int = 7, grid: RadialGrid | None = None) -> float:
    """int xi_l d2_sl w0 d_s w0 for fixed l != s; should equal -C0/2."""
    grid = grid or default_constants_grid()
    r = grid.nodes
    b = BubbleFamily(N)
    dw = b.dw0(r)
    return radial_integral(grid, r * b.d2w0(r) * dw - dw * dw, N) / (N * (N + 2))
