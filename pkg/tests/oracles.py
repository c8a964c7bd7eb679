"""Independent reference computations used by the test-suite.

None of these share code with the package.  The constants are integrated with
mpmath on [0, inf).  The second-derivative identity is done symbolically and
the geometric bracket with explicit loops.  lambda0 comes from shooting.
"""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp


def mp_constants(N: int, dps: int = 30) -> dict:
    """c1..c4 and C0 by adaptive quadrature of the closed-form profiles."""
    with mpmath.workdps(dps):
        N_ = mpmath.mpf(N)
        g = (N_ - 2) / 2
        p = (N_ + 2) / (N_ - 2)
        alpha = (N_ * (N_ - 2)) ** ((N_ - 2) / 4)
        area = 2 * mpmath.pi ** (N_ / 2) / mpmath.gamma(N_ / 2)
        w = lambda r: alpha * (1 + r * r) ** (-g)
        dw = lambda r: -2 * g * alpha * r * (1 + r * r) ** (-g - 1)
        z = lambda r: r * dw(r) + g * w(r)

        def I(f):
            return area * mpmath.quad(lambda r: f(r) * r ** (N_ - 1), [0, 1, 10, mpmath.inf])

        out = {
            "c1": I(lambda r: z(r) ** 2),
            "c2": I(lambda r: r * dw(r) * z(r)) / N_,
            "c3": I(lambda r: w(r) * z(r)),
            "c4": N_ / (p + 1) ** 2 * I(lambda r: w(r) ** (p + 1)),
            "c4_log": I(lambda r: w(r) ** p * mpmath.log(w(r)) * z(r)),
            "C0": I(lambda r: dw(r) ** 2) / N_,
            "T1Z0": I(lambda r: z(r) * (r * r * mpmath.diff(w, r, 2) + 2 * (1 + g) * r * dw(r) + g * (1 + g) * w(r))),
        }
        return {k: float(v) for k, v in out.items()}


def sympy_second_derivative_identity(N: int) -> tuple[float, float]:
    """(int xi_l d2_sl w0 d_s w0, -C0/2) in closed form for l != s."""
    r = sp.symbols("r", positive=True)
    g = sp.Rational(N - 2, 2)
    alpha = sp.Integer(N * (N - 2)) ** sp.Rational(N - 2, 4)
    w = alpha * (1 + r**2) ** (-g)
    area = 2 * sp.pi ** sp.Rational(N, 2) / sp.gamma(sp.Rational(N, 2))
    dw, d2w = sp.diff(w, r), sp.diff(w, r, 2)
    lhs = area * sp.integrate(sp.simplify((r * d2w * dw - dw**2) * r ** (N - 1)), (r, 0, sp.oo)) / (N * (N + 2))
    C0 = area * sp.integrate(sp.simplify(dw**2 * r ** (N - 1)), (r, 0, sp.oo)) / N
    return float(lhs), float(-C0 / 2)


def bracket_loops(Rn, Rm, g, Gamma) -> sp.Rational:
    """(1/3) sum R_ijij + sum g^ab R_iaib + sum Gamma^b_ai Gamma^a_bi with R_iaib = -R_mixed[i,a,b,i].

    Exact rational arithmetic with explicit index loops.
    """
    N = Rn.shape[0]
    k = g.shape[0]
    G = sp.Matrix(k, k, lambda a, b: sp.nsimplify(g[a, b]))
    Gi = G.inv() if k else G
    total = sp.Rational(0)
    for i, j in itertools.product(range(N), repeat=2):
        total += sp.nsimplify(Rn[i, j, i, j]) / 3
    for i in range(N):
        for a, b in itertools.product(range(k), repeat=2):
            total += -Gi[a, b] * sp.nsimplify(Rm[i, a, b, i])
            total += sp.nsimplify(Gamma[a, b, i]) * sp.nsimplify(Gamma[b, a, i])
    return total


def shooting_lambda0(N: int, r_max: float = 12.0, lo: float = 5.0, hi: float = 12.0) -> float:
    """Positive eigenvalue of Delta phi + N(N+2)/(1+r^2)^2 phi = lambda phi by bisection on the tail sign."""

    def tail(lam):
        def rhs(r, y):
            V = N * (N + 2) / (1 + r * r) ** 2
            return [y[1], -(N - 1) / r * y[1] - (V - lam) * y[0]]

        r0 = 1e-6
        # regular series start phi = 1 + c r^2 with c = (lam - V(0)) / (2N)
        c = (lam - N * (N + 2)) / (2 * N)
        sol = solve_ivp(rhs, (r0, r_max), [1 + c * r0 * r0, 2 * c * r0], rtol=1e-12, atol=1e-14)
        return sol.y[0, -1]

    f_lo, f_hi = tail(lo), tail(hi)
    if f_lo * f_hi > 0:
        raise RuntimeError("shooting bracket does not change sign")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f_mid = tail(mid)
        if f_mid * f_lo > 0:
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def circle_stencil_eigs(n: int, L: float) -> np.ndarray:
    h = L / n
    return np.sort([(2 / h) ** 2 * math.sin(math.pi * j / n) ** 2 for j in range(n)])


def bump_rhs(N: int, support: float = 3.0):
    """h(r) = (1 - (r/s)^2)_+^3 (1 + k r^2) with k chosen so that int h Z0 = 0.

    The support lies inside the smallest truncated domain used in the
    estimate checks, so the same h is used for every eps.
    """
    from scipy.integrate import quad

    g = (N - 2) / 2
    alpha = (N * (N - 2)) ** ((N - 2) / 4)
    z0 = lambda r: alpha * g * (1 - r * r) * (1 + r * r) ** (-g - 1)  # noqa: E731
    bump = lambda r: max(1 - (r / support) ** 2, 0.0) ** 3  # noqa: E731
    i0 = quad(lambda r: bump(r) * z0(r) * r ** (N - 1), 0, support, epsabs=0, epsrel=1e-13)[0]
    i2 = quad(lambda r: r * r * bump(r) * z0(r) * r ** (N - 1), 0, support, epsabs=0, epsrel=1e-13)[0]
    k = -i0 / i2

    def h(r):
        r = np.asarray(r, dtype=float)
        return np.clip(1 - (r / support) ** 2, 0, None) ** 3 * (1 + k * r * r)

    return h
