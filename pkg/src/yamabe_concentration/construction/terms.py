"""The operators T1 to T3 applied to w0, and the first-order error H1.

With d_ij w0 = (w0'' - w0'/r) xi_i xi_j / r^2 + (w0'/r) delta_ij and the
antisymmetry of R_{mijl} in (m, i), the quartic part of T2 drops out and

    T2(w0) = (1/3) (w0'/r) xi^T S xi,    S_ml = sum_i R_{miil},
    T3(w0) =       (w0'/r) xi^T A xi,    A from (2/3) R_mssj + g~^ab R_mabj - Gamma Gamma.

Both are quadratic forms times the single profile r w0'(r) on the unit
sphere, so they split into a mode-0 part (trace / N) and a mode-2 part
(traceless tensor).
"""

from __future__ import annotations

import numpy as np

from ..bubble import BubbleFamily
from ..manifold import CurvatureData, SubmanifoldModel, gradient_squared, laplace_beltrami
from ..radial import RadialField, RadialGrid, radial_integral, sphere_cubature5
from .fields import ModeField, parse_sign


def traceless(Q) -> tuple[float, np.ndarray]:
    Q = 0.5 * (np.asarray(Q, dtype=float) + np.asarray(Q, dtype=float).T)
    N = Q.shape[0]
    tr = float(np.trace(Q))
    return tr, Q - tr / N * np.eye(N)


def t1_values(grid: RadialGrid, N: int) -> np.ndarray:
    b = BubbleFamily(N)
    r = grid.nodes
    g = b.gamma
    return r * r * b.d2w0(r) + 2.0 * (1.0 + g) * r * b.dw0(r) + g * (1.0 + g) * b.w0(r)


def quadratic_form_field(grid: RadialGrid, N: int, Q, profile) -> ModeField:
    """profile(r) * theta^T Q theta split into modes 0 and 2."""
    tr, Q0 = traceless(Q)
    return ModeField(grid, N, tr / N * profile, mode2=profile[None, :], tensors=Q0[None])


def assemble_T_terms(curvature: CurvatureData, grid: RadialGrid, N: int, node: int = 0):
    """(T1, T2, T3) at one K-node: T1 radial, T2 and T3 as mode-0 + mode-2 fields."""
    b = BubbleFamily(N)
    r = grid.nodes
    rw = r * b.dw0(r)
    S = curvature.ricci_normal()[node]
    A = curvature.drift_matrix()[node]
    T1 = RadialField(grid, t1_values(grid, N))
    T2 = quadratic_form_field(grid, N, S / 3.0, rw)
    T3 = quadratic_form_field(grid, N, A, rw)
    return T1, T2, T3


def w0p_log_w0(grid: RadialGrid, N: int) -> np.ndarray:
    """w0^p ln w0 as exp(p ln w0) ln w0 with ln w0 from the closed form."""
    b = BubbleFamily(N)
    lw = b.log_w0(grid.nodes)
    return np.exp(b.p * lw) * lw


def h1_coefficients(model: SubmanifoldModel, mu0) -> dict:
    """Slow-variable coefficients of H1 at every node (stencil derivatives of mu0)."""
    mu0 = np.asarray(mu0, dtype=float)
    c = model.curvature
    S = c.ricci_normal()
    A = c.drift_matrix()
    A = 0.5 * (A + A.transpose(0, 2, 1))
    Q = mu0[:, None, None] ** 2 * (S / 3.0 - A)
    lap_mu = laplace_beltrami(model, mu0, "stencil")
    return {
        "mu_lap_mu": mu0 * lap_mu,
        "grad_mu_sq": gradient_squared(model, mu0),
        "Q": Q,
        "h": model.h,
        "mu0": mu0,
    }


def assemble_H1(mu0, model: SubmanifoldModel, grid: RadialGrid, sign, nodes=None) -> ModeField:
    """H1 = mu0 Delta_K mu0 Z0 - |grad mu0|^2 T1 + mu0^2 (T2 - T3) + mu0^2 h w0 -+ w0^p (ln w0 - gamma ln mu0).

    The last term comes from expanding mu0^(-+ gamma eps) w0^(+-eps); its
    ln mu0 part is a multiple of w0^p and projects to zero against Z0.
    ``sign`` is +1 (supercritical, upper signs) or -1 (subcritical).
    """
    s = parse_sign(sign)
    N = model.N
    b = BubbleFamily(N)
    r = grid.nodes
    co = h1_coefficients(model, mu0)
    nodes = range(model.size) if nodes is None else list(nodes)
    w0, z0, rw = b.w0(r), b.z0(r), r * b.dw0(r)
    t1 = t1_values(grid, N)
    wlog = w0p_log_w0(grid, N)
    wp = b.w0(r) ** b.p
    f0, g2, Qs = [], [], []
    for j in nodes:
        mu = co["mu0"][j]
        tr, Q0 = traceless(co["Q"][j])
        f = (
            co["mu_lap_mu"][j] * z0
            - co["grad_mu_sq"][j] * t1
            + tr / N * rw
            + mu * mu * co["h"][j] * w0
            - s * (wlog - b.gamma * np.log(mu) * wp)
        )
        f0.append(f)
        g2.append(rw[None, :])
        Qs.append(Q0[None])
    return ModeField(grid, N, np.array(f0), mode2=np.array(g2), tensors=np.array(Qs))


def kernel_projections(field: ModeField) -> tuple[np.ndarray, np.ndarray]:
    """(int u Z0, int u d_j w0) over the truncated ball at every node.

    The angular integrals use the degree-5 sphere cubature, which is exact for
    theta_j times a mode-0, 1 or 2 field, so the parity projections come out
    at rounding level rather than through cancellation.
    """
    grid, N = field.grid, field.N
    b = BubbleFamily(N)
    r = grid.nodes
    z0, dw = b.z0(r), b.dw0(r)
    pts, wts = sphere_cubature5(N)
    p0 = np.empty(field.n_nodes)
    pj = np.empty((field.n_nodes, N))
    for j in range(field.n_nodes):
        u = field.evaluate(pts, j)  # (D, M+1)
        avg = wts @ u  # sphere average per radius
        p0[j] = radial_integral(grid, avg * z0, N)
        first = (wts[:, None] * pts).T @ u  # (N, M+1): average of theta_j u
        pj[j] = [radial_integral(grid, first[i] * dw, N) for i in range(N)]
    return p0, pj
