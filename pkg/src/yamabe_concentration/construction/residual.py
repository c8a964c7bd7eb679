"""Residual of the scaled equation for the approximations v0 = w0 and
v1 = w0 + w1, and the eps-scaling study.

The residual is

    Xi(v) = -eps mu^2 Delta_K v - Delta_xi v - (A0 + A1 + A2) v + eps mu^2 h v
            - mu^(-+ gamma eps) |v|^(p +- eps - 1) v

with mu = mu0 and Phi = 0 (the remainder B(v) is not assembled).  It is
sampled on rays r * theta for a finite direction set at every K-node.
Along a ray, the curvature operators reduce to profile expressions without
division by r.  For u = f(r) + sum_P g_P(r) theta^T Q_P theta:

    P:D^2 u  = theta^T S theta [r f' + sum_P q_P (r g_P' - 2 g_P)] + 2 sum_P g_P R(theta, theta):Q_P
    xi^T A grad u = theta^T A theta [r f' + sum_P q_P (r g_P' - 2 g_P)] + 2 sum_P g_P theta^T A Q_P theta

where P_ij = sum R_mijl xi_m xi_l, q_P = theta^T Q_P theta and S_ml = sum_i R_miil.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..bubble import BubbleFamily
from ..constants import ProjectionConstants, compute_constants
from ..errors import StateError
from ..manifold import SubmanifoldModel, laplace_beltrami, laplacian_matrix, gradient_squared
from ..radial import RadialGrid, derivatives, radial_operator_matrix
from .fields import ConstructionState, ModeField, alpha_eps, direction_set, parse_sign
from .linear import linear_solve
from .norms import WeightedNormSpec, weight
from .reduced import solve_mu0
from .terms import assemble_H1

DEFAULT_EPS = (1e-2, 5e-3, 2e-3, 1e-3)
THREADS_ENV = "YAMABE_THREADS"


def construction_grid(eps: float, eta: float = 1.0, M: int = 2048, grading: float = 2.0) -> RadialGrid:
    return RadialGrid(R_out=eta / math.sqrt(eps), M=M, grading=grading)


def build_state(model: SubmanifoldModel, eps: float, sign, version: str = "v1", mu0=None,
                constants: ProjectionConstants | None = None, omega_sign: int = 1,
                eta: float = 1.0, M: int = 2048, grading: float = 2.0, r_weight: float = 5.0) -> ConstructionState:
    """mu0 (if not supplied), alpha_eps and, for v1, the first correction w1."""
    s = parse_sign(sign)
    constants = constants or compute_constants(model.N)
    if mu0 is None:
        mu0, _ = solve_mu0(model, s, constants, omega_sign)
    grid = construction_grid(eps, eta, M, grading)
    diag = {}
    w1 = None
    if version == "v1":
        H1 = assemble_H1(mu0, model, grid, s)
        spec = WeightedNormSpec(r=r_weight, eps=eps)
        a = np.asarray(mu0) ** 2 * model.h
        w1, info = linear_solve(a, H1.scaled(-eps), spec)
        diag.update({k: info[k] for k in ("orthogonality_defect", "constraint_residual", "ratio")})
    elif version != "v0":
        raise ValueError(f"unknown version {version!r}")
    return ConstructionState(
        eps=eps, sign=s, N=model.N, grid=grid, mu0=np.asarray(mu0), w1=w1,
        alpha_eps=alpha_eps(eps, model.N, s), diagnostics=diag,
    )


@dataclass
class _Profiles:
    """Derivative data of one node's modes 0 and 2."""

    f: np.ndarray
    fr: np.ndarray
    frr: np.ndarray
    g: np.ndarray
    gr: np.ndarray
    grr: np.ndarray
    Q: np.ndarray


def _profiles(field: ModeField, j: int) -> _Profiles:
    grid = field.grid
    f = field.mode0[j]
    fr, frr = derivatives(grid, f)
    if field.mode2 is not None:
        g = field.mode2[j]
        d = [derivatives(grid, gp) for gp in g]
        gr = np.array([x[0] for x in d])
        grr = np.array([x[1] for x in d])
        Q = field.tensors[j]
    else:
        M1 = grid.M + 1
        g = gr = grr = np.zeros((0, M1))
        Q = np.zeros((0, field.N, field.N))
    return _Profiles(f, fr, frr, g, gr, grr, Q)


def _ray_values(pr: _Profiles, dirs):
    q = np.einsum("di,pij,dj->dp", dirs, pr.Q, dirs)
    return pr.f[None, :] + q @ pr.g


@dataclass(frozen=True)
class ResidualResult:
    version: str
    eps: float
    norm: float
    node_norms: np.ndarray = field(repr=False)
    radial_profile: np.ndarray = field(repr=False)
    term_norms: dict = field(default_factory=dict)


def _node_residual(j, state, model, v1, co, dirs, lap_rows, grid_ops, w_exp):
    eps, s, N = state.eps, state.sign, state.N
    grid = state.grid
    b = BubbleFamily(N)
    r = grid.nodes
    g_ = b.gamma
    mu = co["mu0"][j]
    interior = slice(0, grid.M)

    w0, dw0 = b.w0(r), b.dw0(r)
    rw = r * dw0
    tS = np.einsum("di,ij,dj->d", dirs, co["S"][j], dirs)
    tA = np.einsum("di,ij,dj->d", dirs, co["A"][j], dirs)

    # w0 contributions (closed form)
    terms = {}
    lap_w0 = -(w0 ** b.p)
    A0_w0 = -eps * mu * co["lap_mu"][j] * b.z0(r) + eps * co["grad_mu_sq"][j] * (
        r * r * b.d2w0(r) + 2 * (1 + g_) * rw + g_ * (1 + g_) * w0
    )
    A1_w0 = -(eps / 3.0) * mu * mu * rw[None, :] * tS[:, None]
    A2_w0 = eps * mu * mu * rw[None, :] * tA[:, None]
    v = np.broadcast_to(w0, (len(dirs), len(r))).copy()
    lap_v = np.broadcast_to(lap_w0, v.shape).copy()
    A0 = np.broadcast_to(A0_w0, v.shape).copy()
    A1 = A1_w0
    A2 = A2_w0
    lapK = np.zeros_like(v)
    cross = np.zeros_like(v)

    if v1 is not None:
        pr = _profiles(v1, j)
        q = np.einsum("di,pij,dj->dp", dirs, pr.Q, dirs)
        u = pr.f[None, :] + q @ pr.g
        ur = r * pr.fr
        u_rr = r * r * pr.frr
        rg = (r[None, :] * pr.gr - 2 * pr.g) if len(pr.g) else np.zeros((0, len(r)))
        rur = ur[None, :] + q @ (r[None, :] * pr.gr)
        r2urr = u_rr[None, :] + q @ (r[None, :] ** 2 * pr.grr)
        base = ur[None, :] + q @ rg
        RQ = np.einsum("mijl,dm,dl,pij->dp", co["R"][j], dirs, dirs, pr.Q)
        AQ = np.einsum("di,ij,pjk,dk->dp", dirs, co["A"][j], pr.Q, dirs)
        PD2 = tS[:, None] * base + 2 * RQ @ pr.g
        AD = tA[:, None] * base + 2 * AQ @ pr.g
        # transverse Laplacian with the solver's own stencil (operators are -Delta)
        lap_u = np.broadcast_to(-grid_ops[0].to_full(grid_ops[0].matvec(pr.f)), u.shape).copy()
        for P in range(len(pr.g)):
            m2 = grid_ops[2].to_full(grid_ops[2].matvec(pr.g[P]))
            lap_u -= q[:, P : P + 1] * m2[None, :]
        v = v + u
        lap_v = lap_v + lap_u
        A0 = A0 - eps * mu * co["lap_mu"][j] * (g_ * u + rur) + eps * co["grad_mu_sq"][j] * (
            r2urr + 2 * (1 + g_) * rur + g_ * (1 + g_) * u
        )
        A1 = A1 - (eps / 3.0) * mu * mu * PD2
        A2 = A2 + eps * mu * mu * AD
        # slow-variable terms from neighbouring nodes
        idx, wts = lap_rows[j]
        for k, wk in zip(idx, wts):
            lapK += wk * (u if k == j else _ray_values(_profiles(v1, k), dirs))
        lapK *= eps * mu * mu
        if np.any(co["grad_mu"][j]):
            # -2 eps^2 mu g^ab [D(d_a v)[d_b mu xi] + gamma d_a mu d_b v], d_a on z = sqrt(eps) d_y
            for a_, (kp, km, hy) in enumerate(co["neighbors"][j]):
                du = (_ray_values(_profiles(v1, kp), dirs) - _ray_values(_profiles(v1, km), dirs)) / (2 * hy)
                dur = np.gradient(du, axis=1) / np.maximum(np.gradient(r), 1e-300) * r[None, :]
                cross += co["grad_mu"][j][a_] * (dur + g_ * du)
            cross *= -2.0 * eps**2.5 * mu
    A0 = A0 + cross

    expo = b.p + s * eps
    nonlin = mu ** (-s * g_ * eps) * np.abs(v) ** (expo - 1.0) * v
    hv = eps * mu * mu * co["h"][j] * v
    xi = -lapK - lap_v - A0 - A1 - A2 + hv - nonlin
    wts = weight(r, w_exp)[None, :]
    xi_w = np.abs(xi[:, interior]) * wts[:, interior]
    terms = {
        "eps_H1_block": float(np.max(np.abs(-A0_w0 - A1_w0 - A2_w0 + eps * mu * mu * co["h"][j] * w0
                                              - (mu ** (-s * g_ * eps) * w0**expo - w0**b.p))[:, interior]
                                     * wts[:, interior])),
    }
    return float(np.max(xi_w)), np.max(xi_w, axis=0), terms


def _coefficients(model: SubmanifoldModel, mu0):
    c = model.curvature
    A = c.drift_matrix()
    lap = laplacian_matrix(model, "stencil").tocsr()
    rows = [(lap.indices[lap.indptr[j] : lap.indptr[j + 1]], lap.data[lap.indptr[j] : lap.indptr[j + 1]])
            for j in range(model.size)]
    mu0 = np.asarray(mu0, dtype=float)
    # centred first derivatives and neighbour indices per tangent direction
    shape = (model.n,) * model.k
    ids = np.arange(model.size).reshape(shape)
    grad = np.zeros((model.size, model.k))
    neighbors = [[] for _ in range(model.size)]
    for ax, hy in enumerate(model.spacing):
        kp = np.roll(ids, -1, axis=ax).ravel()
        km = np.roll(ids, 1, axis=ax).ravel()
        grad[:, ax] = (mu0[kp] - mu0[km]) / (2 * hy)
        for j in range(model.size):
            neighbors[j].append((kp[j], km[j], hy))
    return {
        "mu0": mu0,
        "lap_mu": laplace_beltrami(model, mu0, "stencil"),
        "grad_mu_sq": gradient_squared(model, mu0),
        "grad_mu": grad,
        "neighbors": neighbors,
        "h": model.h,
        "S": c.ricci_normal(),
        "A": A,
        "R": c.R_normal,
    }, rows


def residual(state: ConstructionState, model: SubmanifoldModel, version: str = "v1",
             eps: float | None = None, nodes=None, threads: int | None = None) -> ResidualResult:
    """Weighted norm ||Xi_eps(v)||_{eps, N-2} of v0 or v1 and per-node/radial maxima."""
    if eps is not None and eps != state.eps:
        raise StateError(f"state assembled for eps = {state.eps}, asked for {eps}")
    if version == "v1" and state.w1 is None:
        raise StateError("v1 residual requested but w1 has not been solved")
    if version not in ("v0", "v1"):
        raise ValueError(f"unknown version {version!r}")
    v1 = state.w1 if version == "v1" else None
    co, rows = _coefficients(model, state.mu0)
    tensors = None if v1 is None else v1.tensors
    dirs = direction_set(state.N, tensors if tensors is not None else _mode2_tensors(model, state.mu0))
    ops = {ell: radial_operator_matrix(ell, state.N, 0.0, state.grid) for ell in (0, 2)}
    nodes = list(range(model.size)) if nodes is None else list(nodes)
    threads = threads or int(os.environ.get(THREADS_ENV, "1"))

    def run(j):
        return _node_residual(j, state, model, v1, co, dirs, rows, ops, state.N - 2)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, nodes))  # map keeps node order
    else:
        results = [run(j) for j in nodes]
    node_norms = np.array([x[0] for x in results])
    radial = np.max(np.array([x[1] for x in results]), axis=0)
    terms = {k: max(x[2][k] for x in results) for k in results[0][2]}
    return ResidualResult(version, state.eps, float(np.max(node_norms)), node_norms, radial, terms)


def _mode2_tensors(model, mu0):
    from .terms import h1_coefficients

    return h1_coefficients(model, mu0)["Q"]


def fit_slope(eps_list, norms) -> float:
    x = np.log(np.asarray(eps_list, dtype=float))
    y = np.log(np.asarray(norms, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def scaling_study(model: SubmanifoldModel, version: str = "v1", eps_list=DEFAULT_EPS, sign="sub",
                  constants: ProjectionConstants | None = None, omega_sign: int = 1, eta: float = 1.0,
                  M: int = 2048, grading: float = 2.0, nodes=None, threads: int | None = None) -> dict:
    """Residual norms over ``eps_list`` and the least-squares log-log slope."""
    eps_list = sorted(eps_list, reverse=True)
    if len(eps_list) < 4 or eps_list[0] / eps_list[-1] < 10:
        raise ValueError("need at least 4 eps values spanning a decade")
    s = parse_sign(sign)
    constants = constants or compute_constants(model.N)
    mu0, _ = solve_mu0(model, s, constants, omega_sign)
    norms = []
    for eps in eps_list:
        st = build_state(model, eps, s, version, mu0=mu0, constants=constants,
                         omega_sign=omega_sign, eta=eta, M=M, grading=grading)
        norms.append(residual(st, model, version, nodes=nodes, threads=threads).norm)
    slope = fit_slope(eps_list, norms)
    monotone = all(a > b for a, b in zip(norms, norms[1:]))
    if not monotone:
        warnings.warn("residual norms are not monotone in eps; check the assembly", RuntimeWarning)
    return {"version": version, "eps": list(eps_list), "norms": norms, "slope": slope,
            "constants": [n / e for n, e in zip(norms, eps_list)], "monotone": monotone}
