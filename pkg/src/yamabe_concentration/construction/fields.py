"""Mode-decomposed transverse fields and the construction state, plus the
scaling constant alpha_eps.

A :class:`ModeField` stores, at every K-node, a field on the transverse ball as

    u(r theta) = f(r) + sum_j f1_j(r) theta_j + sum_P g_P(r) theta^T Q_P theta

with Q_P symmetric and traceless, so the three groups are the l = 0, 1, 2
spherical-harmonic components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidFieldError
from ..radial import RadialGrid

SUPERCRITICAL = 1  # upper sign: exponent p + eps
SUBCRITICAL = -1  # lower sign: exponent p - eps


def parse_sign(sign) -> int:
    if sign in (1, "+", "super", "supercritical"):
        return SUPERCRITICAL
    if sign in (-1, "-", "sub", "subcritical"):
        return SUBCRITICAL
    raise ValueError(f"unknown criticality sign {sign!r}")


@dataclass(frozen=True)
class ModeField:
    grid: RadialGrid
    N: int
    mode0: np.ndarray = field(repr=False)
    mode1: np.ndarray | None = field(default=None, repr=False)
    mode2: np.ndarray | None = field(default=None, repr=False)
    tensors: np.ndarray | None = field(default=None, repr=False)
    origin_tol: float = 1e-9

    def __post_init__(self):
        M1 = self.grid.M + 1
        f0 = np.asarray(self.mode0, dtype=float)
        if f0.ndim == 1:
            f0 = f0[None, :]
        if f0.ndim != 2 or f0.shape[1] != M1:
            raise InvalidFieldError(f"mode-0 profiles must have shape (nodes, {M1})")
        n = f0.shape[0]
        object.__setattr__(self, "mode0", f0)
        arrays = [f0]
        if self.mode1 is not None:
            f1 = np.asarray(self.mode1, dtype=float).reshape(n, self.N, M1)
            object.__setattr__(self, "mode1", f1)
            arrays.append(f1)
        if (self.mode2 is None) != (self.tensors is None):
            raise InvalidFieldError("mode-2 profiles and tensors go together")
        if self.mode2 is not None:
            g = np.asarray(self.mode2, dtype=float)
            g = g.reshape(n, -1, M1)
            Q = np.asarray(self.tensors, dtype=float).reshape(n, g.shape[1], self.N, self.N)
            if np.max(np.abs(Q - Q.transpose(0, 1, 3, 2)), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(Q))):
                raise InvalidFieldError("mode-2 tensors must be symmetric")
            tr = np.einsum("npii->np", Q)
            if np.max(np.abs(tr), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(Q))):
                raise InvalidFieldError("mode-2 tensors must be traceless")
            object.__setattr__(self, "mode2", g)
            object.__setattr__(self, "tensors", Q)
            arrays.append(g)
        for a in arrays:
            if not np.all(np.isfinite(a)):
                raise InvalidFieldError("mode profiles contain non-finite samples")
        for a in arrays[1:]:
            scale = max(1.0, float(np.max(np.abs(a))))
            if np.max(np.abs(a[..., 0])) > self.origin_tol * scale:
                raise InvalidFieldError("mode >= 1 profiles must vanish at r = 0")

    @property
    def n_nodes(self) -> int:
        return self.mode0.shape[0]

    def node(self, j: int) -> "ModeField":
        return ModeField(
            self.grid,
            self.N,
            self.mode0[j : j + 1],
            None if self.mode1 is None else self.mode1[j : j + 1],
            None if self.mode2 is None else self.mode2[j : j + 1],
            None if self.tensors is None else self.tensors[j : j + 1],
        )

    def scaled(self, t: float) -> "ModeField":
        return replace(
            self,
            mode0=t * self.mode0,
            mode1=None if self.mode1 is None else t * self.mode1,
            mode2=None if self.mode2 is None else t * self.mode2,
        )

    def evaluate(self, directions, node: int = 0) -> np.ndarray:
        """Samples u(r theta) for unit vectors ``directions`` (D, N); shape (D, M+1)."""
        th = np.asarray(directions, dtype=float)
        out = np.broadcast_to(self.mode0[node], (th.shape[0], self.grid.M + 1)).copy()
        if self.mode1 is not None:
            out += th @ self.mode1[node]
        if self.mode2 is not None:
            q = np.einsum("di,pij,dj->dp", th, self.tensors[node], th)
            out += q @ self.mode2[node]
        return out

    def direction_samples(self, directions=None) -> np.ndarray:
        """Samples at every node along a direction set; shape (nodes, D, M+1)."""
        if directions is None:
            directions = direction_set(self.N, self.tensors)
        return np.stack([self.evaluate(directions, j) for j in range(self.n_nodes)])


def direction_set(N: int, tensors=None) -> np.ndarray:
    """+-e_i, (+-e_i +- e_j)/sqrt(2), and +-eigenvectors of the supplied mode-2 tensors."""
    dirs = []
    eye = np.eye(N)
    for i in range(N):
        dirs += [eye[i], -eye[i]]
    s = 1.0 / math.sqrt(2.0)
    for i in range(N):
        for j in range(i + 1, N):
            for a in (1.0, -1.0):
                for b in (1.0, -1.0):
                    dirs.append(s * (a * eye[i] + b * eye[j]))
    if tensors is not None:
        Q = np.asarray(tensors, dtype=float).reshape(-1, N, N)
        # eigenvectors of a few representative tensors (first and largest)
        picks = {0, int(np.argmax(np.sum(Q * Q, axis=(1, 2))))}
        for p in sorted(picks):
            if np.any(Q[p]):
                _, V = np.linalg.eigh(Q[p])
                for v in V.T:
                    dirs += [v, -v]
    return np.array(dirs)


def alpha_eps(eps: float, N: int, sign) -> float:
    """Scaling constant with (1 + alpha)^(p +- eps - 1) eps^(-+ (N-2) eps / 4) = 1.

    alpha = eps^(+-(N-2)^2 eps / (16 +- 4 (N-2) eps)) - 1; computed with expm1
    to keep full relative accuracy as eps -> 0.
    """
    s = parse_sign(sign)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    expo = s * (N - 2) ** 2 * eps / (16.0 + s * 4.0 * (N - 2) * eps)
    return math.expm1(expo * math.log(eps))


def alpha_identity_defect(eps: float, N: int, sign) -> float:
    """(1 + alpha)^(p +- eps - 1) eps^(-+(N-2) eps / 4) - 1, evaluated in log form."""
    s = parse_sign(sign)
    p = (N + 2) / (N - 2)
    a = alpha_eps(eps, N, s)
    return math.expm1((p + s * eps - 1.0) * math.log1p(a) - s * (N - 2) * eps / 4.0 * math.log(eps))


@dataclass(frozen=True)
class ConstructionState:
    eps: float
    sign: int
    N: int
    grid: RadialGrid
    mu0: np.ndarray = field(repr=False)
    mu1: np.ndarray | None = field(default=None, repr=False)
    Phi1: np.ndarray | None = field(default=None, repr=False)
    w1: ModeField | None = field(default=None, repr=False)
    alpha_eps: float = 0.0
    diagnostics: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        mu0 = np.asarray(self.mu0, dtype=float)
        if not np.all(mu0 > 0):
            raise InvalidFieldError("mu0 must be positive at every node")
        if not abs(self.alpha_eps) < 0.5:
            raise InvalidFieldError(f"|alpha_eps| = {abs(self.alpha_eps):.3f} is not small")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "sign", parse_sign(self.sign))
