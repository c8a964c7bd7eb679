"""Discretized model submanifolds K (circle or flat torus) carrying curvature
data in Fermi coordinates, together with the Laplace-Beltrami operator, the
geometric potential Omega and the Jacobi operator.

Index conventions (all arrays carry a leading node axis):

* ``R_normal[n, i, j, l, m]``   R_{ijlm} on normal indices, shape (n, N, N, N, N)
* ``R_mixed[n, m, a, b, l]``    R_{mabl}, normal-tangent-tangent-normal, shape (n, N, k, k, N)
* ``g_tilde[n, a, b]``          induced metric on K, shape (n, k, k)
* ``Gamma[n, a, b, i]``         Gamma^b_{ai} = g(nabla_{E_a} E_b, E_i), shape (n, k, k, N)

With R_{abcd} = c (g_ac g_bd - g_ad g_bc) the component R_{ijij} (i != j) is the
sectional curvature c, so sum_{i,j} R_{ijij} is the scalar curvature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import ContractViolation, InvalidFieldError

MIN_NODES = 32
MINIMALITY_TOL = 1e-12
DEGENERACY_REL = 1e-8


def _per_node(arr, n, shape, name):
    a = np.asarray(arr, dtype=float)
    if a.shape == shape:
        a = np.broadcast_to(a, (n,) + shape).copy()
    if a.shape != (n,) + shape:
        raise InvalidFieldError(f"{name} has shape {a.shape}, expected {(n,) + shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidFieldError(f"{name} contains non-finite values")
    return a


@dataclass(frozen=True)
class CurvatureData:
    R_normal: np.ndarray = field(repr=False)
    R_mixed: np.ndarray = field(repr=False)
    g_tilde: np.ndarray = field(repr=False)
    Gamma: np.ndarray = field(repr=False)
    tol: float = 1e-12

    def __post_init__(self):
        Rn = np.asarray(self.R_normal, dtype=float)
        Rm = np.asarray(self.R_mixed, dtype=float)
        scale = max(1.0, float(np.max(np.abs(Rn), initial=0.0)))
        if np.max(np.abs(Rn + Rn.transpose(0, 2, 1, 3, 4)), initial=0.0) > self.tol * scale:
            raise InvalidFieldError("normal curvature not antisymmetric in its first index pair")
        if np.max(np.abs(Rn + Rn.transpose(0, 1, 2, 4, 3)), initial=0.0) > self.tol * scale:
            raise InvalidFieldError("normal curvature not antisymmetric in its second index pair")
        scale = max(1.0, float(np.max(np.abs(Rm), initial=0.0)))
        # R_{mabl} = R_{blma} = R_{lbam}
        if np.max(np.abs(Rm - Rm.transpose(0, 4, 3, 2, 1)), initial=0.0) > self.tol * scale:
            raise InvalidFieldError("mixed curvature lacks pair symmetry R_mabl = R_lbam")
        g = np.asarray(self.g_tilde, dtype=float)
        if np.max(np.abs(g - g.transpose(0, 2, 1)), initial=0.0) > self.tol:
            raise InvalidFieldError("induced metric not symmetric")
        if np.min(np.linalg.eigvalsh(g)) <= 0:
            raise InvalidFieldError("induced metric not positive definite")

    @property
    def n_nodes(self) -> int:
        return self.g_tilde.shape[0]

    @property
    def N(self) -> int:
        return self.R_normal.shape[1]

    @property
    def k(self) -> int:
        return self.g_tilde.shape[1]

    @classmethod
    def build(cls, n: int, N: int, k: int, R_normal=None, R_mixed=None, g_tilde=None, Gamma=None):
        """Per-node arrays or single-node arrays (broadcast); None means zero (identity metric)."""
        zeros = np.zeros
        return cls(
            R_normal=_per_node(zeros((N,) * 4) if R_normal is None else R_normal, n, (N,) * 4, "R_normal"),
            R_mixed=_per_node(zeros((N, k, k, N)) if R_mixed is None else R_mixed, n, (N, k, k, N), "R_mixed"),
            g_tilde=_per_node(np.eye(k) if g_tilde is None else g_tilde, n, (k, k), "g_tilde"),
            Gamma=_per_node(zeros((k, k, N)) if Gamma is None else Gamma, n, (k, k, N), "Gamma"),
        )

    def g_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.g_tilde)

    def at(self, node: int) -> "CurvatureData":
        """Single-node view (leading axis of length one)."""
        sl = slice(node, node + 1)
        return CurvatureData(self.R_normal[sl], self.R_mixed[sl], self.g_tilde[sl], self.Gamma[sl], self.tol)

    def ricci_normal(self) -> np.ndarray:
        """S[n, m, l] = sum_i R_{miil}; symmetric in (m, l)."""
        return np.einsum("nmiil->nml", self.R_normal)

    def drift_matrix(self) -> np.ndarray:
        """A[n, m, j] = (2/3) sum_s R_mssj + sum_ab (g~^ab R_mabj - Gamma^b_am Gamma^a_bj)."""
        ginv = self.g_inverse()
        return (
            (2.0 / 3.0) * np.einsum("nmssj->nmj", self.R_normal)
            + np.einsum("nab,nmabj->nmj", ginv, self.R_mixed)
            - np.einsum("nabm,nbaj->nmj", self.Gamma, self.Gamma)
        )


def constant_curvature_tensors(c: float, N: int, k: int):
    """R_normal and R_mixed of R_abcd = c (g_ac g_bd - g_ad g_bc) in an orthonormal frame."""
    dN = np.eye(N)
    Rn = c * (np.einsum("ac,bd->abcd", dN, dN) - np.einsum("ad,bc->abcd", dN, dN))
    # R_{mabl} = c (g_mb g_al - g_ml g_ab); normal-tangent products vanish
    Rm = -c * np.einsum("ml,ab->mabl", dN, np.eye(k))
    return Rn, Rm


@dataclass(frozen=True)
class SubmanifoldModel:
    kind: str
    lengths: tuple
    n: int
    N: int
    curvature: CurvatureData
    h: np.ndarray = field(repr=False)
    laplacian: str = "stencil"

    def __post_init__(self):
        if self.kind not in ("circle", "torus"):
            raise InvalidFieldError(f"unknown kind {self.kind!r}")
        if len(self.lengths) != self.k:
            raise InvalidFieldError(f"{self.kind} needs {self.k} lengths")
        if any(not L > 0 for L in self.lengths):
            raise InvalidFieldError("lengths must be positive")
        if self.n < MIN_NODES:
            raise InvalidFieldError(f"need at least {MIN_NODES} nodes per dimension")
        if self.N < 5:
            raise InvalidFieldError("codimension N must be >= 5")
        if self.laplacian not in ("stencil", "fourier"):
            raise InvalidFieldError(f"unknown laplacian {self.laplacian!r}")
        c = self.curvature
        if c.n_nodes != self.size or c.N != self.N or c.k != self.k:
            raise InvalidFieldError("curvature data does not match the model")
        h = np.asarray(self.h, dtype=float)
        if h.ndim == 0:
            h = np.full(self.size, float(h))
        if h.shape != (self.size,) or not np.all(np.isfinite(h)):
            raise InvalidFieldError("h must be a finite field on the grid")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))

    @property
    def k(self) -> int:
        return 1 if self.kind == "circle" else 2

    @property
    def m(self) -> int:
        return self.k + self.N

    @property
    def size(self) -> int:
        return self.n**self.k

    @property
    def spacing(self) -> tuple:
        return tuple(L / self.n for L in self.lengths)

    def axes(self) -> list:
        return [np.arange(self.n) * (L / self.n) for L in self.lengths]

    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape (size, k); torus nodes in row-major (y1, y2) order."""
        ax = self.axes()
        if self.k == 1:
            return ax[0][:, None]
        Y1, Y2 = np.meshgrid(ax[0], ax[1], indexing="ij")
        return np.column_stack([Y1.ravel(), Y2.ravel()])

    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    def integrate(self, f) -> float:
        # rectangle rule on a periodic grid = trapezoid rule, spectrally accurate
        return self.cell_volume() * math.fsum(np.asarray(f, dtype=float).tolist())

    def with_curvature(self, curvature: CurvatureData) -> "SubmanifoldModel":
        return SubmanifoldModel(self.kind, self.lengths, self.n, self.N, curvature, self.h, self.laplacian)

    def with_h(self, h) -> "SubmanifoldModel":
        return SubmanifoldModel(self.kind, self.lengths, self.n, self.N, self.curvature, h, self.laplacian)


def make_model(kind="circle", lengths=None, n=256, N=7, h=0.0, curvature=None, laplacian="stencil", **curv):
    if lengths is None:
        lengths = (2 * math.pi,) if kind == "circle" else (2 * math.pi, 2 * math.pi)
    k = 1 if kind == "circle" else 2
    size = n**k
    if curvature is None:
        curvature = CurvatureData.build(size, N, k, **curv)
    return SubmanifoldModel(kind, tuple(lengths), n, N, curvature, h, laplacian)


# ---------------------------------------------------------------------------
# Laplace-Beltrami


def _circle_stencil(n: int, L: float) -> scipy.sparse.csr_matrix:
    hy = L / n
    e = np.ones(n)
    D = scipy.sparse.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], shape=(n, n), format="lil")
    D[0, n - 1] = 1.0
    D[n - 1, 0] = 1.0
    return (D / hy**2).tocsr()


def _circle_fourier(n: int, L: float) -> np.ndarray:
    kk = np.fft.fftfreq(n, d=L / n) * 2 * math.pi
    F = np.fft.fft(np.eye(n), axis=0)
    D = np.real(np.fft.ifft(-(kk**2)[:, None] * F, axis=0))
    return 0.5 * (D + D.T)


def laplacian_matrix(model: SubmanifoldModel, method: str | None = None):
    """Discrete Delta_K (negative semidefinite) as a sparse (stencil) or dense (Fourier) matrix."""
    method = method or model.laplacian
    n = model.n
    if method == "stencil":
        mats = [_circle_stencil(n, L) for L in model.lengths]
        if model.k == 1:
            return mats[0]
        I = scipy.sparse.identity(n, format="csr")
        return (scipy.sparse.kron(mats[0], I) + scipy.sparse.kron(I, mats[1])).tocsr()
    if method == "fourier":
        mats = [_circle_fourier(n, L) for L in model.lengths]
        if model.k == 1:
            return mats[0]
        I = np.eye(n)
        return np.kron(mats[0], I) + np.kron(I, mats[1])
    raise InvalidFieldError(f"unknown laplacian {method!r}")


def laplace_beltrami(model: SubmanifoldModel, f, method: str | None = None) -> np.ndarray:
    """Apply Delta_K to a grid function.  Fourier mode uses the FFT directly."""
    f = np.asarray(f, dtype=float)
    method = method or model.laplacian
    if method == "fourier":
        shape = (model.n,) * model.k
        fh = np.fft.fftn(f.reshape(shape))
        symbol = np.zeros(shape)
        for ax, L in enumerate(model.lengths):
            kk = np.fft.fftfreq(model.n, d=L / model.n) * 2 * math.pi
            sh = [1] * model.k
            sh[ax] = model.n
            symbol = symbol + (kk**2).reshape(sh)
        return np.real(np.fft.ifftn(-symbol * fh)).ravel()
    return laplacian_matrix(model, method) @ f


def gradient_squared(model: SubmanifoldModel, f) -> np.ndarray:
    """|grad_K f|^2 with centred periodic differences (flat metric on K)."""
    f = np.asarray(f, dtype=float).reshape((model.n,) * model.k)
    out = np.zeros_like(f)
    for ax, hy in enumerate(model.spacing):
        d = (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax)) / (2 * hy)
        out += d * d
    return out.ravel()


def eigenvalues(model: SubmanifoldModel, count: int, method: str | None = None) -> np.ndarray:
    """Smallest ``count`` eigenvalues of -Delta_K, ascending (first one is 0)."""
    method = method or model.laplacian
    if method == "fourier":
        # exact symbol values of the resolved modes
        ks = [np.fft.fftfreq(model.n, d=L / model.n) * 2 * math.pi for L in model.lengths]
        vals = ks[0] ** 2 if model.k == 1 else np.add.outer(ks[0] ** 2, ks[1] ** 2).ravel()
        return np.sort(vals)[:count]
    A = laplacian_matrix(model, "stencil")
    if model.k == 1:
        # circulant: eigenvalues known in closed form for the 3-point stencil
        hy = model.spacing[0]
        j = np.arange(model.n)
        vals = (2.0 / hy) ** 2 * np.sin(math.pi * j / model.n) ** 2
        return np.sort(vals)[:count]
    if A.shape[0] <= 4096:
        return scipy.linalg.eigvalsh(-A.toarray(), subset_by_index=(0, count - 1))
    vals = scipy.sparse.linalg.eigsh(-A, k=count, sigma=-1.0, which="LM", return_eigenvectors=False)
    return np.sort(vals)


# ---------------------------------------------------------------------------
# Geometry


def check_minimality(model: SubmanifoldModel) -> tuple[float, bool]:
    """max over nodes and normal directions of |sum_a Gamma^a_{ai}|."""
    G = model.curvature.Gamma
    trace = np.einsum("naai->ni", G)
    v = float(np.max(np.abs(trace), initial=0.0))
    return v, v <= MINIMALITY_TOL


def omega_bracket_tensors(R_normal, R_mixed, g_tilde, Gamma) -> float:
    """(1/3) sum R_ijij + sum_i sum_ab (g~^ab R_iaib + Gamma^b_ai Gamma^a_bi).

    Works for any k >= 0 (k = 0 gives empty tangent contractions).
    """
    k = np.shape(g_tilde)[0]
    ginv = np.linalg.inv(g_tilde) if k else np.zeros((0, 0))
    normal = np.einsum("ijij->", R_normal) / 3.0
    # R_iaib = -R_iabi = -R_mixed[i, a, b, i]
    mixed = -np.einsum("ab,iabi->", ginv, R_mixed)
    gg = np.einsum("abi,bai->", Gamma, Gamma)
    return float(normal + mixed + gg)


def omega_bracket(model: SubmanifoldModel, node: int) -> float:
    c = model.curvature
    return omega_bracket_tensors(c.R_normal[node], c.R_mixed[node], c.g_tilde[node], c.Gamma[node])


def omega_prefactor(N: int) -> float:
    return 3.0 * (N - 2) / (4.0 * (N - 1))


def compute_omega(model: SubmanifoldModel, node: int, sign: int = 1) -> float:
    """Geometric potential in Fermi coordinates at ``node``.

    ``sign`` selects the overall sign convention (+1 default).
    """
    if sign not in (1, -1):
        raise ValueError("omega sign flag must be +1 or -1")
    return sign * omega_prefactor(model.N) * omega_bracket(model, node)


def omega_field(model: SubmanifoldModel, sign: int = 1) -> np.ndarray:
    return np.array([compute_omega(model, j, sign) for j in range(model.size)])


def jacobi_potential(model: SubmanifoldModel) -> np.ndarray:
    """J[n, l, m] = sum_ab (g~^ab R_mabl - Gamma^b_am Gamma^a_bl); symmetric in (l, m)."""
    c = model.curvature
    ginv = c.g_inverse()
    J = np.einsum("nab,nmabl->nlm", ginv, c.R_mixed) - np.einsum("nabm,nbal->nlm", c.Gamma, c.Gamma)
    return 0.5 * (J + J.transpose(0, 2, 1))


def jacobi_operator(model: SubmanifoldModel, potential=None):
    """Matrix of Phi -> -Delta_K Phi_l + sum_m J_lm Phi_m.

    Unknowns are ordered node-major: index = node * N + component.
    ``potential`` overrides the curvature-derived J (shape (N, N) or (n, N, N)).
    """
    N = model.N
    J = jacobi_potential(model) if potential is None else _per_node(potential, model.size, (N, N), "J")
    lap = laplacian_matrix(model)
    if scipy.sparse.issparse(lap):
        A = -scipy.sparse.kron(lap, scipy.sparse.identity(N)) + scipy.sparse.block_diag(list(J))
        return A.tocsr()
    return -np.kron(lap, np.eye(N)) + scipy.linalg.block_diag(*J)


def jacobi_nondegeneracy(model: SubmanifoldModel, potential=None) -> tuple[float, bool]:
    """Smallest singular value of the discretized Jacobi operator and a degeneracy flag."""
    A = jacobi_operator(model, potential)
    dense = A.toarray() if scipy.sparse.issparse(A) else A
    if np.max(np.abs(dense - dense.T)) > 1e-12 * max(1.0, np.max(np.abs(dense))):
        raise ContractViolation("Jacobi operator is not symmetric")
    # symmetric, so singular values are absolute eigenvalues
    ev = scipy.linalg.eigvalsh(dense)
    sv = np.abs(ev)
    smin, smax = float(np.min(sv)), float(np.max(sv))
    return smin, smin < DEGENERACY_REL * smax


# ---------------------------------------------------------------------------
# Geometry files


def _field_from_spec(spec, model_axes, n_total, shape, name):
    """Number / nested list / {"constant", "cos_amplitude", "mode", "axis"} -> per-node array."""
    if isinstance(spec, dict):
        const = np.asarray(spec.get("constant", 0.0), dtype=float)
        amp = np.asarray(spec.get("cos_amplitude", 0.0), dtype=float)
        mode = int(spec.get("mode", 1))
        axis = int(spec.get("axis", 0))
        base = np.cos(mode * model_axes[:, axis])
        out = const[None, ...] + amp[None, ...] * base.reshape((-1,) + (1,) * const.ndim)
        return _per_node(out, n_total, shape, name)
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 0:
        arr = np.full((n_total,) + shape, float(arr))
    return _per_node(arr, n_total, shape, name)


def load_geometry(path, N: int | None = None, n: int | None = None) -> SubmanifoldModel:
    """Read a JSON geometry file.

    Keys: kind, lengths, n (nodes per dimension), N, laplacian, h,
    constant_curvature (optional scalar c), R_normal, R_mixed, g_tilde, Gamma.
    Every field may be a number, a (per-node or single-node) nested list, or
    {"constant": value, "cos_amplitude": value, "mode": int, "axis": int}.
    Missing curvature components default to zero (identity metric).
    """
    data = json.loads(Path(path).read_text())
    return geometry_from_dict(data, N=N, n=n)


def geometry_from_dict(data: dict, N: int | None = None, n: int | None = None) -> SubmanifoldModel:
    kind = data.get("kind", "circle")
    k = 1 if kind == "circle" else 2
    N = int(N if N is not None else data.get("N", 7))
    n = int(n if n is not None else data.get("n", 256))
    lengths = tuple(data.get("lengths", [2 * math.pi] * k))
    size = n**k
    ax = [np.arange(n) * (L / n) for L in lengths]
    coords = ax[0][:, None] if k == 1 else np.column_stack([a.ravel() for a in np.meshgrid(*ax, indexing="ij")])

    def field_of(key, shape, default):
        if key not in data:
            return None if default is None else _per_node(default, size, shape, key)
        return _field_from_spec(data[key], coords, size, shape, key)

    Rn = field_of("R_normal", (N,) * 4, None)
    Rm = field_of("R_mixed", (N, k, k, N), None)
    if "constant_curvature" in data:
        cRn, cRm = constant_curvature_tensors(float(data["constant_curvature"]), N, k)
        Rn = cRn if Rn is None else Rn + cRn
        Rm = cRm if Rm is None else Rm + cRm
    curvature = CurvatureData.build(
        size, N, k,
        R_normal=Rn,
        R_mixed=Rm,
        g_tilde=field_of("g_tilde", (k, k), None),
        Gamma=field_of("Gamma", (k, k, N), None),
    )
    h = field_of("h", (), np.zeros(())) if "h" in data else np.zeros(size)
    return SubmanifoldModel(kind, lengths, n, N, curvature, np.asarray(h).reshape(size),
                            data.get("laplacian", "stencil"))
