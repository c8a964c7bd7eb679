"""Attractive and repulsive singular equations on a model K,

    -Delta u + alpha u - beta/u = 0   (attractive),
    -Delta u + alpha u + beta/u = 0   (repulsive),

solved on the periodic stencil of :mod:`manifold`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import (
    InvalidFieldError,
    NoSolutionFound,
    PositivityViolation,
    PreconditionError,
    SolverFailure,
    SpectralFailure,
)
from .manifold import SubmanifoldModel, eigenvalues, laplacian_matrix

ATTRACTIVE = "attractive"
REPULSIVE = "repulsive"
DEGENERATE_EIG = 1e-8
MONOTONE_SLACK = 1e-14


def _as_field(model, v, name):
    a = np.asarray(v, dtype=float)
    if a.ndim == 0:
        a = np.full(model.size, float(a))
    if a.shape != (model.size,) or not np.all(np.isfinite(a)):
        raise InvalidFieldError(f"{name} must be a finite field with {model.size} nodes")
    return a


@dataclass(frozen=True)
class SingularProblem:
    model: SubmanifoldModel
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    sign: str = ATTRACTIVE

    def __post_init__(self):
        if self.sign not in (ATTRACTIVE, REPULSIVE):
            raise InvalidFieldError(f"sign must be {ATTRACTIVE!r} or {REPULSIVE!r}")
        a = _as_field(self.model, self.alpha, "alpha")
        b = _as_field(self.model, self.beta, "beta")
        if not np.min(b) > 0:
            raise PreconditionError(f"min beta must be positive, got {np.min(b):.3e}")
        if self.sign == ATTRACTIVE and not np.min(a) > 0:
            raise PreconditionError(f"attractive problem needs min alpha > 0, got {np.min(a):.3e}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def s(self) -> float:
        """Coefficient of beta/u in the equation: -1 attractive, +1 repulsive."""
        return -1.0 if self.sign == ATTRACTIVE else 1.0

    def is_constant(self, rtol: float = 1e-14) -> bool:
        a, b = self.alpha, self.beta
        return bool(np.ptp(a) <= rtol * max(1.0, np.max(np.abs(a))) and np.ptp(b) <= rtol * np.max(b))

    def residual(self, u, lap=None) -> np.ndarray:
        lap = laplacian_matrix(self.model) if lap is None else lap
        return -(lap @ u) + self.alpha * u + self.s * self.beta / u

    def jacobian(self, u, lap=None):
        """Linearization -Delta + alpha - s beta/u^2."""
        lap = laplacian_matrix(self.model) if lap is None else lap
        pot = self.alpha - self.s * self.beta / (u * u)
        if scipy.sparse.issparse(lap):
            return (-lap + scipy.sparse.diags(pot)).tocsc()
        return -lap + np.diag(pot)


@dataclass(frozen=True)
class SingularSolution:
    u: np.ndarray = field(repr=False)
    residual_norm: float
    nondegenerate: bool
    linearized_eigs: np.ndarray
    iterations: int = 0
    monotone: bool = True
    diagnostics: dict = field(default_factory=dict)


def _solve(A, b):
    if scipy.sparse.issparse(A):
        return scipy.sparse.linalg.spsolve(A.tocsc(), b)
    return scipy.linalg.solve(A, b, assume_a="sym")


def linearized_spectrum(problem: SingularProblem, u, count: int = 6) -> np.ndarray:
    """All (small models) or the ``count`` smallest-magnitude eigenvalues of the linearization."""
    J = problem.jacobian(u)
    dense = J.toarray() if scipy.sparse.issparse(J) else J
    return scipy.linalg.eigvalsh(dense)


def bracket_constants(problem: SingularProblem) -> tuple[float, float]:
    if problem.sign != ATTRACTIVE:
        raise PreconditionError("bracket constants only exist for the attractive problem")
    ratio = np.sqrt(problem.beta / problem.alpha)
    return 0.5 * float(np.min(ratio)), 2.0 * float(np.max(ratio))


def _newton(problem, u, tol, floor, max_iter=50, lap=None):
    """Damped Newton keeping u above ``floor``; returns (u, residual norm, iterations)."""
    lap = laplacian_matrix(problem.model) if lap is None else lap
    F = problem.residual(u, lap)
    res = float(np.max(np.abs(F)))
    it = 0
    while res > tol and it < max_iter:
        it += 1
        du = _solve(problem.jacobian(u, lap), -F)
        theta = 1.0
        while True:
            trial = u + theta * du
            if np.min(trial) > floor:
                F_trial = problem.residual(trial, lap)
                r_trial = float(np.max(np.abs(F_trial)))
                if r_trial < (1.0 - 1e-4 * theta) * res or r_trial <= tol:
                    break
            theta *= 0.5
            if theta < 1e-6:
                if np.min(u + du) <= floor:
                    raise NoSolutionFound(f"positivity floor {floor:.3e} hit (residual {res:.3e})")
                raise NoSolutionFound(f"Newton stagnated at residual {res:.3e}")
        u, F, res = trial, F_trial, r_trial
    if res > tol:
        raise NoSolutionFound(f"Newton did not reach tol {tol:.1e} (residual {res:.3e})")
    return u, res, it


def solve_attractive(problem: SingularProblem, tol: float = 1e-12, max_iter: int = 5000,
                     monotone_tol: float = 1e-10) -> SingularSolution:
    """Monotone iteration from the upper bracket, then Newton polish.

    With f(u) = beta/u decreasing, the plain iteration L u_{n+1} = f(u_n) is
    anti-monotone; we add lambda u to both sides, lambda = max beta / c^2, which
    makes u -> f(u) + lambda u nondecreasing on the bracket [c, C] and gives a
    monotonically decreasing sequence from C.  f is clamped to the bracket as in
    the modified problem.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if problem.sign != ATTRACTIVE:
        raise PreconditionError("solve_attractive needs an attractive problem")
    lo, hi = bracket_constants(problem)
    lap = laplacian_matrix(problem.model)
    lam = float(np.max(problem.beta)) / lo**2
    if scipy.sparse.issparse(lap):
        L = (-lap + scipy.sparse.diags(problem.alpha + lam)).tocsc()
        lu = scipy.sparse.linalg.splu(L)
        solve = lu.solve
    else:
        fac = scipy.linalg.cho_factor(-lap + np.diag(problem.alpha + lam))
        solve = lambda b: scipy.linalg.cho_solve(fac, b)  # noqa: E731

    u = np.full(problem.model.size, hi)
    monotone = True
    history = [float(np.max(u))]
    it = 0
    for it in range(1, max_iter + 1):
        clamped = np.clip(u, lo, hi)
        new = solve(problem.beta / clamped + lam * clamped)
        if np.min(new) <= 0:
            raise PositivityViolation("monotone iterate lost positivity")
        if np.any(new > u + MONOTONE_SLACK * hi):
            monotone = False
        if np.min(new) < lo * (1 - 1e-12) or np.max(new) > hi * (1 + 1e-12):
            raise SolverFailure("monotone iterate escaped the bracket")
        change = float(np.max(np.abs(new - u)))
        u = new
        history.append(float(np.max(u)))
        if change <= monotone_tol * hi:
            break
    u, res, newton_it = _newton(problem, u, tol, floor=1e-8 * lo, lap=lap)
    if np.min(u) < lo * (1 - 1e-9) or np.max(u) > hi * (1 + 1e-9):
        raise SolverFailure("Newton polish left the bracket")
    eigs = linearized_spectrum(problem, u)
    return SingularSolution(
        u=u,
        residual_norm=res,
        nondegenerate=bool(eigs[0] > 0),
        linearized_eigs=eigs[:6],
        iterations=it + newton_it,
        monotone=monotone,
        diagnostics={"bracket": (lo, hi), "shift": lam, "monotone_steps": it, "newton_steps": newton_it,
                     "max_history": history},
    )


def certify_attractive_nondegeneracy(problem: SingularProblem, solution: SingularSolution,
                                     count: int = 6) -> np.ndarray:
    """Smallest eigenvalues of -Delta + alpha + beta/u^2; raises if the smallest is <= 0."""
    eigs = linearized_spectrum(problem, solution.u)[:count]
    if not eigs[0] > 0:
        raise SpectralFailure(
            f"linearization of an attractive solution has eigenvalue {eigs[0]:.3e} <= 0"
        )
    return eigs


def repulsive_feasibility(problem: SingularProblem) -> tuple[bool, dict]:
    amin = float(np.min(problem.alpha))
    feasible = amin < 0
    diag = {"min_alpha": amin, "necessary_condition": "min alpha < 0"}
    if not feasible:
        diag["reason"] = "min alpha >= 0"
    return feasible, diag


def window_check(ell: float, alpha_max: float, kappa: int) -> bool:
    """Window test -((k+1) pi/(2l))^2 < max alpha < -(k pi/(2l))^2 < 0 on an interval of length l."""
    if kappa < 1 or not ell > 0:
        raise ValueError("need kappa >= 1 and ell > 0")
    lower = -(((kappa + 1) * math.pi) / (2 * ell)) ** 2
    upper = -((kappa * math.pi) / (2 * ell)) ** 2
    return bool(lower < alpha_max < upper < 0)


def spectral_window(model: SubmanifoldModel, a: float, count: int = 64) -> tuple[bool, int | None]:
    """Whether -lam_{kappa+1} < 2a < -lam_kappa for consecutive distinct eigenvalue
    levels lam_kappa < lam_{kappa+1} of the model's -Delta_K (level 0 is the
    zero eigenvalue).  Returns (inside, kappa)."""
    ev = eigenvalues(model, count)
    levels = [ev[0]]
    for v in ev[1:]:
        if v - levels[-1] > 1e-9 * max(1.0, v):
            levels.append(v)
    for kappa in range(len(levels) - 1):
        if -levels[kappa + 1] < 2 * a < -levels[kappa]:
            return True, kappa
    return False, None


def solve_repulsive(problem: SingularProblem, tol: float = 1e-12, seed=None,
                    t_step: float = 0.1, min_step: float = 1e-3) -> SingularSolution:
    if not tol > 0:
        raise ValueError("tol must be positive")
    if problem.sign != REPULSIVE:
        raise PreconditionError("solve_repulsive needs a repulsive problem")
    feasible, diag = repulsive_feasibility(problem)
    if not feasible:
        raise PreconditionError(diag["reason"])
    lap = laplacian_matrix(problem.model)
    model = problem.model
    steps = 0

    if problem.is_constant() and seed is None:
        a, b = float(problem.alpha[0]), float(problem.beta[0])
        u = np.full(model.size, math.sqrt(-b / a))
        u, res, steps = _newton(problem, u, tol, floor=1e-8 * u[0], lap=lap)
        path = [1.0]
    else:
        abar = model.integrate(problem.alpha) / model.integrate(np.ones(model.size))
        bbar = model.integrate(problem.beta) / model.integrate(np.ones(model.size))
        if seed is not None:
            u = _as_field(model, seed, "seed")
            if not np.min(u) > 0:
                raise PreconditionError("seed must be positive")
            t = 1.0
            path = []
        else:
            if not abar < 0:
                raise NoSolutionFound("averaged alpha is not negative; supply a seed")
            u = np.full(model.size, math.sqrt(-bbar / abar))
            t = 0.0
            path = [0.0]
        step = t_step
        while True:
            target = t + step if t + step < 1.0 - 1e-12 else 1.0
            sub = SingularProblem(
                model,
                (1 - target) * abar + target * problem.alpha,
                (1 - target) * bbar + target * problem.beta,
                REPULSIVE,
            )
            try:
                u_new, res, it = _newton(sub, u, tol, floor=1e-8 * float(np.min(u)), lap=lap)
            except NoSolutionFound:
                if t >= 1.0 and seed is not None and not path:
                    raise
                step *= 0.5
                if step < min_step:
                    raise NoSolutionFound(f"homotopy stalled at t = {t:.4f}")
                continue
            u, t = u_new, target
            steps += it
            path.append(t)
            if t >= 1.0:
                break
    eigs = linearized_spectrum(problem, u)
    smallest = float(np.min(np.abs(eigs)))
    order = np.argsort(eigs)
    return SingularSolution(
        u=u,
        residual_norm=res,
        nondegenerate=smallest >= DEGENERATE_EIG,
        linearized_eigs=eigs[order][:6],
        iterations=steps,
        diagnostics={"min_abs_eig": smallest, "homotopy_path": path},
    )


def integral_identity(problem: SingularProblem, u) -> float:
    """int_K (alpha u + s beta/u): zero for any solution since int Delta u = 0."""
    return problem.model.integrate(problem.alpha * u + problem.s * problem.beta / u)
