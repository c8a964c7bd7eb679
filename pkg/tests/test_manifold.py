import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from yamabe_concentration.errors import InvalidFieldError
from yamabe_concentration.manifold import (
    CurvatureData,
    check_minimality,
    compute_omega,
    constant_curvature_tensors,
    eigenvalues,
    geometry_from_dict,
    gradient_squared,
    jacobi_nondegeneracy,
    laplace_beltrami,
    laplacian_matrix,
    make_model,
    omega_bracket_tensors,
    omega_field,
    omega_prefactor,
)

import oracles


def random_curvature(rng, N, k, scale=1.0):
    """Tensors with the algebraic symmetries the package validates."""
    A = rng.normal(size=(N, N, N, N))
    Rn = A - A.transpose(1, 0, 2, 3)
    Rn = Rn - Rn.transpose(0, 1, 3, 2)
    Rn = scale * (Rn + Rn.transpose(2, 3, 0, 1))
    B = rng.normal(size=(N, k, k, N))
    Rm = scale * (B + B.transpose(3, 2, 1, 0))
    G = rng.normal(size=(k, k, N))
    Q = rng.normal(size=(k, k))
    g = np.eye(k) + 0.1 * (Q @ Q.T)
    return Rn, Rm, g, G


# --- Laplace-Beltrami -------------------------------------------------------


@pytest.mark.parametrize("n", [32, 64])
def test_circle_stencil_spectrum(n):
    m = make_model("circle", n=n)
    dense = np.sort(np.linalg.eigvalsh(-laplacian_matrix(m).toarray()))
    assert np.allclose(dense, oracles.circle_stencil_eigs(n, 2 * math.pi), atol=1e-9)
    assert np.allclose(eigenvalues(m, 5), dense[:5], atol=1e-9)


def test_circle_stencil_converges_to_integers():
    ev = eigenvalues(make_model("circle", n=512), 5)
    assert np.allclose(ev, [0, 1, 1, 4, 4], atol=1e-3)


def test_fourier_spectrum_exact():
    m = make_model("circle", n=64, laplacian="fourier")
    assert np.allclose(eigenvalues(m, 7), [0, 1, 1, 4, 4, 9, 9], atol=1e-12)
    dense = np.sort(np.linalg.eigvalsh(-laplacian_matrix(m)))
    assert np.allclose(dense[:7], [0, 1, 1, 4, 4, 9, 9], atol=1e-9)


def test_fourier_laplacian_on_cosine():
    m = make_model("circle", n=64, laplacian="fourier")
    y = m.coordinates()[:, 0]
    assert np.allclose(laplace_beltrami(m, np.cos(3 * y)), -9 * np.cos(3 * y), atol=1e-10)


def test_torus_spectrum():
    m = make_model("torus", lengths=(2 * math.pi, math.pi), n=32)
    ev = eigenvalues(m, 6)
    h1, h2 = m.spacing
    one = lambda j, h: (2 / h) ** 2 * math.sin(math.pi * j / 32) ** 2  # noqa: E731
    expect = sorted(one(a, h1) + one(b, h2) for a in range(32) for b in range(32))[:6]
    assert np.allclose(ev, expect, atol=1e-9)


def test_gradient_squared():
    m = make_model("circle", n=256)
    y = m.coordinates()[:, 0]
    assert np.allclose(gradient_squared(m, np.sin(y)), np.cos(y) ** 2, atol=1e-3)


def test_integrate_periodic():
    m = make_model("circle", n=32)
    y = m.coordinates()[:, 0]
    assert m.integrate(np.cos(y) ** 2) == pytest.approx(math.pi, rel=1e-14)


# --- validation ---------------------------------------------------------------


def test_model_validation():
    with pytest.raises(InvalidFieldError):
        make_model("sphere")
    with pytest.raises(InvalidFieldError):
        make_model("circle", n=8)
    with pytest.raises(InvalidFieldError):
        make_model("circle", N=4)
    with pytest.raises(InvalidFieldError):
        make_model("circle", lengths=(-1.0,))


def test_curvature_symmetry_checks(rng):
    Rn, Rm, g, G = random_curvature(rng, 5, 1)
    bad = Rn.copy()
    bad[0, 1, 2, 3] += 1.0
    with pytest.raises(InvalidFieldError):
        CurvatureData.build(1, 5, 1, R_normal=bad)
    bad = Rm.copy()
    bad[0, 0, 0, 1] += 1.0
    with pytest.raises(InvalidFieldError):
        CurvatureData.build(1, 5, 1, R_mixed=bad)
    with pytest.raises(InvalidFieldError):
        CurvatureData.build(1, 5, 1, g_tilde=-np.eye(1))
    CurvatureData.build(1, 5, 1, R_normal=Rn, R_mixed=Rm, g_tilde=g, Gamma=G)


def test_minimality():
    m = make_model("circle", n=32, N=5)
    assert check_minimality(m) == (0.0, True)
    G = np.zeros((1, 1, 5))
    G[0, 0, 2] = 0.3
    val, ok = check_minimality(make_model("circle", n=32, N=5, Gamma=G))
    assert val == pytest.approx(0.3) and not ok


# --- Omega --------------------------------------------------------------------


def test_omega_constant_curvature():
    N, k, c = 7, 1, 0.5
    Rn, Rm = constant_curvature_tensors(c, N, k)
    m = make_model("circle", n=32, N=N, R_normal=Rn, R_mixed=Rm)
    exact = sp.Rational(3 * (N - 2), 4 * (N - 1)) * oracles.bracket_loops(Rn, Rm, np.eye(k), np.zeros((k, k, N)))
    assert compute_omega(m, 0) == pytest.approx(float(exact), rel=1e-14)
    assert compute_omega(m, 0) == pytest.approx(6.5625, rel=1e-14)
    assert compute_omega(m, 0, sign=-1) == -compute_omega(m, 0)
    with pytest.raises(ValueError):
        compute_omega(m, 0, sign=2)


@pytest.mark.parametrize("k", [1, 2])
def test_omega_matches_loop_oracle(rng, k):
    Rn, Rm, g, G = random_curvature(rng, 5, k, scale=0.5)
    Rn, Rm, G = np.round(Rn, 3), np.round(Rm, 3), np.round(G, 3)
    g = np.round(g, 3)
    Rn = 0.25 * (Rn - Rn.transpose(1, 0, 2, 3) - Rn.transpose(0, 1, 3, 2) + Rn.transpose(1, 0, 3, 2))
    Rm = 0.5 * (Rm + Rm.transpose(3, 2, 1, 0))
    g = 0.5 * (g + g.T)
    assert omega_bracket_tensors(Rn, Rm, g, G) == pytest.approx(float(oracles.bracket_loops(Rn, Rm, g, G)), rel=1e-10)


def test_omega_k0_reduction(rng):
    # with no tangent directions the bracket is (1/3) sum R_ijij
    Rn, _, _, _ = random_curvature(rng, 6, 1)
    val = omega_bracket_tensors(Rn, np.zeros((6, 0, 0, 6)), np.zeros((0, 0)), np.zeros((0, 0, 6)))
    assert val == pytest.approx(np.einsum("ijij->", Rn) / 3, rel=1e-13)


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_omega_scaling(t, u, seed):
    rng = np.random.default_rng(seed)
    Rn, Rm, g, G = random_curvature(rng, 5, 2)
    zR, zG = np.zeros_like(G), np.zeros_like(Rm)
    curv_only = omega_bracket_tensors(Rn, Rm, g, zR)
    gamma_only = omega_bracket_tensors(np.zeros_like(Rn), zG, g, G)
    # linear in the curvature, quadratic in Gamma, additive
    assert omega_bracket_tensors(t * Rn, t * Rm, g, zR) == pytest.approx(t * curv_only, rel=1e-9, abs=1e-9)
    assert omega_bracket_tensors(np.zeros_like(Rn), zG, g, u * G) == pytest.approx(u * u * gamma_only, rel=1e-9, abs=1e-9)
    assert omega_bracket_tensors(Rn, Rm, g, G) == pytest.approx(curv_only + gamma_only, rel=1e-9, abs=1e-9)


def test_omega_prefactor():
    assert omega_prefactor(7) == pytest.approx(15 / 24)


# --- Jacobi -------------------------------------------------------------------


def test_jacobi_flat_is_degenerate():
    smin, degenerate = jacobi_nondegeneracy(make_model("circle", n=32))
    assert degenerate and smin < 1e-10


def test_jacobi_identity_nondegenerate():
    m = make_model("circle", n=32)
    smin, degenerate = jacobi_nondegeneracy(m, np.eye(7))
    assert not degenerate and smin == pytest.approx(1.0, abs=1e-3)


def test_jacobi_engineered_degenerate():
    m = make_model("circle", n=32)
    lam1 = eigenvalues(m, 2)[1]
    _, degenerate = jacobi_nondegeneracy(m, -lam1 * np.eye(7))
    assert degenerate


def test_jacobi_constant_curvature_circle(bundled):
    # J = g^ab R_mabl = -c I on the space-form data, c = -0.1
    smin, degenerate = jacobi_nondegeneracy(bundled["circle_constant"])
    assert not degenerate and smin == pytest.approx(0.1, rel=1e-9)


# --- geometry files -------------------------------------------------------------


def test_bundled_geometries(bundled):
    c = bundled["circle_constant"]
    assert c.kind == "circle" and c.size == 32 and np.all(c.h == 1.0)
    assert np.allclose(omega_field(c), 13.125 * -0.1)
    cos = bundled["circle_cosine"]
    y = cos.coordinates()[:, 0]
    assert np.allclose(cos.h, 1 + 0.3 * np.cos(y))
    t = bundled["torus_constant"]
    assert t.k == 2 and t.size == 32 * 32


def test_geometry_dict_defaults():
    m = geometry_from_dict({"kind": "circle", "n": 32, "N": 5})
    assert np.all(m.h == 0) and np.all(m.curvature.R_normal == 0)
    with pytest.raises(InvalidFieldError):
        geometry_from_dict({"kind": "circle", "n": 32, "N": 5, "h": [1.0, 2.0]})
