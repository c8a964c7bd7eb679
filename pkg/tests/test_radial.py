import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from yamabe_concentration.errors import ContractViolation, InvalidFieldError, ModeOutOfRangeError
from yamabe_concentration.radial import (
    RadialField,
    RadialGrid,
    derivatives,
    fsum_dot,
    radial_integral,
    radial_operator_matrix,
    radial_quadrature,
    sphere_area,
    sphere_cubature5,
    sym_eig_smallest,
)


def test_grid_rejects_bad_parameters():
    with pytest.raises(ValueError):
        RadialGrid(R_out=0.5)
    with pytest.raises(ValueError):
        RadialGrid(R_out=10.0, M=8)
    with pytest.raises(ValueError):
        RadialGrid(R_out=10.0, grading=0.5)


def test_grid_nodes_are_graded_and_end_exactly():
    g = RadialGrid(R_out=20.0, M=128, grading=2.0)
    r = g.nodes
    assert r[0] == 0.0 and r[-1] == 20.0
    assert np.all(np.diff(r) > 0)
    assert np.all(np.diff(np.diff(r)) > 0)


@pytest.mark.parametrize("N", [5, 7, 10])
def test_gaussian_integral(N):
    # int_{R^N} exp(-|x|^2) = pi^(N/2)
    g = RadialGrid(R_out=12.0, M=4096, grading=2.0)
    val = radial_integral(g, np.exp(-g.nodes**2), N)
    assert val == pytest.approx(math.pi ** (N / 2), rel=1e-7)


def test_radial_quadrature_requires_field():
    with pytest.raises(InvalidFieldError):
        radial_quadrature(np.ones(3), 7)
    g = RadialGrid(R_out=5.0, M=64)
    with pytest.raises(InvalidFieldError):
        RadialField(g, np.ones(10))
    with pytest.raises(InvalidFieldError):
        RadialField(g, np.full(65, np.nan))


def test_field_arithmetic():
    g = RadialGrid(R_out=5.0, M=64)
    f = RadialField.from_function(g, lambda r: r)
    h = 2 * f - f + 1.0
    assert np.allclose(h.values, g.nodes + 1.0)
    assert np.allclose((-f).values, -g.nodes)


@pytest.mark.parametrize("parity", ["even", "odd"])
def test_derivatives_second_order(parity):
    errs = []
    for M in (256, 512):
        g = RadialGrid(R_out=6.0, M=M, grading=2.0)
        r = g.nodes
        e = np.exp(-r * r)
        if parity == "even":
            f, d1, d2 = e, -2 * r * e, (4 * r * r - 2) * e
        else:
            f, d1, d2 = r * e, (1 - 2 * r * r) * e, (4 * r**3 - 6 * r) * e
        fr, frr = derivatives(g, f)
        errs.append(max(np.max(np.abs(fr - d1)), np.max(np.abs(frr - d2))))
    assert math.log2(errs[0] / errs[1]) > 1.8


@given(st.permutations(list(range(40))))
@settings(max_examples=30, deadline=None)
def test_fsum_dot_order_independent(perm):
    rng = np.random.default_rng(0)
    a = rng.normal(size=40) * 10.0 ** rng.integers(-8, 8, size=40)
    b = rng.normal(size=40)
    assert fsum_dot(a[perm], b[perm]) == fsum_dot(a, b)


@given(st.integers(5, 9), st.lists(st.integers(0, 2), min_size=1, max_size=5))
@settings(max_examples=40, deadline=None)
def test_sphere_cubature_exact_to_degree5(N, idx):
    # monomials theta^a of degree <= 5 against the closed-form sphere averages
    pts, w = sphere_cubature5(N)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    powers = np.zeros(N, dtype=int)
    for i in idx:
        powers[i % N] += 1
    val = float(w @ np.prod(pts**powers, axis=1))
    if np.any(powers % 2):
        exact = 0.0
    else:
        # E[prod theta_i^(2k_i)] = prod (2k_i - 1)!! / (N (N+2) ... (N + 2K - 2))
        K = int(powers.sum() // 2)
        num = np.prod([math.prod(range(1, int(p), 2)) if p else 1 for p in powers])
        den = math.prod(N + 2 * j for j in range(K))
        exact = num / den
    assert val == pytest.approx(exact, abs=1e-14)


def test_operator_mode_range_and_shape():
    g = RadialGrid(R_out=10.0, M=128)
    with pytest.raises(ModeOutOfRangeError):
        radial_operator_matrix(3, 7, 0.0, g)
    with pytest.raises(InvalidFieldError):
        radial_operator_matrix(0, 7, np.zeros(5), g)
    op = radial_operator_matrix(1, 7, 0.0, g)
    assert op.size == g.M - 1
    S = op.symmetric_dense()
    assert np.allclose(S, S.T)


def test_operator_solve_matches_matvec():
    g = RadialGrid(R_out=10.0, M=512, grading=2.0)
    r = g.nodes
    for ell in (0, 1, 2):
        op = radial_operator_matrix(ell, 7, 1.0 / (1 + r * r), g)
        rhs = np.exp(-r * r)[op.interior] * (r[op.interior] ** ell + (ell == 0))
        x = op.solve(rhs, shift=0.5)
        back = op.matvec(op.to_full(x)) + 0.5 * x
        assert np.max(np.abs(back - rhs)[5:]) < 1e-8


def test_harmonic_oscillator_spectrum():
    # -Delta + r^2 in R^N, mode 0: eigenvalues N + 4j
    N = 5
    g = RadialGrid(R_out=9.0, M=2048, grading=1.0)
    op = radial_operator_matrix(0, N, g.nodes**2, g)
    vals = [v for v, _ in sym_eig_smallest(op, 3)]
    assert np.allclose(vals, [N, N + 4, N + 8], rtol=1e-4)


def test_dense_eigensolver_contract():
    with pytest.raises(ContractViolation):
        sym_eig_smallest(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)
    A = np.diag([3.0, 1.0, 2.0])
    vals = [v for v, _ in sym_eig_smallest(A, 2, weights=np.array([1.0, 1.0, 2.0]))]
    assert vals == pytest.approx([1.0, 1.0])


def test_sphere_area():
    assert sphere_area(3) == pytest.approx(4 * math.pi)
