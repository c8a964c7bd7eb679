import pytest

from yamabe_concentration.constants import (
    a_closed,
    b_closed,
    compute_constants,
    default_constants_grid,
    t1_profile,
    verify_second_derivative_identity,
    verify_T1_orthogonality,
)
from yamabe_concentration.errors import ComputationFailed
from yamabe_concentration.radial import RadialGrid

import oracles


def test_closed_forms():
    assert a_closed(7) == pytest.approx(8 / 15)
    assert b_closed(7) == pytest.approx(25 / 6)
    assert a_closed(8) == pytest.approx(7 / 15)
    assert b_closed(8) == pytest.approx(36 / 5)


def test_constants_match_mpmath(constants7, mp7):
    for name in ("c1", "c2", "c3", "c4", "C0"):
        assert getattr(constants7, name) == pytest.approx(mp7[name], rel=1e-9), name


def test_c4_equals_log_projection(mp7):
    # the defined c4 equals int w0^p ln(w0) Z0, the projection that enters the mu0 equation
    assert mp7["c4"] == pytest.approx(mp7["c4_log"], rel=1e-20)


@pytest.mark.parametrize("N", [7, 8, 9, 10])
def test_ratios(N):
    c = compute_constants(N)
    err = c.relative_errors()
    assert abs(err["a"]) < 1e-6
    assert abs(err["c2"]) < 1e-6
    # c4/c1 is half the closed form b_N (recorded discrepancy)
    assert c.ratio_b == pytest.approx(b_closed(N) / 2, rel=1e-6)


def test_sign_pattern(constants7):
    c = constants7
    assert c.c1 > 0 and c.c2 > 0 and c.c3 < 0 and c.c4 > 0 and c.C0 > 0


def test_sign_violation_raises():
    # a box far too short flips the sign of c3 = int w0 Z0 (Z0 changes sign at r = 1)
    with pytest.raises(ComputationFailed):
        compute_constants(7, RadialGrid(R_out=1.05, M=256))


def test_t1_orthogonality(constants7):
    assert abs(verify_T1_orthogonality(7)) <= 1e-8 * constants7.c1


def test_t1_negative_control(constants7):
    # replacing T1 by w0 must give c3, far from zero
    from yamabe_concentration.bubble import BubbleFamily

    val = verify_T1_orthogonality(7, integrand=BubbleFamily(7).w0)
    assert val == pytest.approx(constants7.c3, rel=1e-9)


def test_second_derivative_identity_sympy(constants7):
    lhs, rhs = oracles.sympy_second_derivative_identity(7)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert verify_second_derivative_identity(7) == pytest.approx(-constants7.C0 / 2, rel=1e-6)
    assert verify_second_derivative_identity(7) == pytest.approx(lhs, rel=1e-8)


def test_t1_profile_matches_oracle(mp7, constants7):
    assert abs(mp7["T1Z0"]) < 1e-20
    g = default_constants_grid()
    assert t1_profile(g.nodes[:3], 7).shape == (3,)
