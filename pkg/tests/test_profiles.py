from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflat.profiles import (
    BumpProfile,
    ProfileError,
    ProfileSum,
    active_terms,
    build_bump,
    check_bump,
    deriv_sum,
    eval_sum,
    hofer_upper_bound,
    minmax_min_osc,
    parse_coeffs,
    scan_minmax_min,
    sup_norm,
)

coeff_vectors = st.lists(st.floats(-5, 5, allow_nan=False), max_size=7)

# Closed form for delta = 1/20, derived symbolically from the piecewise-quadratic f''.
SLOPE_AT_QUARTER = Fraction(160, 41)
CURVATURE_AT_HALF = Fraction(-960, 41)
VALUE_AT_QUARTER = Fraction(16, 41)
VALUE_AT_TENTH = Fraction(7, 656)


def test_bump_closed_form_values():
    f = build_bump(0.05)
    assert f.df(0.25) == pytest.approx(float(SLOPE_AT_QUARTER), rel=1e-12)
    assert f.d2f(0.5) == pytest.approx(float(CURVATURE_AT_HALF), rel=1e-12)
    assert f(0.25) == pytest.approx(float(VALUE_AT_QUARTER), rel=1e-12)
    assert f(0.1) == pytest.approx(float(VALUE_AT_TENTH), rel=1e-12)


def test_bump_peak_and_edges_are_exact():
    f = build_bump(0.05)
    assert f(0.5) == 1.0 and f(0.05) == 0.0 and f(0.02) == 0.0
    assert f.df(0.5) == 0.0


@pytest.mark.parametrize("delta", [1e-3, 0.01, 0.05, 0.1, 0.2, 0.249, 0.249999])
def test_bump_invariants_across_delta(delta):
    assert check_bump(build_bump(delta)) == []


@pytest.mark.parametrize("delta", [0.0, -0.1, 0.25, 0.3])
def test_bad_delta_rejected(delta):
    with pytest.raises(ProfileError):
        build_bump(delta)


def test_check_bump_catches_a_broken_profile():
    good = build_bump(0.05)
    data = good.to_dict()
    data["pieces"][1][0] += 1e-3
    assert check_bump(BumpProfile.from_dict(data))


def test_profile_round_trip():
    f = build_bump(0.05)
    g = BumpProfile.from_dict(f.to_dict())
    s = np.linspace(0, 1, 101)
    assert np.array_equal(f.f.evaluate(s), g.f.evaluate(s))


def test_eval_examples():
    assert eval_sum(ProfileSum.of([1.0]), 0.75) == 1.0
    assert eval_sum(ProfileSum.of([0.5, -2.0]), 3 / 8) == -2.0
    zero = ProfileSum.of([])
    assert all(eval_sum(zero, s) == 0.0 for s in np.linspace(0, 1, 11))


def test_peaks_and_supports():
    fa = ProfileSum.of([1, 1, 1], 0.05)
    assert [fa.peak(i) for i in range(3)] == [0.75, 0.375, 0.1875]
    assert fa.support(0) == pytest.approx((0.525, 0.975))


@settings(max_examples=80, deadline=None)
@given(coeff_vectors, coeff_vectors)
def test_linearity_in_coefficients(a, b):
    n = max(len(a), len(b))
    a2, b2 = a + [0.0] * (n - len(a)), b + [0.0] * (n - len(b))
    s_grid = np.linspace(0, 1, 257)
    fa, fb, fab = ProfileSum.of(a2), ProfileSum.of(b2), ProfileSum.of([x + y for x, y in zip(a2, b2)])
    for s in s_grid:
        # single active term: the sum is one product, so equality is exact up to a*f rounding
        assert eval_sum(fab, s) == pytest.approx(eval_sum(fa, s) + eval_sum(fb, s), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(coeff_vectors)
def test_at_most_one_active_term(a):
    fa = ProfileSum.of([x if x else 1.0 for x in a])
    for s in np.linspace(0, 1, 513):
        assert len(active_terms(fa, s)) <= 1


@settings(max_examples=80, deadline=None)
@given(coeff_vectors)
def test_piecewise_matches_term_sum(a):
    fa = ProfileSum.of(a)
    pw = fa.piecewise()
    s = np.linspace(0, 1, 301)
    np.testing.assert_allclose(pw.evaluate(s), [eval_sum(fa, x) for x in s], atol=1e-9)
    dpw = pw.derivative(1)
    for x in s[1:-1:7]:
        assert dpw(x) == pytest.approx(deriv_sum(fa, x), abs=1e-6)


def test_minmax_examples():
    assert minmax_min_osc([]) == (0.0, 0.0, 0.0)
    assert minmax_min_osc([-3, 1]) == (0.0, -3.0, 4.0)
    assert minmax_min_osc([1])[0] == 0.0


@settings(max_examples=120, deadline=None)
@given(coeff_vectors)
def test_minmax_identity_and_scan_oracle(a):
    fa = ProfileSum.of(a)
    minmax, lowest, osc = minmax_min_osc(fa)
    assert minmax - lowest == max(0.0, -min(a, default=0.0))
    smm, slo = scan_minmax_min(fa)
    assert abs(smm - minmax) <= 1e-9 and abs(slo - lowest) <= 1e-9
    assert osc <= 2 * sup_norm(a) + 1e-12


def test_hofer_examples():
    assert hofer_upper_bound([1, 2], [1, 2]) == (0.0, 0.0)
    assert hofer_upper_bound([-3, 1], []) == (6.0, 4.0)
    assert hofer_upper_bound([0.7], [0.0])[0] == pytest.approx(1.4)


@pytest.mark.parametrize("text, value", [("[0.7, 0.2]", [0.7, 0.2]), ("0.7,0.2", [0.7, 0.2]), ("[]", []), ("-3", [-3.0])])
def test_parse_coeffs(text, value):
    assert parse_coeffs(text) == value


@pytest.mark.parametrize("text", ["abc", "[1, true]", '["x"]', "[1e999]"])
def test_parse_coeffs_rejects(text):
    with pytest.raises(ValueError):
        parse_coeffs(text)
