import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflat.persistence_metrics import bottleneck_distance
from qflat.profiles import minmax_min_osc
from qflat.sublevel_grid import (
    GridField,
    GridSizeError,
    annulus_field,
    cubical_barcode,
    grid_coords,
    lipschitz_bound,
    morse_beta_estimate,
    parse_resolution,
    tolerance,
)


def counts(bc):
    fin = {0: 0, 1: 0}
    inf = {0: 0, 1: 0}
    for b in bc.bars:
        (fin if b.finite else inf)[b.degree] += 1
    return fin, inf


def test_zero_field():
    f = annulus_field([], 0.05, (16, 16), eps=0.0)
    assert not f.values.any()


def test_single_well_value():
    f = annulus_field([-1.0], 0.05, (12, 17), eps=0.0)
    _, p = grid_coords(12, 17)
    for k, pk in ((3, -5 / 8), (13, 5 / 8)):
        assert p[k] == pytest.approx(pk)
        assert np.all(f.values[:, k] == 1.0)


def test_field_extremes():
    f = annulus_field([-3.0, 1.0], 0.05, (8, 33), eps=0.0)
    assert f.values.min() == -1.0 and f.values.max() == 3.0


def test_constant_field_has_only_essential_bars():
    bc = cubical_barcode(GridField(np.full((10, 9), 2.0)))
    assert [(b.degree, b.low, b.finite) for b in bc.bars] == [(0, 2.0, False), (1, 2.0, False)]


@pytest.mark.parametrize("method", ["union_find", "reduction"])
def test_double_well_in_p(method):
    barrier = 1.7
    _, p = grid_coords(64, 65)
    row = barrier * ((2 * p) ** 2 - 1) ** 2
    bc = cubical_barcode(GridField(np.tile(row, (64, 1))), method=method)
    fin0 = [b for b in bc.finite() if b.degree == 0]
    assert len(fin0) == 1
    assert fin0[0].length == pytest.approx(barrier, abs=1e-12)
    assert counts(bc)[1] == {0: 1, 1: 1}


fields = st.builds(
    lambda shape, seed, ties: np.random.default_rng(seed).integers(0, 4, size=shape).astype(float)
    if ties
    else np.random.default_rng(seed).normal(size=shape),
    st.tuples(st.integers(8, 13), st.integers(8, 13)),
    st.integers(0, 2**32),
    st.booleans(),
)


@settings(max_examples=40, deadline=None)
@given(fields)
def test_union_find_matches_reduction(values):
    f = GridField(values)
    assert cubical_barcode(f).signature() == cubical_barcode(f, "reduction").signature()


def test_union_find_matches_reduction_on_annulus_64():
    f = annulus_field([-3.0, 1.0], 0.05, (64, 64), 1e-3)
    fast, slow = cubical_barcode(f), cubical_barcode(f, "reduction")
    assert fast.signature() == slow.signature()
    # frozen regression value for this grid
    assert fast.longest_finite() == pytest.approx(2.980736475730716, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), max_size=4), st.floats(0, 1e-2))
def test_annulus_has_one_essential_bar_per_degree(a, eps):
    _, inf = counts(cubical_barcode(annulus_field(a, 0.05, (24, 32), eps)))
    assert inf == {0: 1, 1: 1}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.floats(0, 0.5))
def test_sup_norm_perturbation_moves_bars_by_at_most_eps(seed, eps):
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(10, 12))
    moved = base + rng.uniform(-eps, eps, size=base.shape)
    d = bottleneck_distance(cubical_barcode(GridField(base)), cubical_barcode(GridField(moved)))
    assert d <= eps + 1e-12


def test_single_well_estimate():
    est = morse_beta_estimate([-1.0], 0.05, (256, 256), 1e-3)
    assert est.beta_hat == pytest.approx(1.0, abs=0.02)


def test_resolution_convergence():
    a = [-3.0, 1.0]
    coarse = morse_beta_estimate(a, 0.05, (128, 128), 1e-3)
    fine = morse_beta_estimate(a, 0.05, (256, 256), 1e-3)
    assert abs(coarse.beta_hat - fine.beta_hat) <= coarse.tol


@pytest.mark.parametrize("a", [[], [2.0], [-3.0, 1.0], [0.5, -0.25, 1.0]])
def test_estimate_target_and_pass(a):
    est = morse_beta_estimate(a, 0.05, (64, 64), 1e-3)
    minmax, lowest, _ = minmax_min_osc(a)
    assert est.target == minmax - lowest == -min([0.0, *a])
    assert est.passed


def test_zero_coefficients_estimate():
    est = morse_beta_estimate([], 0.05, (32, 32), 1e-3)
    assert est.target == 0.0 and est.passed
    assert est.beta_hat <= 2 * 1e-3 + 1e-12


def test_tolerance_closed_form():
    # max |f'| = 160/41 for delta = 1/20; the steepest term is 2 * 3 * f'
    dp = 2 * (2 * 3 * 160 / 41) + 2 * 1e-3
    dq = 2 * math.pi * 1e-3
    lip = dp + dq
    assert lipschitz_bound([-3.0, 1.0], 0.05, 1e-3) == pytest.approx(lip, rel=1e-12)
    h = 2 / 511
    assert tolerance([-3.0, 1.0], 0.05, (512, 512), 1e-3) == pytest.approx(2 * lip * h + 3e-3)


def test_dump_round_trip(tmp_path):
    f = annulus_field([0.4, -1.0], 0.05, (9, 11), 1e-3, seed=3)
    path = tmp_path / "field.bin"
    f.dump(path)
    g = GridField.load(path)
    assert np.array_equal(f.values, g.values)
    assert g.meta["coeffs"] == [0.4, -1.0] and g.meta["seed"] == 3
    header = path.read_bytes().split(b"\n", 1)[0]
    assert b"grid-field/1" in header


def test_size_guard():
    with pytest.raises(GridSizeError):
        cubical_barcode(GridField(np.zeros((1001, 1001))))


def test_too_small_grid():
    with pytest.raises(GridSizeError):
        GridField(np.zeros((4, 20)))


def test_parse_resolution():
    assert parse_resolution("256x128") == (256, 128)
    with pytest.raises(ValueError):
        parse_resolution("256")
