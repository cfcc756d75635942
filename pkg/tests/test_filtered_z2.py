import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflat.filtered_z2 import (
    INF,
    Barcode,
    ClassVanishesError,
    CocycleClass,
    DanglingIdError,
    DegreeMismatchError,
    DuplicateIdError,
    FilteredComplex,
    LevelIncreaseError,
    NonZeroSquareError,
    NotACocycleError,
    SizeLimitError,
    barcode,
    boundary_depth,
    boundary_depth_bruteforce,
    cohomology_ranks,
    random_complex,
    shift_levels,
    spectral_level,
    validate,
)

# the bigon triple: one maximum at action 0.7 bounding the two neighbouring minima
TRIPLE = FilteredComplex.build([("x1", 0, 0.7), ("x2", 1, 0.0), ("x3", 1, 0.0)], {"x1": ["x2", "x3"]})
CHAINS = FilteredComplex.build(
    [("g1", 0, 5.0), ("g2", 1, 1.0), ("g3", 0, 3.0), ("g4", 1, 2.0)], {"g1": ["g2"], "g3": ["g4"]}
)


def complexes(max_n=12):
    return st.builds(
        lambda seed, n, ties: random_complex(random.Random(seed), n, discrete_levels=ties),
        st.integers(0, 2**32),
        st.integers(0, max_n),
        st.booleans(),
    )


# -- validation ---------------------------------------------------------------


def test_empty_complex_is_valid():
    assert validate(FilteredComplex()).ok


def test_triple_is_valid():
    assert validate(TRIPLE).ok


def test_level_increase_is_reported_with_edge():
    bad = FilteredComplex.build([("x1", 0, 0.7), ("x2", 1, 0.8), ("x3", 1, 0.0)], {"x1": ["x2", "x3"]})
    v = validate(bad)
    assert not v.ok and v.kind == "level-monotonicity" and v.ids == ("x1", "x2")
    with pytest.raises(LevelIncreaseError):
        barcode(bad)


@pytest.mark.parametrize(
    "gens, diff, err",
    [
        ([("a", 0, 0.0), ("a", 1, 0.0)], {}, DuplicateIdError),
        ([("a", 0, 1.0)], {"a": ["b"]}, DanglingIdError),
        ([("a", 0, 1.0), ("b", 2, 0.0)], {"a": ["b"]}, DegreeMismatchError),
        ([("a", 0, 2.0), ("b", 1, 1.0), ("c", 2, 0.0)], {"a": ["b"], "b": ["c"]}, NonZeroSquareError),
    ],
)
def test_invalid_complexes(gens, diff, err):
    with pytest.raises(err):
        barcode(FilteredComplex.build(gens, diff))


def test_level_tolerance_is_1e_12():
    ok = FilteredComplex.build([("a", 0, 1.0), ("b", 1, 1.0 + 5e-13)], {"a": ["b"]})
    bad = FilteredComplex.build([("a", 0, 1.0), ("b", 1, 1.0 + 5e-12)], {"a": ["b"]})
    assert validate(ok).ok and not validate(bad).ok


# -- barcodes and boundary depth ------------------------------------------------


def test_single_generator_gives_one_infinite_bar():
    bc = barcode(FilteredComplex.build([("u", 0, 2.5)]))
    assert [(b.degree, b.low, b.high) for b in bc.bars] == [(0, 2.5, INF)]


def test_two_chains_give_bars_of_length_4_and_1():
    bc = barcode(CHAINS)
    assert sorted(b.length for b in bc.finite()) == [1.0, 4.0]
    assert bc.infinite() == []
    assert boundary_depth(CHAINS) == 4.0
    assert boundary_depth_bruteforce(CHAINS) == 4.0


def test_triple_barcode():
    bc = barcode(TRIPLE)
    (fin,) = bc.finite()
    (inf,) = bc.infinite()
    assert fin.length == pytest.approx(0.7, abs=1e-12)
    assert inf.low == 0.0 and inf.degree == 1
    assert boundary_depth(TRIPLE) == 0.7
    assert boundary_depth_bruteforce(TRIPLE) == 0.7


def test_zero_differential_has_zero_depth():
    cx = FilteredComplex.build([("a", 0, 1.0), ("b", 1, 3.0)])
    assert boundary_depth(cx) == 0.0 == boundary_depth_bruteforce(cx)


def test_bruteforce_size_limit():
    cx = FilteredComplex.build([(f"g{i}", 0, 0.0) for i in range(21)])
    with pytest.raises(SizeLimitError):
        boundary_depth_bruteforce(cx)


def test_barcode_json_round_trip():
    bc = barcode(TRIPLE)
    again = Barcode.from_dict(bc.to_dict())
    assert again.signature() == bc.signature()


def test_complex_json_round_trip():
    assert FilteredComplex.loads(CHAINS.dumps()).to_dict() == CHAINS.to_dict()


@settings(max_examples=150, deadline=None)
@given(complexes())
def test_depth_matches_bruteforce_and_longest_bar(cx):
    beta = boundary_depth(cx)
    assert abs(beta - boundary_depth_bruteforce(cx)) <= 1e-9
    assert abs(beta - barcode(cx).longest_finite()) <= 1e-9


@settings(max_examples=80, deadline=None)
@given(complexes(), st.randoms(use_true_random=False))
def test_barcode_invariant_under_input_order_and_relabel(cx, rnd):
    gens = list(cx.generators)
    rnd.shuffle(gens)
    rename = {g.id: f"r{i}" for i, g in enumerate(gens)}
    moved = FilteredComplex.build(
        [(rename[g.id], g.degree, g.level) for g in gens],
        {rename[k]: [rename[x] for x in v] for k, v in cx.differential.items()},
    )
    assert barcode(moved).signature() == barcode(cx).signature()


@settings(max_examples=80, deadline=None)
@given(complexes())
def test_infinite_bars_match_cohomology_ranks(cx):
    counts: dict[int, int] = {}
    for b in barcode(cx).infinite():
        counts[b.degree] = counts.get(b.degree, 0) + 1
    ranks = {k: r for k, r in cohomology_ranks(cx).items() if r}
    assert counts == ranks


# -- spectral levels and shifts ----------------------------------------------------


def test_spectral_level_single_generator():
    cx = FilteredComplex.build([("u", 0, 1.25)])
    assert spectral_level(cx, CocycleClass.of("u")) == 1.25


def test_spectral_level_drops_along_coboundary():
    # d(w) = u + v, so {u} ~ {v}, and v sits lower
    cx = FilteredComplex.build([("w", 0, 3.0), ("u", 1, 3.0), ("v", 1, 2.0)], {"w": ["u", "v"]})
    assert spectral_level(cx, CocycleClass.of("u")) == 2.0


def test_spectral_level_of_coboundary_vanishes():
    with pytest.raises(ClassVanishesError):
        spectral_level(TRIPLE, CocycleClass.of("x2", "x3"))


def test_spectral_level_rejects_non_cocycle():
    with pytest.raises(NotACocycleError):
        spectral_level(TRIPLE, CocycleClass.of("x1"))


def test_shift_by_zero_is_identity():
    assert shift_levels(TRIPLE, 0.0).to_dict() == TRIPLE.to_dict()


def test_shift_moves_bars():
    bc = barcode(shift_levels(TRIPLE, 1.3))
    assert [(b.low, b.high) for b in bc.finite()] == [pytest.approx((1.3, 2.0))]
    assert bc.infinite()[0].low == pytest.approx(1.3)


def test_shift_round_trip():
    back = shift_levels(shift_levels(TRIPLE, -0.7), 0.7)
    assert [g.level for g in back.generators] == pytest.approx([g.level for g in TRIPLE.generators])


@settings(max_examples=60, deadline=None)
@given(complexes(8), st.floats(-5, 5))
def test_shift_preserves_depth_and_moves_spectral_levels(cx, c):
    moved = shift_levels(cx, c)
    assert abs(boundary_depth(moved) - boundary_depth(cx)) <= 1e-9
    for b in barcode(cx).infinite():
        if not cx.d(b.creator_id):
            cls = CocycleClass.of(b.creator_id)
            assert abs(spectral_level(moved, cls) - spectral_level(cx, cls) - c) <= 1e-9
