import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qflat.geodesic_census import (
    ConjugateEndpointError,
    ModelManifold,
    check_assumption,
    census,
    discrepancy_notes,
    enumerate_geodesics,
    jacobi_index,
    sphere_index,
)

PI = math.pi


def test_s3_records():
    recs = enumerate_geodesics(ModelManifold.sphere(3, 1.0, 12.0))
    assert [r.length for r in recs] == pytest.approx([1, 2 * PI - 1, 2 * PI + 1, 4 * PI - 1])
    assert [r.morse_index for r in recs] == [0, 2, 4, 6]
    assert {r.class_label for r in recs} == {()}


def test_s2_records():
    recs = enumerate_geodesics(ModelManifold.sphere(2, 1.0, 14.0))
    assert [r.morse_index for r in recs] == [0, 1, 2, 3, 4]


def test_radius_scales_lengths():
    recs = enumerate_geodesics(ModelManifold.sphere(3, 2.0, 24.0, radius=2.0))
    assert [r.morse_index for r in recs] == [0, 2, 4, 6]
    assert recs[1].length == pytest.approx(4 * PI - 2)


def test_flat_torus_one_geodesic_per_class():
    m = ModelManifold.torus([0.3, 0.0], 3.0)
    recs = enumerate_geodesics(m)
    labels = [r.class_label for r in recs]
    assert len(labels) == len(set(labels))
    assert all(r.morse_index == 0 for r in recs)
    by = {r.class_label: r.length for r in recs}
    assert by[(0, 0)] == pytest.approx(0.3)
    assert by[(1, 0)] == pytest.approx(1.3) and by[(-1, 0)] == pytest.approx(0.7)
    assert by[(0, 1)] == pytest.approx(math.hypot(0.3, 1)) == by[(0, -1)]


def test_torus_enumeration_is_complete():
    m = ModelManifold.torus([0.3, 0.1], 2.5, basis=[[1.0, 0.0], [0.5, 1.0]])
    recs = {r.class_label for r in enumerate_geodesics(m)}
    brute = set()
    for i in range(-10, 11):
        for j in range(-10, 11):
            v = (0.3 + i * 1.0 + j * 0.5, 0.1 + j * 1.0)
            if math.hypot(*v) <= 2.5:
                brute.add((i, j))
    assert recs == brute


@pytest.mark.parametrize("d", [0.0, PI, PI + 0.1])
def test_bad_sphere_endpoints(d):
    with pytest.raises(ValueError):
        ModelManifold.sphere(3, d, 10.0)


def test_antipodal_is_conjugate():
    with pytest.raises(ConjugateEndpointError):
        ModelManifold.sphere(3, PI, 10.0)
    with pytest.raises(ConjugateEndpointError):
        sphere_index(2 * PI, 3)


def test_torus_coincident_points_rejected():
    with pytest.raises(ValueError):
        ModelManifold.torus([1.0, 0.0], 3.0)


def test_jacobi_oracle_random_samples():
    rng = random.Random(11)
    for _ in range(100):
        n, d, m = rng.randint(2, 7), rng.uniform(0.05, PI - 0.05), rng.randint(0, 4)
        for length in (d + 2 * PI * m, 2 * PI - d + 2 * PI * m):
            assert sphere_index(length, n) == jacobi_index(length, n)
    assert jacobi_index(5.0, 4, curvature=0.0) == 0


def test_s3_assumption_k0():
    m = ModelManifold.sphere(3, 1.0, 12.0)
    rep = check_assumption(enumerate_geodesics(m), (), 0, manifold=m)
    assert rep.flags["i_theorem"] and rep.flags["ii"] and rep.flags["iv"]
    assert rep.theorem_holds and rep.assumption_holds
    assert rep.sets[2].count == 1 and rep.sets[1].mechanism == "closed-form"


def test_s2_k0_fails_dimension_condition():
    m = ModelManifold.sphere(2, 1.0, 14.0)
    rep = check_assumption(enumerate_geodesics(m), (), 0, manifold=m)
    assert rep.flags["iv"] is False
    assert not rep.theorem_holds


def test_circle_k0_literal_flags_pass():
    m = ModelManifold.torus([0.3], 10.0)
    rep = check_assumption(enumerate_geodesics(m), (0,), 0, manifold=m)
    assert rep.flags["i_theorem"] and rep.flags["ii"] and rep.flags["iii_assumption"]


def test_discrepancy_notes_are_recomputed():
    notes = {n["case"].split(",")[0]: n for n in discrepancy_notes()}
    circle = notes["S^1 (flat T^1)"]
    assert circle["agrees"] is False and circle["computed_flags"]["i_theorem"] is True
    s2 = notes["S^2 round"]
    assert s2["agrees"] is False and s2["computed_flags"]["i_theorem"] is False


def test_records_only_mode_marks_cutoff():
    recs = enumerate_geodesics(ModelManifold.sphere(3, 1.0, 12.0))
    rep = check_assumption(recs, (), 0, dim=3)
    assert all(s.mechanism == "cutoff" for s in rep.sets.values())
    assert rep.notes


def test_census_document():
    doc = census(ModelManifold.sphere(3, 1.0, 12.0), 0)
    assert doc["report"]["theorem_holds"] is True
    assert len(doc["records"]) == 4


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.floats(0.05, PI - 0.05), st.floats(1.0, 20.0), st.floats(0.0, 20.0), st.integers(0, 4))
def test_nonempty_flags_are_cutoff_monotone(n, d, cutoff, extra, k):
    lo = ModelManifold.sphere(n, d, cutoff)
    hi = ModelManifold.sphere(n, d, cutoff + extra)
    a = check_assumption(enumerate_geodesics(lo), (), k, manifold=lo)
    b = check_assumption(enumerate_geodesics(hi), (), k, manifold=hi)
    for i, s in a.sets.items():
        if not s.empty:
            assert not b.sets[i].empty
    assert a.flags == b.flags
