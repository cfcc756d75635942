"""Geodesics between two points on round spheres and flat tori.

Both families are enumerated in closed form.  On the round sphere of radius
R, the geodesics from x0 to x1 (at distance d) run the short way or the long
way around a fixed great circle, with lengths d + 2 pi R m and
2 pi R - d + 2 pi R m, and the Morse index is (n - 1) floor(L / (pi R)).  On a
flat torus R^n / Lambda there is exactly one geodesic per lattice class, of
length |x1 - x0 + lambda| and index 0.

``check_assumption`` evaluates the index conditions of the quasi-flat
criterion for a class c and integer k, marking how each emptiness or
finiteness claim was closed: by the enumeration up to the cutoff, or by the
analytic index formula.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

CONJ_TOL = 1e-9


class ConjugateEndpointError(ValueError):
    pass


@dataclass(frozen=True)
class ModelManifold:
    kind: str  # "sphere" or "torus"
    dim: int
    cutoff: float
    distance: float | None = None  # sphere: geodesic distance d(x0, x1)
    radius: float = 1.0
    offset: tuple[float, ...] | None = None  # torus: x1 - x0
    basis: tuple[tuple[float, ...], ...] | None = None  # torus: lattice basis as rows

    def __post_init__(self):
        if not math.isfinite(self.cutoff) or self.cutoff <= 0:
            raise ValueError("cutoff must be a positive finite length")
        if self.kind == "sphere":
            if self.dim < 2:
                raise ValueError("round spheres need dim >= 2; use a flat torus of dim 1 for the circle")
            if self.distance is None or self.radius <= 0:
                raise ValueError("sphere needs a distance and a positive radius")
            d, half = self.distance, math.pi * self.radius
            if d <= CONJ_TOL * half:
                raise ConjugateEndpointError("x0 and x1 coincide")
            if abs(d - half) <= CONJ_TOL * half:
                raise ConjugateEndpointError("antipodal endpoints are conjugate")
            if d > half:
                raise ValueError(f"distance {d} exceeds the diameter {half}")
        elif self.kind == "torus":
            if self.offset is None or len(self.offset) != self.dim:
                raise ValueError("torus needs an offset of length dim")
            B = self.lattice()
            if B.shape != (self.dim, self.dim) or abs(np.linalg.det(B)) < 1e-12:
                raise ValueError("lattice basis must be an invertible dim x dim matrix")
            coords = np.linalg.solve(B.T, np.asarray(self.offset, float))
            if np.all(np.abs(coords - np.round(coords)) < 1e-12):
                raise ValueError("x0 and x1 coincide on the torus")
        else:
            raise ValueError(f"unknown manifold kind {self.kind!r}")

    @classmethod
    def sphere(cls, dim: int, distance: float, cutoff: float, radius: float = 1.0) -> "ModelManifold":
        return cls("sphere", dim, cutoff, distance=distance, radius=radius)

    @classmethod
    def torus(cls, offset: Sequence[float], cutoff: float, basis=None) -> "ModelManifold":
        off = tuple(float(x) for x in offset)
        if basis is not None:
            basis = tuple(tuple(float(x) for x in row) for row in basis)
        return cls("torus", len(off), cutoff, offset=off, basis=basis)

    def lattice(self) -> np.ndarray:
        if self.basis is None:
            return np.eye(self.dim)
        return np.asarray(self.basis, dtype=float)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dim": self.dim, "cutoff": self.cutoff}
        if self.kind == "sphere":
            out.update(distance=self.distance, radius=self.radius)
        else:
            out.update(offset=list(self.offset), basis=self.lattice().tolist())
        return out


@dataclass(frozen=True)
class GeodesicRecord:
    length: float
    class_label: tuple[int, ...]
    morse_index: int
    direction: str = ""  # sphere: "short" or "long"
    wrap: int = 0

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "class": list(self.class_label),
            "morse_index": self.morse_index,
            "direction": self.direction,
            "wrap": self.wrap,
        }


def sphere_index(length: float, dim: int, radius: float = 1.0) -> int:
    t = length / (math.pi * radius)
    if abs(t - round(t)) <= CONJ_TOL:
        raise ConjugateEndpointError(f"length {length} is a multiple of pi R")
    return (dim - 1) * math.floor(t)


def enumerate_geodesics(m: ModelManifold) -> list[GeodesicRecord]:
    if m.kind == "sphere":
        return _sphere_records(m)
    return _torus_records(m)


def _sphere_records(m: ModelManifold) -> list[GeodesicRecord]:
    d, R, L = m.distance, m.radius, m.cutoff
    circ = 2 * math.pi * R
    out = []
    for j in itertools.count():
        short, long_ = d + circ * j, circ - d + circ * j
        if short > L:
            break
        out.append(GeodesicRecord(short, (), sphere_index(short, m.dim, R), "short", j))
        if long_ <= L:
            out.append(GeodesicRecord(long_, (), sphere_index(long_, m.dim, R), "long", j))
    return sorted(out, key=lambda r: r.length)


def _torus_records(m: ModelManifold) -> list[GeodesicRecord]:
    B = m.lattice()
    v = np.asarray(m.offset, dtype=float)
    # |v + B^T k| <= L forces |k| <= (L + |v|) / sigma_min(B)
    smin = float(np.linalg.svd(B, compute_uv=False).min())
    bound = int(math.floor((m.cutoff + np.linalg.norm(v)) / smin)) + 1
    out = []
    for k in itertools.product(range(-bound, bound + 1), repeat=m.dim):
        length = float(np.linalg.norm(v + B.T @ np.asarray(k, dtype=float)))
        if length <= m.cutoff:
            out.append(GeodesicRecord(length, tuple(int(x) for x in k), 0))
    return sorted(out, key=lambda r: (r.length, r.class_label))


def jacobi_index(length: float, dim: int, curvature: float = 1.0) -> int:
    """Counts interior zeros of J'' + K J = 0, J(0) = 0, J'(0) = 1, times (dim - 1).

    Independent of the closed form: the zeros are located by event detection
    on a numerical integration.
    """

    def rhs(_t, y):
        return [y[1], -curvature * y[0]]

    def crossing(_t, y):
        return y[0]

    crossing.direction = 0
    # step just past t = 0 so the initial zero is not reported
    t0 = 1e-6
    y0 = [t0 - curvature * t0**3 / 6, 1 - curvature * t0**2 / 2]
    sol = solve_ivp(rhs, (t0, length), y0, events=crossing, rtol=1e-10, atol=1e-12, max_step=0.1)
    zeros = [t for t in sol.t_events[0] if t0 < t < length]
    return (dim - 1) * len(zeros)


# -- assumption check ---------------------------------------------------------


@dataclass(frozen=True)
class IndexSet:
    index: int
    count: int | None  # None when infinite
    lengths: tuple[float, ...]
    mechanism: str  # "closed-form" or "cutoff"

    @property
    def empty(self) -> bool:
        return self.count == 0

    @property
    def finite(self) -> bool:
        return self.count is not None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "count": "infinite" if self.count is None else self.count,
            "lengths_below_cutoff": list(self.lengths),
            "mechanism": self.mechanism,
        }


@dataclass(frozen=True)
class AssumptionReport:
    class_label: tuple[int, ...]
    k: int
    dim: int
    flags: dict
    sets: dict
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def theorem_holds(self) -> bool:
        return all(self.flags[n] for n in ("i_theorem", "ii", "iv"))

    @property
    def assumption_holds(self) -> bool:
        return all(self.flags[n] for n in ("i_assumption", "ii", "iii_assumption", "iv"))

    def to_dict(self) -> dict:
        return {
            "class": list(self.class_label),
            "k": self.k,
            "dim": self.dim,
            "flags": dict(self.flags),
            "theorem_holds": self.theorem_holds,
            "assumption_holds": self.assumption_holds,
            "index_sets": {str(i): s.to_dict() for i, s in sorted(self.sets.items())},
            "notes": list(self.notes),
        }


def _index_set(m: ModelManifold | None, records, class_label, index: int, cutoff: float) -> IndexSet:
    found = tuple(r.length for r in records if r.class_label == tuple(class_label) and r.morse_index == index)
    if m is None:
        return IndexSet(index, len(found), found, "cutoff")
    if m.kind == "torus":
        # one geodesic per class, always index 0
        return IndexSet(index, 1 if index == 0 else 0, found, "closed-form")
    if index < 0 or index % (m.dim - 1):
        return IndexSet(index, 0, found, "closed-form")
    # index l = (n-1) j  <=>  length in (j pi R, (j+1) pi R): exactly one geodesic
    horizon = (index // (m.dim - 1) + 1) * math.pi * m.radius
    if cutoff >= horizon:
        return IndexSet(index, len(found), found, "cutoff")
    return IndexSet(index, 1, found, "closed-form")


def check_assumption(
    records: Sequence[GeodesicRecord],
    class_label: Sequence[int],
    k: int,
    manifold: ModelManifold | None = None,
    dim: int | None = None,
) -> AssumptionReport:
    """Index conditions for class c and integer k.

    Without ``manifold`` every emptiness claim holds only up to the cutoff of
    the record list and is marked as such.
    """
    if manifold is not None:
        dim = manifold.dim
        cutoff = manifold.cutoff
    else:
        if dim is None:
            raise ValueError("dim is required when no manifold is given")
        cutoff = max((r.length for r in records), default=0.0)
    label = tuple(class_label)
    sets = {i: _index_set(manifold, records, label, i, cutoff) for i in (k - 1, k, k + 1, k + 2)}
    flags = {
        "i_theorem": not sets[k].empty and sets[k + 1].empty,
        "i_assumption": not sets[k].empty,
        "ii": sets[k].finite and sets[k + 2].finite,
        "iii_assumption": sets[k - 1].empty and sets[k + 1].empty,
        "iv": dim != 2 or k != 0,
    }
    notes = []
    if any(s.mechanism == "cutoff" and s.empty for s in sets.values()) and manifold is None:
        notes.append(f"emptiness verified only for lengths <= {cutoff}")
    return AssumptionReport(label, k, dim, flags, sets, tuple(notes))


def census(m: ModelManifold, k: int, class_label: Sequence[int] | None = None) -> dict:
    records = enumerate_geodesics(m)
    if class_label is None:
        class_label = () if m.kind == "sphere" else (0,) * m.dim
    report = check_assumption(records, class_label, k, manifold=m)
    return {
        "manifold": m.to_dict(),
        "records": [r.to_dict() for r in records],
        "report": report.to_dict(),
    }


def discrepancy_notes() -> list[dict]:
    """Cases where the literal enumeration disagrees with the expected verdict.

    The circle is expected to fail condition (i) for k = 0, and S^2 to satisfy
    the conditions with k = 2.  Both are recomputed here and the computed
    flags are reported next to the expectation.
    """
    out = []
    circle = ModelManifold.torus([0.3], cutoff=10.0)
    r1 = check_assumption(enumerate_geodesics(circle), (0,), 0, manifold=circle)
    out.append(
        {
            "case": "S^1 (flat T^1), k=0, class (0,)",
            "claimed": "condition (i) fails",
            "computed_flags": r1.flags,
            "agrees": not r1.flags["i_theorem"],
        }
    )
    s2 = ModelManifold.sphere(2, 1.0, cutoff=20.0)
    r2 = check_assumption(enumerate_geodesics(s2), (), 2, manifold=s2)
    out.append(
        {
            "case": "S^2 round, d=1, k=2, trivial class",
            "claimed": "assumption holds",
            "computed_flags": r2.flags,
            "agrees": r2.theorem_holds,
        }
    )
    return out
