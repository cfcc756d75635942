"""Wrapped Floer complex of a cotangent fiber in D*S^1 for radial Hamiltonians.

With the circle normalized to circumference 1, the chords of h in the
contractible class are the points p of the fiber with h'(p) = 0.  Flat
intervals of h are Morse-Bott and collapse to one generator typed by the
slopes on either side; an isolated boundary kink where h still decreases
toward |p| = 1 is a type-N boundary chord and counts as a minimum.  The
differential of a maximum is the sum of its two neighbouring minima (the two
bi-gons), and the filtration level of a chord is its action
h(p) - p h'(p) = h(p).

Degree convention: maxima in degree 0, minima in degree 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .filtered_z2 import FilteredComplex, Generator, barcode, boundary_depth
from .profiles import PiecewisePoly, ProfileSum, sup_norm

FLAT_TOL = 1e-12
ROOT_SNAP = 1e-6
MAX_ORDER = 6


class NonGenericError(ValueError):
    """Critical structure that cannot be typed without guessing."""


@dataclass(frozen=True)
class RadialHamiltonian:
    """h on p in [-1, 1]; beyond |p| = 1 it continues with slope ``mu`` outward."""

    h: PiecewisePoly
    mu: float = 0.5
    radial: PiecewisePoly | None = None  # g on [0, 1] with h(p) = g(|p|), when known

    def __post_init__(self):
        if not (0.0 < self.mu < 1.0):
            raise ValueError(f"boundary slope must lie in (0, 1), got {self.mu!r}")
        if self.h.breaks[0] != -1.0 or self.h.breaks[-1] != 1.0:
            raise ValueError("h must be given on exactly [-1, 1]")

    @classmethod
    def from_profile(cls, fa: ProfileSum, mu: float = 0.5) -> "RadialHamiltonian":
        """h(p) = f_a(|p|), mirrored from the piecewise form of f_a on [0, 1]."""
        pw = fa.piecewise()
        breaks = list(pw.breaks)
        right = list(pw.pieces)
        left_breaks = [-b for b in reversed(breaks)]
        left = []
        for i in reversed(range(len(right))):
            # piece on [b_i, b_{i+1}] mirrored to [-b_{i+1}, -b_i]; local var u = p + b_{i+1}
            width = breaks[i + 1] - breaks[i]
            left.append(right[i](Polynomial([width, -1.0])))
        all_breaks = left_breaks[:-1] + breaks
        return cls(PiecewisePoly(tuple(all_breaks), tuple(left + right)), mu, pw)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[float], delta: float = 0.05, mu: float = 0.5) -> "RadialHamiltonian":
        return cls.from_profile(ProfileSum.of(coeffs, delta), mu)

    @classmethod
    def polynomial(cls, coef: Sequence[float], mu: float = 0.5) -> "RadialHamiltonian":
        """A single polynomial in p on [-1, 1]."""
        p = Polynomial(list(coef))
        return cls(PiecewisePoly((-1.0, 1.0), (p(Polynomial([-1.0, 1.0])),)), mu)

    def __call__(self, p: float) -> float:
        # the one-sided profile is evaluated at a break from its own piece, exactly
        return self.h(p) if self.radial is None else self.radial(abs(p))

    def slope(self, p: float) -> float:
        return self.h.derivative(1)(p)


def radial_action(h: RadialHamiltonian | PiecewisePoly, r: float) -> float:
    """y-intercept of the tangent line: h(r) - r h'(r)."""
    pw = h.h if isinstance(h, RadialHamiltonian) else h
    return pw(r) - r * pw.derivative(1)(r)


@dataclass(frozen=True)
class Chord:
    id: str
    p: float
    action: float
    kind: str
    span: tuple[float, float]

    def to_dict(self) -> dict:
        return {"id": self.id, "p": self.p, "action": self.action, "kind": self.kind, "span": list(self.span)}


@dataclass(frozen=True)
class ChordSet:
    chords: tuple[Chord, ...]

    def __iter__(self):
        return iter(self.chords)

    def __len__(self):
        return len(self.chords)

    def locations(self) -> list[float]:
        """Representatives together with the ends of every flat interval."""
        out = set()
        for c in self.chords:
            out.add(c.p)
            out.update(c.span)
        return sorted(out)

    def to_dict(self) -> dict:
        return {"chords": [c.to_dict() for c in self.chords]}


def _side_sign(poly: Polynomial, u: float, side: int) -> int:
    """Sign of poly just to one side of u, from its first nonvanishing derivative."""
    scale = max(1.0, float(np.abs(poly.coef).max()))
    q = poly
    for order in range(MAX_ORDER + 1):
        v = float(q(u))
        if abs(v) > FLAT_TOL * scale:
            return int(np.sign(v)) * (side**order)
        q = q.deriv()
        if not q.coef.any():
            break
    return 0


def _is_flat(poly: Polynomial) -> bool:
    return float(np.abs(poly.coef).max(initial=0.0)) <= FLAT_TOL


@dataclass
class _Crit:
    lo: float
    hi: float
    left: int   # sign of h' just left of lo (+1 rising toward lo)
    right: int  # sign of h' just right of hi


def _critical_structure(h: RadialHamiltonian) -> list[_Crit]:
    pw = h.h
    dh = pw.derivative(1)
    breaks = pw.breaks
    # 1. raw critical sets per piece: whole piece if flat, else isolated roots
    raw: list[tuple[float, float]] = []
    for i, q in enumerate(dh.pieces):
        lo, hi = breaks[i], breaks[i + 1]
        if hi <= lo:
            continue
        if _is_flat(q):
            raw.append((lo, hi))
            continue
        width = hi - lo
        # multiple roots at a junction come back split by ~sqrt(machine eps)
        snap = ROOT_SNAP * width
        for r in q.roots():
            if abs(r.imag) > snap:
                continue
            u = float(r.real)
            if -snap <= u <= width + snap:
                x = lo + min(max(u, 0.0), width)
                if u <= snap:
                    x = lo
                elif u >= width - snap:
                    x = hi
                raw.append((x, x))
    raw.sort()
    # 2. merge touching sets into maximal critical intervals
    merged: list[list[float]] = []
    for lo, hi in raw:
        if merged and lo <= merged[-1][1] + 1e-12:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    # 3. slope signs immediately outside each interval
    out = []
    for lo, hi in merged:
        left = _slope_sign(dh, lo, -1)
        right = _slope_sign(dh, hi, +1)
        out.append(_Crit(lo, hi, left, right))
    return out


def _slope_sign(dh: PiecewisePoly, x: float, side: int) -> int:
    """Sign of h' immediately beyond x on the given side (0 if it cannot be decided)."""
    b = dh.breaks
    if side < 0:
        if x <= b[0]:
            return 0
        i = int(np.searchsorted(b, x, side="left")) - 1
        i = max(i, 0)
        return _side_sign(dh.pieces[i], x - b[i], -1)
    if x >= b[-1]:
        return 0
    i = int(np.searchsorted(b, x, side="right")) - 1
    i = min(i, len(dh.pieces) - 1)
    return _side_sign(dh.pieces[i], x - b[i], +1)


def enumerate_class0_chords(h: RadialHamiltonian) -> ChordSet:
    """Class-[pt] chords in increasing p, with maxima and minima alternating."""
    pw = h.h
    crits = _critical_structure(h)
    found: list[tuple[float, tuple[float, float], str]] = []
    for c in crits:
        touches_left = c.lo <= -1.0
        touches_right = c.hi >= 1.0
        # "rises away" on each side: the slope extension beyond |p| = 1 always rises
        left_up = True if touches_left else (c.left < 0 if c.left else None)
        right_up = True if touches_right else (c.right > 0 if c.right else None)
        if left_up is None or right_up is None:
            raise NonGenericError(f"degenerate critical set at [{c.lo}, {c.hi}]")
        if c.lo == c.hi and (touches_left or touches_right) and not (touches_left and touches_right):
            raise NonGenericError(f"isolated critical point on the boundary at p = {c.lo}")
        if left_up and right_up:
            kind = "min"
        elif not left_up and not right_up:
            kind = "max"
        else:
            continue  # shoulder: a cancelling pair after perturbation
        if c.lo == c.hi:
            rep = c.lo
        elif touches_left and touches_right:
            rep = 0.0 if c.lo <= 0.0 <= c.hi else 0.5 * (c.lo + c.hi)
        elif touches_right:
            rep = c.lo
        elif touches_left:
            rep = c.hi
        else:
            rep = 0.5 * (c.lo + c.hi)
        found.append((rep, (c.lo, c.hi), kind))
    # type-N boundary kinks: h still falls toward the boundary, the extension rises
    dh = pw.derivative(1)
    boundary = []
    if not crits or crits[0].lo > -1.0:
        if dh(-1.0) > FLAT_TOL:
            boundary.append((-1.0, (-1.0, -1.0), "min"))
    if not crits or crits[-1].hi < 1.0:
        if dh(1.0) < -FLAT_TOL:
            boundary.append((1.0, (1.0, 1.0), "min"))
    found = sorted(found + boundary, key=lambda t: t[0])
    chords = []
    for j, (rep, span, kind) in enumerate(found):
        chords.append(Chord(f"{kind}{j}", rep, h(rep), kind, span))
    for a, b in zip(chords, chords[1:]):
        if a.kind == b.kind:
            raise NonGenericError(f"chords {a.id} and {b.id} do not alternate")
    if chords and (chords[0].kind != "min" or chords[-1].kind != "min"):
        raise NonGenericError("outermost chords must be minima")
    return ChordSet(tuple(chords))


def build_bigon_complex(h: RadialHamiltonian, chords: ChordSet | None = None) -> FilteredComplex:
    chords = chords or enumerate_class0_chords(h)
    seq = list(chords)
    gens = [Generator(c.id, 0 if c.kind == "max" else 1, c.action) for c in seq]
    diff = {}
    for j, c in enumerate(seq):
        if c.kind != "max":
            continue
        if j == 0 or j == len(seq) - 1:
            raise NonGenericError(f"maximum {c.id} lacks a neighbour on one side")
        diff[c.id] = {seq[j - 1].id, seq[j + 1].id}
    return FilteredComplex.build(gens, diff)


def s1_beta(a: Sequence[float], delta: float = 0.05, mu: float = 0.5) -> float:
    h = RadialHamiltonian.from_coeffs(a, delta, mu)
    beta = boundary_depth(build_bigon_complex(h))
    bound = sup_norm(a)
    if beta < bound - 1e-9:
        raise ArithmeticError(f"boundary depth {beta} below ||a||_inf = {bound}")
    return beta


def s1_summary(a: Sequence[float], delta: float = 0.05, mu: float = 0.5) -> dict:
    h = RadialHamiltonian.from_coeffs(a, delta, mu)
    chords = enumerate_class0_chords(h)
    cx = build_bigon_complex(h, chords)
    bc = barcode(cx)
    beta = bc.longest_finite()
    return {
        "coeffs": [float(x) for x in a],
        "delta": delta,
        "mu": mu,
        "chords": chords.to_dict()["chords"],
        "barcode": bc.to_dict()["bars"],
        "beta": beta,
        "sup_norm": sup_norm(a),
    }


def negated(h: RadialHamiltonian) -> RadialHamiltonian:
    """-h on [-1, 1], keeping the same outward slope so the ends stay type D."""
    flip = lambda pw: PiecewisePoly(pw.breaks, tuple(-p for p in pw.pieces), -pw.outside)  # noqa: E731
    return RadialHamiltonian(flip(h.h), h.mu, None if h.radial is None else flip(h.radial))


__all__ = [
    "RadialHamiltonian",
    "Chord",
    "ChordSet",
    "NonGenericError",
    "radial_action",
    "enumerate_class0_chords",
    "build_bigon_complex",
    "s1_beta",
    "s1_summary",
    "negated",
]
