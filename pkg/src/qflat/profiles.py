"""Bump profiles and the disjoint-support coefficient family f_a.

The bump f is built second-derivative first: f'' is a symmetric piecewise
quadratic vanishing at delta, 1/4, 3/4 and 1 - delta with sign pattern
(+, -, +), integrated twice from f(delta) = f'(delta) = 0 and scaled so that
f(1/2) = 1.  All pieces are exact ``numpy.polynomial.Polynomial`` objects in
the absolute variable, so derivatives and critical values come from the
representation, not from sampling.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

GRID_POINTS = 10_001


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class PiecewisePoly:
    """A function given by polynomials on consecutive closed intervals.

    ``breaks`` has one more entry than ``pieces``.  Piece i is a polynomial in
    the local variable ``x - breaks[i]`` (keeps narrow pieces well
    conditioned).  Outside [breaks[0], breaks[-1]] the value is ``outside``.
    """

    breaks: tuple[float, ...]
    pieces: tuple[Polynomial, ...]
    outside: float = 0.0

    def __post_init__(self):
        if len(self.breaks) != len(self.pieces) + 1:
            raise ProfileError("breaks/pieces length mismatch")
        if any(b1 < b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise ProfileError("breaks must be non-decreasing")

    def piece_index(self, x: float) -> int | None:
        if x < self.breaks[0] or x > self.breaks[-1]:
            return None
        i = int(np.searchsorted(self.breaks, x, side="right")) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def __call__(self, x: float) -> float:
        i = self.piece_index(x)
        return self.outside if i is None else float(self.pieces[i](x - self.breaks[i]))

    def derivative(self, m: int = 1) -> "PiecewisePoly":
        return PiecewisePoly(self.breaks, tuple(p.deriv(m) for p in self.pieces), 0.0)

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.full(xs.shape, self.outside)
        idx = np.searchsorted(self.breaks, xs, side="right") - 1
        idx = np.clip(idx, 0, len(self.pieces) - 1)
        inside = (xs >= self.breaks[0]) & (xs <= self.breaks[-1])
        for i, p in enumerate(self.pieces):
            sel = inside & (idx == i)
            if sel.any():
                out[sel] = p(xs[sel] - self.breaks[i])
        return out


def _quad_vanishing(a: float, b: float, scale: float) -> Polynomial:
    """scale * u * (w - u) in the local variable u = s - a, w = b - a."""
    return scale * Polynomial([0.0, b - a, -1.0])


@dataclass(frozen=True)
class BumpProfile:
    delta: float
    f: PiecewisePoly

    @functools.cached_property
    def df(self) -> PiecewisePoly:
        return self.f.derivative(1)

    @functools.cached_property
    def d2f(self) -> PiecewisePoly:
        return self.f.derivative(2)

    def __call__(self, s: float) -> float:
        return self.f(s)

    def to_dict(self) -> dict:
        return {
            "delta": float(f"{self.delta:.17g}"),
            "breaks": [float(f"{b:.17g}") for b in self.f.breaks],
            "pieces": [[float(f"{c:.17g}") for c in p.coef] for p in self.f.pieces],
        }

    @classmethod
    def from_dict(cls, data) -> "BumpProfile":
        f = PiecewisePoly(tuple(data["breaks"]), tuple(Polynomial(c) for c in data["pieces"]))
        return cls(float(data["delta"]), f)


def _integrate_from(second: Sequence[Polynomial], breaks: Sequence[float]) -> list[Polynomial]:
    """Integrate twice with value and slope 0 at breaks[0], continuous across breaks."""
    out = []
    v0 = d0 = 0.0
    for p2, lo, hi in zip(second, breaks[:-1], breaks[1:]):
        p1 = p2.integ() + d0
        p0 = p1.integ() + v0
        out.append(p0)
        d0, v0 = float(p1(hi - lo)), float(p0(hi - lo))
    return out


@functools.lru_cache(maxsize=64)
def build_bump(delta: float) -> BumpProfile:
    if not (0.0 < delta < 0.25):
        raise ProfileError(f"delta must lie in (0, 1/4), got {delta!r}")
    inner_breaks = (delta, 0.25, 0.5)

    def shape(c_out: float, c_in: float) -> list[Polynomial]:
        return [_quad_vanishing(delta, 0.25, c_out), _quad_vanishing(0.25, 0.75, -c_in)]

    # f'(1/2) and f(1/2) are linear in (c_out, c_in); solve for 0 and 1.  The
    # outer curvature is parametrized as k / w^3 so the system stays balanced
    # as the rising piece of width w = 1/4 - delta shrinks.
    w3 = (0.25 - delta) ** 3
    cols = []
    for k_out, c_in in ((1.0, 0.0), (0.0, 1.0)):
        half = _integrate_from(shape(k_out / w3, c_in), inner_breaks)[-1]
        cols.append((float(half.deriv()(0.25)), float(half(0.25))))
    system = np.array(cols).T
    if not np.isfinite(np.linalg.cond(system)) or np.linalg.cond(system) > 1e12:
        raise ProfileError("singular constraint system while building bump")
    k_out, c_in = np.linalg.solve(system, np.array([0.0, 1.0]))
    rise, half = _integrate_from(shape(k_out / w3, c_in), inner_breaks)
    # Build the right half by mirroring so that f(1/2) = 1 and f'(1/2) = 0
    # hold exactly, not just up to rounding.
    top = half(Polynomial([0.25, 1.0]))  # local variable s - 1/2
    coef = top.coef.copy()
    coef[0], coef[1] = 1.0, 0.0
    top = Polynomial(coef)
    w = 0.25 - delta
    pieces = [rise, top(Polynomial([0.25, -1.0])), top, rise(Polynomial([w, -1.0]))]
    breaks = (delta, 0.25, 0.5, 0.75, 1.0 - delta)
    bump = BumpProfile(delta, PiecewisePoly(breaks, tuple(pieces)))
    problems = check_bump(bump)
    if problems:
        raise ProfileError("bump invariants failed: " + "; ".join(problems))
    return bump


def check_bump(bump: BumpProfile, grid_points: int = GRID_POINTS) -> list[str]:
    """Return the list of violated bump invariants (empty when all hold)."""
    delta = bump.delta
    f, df, d2f = bump.f, bump.df, bump.d2f
    problems = []
    s = np.linspace(0.0, 1.0, grid_points)
    vals, slopes, curv = f.evaluate(s), df.evaluate(s), d2f.evaluate(s)
    # tolerances scale with the size of each derivative (steep pieces when delta -> 1/4)
    # f'' peaks mid-piece and f' at the breaks; narrow pieces can hide between grid points
    curv_peak = max(abs(p((hi - lo) / 2)) for p, lo, hi in zip(d2f.pieces, f.breaks, f.breaks[1:]))
    slope_peak = max(abs(df(b)) for b in f.breaks)
    scales = (np.abs(vals).max(), max(np.abs(slopes).max(), slope_peak), max(np.abs(curv).max(), curv_peak))
    tols = [1e-9 * max(1.0, x) for x in scales]
    expected = (1, -1, -1, 1)
    inflections = {delta, 0.25, 0.75, 1.0 - delta}
    if len(d2f.pieces) != len(expected):
        problems.append(f"expected {len(expected)} pieces, got {len(d2f.pieces)}")
    for p2, sign, lo, hi in zip(d2f.pieces, expected, f.breaks, f.breaks[1:]):
        for end, u in ((lo, 0.0), (hi, hi - lo)):
            if end in inflections and abs(p2(u)) > tols[2]:
                problems.append(f"f'' does not vanish at {end}")
        if p2.degree() != 2 or np.sign(p2((hi - lo) / 2)) != sign:
            problems.append(f"f'' has wrong sign on ({lo}, {hi})")
    for b in f.breaks:
        left = _around(f, b, -1)
        right = _around(f, b, +1)
        if any(abs(x - y) > t for x, y, t in zip(left, right, tols)):
            problems.append(f"not C^2 at {b}")
    if abs(f(0.5) - 1.0) > tols[0] or abs(f(delta)) > tols[0]:
        problems.append("f(1/2) != 1 or f(delta) != 0")
    if vals.min() < -tols[0] or vals.max() > 1.0 + tols[0]:
        problems.append("f leaves [0, 1]")
    inner = (s > delta) & (s < 1 - delta)
    if (vals[inner] <= 0).any():
        problems.append("support is smaller than [delta, 1 - delta]")
    if (np.abs(vals[~inner]) > tols[0]).any():
        problems.append("support exceeds [delta, 1 - delta]")
    rising = inner & (s < 0.5)
    falling = inner & (s > 0.5)
    if (slopes[rising] <= 0).any() or (slopes[falling] >= 0).any():
        problems.append("f has a local extremum other than s = 1/2")
    return problems


def _around(f: PiecewisePoly, b: float, side: int) -> list[float]:
    """Value, slope and curvature at break b from one side."""
    idx = f.breaks.index(b)
    if side < 0:
        if idx == 0:
            return [f.outside, 0.0, 0.0]
        p, u = f.pieces[idx - 1], b - f.breaks[idx - 1]
    else:
        if idx == len(f.pieces):
            return [f.outside, 0.0, 0.0]
        p, u = f.pieces[idx], 0.0
    return [float(p(u)), float(p.deriv(1)(u)), float(p.deriv(2)(u))]


# -- the coefficient family -----------------------------------------------------


@dataclass(frozen=True)
class ProfileSum:
    """f_a(s) = sum_i a_i f(2^(i+1) s - 1); term i lives on [(1+delta)/2^(i+1), (2-delta)/2^(i+1)]."""

    profile: BumpProfile
    coeffs: tuple[float, ...]

    @classmethod
    def of(cls, coeffs: Sequence[float], delta: float = 0.05, profile: BumpProfile | None = None) -> "ProfileSum":
        return cls(profile or build_bump(delta), tuple(float(c) for c in coeffs))

    def support(self, i: int) -> tuple[float, float]:
        d = self.profile.delta
        return ((1 + d) / 2 ** (i + 1), (2 - d) / 2 ** (i + 1))

    def peak(self, i: int) -> float:
        return 3.0 / 2 ** (i + 2)

    def active_term(self, s: float) -> int | None:
        for i in range(len(self.coeffs)):
            lo, hi = self.support(i)
            if lo <= s <= hi:
                return i
        return None

    def __call__(self, s: float) -> float:
        return eval_sum(self, s)

    def piecewise(self) -> PiecewisePoly:
        """f_a on [0, 1] as one piecewise polynomial (zero pieces in the gaps)."""
        breaks = [0.0]
        pieces: list[Polynomial] = []
        f = self.profile.f
        for i in reversed(range(len(self.coeffs))):
            scale = 2.0 ** (i + 1)
            inner = Polynomial([0.0, scale])
            for b0, b1, p in zip(f.breaks, f.breaks[1:], f.pieces):
                lo, hi = (b0 + 1) / scale, (b1 + 1) / scale
                if lo > breaks[-1]:
                    breaks.append(lo)
                    pieces.append(Polynomial([0.0]))
                composed = self.coeffs[i] * p(inner)
                breaks.append(hi)
                pieces.append(composed)
        if breaks[-1] < 1.0:
            breaks.append(1.0)
            pieces.append(Polynomial([0.0]))
        return PiecewisePoly(tuple(breaks), tuple(pieces))

    def to_dict(self) -> dict:
        return {"coeffs": list(self.coeffs), "profile": self.profile.to_dict()}


def eval_sum(fa: ProfileSum, s: float) -> float:
    total = 0.0
    for i, a in enumerate(fa.coeffs):
        if a:
            total += a * fa.profile.f(2.0 ** (i + 1) * s - 1.0)
    return total


def deriv_sum(fa: ProfileSum, s: float) -> float:
    total = 0.0
    df = fa.profile.df
    for i, a in enumerate(fa.coeffs):
        if a:
            total += a * 2.0 ** (i + 1) * df(2.0 ** (i + 1) * s - 1.0)
    return total


def active_terms(fa: ProfileSum, s: float) -> list[int]:
    """Indices whose bump term is nonzero in value or slope at s."""
    out = []
    for i, a in enumerate(fa.coeffs):
        t = 2.0 ** (i + 1) * s - 1.0
        if a and (fa.profile.f(t) != 0.0 or fa.profile.df(t) != 0.0):
            out.append(i)
    return out


def minmax_min_osc(fa: ProfileSum | Sequence[float]) -> tuple[float, float, float]:
    """(minmax, min, osc) of f_a from its structure.

    Zero plateaus separate the disjoint supports, so 0 is always a
    (non-strict) local maximum value; the other local maxima are the positive
    peaks.  The minimum is min(0, min a_i).
    """
    coeffs = fa.coeffs if isinstance(fa, ProfileSum) else tuple(float(c) for c in fa)
    peaks = [0.0] + [a for a in coeffs if a > 0]
    minmax = min(peaks)
    lowest = min([0.0, *coeffs])
    highest = max([0.0, *coeffs])
    return minmax, lowest, highest - lowest


def scan_minmax_min(fa: ProfileSum, points_per_bump: int = 2001) -> tuple[float, float]:
    """Dense-scan oracle for (minmax, min) with plateau-aware local-max detection.

    Each bump is sampled on its own rescaled grid (which contains the peak),
    and the gaps between supports are sampled too.  A sample is a local
    maximum when it is >= both neighbours.
    """
    pts = [np.linspace(0.0, 1.0, 257)]
    t = np.linspace(0.0, 1.0, points_per_bump)
    for i in range(len(fa.coeffs)):
        pts.append((1.0 + t) / 2.0 ** (i + 1))
    s = np.unique(np.concatenate(pts))
    # term by term from the bump itself, independent of ProfileSum.piecewise
    vals = np.zeros_like(s)
    for i, a in enumerate(fa.coeffs):
        if a:
            vals += a * fa.profile.f.evaluate(2.0 ** (i + 1) * s - 1.0)
    left = np.concatenate([[-np.inf], vals[:-1]])
    right = np.concatenate([vals[1:], [-np.inf]])
    is_max = (vals >= left) & (vals >= right)
    return float(vals[is_max].min()), float(vals.min())


def hofer_upper_bound(a: Sequence[float], b: Sequence[float], delta: float = 0.05) -> tuple[float, float]:
    """(2 * ||a - b||_inf, osc(f_{a-b})); the oscillation never exceeds the bound."""
    n = max(len(a), len(b))
    diff = [(a[i] if i < len(a) else 0.0) - (b[i] if i < len(b) else 0.0) for i in range(n)]
    bound = 2.0 * max((abs(x) for x in diff), default=0.0)
    osc = minmax_min_osc(diff)[2]
    if osc > bound + 1e-12:
        raise ArithmeticError(f"oscillation {osc} exceeds Hofer bound {bound}")
    return bound, osc


def pad(a: Sequence[float], b: Sequence[float]) -> tuple[list[float], list[float]]:
    n = max(len(a), len(b))
    return [float(x) for x in a] + [0.0] * (n - len(a)), [float(x) for x in b] + [0.0] * (n - len(b))


def sup_norm(a: Sequence[float]) -> float:
    return max((abs(x) for x in a), default=0.0)


def parse_coeffs(text: str) -> list[float]:
    """Accepts a JSON array ``[0.7, 0.2]`` or a bare list ``0.7,0.2``."""
    text = text.strip()
    try:
        value = json.loads(text if text.startswith("[") else f"[{text}]")
    except json.JSONDecodeError as exc:
        raise ValueError(f"cannot parse coefficients {text!r}") from exc
    if not isinstance(value, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        raise ValueError(f"coefficients must be numbers, got {text!r}")
    if not all(math.isfinite(x) for x in value):
        raise ValueError("coefficients must be finite")
    return [float(x) for x in value]
