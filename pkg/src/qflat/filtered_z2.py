"""Filtered cochain complexes over Z/2.

A complex is a finite set of generators, each carrying a cohomological
degree and a real filtration level, together with a differential that raises
degree by one and never raises level.  Sublevel spans are then subcomplexes,
and the usual persistence machinery applies: barcodes by column reduction,
boundary depth (longest finite bar), and min-max spectral levels of classes.

Chains are handled internally as Python ``int`` bitsets indexed by generator
position, which keeps XOR-heavy reductions fast without any sparse-matrix
dependency.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

LEVEL_TOL = 1e-12
EQ_TOL = 1e-9
BRUTEFORCE_LIMIT = 20
INF = math.inf


class InvalidComplexError(ValueError):
    """Base class for structural violations of a filtered complex."""

    kind = "invalid"

    def __init__(self, message: str, ids: Sequence[str] = ()):
        super().__init__(message)
        self.ids = tuple(ids)


class DuplicateIdError(InvalidComplexError):
    kind = "duplicate-id"


class DanglingIdError(InvalidComplexError):
    kind = "dangling-id"


class DegreeMismatchError(InvalidComplexError):
    kind = "degree-mismatch"


class LevelIncreaseError(InvalidComplexError):
    kind = "level-monotonicity"


class NonZeroSquareError(InvalidComplexError):
    kind = "d-squared-nonzero"


class NotACocycleError(ValueError):
    pass


class ClassVanishesError(ValueError):
    """The requested class is a coboundary, so it has no spectral level."""


class SizeLimitError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    id: str
    degree: int
    level: float


@dataclass(frozen=True)
class FilteredComplex:
    generators: tuple[Generator, ...] = ()
    differential: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        generators: Iterable[Generator | tuple[str, int, float]],
        differential: Mapping[str, Iterable[str]] | None = None,
    ) -> "FilteredComplex":
        gens = tuple(g if isinstance(g, Generator) else Generator(g[0], int(g[1]), float(g[2])) for g in generators)
        diff = {k: frozenset(v) for k, v in (differential or {}).items() if v}
        return cls(gens, diff)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.generators)

    def generator(self, gid: str) -> Generator:
        return self._index()[gid]

    def level(self, gid: str) -> float:
        return self._index()[gid].level

    def degree(self, gid: str) -> int:
        return self._index()[gid].degree

    def d(self, gid: str) -> frozenset[str]:
        return self.differential.get(gid, frozenset())

    def _index(self) -> dict[str, Generator]:
        cache = self.__dict__.get("_idx")
        if cache is None:
            cache = {g.id: g for g in self.generators}
            object.__setattr__(self, "_idx", cache)
        return cache

    def __len__(self) -> int:
        return len(self.generators)

    def to_dict(self) -> dict:
        return {
            "generators": [{"id": g.id, "degree": g.degree, "level": g.level} for g in self.generators],
            "differential": {k: sorted(v) for k, v in sorted(self.differential.items()) if v},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "FilteredComplex":
        try:
            gens = [Generator(str(g["id"]), int(g["degree"]), float(g["level"])) for g in data["generators"]]
            diff = {str(k): [str(x) for x in v] for k, v in data.get("differential", {}).items()}
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed complex: {exc!r}") from exc
        return cls.build(gens, diff)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "FilteredComplex":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Verdict:
    ok: bool
    kind: str | None = None
    message: str = ""
    ids: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def check_valid(cx: FilteredComplex) -> None:
    """Raise the first violated invariant, in a fixed order of checks."""
    seen: set[str] = set()
    for g in cx.generators:
        if g.id in seen:
            raise DuplicateIdError(f"duplicate generator id {g.id!r}", [g.id])
        seen.add(g.id)
    for src in sorted(cx.differential):
        for tgt in sorted(cx.differential[src] | {src}):
            if tgt not in seen:
                raise DanglingIdError(f"differential mentions undeclared id {tgt!r}", [src, tgt])
    for src in sorted(cx.differential):
        g = cx.generator(src)
        for tgt in sorted(cx.differential[src]):
            t = cx.generator(tgt)
            if t.degree != g.degree + 1:
                raise DegreeMismatchError(
                    f"d({src}) contains {tgt} of degree {t.degree}, expected {g.degree + 1}", [src, tgt]
                )
            if t.level > g.level + LEVEL_TOL:
                raise LevelIncreaseError(
                    f"level increases along {src}->{tgt}: {g.level!r} -> {t.level!r}", [src, tgt]
                )
    for src in sorted(cx.differential):
        dd: set[str] = set()
        for mid in cx.differential[src]:
            dd ^= set(cx.d(mid))
        if dd:
            raise NonZeroSquareError(f"d(d({src})) = {sorted(dd)} != 0", [src, *sorted(dd)])


def validate(cx: FilteredComplex) -> Verdict:
    try:
        check_valid(cx)
    except InvalidComplexError as exc:
        return Verdict(False, exc.kind, str(exc), exc.ids)
    return Verdict(True)


# -- barcodes -----------------------------------------------------------------


@dataclass(frozen=True)
class Bar:
    degree: int
    low: float
    high: float = INF
    creator_id: str | None = None
    destroyer_id: str | None = None

    @property
    def finite(self) -> bool:
        return not math.isinf(self.high)

    @property
    def length(self) -> float:
        return self.high - self.low

    def shifted(self, c: float) -> "Bar":
        return Bar(self.degree, self.low + c, self.high + c, self.creator_id, self.destroyer_id)


@dataclass(frozen=True)
class Barcode:
    bars: tuple[Bar, ...] = ()

    def finite(self) -> list[Bar]:
        return [b for b in self.bars if b.finite]

    def infinite(self) -> list[Bar]:
        return [b for b in self.bars if not b.finite]

    def degrees(self) -> list[int]:
        return sorted({b.degree for b in self.bars})

    def in_degree(self, k: int) -> list[Bar]:
        return [b for b in self.bars if b.degree == k]

    def longest_finite(self) -> float:
        return max((b.length for b in self.bars if b.finite), default=0.0)

    def shifted(self, c: float) -> "Barcode":
        return Barcode(tuple(b.shifted(c) for b in self.bars))

    def signature(self, ndigits: int = 9) -> list[tuple]:
        """Sorted (degree, low, high) triples, rounded; ids dropped."""
        return sorted((b.degree, round(b.low, ndigits), b.high if not b.finite else round(b.high, ndigits)) for b in self.bars)

    def to_dict(self) -> dict:
        return {
            "bars": [
                {"degree": b.degree, "low": b.low, "high": b.high if b.finite else "inf"} for b in self.bars
            ]
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Barcode":
        bars = []
        try:
            for b in data["bars"]:
                high = b["high"]
                high = INF if high in ("inf", "Infinity") else float(high)
                low = float(b["low"])
                if high < low:
                    raise ValueError(f"bar with high < low: {b!r}")
                bars.append(Bar(int(b["degree"]), low, high))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed barcode: {exc!r}") from exc
        return cls(tuple(bars))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "Barcode":
        return cls.from_dict(json.loads(text))


def filtration_order(cx: FilteredComplex) -> list[Generator]:
    # Within a level, higher degree first so every prefix is a subcomplex.
    return sorted(cx.generators, key=lambda g: (g.level, -g.degree, g.id))


def reduce_columns(columns: Sequence[int]) -> tuple[list[int], dict[int, int]]:
    """Standard left-to-right Z/2 column reduction.

    ``columns[j]`` is a bitset of row positions.  Returns the reduced columns
    and the pivot map ``low row -> column``.
    """
    reduced = list(columns)
    pivot_of: dict[int, int] = {}
    for j, col in enumerate(reduced):
        while col:
            low = col.bit_length() - 1
            other = pivot_of.get(low)
            if other is None:
                pivot_of[low] = j
                break
            col ^= reduced[other]
        reduced[j] = col
    return reduced, pivot_of


def barcode(cx: FilteredComplex) -> Barcode:
    check_valid(cx)
    order = filtration_order(cx)
    pos = {g.id: i for i, g in enumerate(order)}
    columns = []
    for g in order:
        col = 0
        for x in cx.d(g.id):
            col |= 1 << pos[x]
        columns.append(col)
    _, pivot_of = reduce_columns(columns)
    paired = set(pivot_of) | set(pivot_of.values())
    bars = []
    for row, j in sorted(pivot_of.items()):
        x, y = order[row], order[j]
        bars.append(Bar(x.degree, x.level, max(y.level, x.level), x.id, y.id))
    for i, g in enumerate(order):
        if i not in paired:
            bars.append(Bar(g.degree, g.level, INF, g.id, None))
    bars.sort(key=lambda b: (b.degree, b.low, b.high, b.creator_id or ""))
    return Barcode(tuple(bars))


def boundary_depth(cx: FilteredComplex) -> float:
    return barcode(cx).longest_finite()


def boundary_depth_bruteforce(cx: FilteredComplex) -> float:
    """Literal sup over nonzero boundaries x of min{level(y) - level(x) : dy = x}.

    The level of a chain is the largest level in its support.  Every chain is
    enumerated, so this is limited to ``BRUTEFORCE_LIMIT`` generators.
    """
    n = len(cx)
    if n > BRUTEFORCE_LIMIT:
        raise SizeLimitError(f"{n} generators exceeds brute-force limit {BRUTEFORCE_LIMIT}")
    check_valid(cx)
    if n == 0:
        return 0.0
    pos = {g.id: i for i, g in enumerate(cx.generators)}
    dcol = np.zeros(n, dtype=np.int64)
    for g in cx.generators:
        for x in cx.d(g.id):
            dcol[pos[g.id]] |= 1 << pos[x]
    levels = np.array([g.level for g in cx.generators])
    image = np.zeros(1, dtype=np.int64)
    chain_level = np.full(1, -np.inf)
    for b in range(n):
        image = np.concatenate([image, image ^ dcol[b]])
        chain_level = np.concatenate([chain_level, np.maximum(chain_level, levels[b])])
    best = np.full(1 << n, np.inf)
    np.minimum.at(best, image, chain_level)
    best[0] = np.inf
    hit = np.isfinite(best)
    if not hit.any():
        return 0.0
    gaps = best[hit] - chain_level[hit]
    return float(max(gaps.max(), 0.0))


# -- spectral levels ----------------------------------------------------------


@dataclass(frozen=True)
class CocycleClass:
    support: frozenset[str]

    @classmethod
    def of(cls, *ids: str) -> "CocycleClass":
        return cls(frozenset(ids))


def _coboundary_image(cx: FilteredComplex, chain: Iterable[str]) -> set[str]:
    out: set[str] = set()
    for g in chain:
        out ^= set(cx.d(g))
    return out


def spectral_level(cx: FilteredComplex, cls: CocycleClass) -> float:
    """Min over cohomologous representatives of the top level in the support.

    Coboundaries of the right degree are reduced to echelon form with pivots at
    their top generator (in filtration order); greedily cancelling the top of
    the class against those pivots leaves a representative whose top cannot be
    lowered any further.
    """
    check_valid(cx)
    support = set(cls.support)
    if not support:
        raise ClassVanishesError("class vanishes: empty support")
    unknown = support - set(cx.ids)
    if unknown:
        raise NotACocycleError(f"unknown ids {sorted(unknown)}")
    degs = {cx.degree(g) for g in support}
    if len(degs) != 1:
        raise NotACocycleError(f"support spans degrees {sorted(degs)}")
    (k,) = degs
    if _coboundary_image(cx, support):
        raise NotACocycleError("d(class) != 0")
    order = filtration_order(cx)
    pos = {g.id: i for i, g in enumerate(order)}
    basis: dict[int, int] = {}
    for g in order:
        if g.degree != k - 1:
            continue
        col = 0
        for x in cx.d(g.id):
            col |= 1 << pos[x]
        while col:
            top = col.bit_length() - 1
            if top not in basis:
                basis[top] = col
                break
            col ^= basis[top]
    z = 0
    for g in support:
        z |= 1 << pos[g]
    while z:
        top = z.bit_length() - 1
        if top not in basis:
            return order[top].level
        z ^= basis[top]
    raise ClassVanishesError("class vanishes: it is a coboundary")


def shift_levels(cx: FilteredComplex, c: float) -> FilteredComplex:
    return FilteredComplex(
        tuple(Generator(g.id, g.degree, g.level + c) for g in cx.generators),
        dict(cx.differential),
    )


# -- plain cohomology (levels ignored) ----------------------------------------


def gf2_rank(rows: Iterable[int]) -> int:
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top not in basis:
                basis[top] = r
                break
            r ^= basis[top]
    return len(basis)


def cohomology_ranks(cx: FilteredComplex) -> dict[int, int]:
    """dim H^k = dim C^k - rank d_k - rank d_{k-1}, by Gaussian elimination."""
    check_valid(cx)
    pos = {g.id: i for i, g in enumerate(cx.generators)}
    by_deg: dict[int, list[Generator]] = {}
    for g in cx.generators:
        by_deg.setdefault(g.degree, []).append(g)
    rank_out = {}
    for k, gens in by_deg.items():
        cols = []
        for g in gens:
            col = 0
            for x in cx.d(g.id):
                col |= 1 << pos[x]
            cols.append(col)
        rank_out[k] = gf2_rank(cols)
    return {k: len(gens) - rank_out[k] - rank_out.get(k - 1, 0) for k, gens in sorted(by_deg.items())}


# -- random complexes for property harnesses ----------------------------------


def kernel_basis(vectors: Sequence[int]) -> list[int]:
    """Basis (as bitsets over the input index) of {c : XOR of vectors[c_i] = 0}."""
    basis: dict[int, tuple[int, int]] = {}
    kernel = []
    for i, v in enumerate(vectors):
        combo = 1 << i
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = (v, combo)
                break
            bv, bc = basis[top]
            v ^= bv
            combo ^= bc
        if not v:
            kernel.append(combo)
    return kernel


def random_complex(
    rng: random.Random,
    n: int,
    degrees: Sequence[int] = (0, 1, 2),
    level_range: tuple[float, float] = (0.0, 10.0),
    discrete_levels: bool = False,
    density: float = 0.6,
) -> FilteredComplex:
    """A random valid complex on ``n`` generators.

    Differentials are drawn degree by degree from the kernel of the next
    differential restricted to generators of no larger level, so d^2 = 0 and
    monotonicity hold by construction.  ``discrete_levels`` draws integer
    levels to exercise ties.
    """
    lo, hi = level_range
    gens = []
    for i in range(n):
        level = float(rng.randint(int(lo), int(hi))) if discrete_levels else rng.uniform(lo, hi)
        gens.append(Generator(f"g{i}", rng.choice(list(degrees)), level))
    by_deg: dict[int, list[Generator]] = {}
    for g in gens:
        by_deg.setdefault(g.degree, []).append(g)
    diff: dict[str, set[str]] = {}
    for k in sorted(by_deg, reverse=True):
        targets = by_deg.get(k + 1, [])
        above = {g.id: j for j, g in enumerate(by_deg.get(k + 2, []))}
        for g in by_deg[k]:
            allowed = [t for t in targets if t.level <= g.level]
            if not allowed or rng.random() > density:
                continue
            dvecs = []
            for t in allowed:
                v = 0
                for x in diff.get(t.id, ()):
                    v |= 1 << above[x]
                dvecs.append(v)
            combo = 0
            for kv in kernel_basis(dvecs):
                if rng.random() < 0.5:
                    combo ^= kv
            chosen = {t.id for j, t in enumerate(allowed) if combo >> j & 1}
            if chosen:
                diff[g.id] = chosen
    return FilteredComplex.build(gens, diff)


def jitter_levels(rng: random.Random, cx: FilteredComplex, eps: float) -> FilteredComplex:
    """Move every level by at most ``eps`` while keeping the differential monotone.

    Levels are drawn in [l - eps, l + eps] and then lifted, top degree first,
    to dominate the new levels of their differential; the lift never leaves
    the window because the old levels were already monotone.
    """
    new: dict[str, float] = {}
    for g in sorted(cx.generators, key=lambda g: -g.degree):
        lv = g.level + rng.uniform(-eps, eps)
        for x in cx.d(g.id):
            lv = max(lv, new[x])
        new[g.id] = min(lv, g.level + eps)
    return FilteredComplex(
        tuple(Generator(g.id, g.degree, new[g.id]) for g in cx.generators), dict(cx.differential)
    )
