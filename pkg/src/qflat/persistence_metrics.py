"""Distances and stability checks between filtered complexes.

Interleaving distance is realized as the bottleneck distance between finite
barcodes.  On top of it sit the two stability statements used for boundary
depth (bottleneck control and pointwise level perturbation) and a checker for
filtered products, whose spectral levels must be subadditive up to the
declared level defect.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import maximum_bipartite_matching

from .filtered_z2 import (
    EQ_TOL,
    INF,
    LEVEL_TOL,
    Bar,
    Barcode,
    ClassVanishesError,
    CocycleClass,
    FilteredComplex,
    Generator,
    InvalidComplexError,
    barcode,
    boundary_depth,
    check_valid,
    kernel_basis,
    random_complex,
    spectral_level,
)


@dataclass(frozen=True)
class Matching:
    cost: float
    pairs: tuple[tuple[int, int], ...] = ()

    def to_dict(self) -> dict:
        return {"cost": self.cost if math.isfinite(self.cost) else "inf", "pairs": [list(p) for p in self.pairs]}


def _pair_cost(a: Bar, b: Bar) -> float:
    return max(abs(a.low - b.low), abs(a.high - b.high))


def _half(b: Bar) -> float:
    return (b.high - b.low) / 2.0


def _finite_matching(A: list[Bar], B: list[Bar], r: float) -> np.ndarray | None:
    """Perfect matching of the diagonal-augmented graph at threshold r, if any."""
    m, n = len(A), len(B)
    size = m + n
    if size == 0:
        return np.zeros(0, dtype=int)
    rows, cols = [], []
    # left: A (0..m-1) then diagonal copies of B; right: B (0..n-1) then diagonal copies of A
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            if _pair_cost(a, b) <= r:
                rows.append(i)
                cols.append(j)
        if _half(a) <= r:
            rows.append(i)
            cols.append(n + i)
    for j, b in enumerate(B):
        if _half(b) <= r:
            rows.append(m + j)
            cols.append(j)
        for i in range(m):
            rows.append(m + j)
            cols.append(n + i)
    graph = csr_array((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size))
    match = maximum_bipartite_matching(graph, perm_type="column")
    if (match < 0).any():
        return None
    return match


def bottleneck_matching(A: Barcode, B: Barcode) -> Matching:
    """Optimal bottleneck matching; infinite bars only ever meet infinite bars.

    Finite bars: binary search over the finite set of candidate costs with a
    Hopcroft-Karp feasibility test.  Infinite bars: per degree, sorting births
    is optimal on the line.
    """
    index_a = {id(b): i for i, b in enumerate(A.bars)}
    index_b = {id(b): i for i, b in enumerate(B.bars)}
    degrees = sorted({b.degree for b in A.bars} | {b.degree for b in B.bars})
    cost = 0.0
    pairs: list[tuple[int, int]] = []
    for k in degrees:
        ia = sorted((b for b in A.bars if b.degree == k and not b.finite), key=lambda b: b.low)
        ib = sorted((b for b in B.bars if b.degree == k and not b.finite), key=lambda b: b.low)
        if len(ia) != len(ib):
            return Matching(INF, ())
        for a, b in zip(ia, ib):
            cost = max(cost, abs(a.low - b.low))
            pairs.append((index_a[id(a)], index_b[id(b)]))
        fa = [b for b in A.bars if b.degree == k and b.finite]
        fb = [b for b in B.bars if b.degree == k and b.finite]
        candidates = {0.0}
        candidates.update(_half(b) for b in fa)
        candidates.update(_half(b) for b in fb)
        candidates.update(_pair_cost(a, b) for a in fa for b in fb)
        cands = sorted(candidates)
        lo, hi = 0, len(cands) - 1
        best = _finite_matching(fa, fb, cands[hi])
        while lo < hi:
            mid = (lo + hi) // 2
            found = _finite_matching(fa, fb, cands[mid])
            if found is None:
                lo = mid + 1
            else:
                hi, best = mid, found
        cost = max(cost, cands[lo])
        assert best is not None
        for i, j in enumerate(best[: len(fa)]):
            if j < len(fb):
                pairs.append((index_a[id(fa[i])], index_b[id(fb[j])]))
    return Matching(cost, tuple(sorted(pairs)))


def bottleneck_distance(A: Barcode, B: Barcode) -> float:
    return bottleneck_matching(A, B).cost


def bottleneck_bruteforce(A: Barcode, B: Barcode) -> float:
    """Enumerate every matching; only for a handful of bars per degree."""
    total = 0.0
    degrees = {b.degree for b in A.bars} | {b.degree for b in B.bars}
    for k in degrees:
        ia = sorted(b.low for b in A.bars if b.degree == k and not b.finite)
        ib = sorted(b.low for b in B.bars if b.degree == k and not b.finite)
        if len(ia) != len(ib):
            return INF
        best_inf = INF
        for perm in itertools.permutations(ib):
            best_inf = min(best_inf, max((abs(x - y) for x, y in zip(ia, perm)), default=0.0))
        fa = [b for b in A.bars if b.degree == k and b.finite]
        fb = [b for b in B.bars if b.degree == k and b.finite]
        # pad both sides with diagonal slots
        left = fa + [None] * len(fb)
        right = fb + [None] * len(fa)
        best_fin = INF
        for perm in itertools.permutations(range(len(right))):
            c = 0.0
            for i, j in enumerate(perm):
                a, b = left[i], right[j]
                if a is not None and b is not None:
                    c = max(c, _pair_cost(a, b))
                elif a is not None:
                    c = max(c, _half(a))
                elif b is not None:
                    c = max(c, _half(b))
            best_fin = min(best_fin, c)
        total = max(total, best_inf, best_fin if (fa or fb) else 0.0)
    return total


# -- stability checks ---------------------------------------------------------


@dataclass(frozen=True)
class StabilityVerdict:
    ok: bool
    lhs: float
    rhs: float
    detail: Mapping[str, float] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "lhs": self.lhs, "rhs": self.rhs if math.isfinite(self.rhs) else "inf", **self.detail}


def beta_stability_check(A: FilteredComplex, B: FilteredComplex) -> StabilityVerdict:
    """|beta(A) - beta(B)| <= 2 * bottleneck(barcode A, barcode B)."""
    ba, bb = barcode(A), barcode(B)
    beta_a, beta_b = ba.longest_finite(), bb.longest_finite()
    dist = bottleneck_distance(ba, bb)
    lhs = abs(beta_a - beta_b)
    rhs = 2.0 * dist
    return StabilityVerdict(lhs <= rhs + EQ_TOL, lhs, rhs, {"beta_a": beta_a, "beta_b": beta_b, "bottleneck": dist})


class StructureError(ValueError):
    """The proposed bijection does not carry one complex onto the other."""


def level_perturbation_bound(
    A: FilteredComplex, B: FilteredComplex, bijection: Mapping[str, str] | None = None
) -> StabilityVerdict:
    """If levels move by at most eps under a chain isomorphism, beta moves by at most 2 eps."""
    check_valid(A)
    check_valid(B)
    if bijection is None:
        bijection = {g: g for g in A.ids}
    if sorted(bijection) != sorted(A.ids) or sorted(bijection.values()) != sorted(B.ids):
        raise StructureError("bijection is not a bijection between generator sets")
    eps = 0.0
    for g in A.generators:
        h = B.generator(bijection[g.id])
        if h.degree != g.degree:
            raise StructureError(f"degree of {g.id} not preserved")
        if {bijection[x] for x in A.d(g.id)} != set(B.d(h.id)):
            raise StructureError(f"differential of {g.id} not preserved")
        eps = max(eps, abs(h.level - g.level))
    beta_a, beta_b = boundary_depth(A), boundary_depth(B)
    lhs = abs(beta_a - beta_b)
    return StabilityVerdict(lhs <= 2 * eps + EQ_TOL, lhs, 2 * eps, {"eps": eps, "beta_a": beta_a, "beta_b": beta_b})


# -- filtered products --------------------------------------------------------


class ProductPreconditionError(ValueError):
    pass


class LeibnizError(ProductPreconditionError):
    pass


class LevelDefectError(ProductPreconditionError):
    pass


@dataclass(frozen=True)
class ProductData:
    """A Z/2-bilinear map C1 x C2 -> C3 given on generators."""

    c1: FilteredComplex
    c2: FilteredComplex
    c3: FilteredComplex
    table: Mapping[tuple[str, str], frozenset[str]]
    eps: float = 0.0

    def mu(self, xs, ys) -> frozenset[str]:
        out: set[str] = set()
        for x in xs:
            for y in ys:
                out ^= self.table.get((x, y), frozenset())
        return frozenset(out)


def _d_chain(cx: FilteredComplex, chain) -> set[str]:
    out: set[str] = set()
    for g in chain:
        out ^= cx.d(g)
    return out


def check_product(data: ProductData) -> None:
    for cx in (data.c1, data.c2, data.c3):
        check_valid(cx)
    if data.eps < 0:
        raise LevelDefectError("negative level defect")
    for (x, y), z in sorted(data.table.items()):
        if not z:
            continue
        top = max(data.c3.level(g) for g in z)
        bound = data.c1.level(x) + data.c2.level(y) + data.eps
        if top > bound + LEVEL_TOL:
            raise LevelDefectError(f"level(mu({x},{y})) = {top} exceeds {bound}")
    for x in data.c1.ids:
        for y in data.c2.ids:
            lhs = _d_chain(data.c3, data.table.get((x, y), ()))
            rhs = set(data.mu(data.c1.d(x), [y])) ^ set(data.mu([x], data.c2.d(y)))
            if lhs != rhs:
                raise LeibnizError(f"Leibniz fails at ({x},{y}): {sorted(lhs)} vs {sorted(rhs)}")


def product_subadditivity_check(data: ProductData, alpha: CocycleClass, beta: CocycleClass) -> StabilityVerdict:
    """rho_3(mu(beta, alpha)) <= rho_1(beta) + rho_2(alpha) + eps."""
    check_product(data)
    rho1 = spectral_level(data.c1, beta)
    rho2 = spectral_level(data.c2, alpha)
    rho3 = spectral_level(data.c3, CocycleClass(data.mu(beta.support, alpha.support)))
    rhs = rho1 + rho2 + data.eps
    return StabilityVerdict(rho3 <= rhs + EQ_TOL, rho3, rhs, {"rho1": rho1, "rho2": rho2, "eps": data.eps})


def tensor_product(
    c1: FilteredComplex, c2: FilteredComplex, shift: float = 0.0, degree_slope: float = 0.0
) -> tuple[FilteredComplex, dict[tuple[str, str], frozenset[str]]]:
    """C1 (x) C2 with d(x.y) = dx.y + x.dy and level l(x) + l(y) + shift - slope * (deg - min deg).

    A uniform shift and a level drop proportional to total degree both keep
    the differential monotone; the table is the tautological product.
    """
    gens = []
    diff = {}
    dmin = min((g.degree for g in c1.generators), default=0) + min((g.degree for g in c2.generators), default=0)
    for x in c1.generators:
        for y in c2.generators:
            deg = x.degree + y.degree
            gid = f"{x.id}*{y.id}"
            gens.append(Generator(gid, deg, x.level + y.level + shift - degree_slope * (deg - dmin)))
            out = {f"{dx}*{y.id}" for dx in c1.d(x.id)} ^ {f"{x.id}*{dy}" for dy in c2.d(y.id)}
            if out:
                diff[gid] = out
    table = {(x.id, y.id): frozenset({f"{x.id}*{y.id}"}) for x in c1.generators for y in c2.generators}
    return FilteredComplex.build(gens, diff), table


def random_nonzero_class(rng: random.Random, cx: FilteredComplex, tries: int = 64) -> CocycleClass | None:
    """A random cocycle that is not a coboundary, or None if none was found."""
    by_deg: dict[int, list[str]] = {}
    for g in cx.generators:
        by_deg.setdefault(g.degree, []).append(g.id)
    degs = sorted(by_deg)
    for _ in range(tries):
        k = rng.choice(degs)
        ids = by_deg[k]
        pos = {g: i for i, g in enumerate(by_deg.get(k + 1, []))}
        vecs = []
        for g in ids:
            v = 0
            for x in cx.d(g):
                v |= 1 << pos[x]
            vecs.append(v)
        kernel = kernel_basis(vecs)
        if not kernel:
            continue
        combo = 0
        while not combo:
            for kv in kernel:
                if rng.random() < 0.5:
                    combo ^= kv
        cls = CocycleClass(frozenset(g for i, g in enumerate(ids) if combo >> i & 1))
        try:
            spectral_level(cx, cls)
        except ClassVanishesError:
            continue
        return cls
    return None


def random_product_instance(rng: random.Random, n1: int = 5, n2: int = 4):
    """A random (ProductData, alpha, beta) satisfying all product invariants."""
    while True:
        c1 = random_complex(rng, rng.randint(1, n1), degrees=(0, 1), discrete_levels=rng.random() < 0.5)
        c2 = random_complex(rng, rng.randint(1, n2), degrees=(0, 1), discrete_levels=rng.random() < 0.5)
        beta = random_nonzero_class(rng, c1)
        alpha = random_nonzero_class(rng, c2)
        if alpha is None or beta is None:
            continue
        eps = rng.choice([0.0, rng.uniform(0, 2)])
        shift = rng.uniform(0, eps)
        slope = rng.uniform(0, 1) if rng.random() < 0.5 else 0.0
        c3, table = tensor_product(c1, c2, shift=shift, degree_slope=slope)
        return ProductData(c1, c2, c3, table, eps), alpha, beta


def unit_complex() -> FilteredComplex:
    return FilteredComplex.build([("u", 0, 0.0)])


def adversarial_product_instance() -> tuple[ProductData, CocycleClass, CocycleClass]:
    """Units at level 0 multiplying into a class at level 5 with no allowed defect.

    The conclusion would fail (5 > 0 + 0 + 0), so the level precondition must
    reject the data before any spectral level is computed.
    """
    c1 = FilteredComplex.build([("u", 0, 0.0)])
    c2 = FilteredComplex.build([("v", 0, 0.0)])
    c3 = FilteredComplex.build([("w", 0, 5.0)])
    data = ProductData(c1, c2, c3, {("u", "v"): frozenset({"w"})}, 0.0)
    return data, CocycleClass.of("v"), CocycleClass.of("u")


__all__ = [
    "Matching",
    "bottleneck_matching",
    "bottleneck_distance",
    "bottleneck_bruteforce",
    "StabilityVerdict",
    "beta_stability_check",
    "level_perturbation_bound",
    "StructureError",
    "ProductData",
    "ProductPreconditionError",
    "adversarial_product_instance",
    "LeibnizError",
    "LevelDefectError",
    "check_product",
    "product_subadditivity_check",
    "tensor_product",
    "random_nonzero_class",
    "random_product_instance",
    "unit_complex",
    "InvalidComplexError",
]
