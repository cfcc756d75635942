"""Sublevel persistence of grid fields on the annulus S^1 x [-1, 1].

The grid is periodic in q and closed in p.  Cells carry lower-star values
(max over their vertices).  Two routes compute the same Z/2 barcode:

* ``union_find`` (default): degree 0 by the elder rule on vertices/edges,
  degree 1 by the elder rule on the dual graph (squares plus one cap per
  boundary circle, processed top-down).  The merge that joins the two caps
  carries the essential degree-1 class.
* ``reduction``: explicit boundary-matrix column reduction with clearing;
  quadratic-ish, used as the oracle on small grids.

Zero-length pairs are dropped from both.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .filtered_z2 import INF, Bar, Barcode, reduce_columns
from .profiles import ProfileSum, build_bump, minmax_min_osc

MAX_CELLS = 4_000_000
MIN_SIDE = 8


class GridSizeError(ValueError):
    pass


@dataclass(frozen=True)
class GridField:
    values: np.ndarray  # shape (n_q, n_p); q periodic, p in [-1, 1] inclusive
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or min(v.shape) < MIN_SIDE:
            raise GridSizeError(f"grid must be at least {MIN_SIDE}x{MIN_SIDE}, got {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def spacing(self) -> tuple[float, float]:
        nq, np_ = self.shape
        return 1.0 / nq, 2.0 / (np_ - 1)

    def n_cells(self) -> int:
        nq, np_ = self.shape
        return nq * np_ + nq * np_ + nq * (np_ - 1) + nq * (np_ - 1)

    def dump(self, path) -> None:
        """JSON header line, then row-major little-endian float64 values."""
        header = {"format": "grid-field/1", "shape": list(self.shape), "dtype": "<f8", "meta": self.meta}
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes(order="C"))

    @classmethod
    def load(cls, path) -> "GridField":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("utf-8"))
            data = np.frombuffer(fh.read(), dtype=header["dtype"])
        return cls(data.reshape(header["shape"]).astype(float), header.get("meta", {}))


def grid_coords(n_q: int, n_p: int) -> tuple[np.ndarray, np.ndarray]:
    q = np.arange(n_q) / n_q
    p = np.linspace(-1.0, 1.0, n_p)
    return q, p


def annulus_field(
    a: Sequence[float],
    delta: float = 0.05,
    resolution: tuple[int, int] = (256, 256),
    eps: float = 1e-3,
    seed: int = 0,
) -> GridField:
    """Samples -(f_a(2|p| - 1/2) + eps * cos(2 pi q) * (1 - p^2))."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    n_q, n_p = resolution
    if min(n_q, n_p) < MIN_SIDE:
        raise GridSizeError(f"resolution must be at least {MIN_SIDE}x{MIN_SIDE}")
    q, p = grid_coords(n_q, n_p)
    fa = ProfileSum.of(a, delta)
    radial = fa.piecewise().evaluate(2.0 * np.abs(p) - 0.5)
    values = -(radial[None, :] + eps * np.cos(2 * np.pi * q)[:, None] * (1.0 - p**2)[None, :])
    meta = {
        "model": "annulus",
        "coeffs": [float(x) for x in a],
        "delta": delta,
        "resolution": [n_q, n_p],
        "eps": eps,
        "seed": seed,
    }
    return GridField(values, meta)


def lipschitz_bound(a: Sequence[float], delta: float, eps: float) -> float:
    """Bound on |dF/dq| + |dF/dp| for the annulus field."""
    bump = build_bump(delta)
    df = bump.df
    # |f'| peaks where f'' vanishes, i.e. at the piece ends
    fmax = max(abs(df(b)) for b in bump.f.breaks)
    slope = max((2.0 ** (i + 1) * abs(c) for i, c in enumerate(a)), default=0.0) * fmax
    dp = 2.0 * slope + 2.0 * eps
    dq = 2.0 * math.pi * eps
    return dp + dq


def tolerance(a: Sequence[float], delta: float, resolution: tuple[int, int], eps: float) -> float:
    n_q, n_p = resolution
    h = max(1.0 / n_q, 2.0 / (n_p - 1))
    return 2.0 * lipschitz_bound(a, delta, eps) * h + 3.0 * eps


# -- cubical complex ----------------------------------------------------------


class _Cubes:
    """Index bookkeeping for the periodic-in-q cubical grid."""

    def __init__(self, n_q: int, n_p: int):
        self.nq, self.np = n_q, n_p
        self.nv = n_q * n_p
        self.nh = n_q * n_p  # edges along q: (j,k)-(j+1,k)
        self.nvert = n_q * (n_p - 1)  # edges along p: (j,k)-(j,k+1)
        self.ns = n_q * (n_p - 1)

    def vertex(self, j, k):
        return (j % self.nq) * self.np + k

    def edge_vertices(self) -> tuple[np.ndarray, np.ndarray]:
        nq, np_ = self.nq, self.np
        j, k = np.meshgrid(np.arange(nq), np.arange(np_), indexing="ij")
        h_u = (j * np_ + k).ravel()
        h_v = (((j + 1) % nq) * np_ + k).ravel()
        j2, k2 = np.meshgrid(np.arange(nq), np.arange(np_ - 1), indexing="ij")
        v_u = (j2 * np_ + k2).ravel()
        v_v = (j2 * np_ + k2 + 1).ravel()
        return np.concatenate([h_u, v_u]), np.concatenate([h_v, v_v])

    def h_edge(self, j, k):
        return (j % self.nq) * self.np + k

    def v_edge(self, j, k):
        return self.nh + (j % self.nq) * (self.np - 1) + k

    def square(self, j, k):
        return (j % self.nq) * (self.np - 1) + k

    def square_edges(self) -> np.ndarray:
        nq, np_ = self.nq, self.np
        j, k = np.meshgrid(np.arange(nq), np.arange(np_ - 1), indexing="ij")
        j, k = j.ravel(), k.ravel()
        return np.stack(
            [
                j * np_ + k,
                ((j + 1) % nq) * np_ + k,
                j * np_ + k + 1,
                ((j + 1) % nq) * np_ + k + 1,
            ],
            axis=1,
        ), np.stack(
            [
                self.h_edge(j, k),
                self.h_edge(j, k + 1),
                self.v_edge(j, k),
                self.v_edge(j + 1, k),
            ],
            axis=1,
        )

    def edge_cofaces(self) -> tuple[np.ndarray, np.ndarray]:
        """Two dual nodes per edge; caps are ``ns`` (p = -1) and ``ns + 1`` (p = +1)."""
        nq, np_ = self.nq, self.np
        bottom, top = self.ns, self.ns + 1
        j, k = np.meshgrid(np.arange(nq), np.arange(np_), indexing="ij")
        j, k = j.ravel(), k.ravel()
        above = np.where(k < np_ - 1, j * (np_ - 1) + np.minimum(k, np_ - 2), top)
        below = np.where(k > 0, j * (np_ - 1) + np.maximum(k - 1, 0), bottom)
        j2, k2 = np.meshgrid(np.arange(nq), np.arange(np_ - 1), indexing="ij")
        j2, k2 = j2.ravel(), k2.ravel()
        right = j2 * (np_ - 1) + k2
        left = ((j2 - 1) % nq) * (np_ - 1) + k2
        return np.concatenate([below, left]), np.concatenate([above, right])


def _lower_star(field_: GridField, cubes: _Cubes):
    vals = field_.values.ravel()
    eu, ev = cubes.edge_vertices()
    evals = np.maximum(vals[eu], vals[ev])
    sq_v, sq_e = cubes.square_edges()
    svals = vals[sq_v].max(axis=1)
    return vals, (eu, ev, evals), (sq_e, svals)


def _find(parent: list[int], x: int) -> int:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _barcode_union_find(field_: GridField) -> Barcode:
    cubes = _Cubes(*field_.shape)
    vals, (eu, ev, evals), (_, svals) = _lower_star(field_, cubes)
    bars: list[Bar] = []

    # degree 0: elder rule, vertices ranked by (value, index)
    vrank = np.empty(cubes.nv, dtype=np.int64)
    vrank[np.argsort(vals, kind="stable")] = np.arange(cubes.nv)
    parent = list(range(cubes.nv))
    rank_l = vrank.tolist()
    vals_l = vals.tolist()
    eu_l, ev_l, evals_l = eu.tolist(), ev.tolist(), evals.tolist()
    for e in np.argsort(evals, kind="stable").tolist():
        ru, rv = _find(parent, eu_l[e]), _find(parent, ev_l[e])
        if ru == rv:
            continue
        young, old = (ru, rv) if rank_l[ru] > rank_l[rv] else (rv, ru)
        parent[young] = old
        birth, death = vals_l[young], evals_l[e]
        if death > birth:
            bars.append(Bar(0, birth, death))
    root = int(np.argmin(vrank))
    bars.append(Bar(0, vals_l[root], INF))

    # degree 1: elder rule on the dual graph, edges processed top-down
    ns = cubes.ns
    drank = np.empty(ns + 2, dtype=np.int64)
    drank[np.argsort(svals, kind="stable")] = np.arange(ns)
    drank[ns], drank[ns + 1] = ns, ns + 1
    drank_l = drank.tolist()
    svals_l = svals.tolist()
    c0, c1 = cubes.edge_cofaces()
    c0_l, c1_l = c0.tolist(), c1.tolist()
    dparent = list(range(ns + 2))
    for e in np.argsort(evals, kind="stable")[::-1].tolist():
        ra, rb = _find(dparent, c0_l[e]), _find(dparent, c1_l[e])
        if ra == rb:
            continue
        young, old = (ra, rb) if drank_l[ra] < drank_l[rb] else (rb, ra)
        dparent[young] = old
        birth = evals_l[e]
        if young >= ns:
            bars.append(Bar(1, birth, INF))
        elif svals_l[young] > birth:
            bars.append(Bar(1, birth, svals_l[young]))
    return Barcode(tuple(sorted(bars, key=lambda b: (b.degree, b.low, b.high))))


def _barcode_reduction(field_: GridField) -> Barcode:
    cubes = _Cubes(*field_.shape)
    vals, (eu, ev, evals), (sq_e, svals) = _lower_star(field_, cubes)
    ne = len(evals)
    cell_val = np.concatenate([vals, evals, svals])
    cell_dim = np.concatenate([np.zeros(cubes.nv, int), np.ones(ne, int), np.full(cubes.ns, 2)])
    order = np.lexsort((np.arange(len(cell_val)), cell_dim, cell_val))
    pos = np.empty(len(order), dtype=np.int64)
    pos[order] = np.arange(len(order))
    cols = [0] * len(order)
    for e in range(ne):
        cols[pos[cubes.nv + e]] = (1 << int(pos[eu[e]])) | (1 << int(pos[ev[e]]))
    for s in range(cubes.ns):
        c = 0
        for e in sq_e[s]:
            c ^= 1 << int(pos[cubes.nv + e])
        cols[pos[cubes.nv + ne + s]] = c
    dims = cell_dim[order]
    # clearing: reduce squares first; their pivots (edges) are positive, so zero them
    sq_positions = [i for i in range(len(order)) if dims[i] == 2]
    _, sq_pivots = reduce_columns([cols[i] for i in sq_positions])
    for row in sq_pivots:
        cols[row] = 0
    pairs = {row: sq_positions[j] for row, j in sq_pivots.items()}
    edge_positions = [i for i in range(len(order)) if dims[i] == 1]
    _, e_pivots = reduce_columns([cols[i] for i in edge_positions])
    pairs.update({row: edge_positions[j] for row, j in e_pivots.items()})
    sorted_vals = cell_val[order]
    bars = []
    killers = set(pairs.values())
    for row, col in pairs.items():
        lo, hi = float(sorted_vals[row]), float(sorted_vals[col])
        if hi > lo:
            bars.append(Bar(int(dims[row]), lo, hi))
    for i in range(len(order)):
        if i not in pairs and i not in killers:
            bars.append(Bar(int(dims[i]), float(sorted_vals[i]), INF))
    return Barcode(tuple(sorted(bars, key=lambda b: (b.degree, b.low, b.high))))


def cubical_barcode(field_: GridField, method: str = "union_find") -> Barcode:
    if field_.n_cells() > MAX_CELLS:
        raise GridSizeError(f"{field_.n_cells()} cells exceeds limit {MAX_CELLS}")
    if method == "union_find":
        return _barcode_union_find(field_)
    if method == "reduction":
        return _barcode_reduction(field_)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class MorseEstimate:
    beta_hat: float
    target: float
    tol: float
    passed: bool
    lipschitz: float
    spacing: float
    barcode: Barcode | None = None

    def to_dict(self) -> dict:
        return {
            "beta_hat": self.beta_hat,
            "target": self.target,
            "tol": self.tol,
            "pass": self.passed,
            "lipschitz": self.lipschitz,
            "spacing": self.spacing,
        }


def morse_beta_estimate(
    a: Sequence[float],
    delta: float = 0.05,
    resolution: tuple[int, int] = (256, 256),
    eps: float = 1e-3,
    seed: int = 0,
) -> MorseEstimate:
    field_ = annulus_field(a, delta, resolution, eps, seed)
    bc = cubical_barcode(field_)
    beta_hat = bc.longest_finite()
    minmax, lowest, _ = minmax_min_osc(a)
    target = minmax - lowest
    tol = tolerance(a, delta, resolution, eps)
    n_q, n_p = resolution
    return MorseEstimate(
        beta_hat,
        target,
        tol,
        beta_hat >= target - tol,
        lipschitz_bound(a, delta, eps),
        max(1.0 / n_q, 2.0 / (n_p - 1)),
        bc,
    )


def parse_resolution(text: str) -> tuple[int, int]:
    try:
        nq, np_ = (int(x) for x in text.lower().split("x"))
    except ValueError as exc:
        raise ValueError(f"resolution must look like 256x256, got {text!r}") from exc
    return nq, np_
