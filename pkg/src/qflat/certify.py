"""Quasi-flat certification harness and property-test suites.

For each sample pair (a, b) the harness brackets the spectral distance
between the two deformed fibers:

    ||a - b||_inf <= lb <= d <= ub = 2 ||a - b||_inf

where lb is a boundary depth computed from a model complex (the wrapped chord
complex on D*S^1, or cubical sublevel persistence on the annulus) and ub is
the Hofer-type bound.  The distance d itself is never computed; the report
checks that every sample is consistent with quasi-isometry constants
(A, B) = (2, 0).
"""

from __future__ import annotations

import csv
import io
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

from .filtered_z2 import (
    EQ_TOL,
    CocycleClass,
    barcode,
    boundary_depth,
    boundary_depth_bruteforce,
    jitter_levels,
    random_complex,
    spectral_level,
)
from .persistence_metrics import (
    beta_stability_check,
    bottleneck_bruteforce,
    bottleneck_distance,
    level_perturbation_bound,
    product_subadditivity_check,
    random_product_instance,
)
from .profiles import hofer_upper_bound, pad, sup_norm
from .sublevel_grid import morse_beta_estimate
from .wrapped_s1 import RadialHamiltonian, build_bigon_complex, negated, s1_beta

SCHEMA = "cert-report/1"
S1_SLACK = 1e-6
MODELS = ("s1", "annulus")


@dataclass(frozen=True)
class CertSample:
    a: tuple[float, ...]
    b: tuple[float, ...]
    model: str = "s1"
    delta: float = 0.05
    resolution: tuple[int, int] = (256, 256)
    eps: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        a, b = pad(self.a, self.b)
        object.__setattr__(self, "a", tuple(float(x) for x in a))
        object.__setattr__(self, "b", tuple(float(x) for x in b))
        object.__setattr__(self, "resolution", tuple(int(x) for x in self.resolution))

    @property
    def diff(self) -> list[float]:
        return [x - y for x, y in zip(self.a, self.b)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["a"], d["b"], d["resolution"] = list(self.a), list(self.b), list(self.resolution)
        return d

    @classmethod
    def from_dict(cls, d: dict, default_model: str | None = None) -> "CertSample":
        known = {"a", "b", "model", "delta", "resolution", "eps", "seed"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown sample fields {sorted(extra)}")
        if "a" not in d:
            raise ValueError("sample needs coefficient vector 'a'")
        kw = dict(d)
        kw.setdefault("b", [])
        if default_model is not None and "model" not in kw:
            kw["model"] = default_model
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in kw.items()})


def load_samples(doc, default_model: str | None = None) -> list[CertSample]:
    items = doc["samples"] if isinstance(doc, dict) else doc
    if not isinstance(items, list):
        raise ValueError("samples must be a list")
    return [CertSample.from_dict(d, default_model) for d in items]


def _annulus_lb(sample: CertSample) -> dict:
    # boundary depth is invariant under inversion, so both signs bound d from below
    c = sample.diff
    plus = morse_beta_estimate(c, sample.delta, sample.resolution, sample.eps, sample.seed)
    minus = morse_beta_estimate([-x for x in c], sample.delta, sample.resolution, sample.eps, sample.seed)
    return {
        "lb": max(plus.beta_hat, minus.beta_hat),
        "tol": plus.tol,
        "beta_hat_plus": plus.beta_hat,
        "beta_hat_minus": minus.beta_hat,
    }


def evaluate_sample(index: int, sample: CertSample, timings: bool = False) -> dict:
    out = {"index": index, "input": sample.to_dict()}
    t0 = time.perf_counter()
    try:
        c = sample.diff
        target = sup_norm(c)
        ub, ub_osc = hofer_upper_bound(sample.a, sample.b, sample.delta)
        if sample.model == "s1":
            lb = s1_beta(c, sample.delta)
            slack = S1_SLACK
            out.update(lb=lb, tol=slack)
        else:
            extra = _annulus_lb(sample)
            lb, slack = extra["lb"], extra["tol"]
            out.update(extra)
        ok = lb >= target - slack and ub == 2.0 * target
        ratio = ub / max(lb, target) if max(lb, target) > 0 else None
        out.update(
            target=target,
            ub=ub,
            ub_osc=ub_osc,
            ratio=ratio,
            sandwich=ratio is None or ratio <= 2.0 + EQ_TOL,
            error=None,
        )
        out["pass"] = bool(ok and out["sandwich"])
    except Exception as exc:  # recorded per sample, the run continues
        out.update(error=f"{type(exc).__name__}: {exc}")
        out["pass"] = False
    if timings:
        out["seconds"] = time.perf_counter() - t0
    return out


def _evaluate_star(args):
    return evaluate_sample(*args)


def run_certify(samples: Sequence[CertSample], workers: int = 1, timings: bool = False) -> dict:
    jobs = [(i, s, timings) for i, s in enumerate(samples)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_star, jobs))
    else:
        results = [_evaluate_star(j) for j in jobs]
    results.sort(key=lambda r: r["index"])
    ok_rows = [r for r in results if r["error"] is None]
    consistent = all(r["pass"] and r["lb"] <= r["ub"] + EQ_TOL for r in ok_rows)
    return {
        "schema": SCHEMA,
        "samples": results,
        "constants": {"A": 2, "B": 0, "consistent": consistent},
        "n_samples": len(results),
        "n_pass": sum(r["pass"] for r in results),
        "all_pass": all(r["pass"] for r in results),
    }


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "model", "target", "lb", "ub", "ub_osc", "pass"])
    for r in report["samples"]:
        w.writerow(
            [r["index"], r["input"]["model"], r.get("target", ""), r.get("lb", ""), r.get("ub", ""), r.get("ub_osc", ""), int(r["pass"])]
        )
    return buf.getvalue()


def random_pairs(seed: int, n: int = 100, dim: int = 8, scale: float = 2.0) -> list[CertSample]:
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        a = [rng.uniform(-scale, scale) for _ in range(dim)]
        b = [rng.uniform(-scale, scale) for _ in range(dim)]
        out.append(CertSample(tuple(a), tuple(b), "s1"))
    return out


# -- gamma proxy ----------------------------------------------------------------


def _top_class_level(h: RadialHamiltonian) -> float:
    cx = build_bigon_complex(h)
    bc = barcode(cx)
    (inf_bar,) = bc.infinite()
    return spectral_level(cx, CocycleClass.of(inf_bar.creator_id))


def gamma_proxy(a: Sequence[float], delta: float = 0.05, mu: float = 0.5) -> dict:
    """Spectral level of the surviving class for h and for -h, next to beta.

    Exploratory only: which class plays the role of the unit is a convention
    this model does not pin down, so nothing here is asserted.
    """
    h = RadialHamiltonian.from_coeffs(a, delta, mu)
    rho_plus = _top_class_level(h)
    rho_minus = _top_class_level(negated(h))
    beta = boundary_depth(build_bigon_complex(h))
    total = rho_plus + rho_minus
    return {
        "coeffs": [float(x) for x in a],
        "rho_plus": rho_plus,
        "rho_minus": rho_minus,
        "sum": total,
        "beta": beta,
        "sum_ge_beta": total >= beta - EQ_TOL,
    }


# -- property-test suites ---------------------------------------------------------


@dataclass
class SuiteResult:
    suite: str
    seed: int
    trials: int
    failures: int = 0
    first_failure: dict | None = None
    worst: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def _trial_oracle(rng: random.Random) -> dict | None:
    cx = random_complex(rng, rng.randint(1, 12), discrete_levels=rng.random() < 0.3)
    fast, slow, bar = boundary_depth(cx), boundary_depth_bruteforce(cx), barcode(cx).longest_finite()
    if abs(fast - slow) > EQ_TOL or abs(fast - bar) > EQ_TOL:
        return {"complex": cx.to_dict(), "fast": fast, "bruteforce": slow, "longest_bar": bar}
    return None


def _trial_bottleneck(rng: random.Random) -> dict | None:
    A = barcode(random_complex(rng, rng.randint(1, 6)))
    B = barcode(random_complex(rng, rng.randint(1, 6)))
    if len(A.finite()) + len(B.finite()) > 7:
        return None
    fast, slow = bottleneck_distance(A, B), bottleneck_bruteforce(A, B)
    if not (fast == slow or abs(fast - slow) <= EQ_TOL):
        return {"A": A.to_dict(), "B": B.to_dict(), "fast": fast, "bruteforce": slow}
    return None


def _trial_beta_stability(rng: random.Random) -> dict | None:
    cx = random_complex(rng, rng.randint(1, 10), discrete_levels=rng.random() < 0.3)
    other = jitter_levels(rng, cx, rng.uniform(0, 2))
    v = beta_stability_check(cx, other)
    return None if v.ok else {"A": cx.to_dict(), "B": other.to_dict(), **v.to_dict()}


def _trial_level_perturbation(rng: random.Random) -> dict | None:
    cx = random_complex(rng, rng.randint(1, 10), discrete_levels=rng.random() < 0.3)
    other = jitter_levels(rng, cx, rng.uniform(0, 2))
    v = level_perturbation_bound(cx, other)
    return None if v.ok else {"A": cx.to_dict(), "B": other.to_dict(), **v.to_dict()}


def _trial_subadditivity(rng: random.Random) -> dict | None:
    data, alpha, beta = random_product_instance(rng)
    v = product_subadditivity_check(data, alpha, beta)
    return None if v.ok else {"alpha": sorted(alpha.support), "beta": sorted(beta.support), **v.to_dict()}


SUITES: dict[str, Callable[[random.Random], dict | None]] = {
    "oracle": _trial_oracle,
    "bottleneck": _trial_bottleneck,
    "beta_stability": _trial_beta_stability,
    "level_perturbation": _trial_level_perturbation,
    "subadditivity": _trial_subadditivity,
}


def run_suite(name: str, seed: int, trials: int) -> SuiteResult:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    rng = random.Random(seed)
    res = SuiteResult(name, seed, trials)
    trial = SUITES[name]
    for t in range(trials):
        failure = trial(rng)
        if failure is not None:
            res.failures += 1
            if res.first_failure is None:
                res.first_failure = {"trial": t, **failure}
    return res
