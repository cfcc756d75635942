"""Command line entry point.

Exit codes: 0 on success, 1 when a computed check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .certify import SUITES, gamma_proxy, load_samples, report_csv, run_certify, run_suite
from .filtered_z2 import FilteredComplex, barcode, boundary_depth, boundary_depth_bruteforce
from .geodesic_census import ModelManifold, census, discrepancy_notes
from .profiles import parse_coeffs
from .sublevel_grid import annulus_field, cubical_barcode, morse_beta_estimate, parse_resolution
from .wrapped_s1 import RadialHamiltonian, build_bigon_complex, s1_summary


class InputError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc


def _load_complex(path: str) -> FilteredComplex:
    try:
        return FilteredComplex.from_dict(_read_json(path))
    except (KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"{path} is not a filtered complex: {exc!r}") from exc


def bundled(name: str) -> str:
    return resources.files("qflat").joinpath("data", name).read_text()


# -- subcommands --------------------------------------------------------------


def cmd_barcode(args) -> int:
    cx = _load_complex(args.complex)
    bc = barcode(cx)
    _emit(dumps({**bc.to_dict(), "boundary_depth": bc.longest_finite()}), args.out)
    return 0


def cmd_beta(args) -> int:
    cx = _load_complex(args.complex)
    beta = boundary_depth(cx)
    print(repr(beta))
    if args.check:
        slow = boundary_depth_bruteforce(cx)
        if abs(slow - beta) > 1e-9:
            print(f"brute force disagrees: {slow!r}", file=sys.stderr)
            return 1
    return 0


def cmd_s1(args) -> int:
    coeffs = parse_coeffs(args.coeffs)
    try:
        summary = s1_summary(coeffs, args.delta, args.mu)
    except ArithmeticError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    if args.gamma:
        summary["gamma_proxy"] = gamma_proxy(coeffs, args.delta, args.mu)
    if args.emit_complex:
        h = RadialHamiltonian.from_coeffs(coeffs, args.delta, args.mu)
        Path(args.emit_complex).write_text(dumps(build_bigon_complex(h).to_dict()))
    _emit(dumps(summary), args.out)
    return 0


def cmd_annulus(args) -> int:
    coeffs = parse_coeffs(args.coeffs)
    res = parse_resolution(args.res)
    est = morse_beta_estimate(coeffs, args.delta, res, args.eps, args.seed)
    doc = {"coeffs": coeffs, "delta": args.delta, "resolution": list(res), "eps": args.eps, "seed": args.seed}
    doc.update(est.to_dict())
    if args.barcode:
        doc["barcode"] = est.barcode.to_dict()["bars"]
    if args.emit_barcode:
        Path(args.emit_barcode).write_text(dumps(est.barcode.to_dict()))
    if args.dump:
        annulus_field(coeffs, args.delta, res, args.eps, args.seed).dump(args.dump)
    _emit(dumps(doc), args.out)
    return 0 if est.passed else 1


def cmd_field_barcode(args) -> int:
    from .sublevel_grid import GridField

    bc = cubical_barcode(GridField.load(args.field), method=args.method)
    _emit(dumps({**bc.to_dict(), "boundary_depth": bc.longest_finite()}), args.out)
    return 0


def cmd_geodesics(args) -> int:
    if args.manifold == "sphere":
        if args.dist is None:
            raise InputError("--dist is required for spheres")
        m = ModelManifold.sphere(args.dim, args.dist, args.cutoff, args.radius)
    else:
        if args.offset is None:
            raise InputError("--offset is required for tori")
        offset = parse_coeffs(args.offset)
        if args.dim is not None and args.dim != len(offset):
            raise InputError(f"--dim {args.dim} does not match offset of length {len(offset)}")
        basis = json.loads(args.basis) if args.basis else None
        m = ModelManifold.torus(offset, args.cutoff, basis)
    label = tuple(int(x) for x in parse_coeffs(args.class_label)) if args.class_label else None
    doc = census(m, args.k, label)
    if args.notes:
        doc["discrepancies"] = discrepancy_notes()
    _emit(dumps(doc), args.out)
    return 0


def cmd_certify(args) -> int:
    if args.samples:
        doc = _read_json(args.samples)
    else:
        doc = json.loads(bundled(f"samples_{args.model}.json"))
    try:
        samples = load_samples(doc, args.model)
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad sample file: {exc!r}") from exc
    report = run_certify(samples, workers=args.workers, timings=args.timings)
    _emit(dumps(report), args.out)
    if args.csv:
        Path(args.csv).write_text(report_csv(report))
    return 0 if report["all_pass"] else 1


def cmd_proptest(args) -> int:
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    results = [run_suite(n, args.seed, args.trials).to_dict() for n in names]
    _emit(dumps({"seed": args.seed, "trials": args.trials, "suites": results}), args.out)
    return 0 if all(r["ok"] for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qflat", description="Filtered complexes, boundary depth and quasi-flat certificates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def with_out(sp):
        sp.add_argument("--out", help="write JSON here instead of stdout")
        return sp

    sp = with_out(sub.add_parser("barcode", help="barcode of a filtered complex JSON file"))
    sp.add_argument("complex")
    sp.set_defaults(func=cmd_barcode)

    sp = sub.add_parser("beta", help="boundary depth of a filtered complex JSON file")
    sp.add_argument("complex")
    sp.add_argument("--check", action="store_true", help="also run the brute-force oracle")
    sp.set_defaults(func=cmd_beta)

    sp = with_out(sub.add_parser("s1", help="chord complex and beta for f_a on D*S^1"))
    sp.add_argument("--coeffs", required=True, help="comma separated, e.g. 0.7,0.2")
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--mu", type=float, default=0.5)
    sp.add_argument("--gamma", action="store_true", help="include the exploratory gamma proxy")
    sp.add_argument("--emit-complex", help="write the chord complex JSON here")
    sp.set_defaults(func=cmd_s1)

    sp = with_out(sub.add_parser("annulus", help="sublevel-persistence estimate on the annulus"))
    sp.add_argument("--coeffs", required=True)
    sp.add_argument("--res", default="256x256")
    sp.add_argument("--eps", type=float, default=1e-3)
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--barcode", action="store_true", help="include the bars in the output")
    sp.add_argument("--emit-barcode", help="write the barcode JSON here")
    sp.add_argument("--dump", help="write the sampled field to this path")
    sp.set_defaults(func=cmd_annulus)

    sp = with_out(sub.add_parser("field-barcode", help="cubical barcode of a dumped grid field"))
    sp.add_argument("field")
    sp.add_argument("--method", choices=("union_find", "reduction"), default="union_find")
    sp.set_defaults(func=cmd_field_barcode)

    sp = with_out(sub.add_parser("geodesics", help="geodesic census and index conditions"))
    sp.add_argument("--manifold", choices=("sphere", "torus"), required=True)
    sp.add_argument("--dim", type=int)
    sp.add_argument("--dist", type=float)
    sp.add_argument("--radius", type=float, default=1.0)
    sp.add_argument("--offset", help="torus x1 - x0, comma separated")
    sp.add_argument("--basis", help="torus lattice basis as a JSON list of rows")
    sp.add_argument("--cutoff", type=float, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--class", dest="class_label", help="class label, comma separated")
    sp.add_argument("--notes", action="store_true", help="append the recomputed discrepancy cases")
    sp.set_defaults(func=cmd_geodesics)

    sp = with_out(sub.add_parser("certify", help="quasi-flat sandwich on a batch of samples"))
    sp.add_argument("--model", choices=("s1", "annulus"), default="s1")
    sp.add_argument("--samples", help="sample JSON (defaults to the bundled set)")
    sp.add_argument("--csv", help="also write (target, lb, ub) rows here")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--timings", action="store_true", help="record wall times (breaks byte-identical output)")
    sp.set_defaults(func=cmd_certify)

    sp = with_out(sub.add_parser("proptest", help="seeded property-test suites"))
    sp.add_argument("--suite", choices=sorted(SUITES) + ["all"], default="all")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=200)
    sp.set_defaults(func=cmd_proptest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "geodesics" and args.manifold == "sphere" and args.dim is None:
        print("error: --dim is required for spheres", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
