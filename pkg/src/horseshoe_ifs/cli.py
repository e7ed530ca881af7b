"""Command-line front end: ``horseshoe-ifs <command> [options]``.

Every output starts with ``#`` lines echoing the command, the parameters and
the numerical knobs, so a file is enough to reproduce itself. Exit codes:
0 success, 1 a checked claim failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import io
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import conditions, ifs, measures, thermo
from .config import PRESETS, SEARCH_BOX, SEARCH_CONSTRAINTS, ConfigError, format_params, resolve_params

EXIT_OK, EXIT_CLAIM, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def _header(command: str, params, knobs: dict) -> str:
    lines = [f"# command = {command}"] + [f"# {k} = {v!r}" for k, v in knobs.items()]
    return "\n".join(lines) + "\n" + format_params(params, prefix="# param ")


def _t_grid(args) -> np.ndarray:
    if not args.t_step > 0:
        raise UsageError("--t-step must be positive")
    if not args.t_max > args.t_min:
        raise UsageError("--t-max must exceed --t-min")
    count = int(round((args.t_max - args.t_min) / args.t_step)) + 1
    # rounding keeps grid points such as 0.0 exact
    return np.round(args.t_min + args.t_step * np.arange(count), 12)


def cmd_validate(params, args, out) -> int:
    rep = conditions.validate(params, margin=args.tol if args.tol is not None else conditions.DEFAULT_MARGIN)
    out.write(_header("validate", params, {"margin": rep.margin}))
    out.write(rep.to_text())
    return EXIT_OK if rep.all_pass else EXIT_CLAIM


def cmd_search(params, args, out) -> int:
    found = conditions.search_feasible(
        SEARCH_BOX,
        budget=args.budget,
        base=params,
        n_samples=args.samples,
        seed=args.seed,
        constraints=None if args.no_extra_constraints else SEARCH_CONSTRAINTS,
    )
    knobs = {"budget": args.budget, "samples": args.samples, "seed": args.seed,
             "extra_constraints": not args.no_extra_constraints}
    out.write(_header("search", params, knobs))
    for i, p in enumerate(found):
        rep = conditions.validate(p)
        out.write(f"# --- instance {i}: min strict slack {rep.min_strict_slack():.6g}\n")
        out.write(format_params(p))
    return EXIT_OK if found else EXIT_CLAIM


def cmd_pressure(params, args, out) -> int:
    t = _t_grid(args)
    curve = thermo.pressure_curve(params, t, args.depth, lower=args.lower, workers=args.workers)
    out.write(_header("pressure", params, {"depth": args.depth, "lower": args.lower, "t_min": args.t_min,
                                           "t_max": args.t_max, "t_step": args.t_step}))
    thermo.write_curve_csv(curve, out)
    return EXIT_OK


def cmd_spectrum(params, args, out) -> int:
    cert = thermo.spectrum_scan(params, args.max_period, workers=args.workers, keep_records=args.records)
    out.write(_header("spectrum", params, {"max_period": args.max_period, "records": args.records}))
    thermo.write_spectrum_csv(cert, out)
    out.write(f"# max_nonexceptional_exponent = {cert.max_nonexceptional_exponent!r}\n")
    out.write(f"# maximizer = {cert.maximizer}\n")
    out.write(f"# log_beta02_minus = {cert.min_exceptional_exponent!r}\n")
    out.write(f"# gap_width = {cert.gap_width!r}\n")
    for m, e in cert.estimates.items():
        out.write(f"# estimate_m{m} = {e!r}\n")
    out.write(f"# valid = {cert.valid}\n")
    return EXIT_OK if cert.valid else EXIT_CLAIM


def cmd_transition(params, args, out) -> int:
    t = _t_grid(args)
    curve = thermo.pressure_curve(params, t, args.depth, workers=args.workers)
    rep = thermo.locate_transition(curve, params, tol=args.tol if args.tol is not None else 1e-3, workers=args.workers)
    out.write(_header("transition", params, {"depth": args.depth, "t_min": args.t_min, "t_max": args.t_max,
                                             "t_step": args.t_step, "tol": args.tol}))
    out.write(rep.to_text())
    ok = rep.first_order and rep.t_c_estimate < 0 and 0 < rep.entropy_minus < rep.entropy_plus
    return EXIT_OK if ok else EXIT_CLAIM


def _probs(text: str) -> measures.BernoulliSpec:
    try:
        vals = [float(v) for v in text.split(",")]
        return measures.BernoulliSpec(*vals)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"--probs needs three comma-separated probabilities: {exc}") from exc


def cmd_measures(params, args, out) -> int:
    kind = args.kind
    knobs = {"kind": kind, "period": args.period, "seed": args.seed}
    if kind in ("lift", "triviality"):
        knobs["probs"] = args.probs
    if kind == "triviality":
        knobs.update(samples=args.samples, word_len=args.word_len, tol=args.tol)
    out.write(_header("measures", params, knobs))
    if kind == "maxent":
        mu = measures.maxent_approximant(params, args.period)
        out.write(f"# atoms = {len(mu)}\n# exponent_avg = {mu.exponent_avg!r}\n# base_entropy = {mu.base_entropy!r}\n")
        if args.atoms:
            measures.write_atoms_csv(mu, out)
        return EXIT_OK if mu.exponent_avg <= 1e-9 else EXIT_CLAIM
    if kind == "pair":
        mu1, mu2 = measures.horseshoe_pair(params, args.period)
        limit = 0.5 * math.log(params.beta0 * params.beta2)
        out.write(f"# mu1_exponent = {mu1.exponent_avg!r}\n# mu2_exponent = {mu2.exponent_avg!r}\n")
        out.write(f"# mu2_limit_exponent = {limit!r}\n# entropy = {mu1.base_entropy!r}\n")
        if args.atoms:
            out.write("# measure mu1\n")
            measures.write_atoms_csv(mu1, out)
            out.write("# measure mu2\n")
            measures.write_atoms_csv(mu2, out)
        return EXIT_OK if mu1.exponent_avg <= 1e-9 < mu2.exponent_avg else EXIT_CLAIM
    if kind == "lift":
        spec = _probs(args.probs)
        out.write(f"# entropy = {spec.entropy!r}\n# lift_bound = {measures.bernoulli_lift_bound(spec, params)!r}\n")
        return EXIT_OK
    if kind == "triviality":
        spec = _probs(args.probs)
        frac = measures.fiber_triviality_sample(spec, params, args.samples, args.word_len,
                                                args.tol if args.tol is not None else 1e-9, seed=args.seed)
        out.write(f"# lift_bound = {measures.bernoulli_lift_bound(spec, params)!r}\n")
        out.write(f"# fraction_trivial = {frac!r}\n")
        return EXIT_OK
    rep = measures.uniqueness_check(params)
    out.write(rep.to_text())
    return EXIT_OK if rep.holds else EXIT_CLAIM


def cmd_itinerary(params, args, out) -> int:
    b = args.b if args.b is not None else ifs.choose_ladder_b(params)
    out.write(_header("itinerary", params, {"count": args.count, "seed": args.seed, "b": b,
                                            "return_orbits": args.return_orbits}))
    summary = ifs.sample_itineraries(params, args.count, b=b, seed=args.seed)
    out.write("J_lo,J_hi,returns,kappa_est,fixed_point,word\n")
    for J, it in summary.itineraries:
        out.write(f"{J[0]!r},{J[1]!r},{it.returns},{it.kappa_est!r},{it.fixed_point!r},{it.word}\n")
    for J, reason in summary.failures:
        out.write(f"# failure J=({J[0]!r}, {J[1]!r}): {reason}\n")
    out.write(f"# min_kappa = {summary.min_kappa!r}\n# max_residual = {summary.max_residual!r}\n")
    ok = summary.holds
    if args.return_orbits:
        claims = ifs.sample_return_claims(params, args.return_orbits, seed=args.seed)
        out.write(f"# returns = {claims.n_returns}\n# violations = {len(claims.violations)}\n")
        out.write(f"# min_depth_slack = {claims.min_depth_slack!r}\n")
        out.write(f"# max_block_excess = {claims.max_block_excess!r}\n")
        ok = ok and claims.holds
    return EXIT_OK if ok else EXIT_CLAIM


COMMANDS = {
    "validate": cmd_validate,
    "search": cmd_search,
    "pressure": cmd_pressure,
    "spectrum": cmd_spectrum,
    "transition": cmd_transition,
    "measures": cmd_measures,
    "itinerary": cmd_itinerary,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--params", metavar="PATH", help="flat key = value parameter file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="named parameter set (default: default-validated)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--workers", type=int, default=_default_workers(), help="parallel worker processes")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="command-specific tolerance")

    tgrid = argparse.ArgumentParser(add_help=False)
    tgrid.add_argument("--depth", type=int, default=12, help="word length of the cylinder sums")
    tgrid.add_argument("--t-min", type=float, default=-20.0)
    tgrid.add_argument("--t-max", type=float, default=20.0)
    tgrid.add_argument("--t-step", type=float, default=0.05)

    parser = argparse.ArgumentParser(prog="horseshoe-ifs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check every condition clause")
    p = sub.add_parser("search", parents=[common], help="search the default box for valid instances")
    p.add_argument("--budget", type=int, default=1)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--no-extra-constraints", action="store_true")
    p = sub.add_parser("pressure", parents=[common, tgrid], help="pressure bracket over a t grid (CSV)")
    p.add_argument("--lower", choices=("periodic", "infimum"), default="periodic")
    p = sub.add_parser("spectrum", parents=[common], help="exhaustive periodic central exponents")
    p.add_argument("--max-period", type=int, default=10)
    p.add_argument("--records", action="store_true", help="list every fixed point, not only per-period maxima")
    sub.add_parser("transition", parents=[common, tgrid], help="locate the pressure kink")
    p = sub.add_parser("measures", parents=[common], help="periodic-atom measures and Bernoulli lifts")
    p.add_argument("kind", choices=("maxent", "pair", "lift", "triviality", "uniqueness"))
    p.add_argument("--period", type=int, default=9)
    p.add_argument("--probs", default="0.333333333333333,0.333333333333333,0.333333333333334")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--word-len", type=int, default=60)
    p.add_argument("--atoms", action="store_true", help="also list every atom")
    p = sub.add_parser("itinerary", parents=[common], help="expanding return words for random intervals")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--b", type=float, default=None, help="ladder scale (default: chosen automatically)")
    p.add_argument("--return-orbits", type=int, default=0, help="also check returns along this many random orbits")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    buf = io.StringIO()
    try:
        params = resolve_params(args.params, args.preset)
        code = COMMANDS[args.command](params, args, buf)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # out-of-range knobs rejected by the library
        sys.stdout.write(buf.getvalue())
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
