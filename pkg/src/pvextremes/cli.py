"""Command-line entry point: simulate, covering, pva, constants, verify."""

from __future__ import annotations

import argparse
import json
import sys

from .covering import MU4_FROZEN, alpha1, alpha2, alpha2_prime_frozen, estimate_mu_k, estimate_p_k
from .errors import PVError
from .harness import ExperimentSpec, dumps, run_experiment, run_header, run_pva, write_outputs


def _resolved(spec: ExperimentSpec) -> None:
    print("resolved spec: " + spec.to_json(), file=sys.stderr)


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _spec_from_args(args, extra: dict) -> ExperimentSpec:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    for key, val in extra.items():
        if val is not None:
            data[key] = val
    return ExperimentSpec.from_dict(data)


def cmd_simulate(args) -> int:
    outputs = {}
    if args.out:
        outputs["records"] = args.out
    if args.summary:
        outputs["summary"] = args.summary
    spec = _spec_from_args(args, {
        "gammas": args.gamma, "reps": args.reps, "master_seed": args.seed,
        "window": args.window, "classes": args.classes.split(",") if args.classes else None,
        "workers": args.workers, "outputs": outputs or None,
    })
    _resolved(spec)
    result = run_experiment(spec)
    if spec.outputs:
        write_outputs(result)
    if "records" not in spec.outputs:
        sys.stdout.write(dumps(result.samples, result.header(), args.format))
    return 0


def cmd_covering(args) -> int:
    print("resolved spec: " + json.dumps({"k": args.k, "samples": args.samples,
                                          "seed": args.seed, "mu": args.mu}), file=sys.stderr)
    if args.mu:
        est = estimate_mu_k(args.k, n=args.samples, seed=args.seed)
    else:
        est = estimate_p_k(args.k, n=args.samples, seed=args.seed)
    rec = {"k": est.k, "n": est.n, "hits": est.hits, "p_hat": est.p_hat,
           "std_error": est.std_error, "seed": est.seed}
    print(json.dumps(rec))
    return 0


def cmd_pva(args) -> int:
    spec = _spec_from_args(args, {
        "gammas": args.gamma, "reps": args.reps, "master_seed": args.seed,
        "window": args.window, "grid_div": args.grid_div, "workers": args.workers,
    })
    _resolved(spec)
    results, aborted = run_pva(spec, alpha=args.alpha)
    header = run_header(spec, "PVAResult", aborted=aborted)
    _write(dumps(results, header, args.format), args.out)
    return 0


def cmd_constants(args) -> int:
    a2 = alpha2(2)
    a2p = alpha2_prime_frozen()
    out = {
        "alpha1": {"value": alpha1(2), "std_error": 0.0, "source": "closed form"},
        "alpha2": {"value": float(a2), "std_error": a2.std_error, "source": a2.source},
        "alpha2_prime": {"value": float(a2p), "std_error": a2p.std_error,
                         "source": f"((32/3) mu_4)^(1/4), mu_4 = {float(MU4_FROZEN)} "
                                   f"+/- {MU4_FROZEN.std_error:.3g} from {MU4_FROZEN.source}"},
    }
    print(json.dumps(out, indent=1))
    return 0


def cmd_verify(args) -> int:
    from .acceptance import run_all
    only = [int(x) for x in args.only.split(",")] if args.only else None
    print("resolved spec: " + json.dumps({"only": only}), file=sys.stderr)
    results = run_all(only)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pvextremes", description=__doc__, allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", allow_abbrev=False, help="extremes of cell radii over replications")
    s.add_argument("--config", help="JSON experiment spec; flags override its fields")
    s.add_argument("--gamma", type=float, action="append", help="intensity (repeatable)")
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int, help="master seed")
    s.add_argument("--window", help="unit-square or disk-of-unit-area")
    s.add_argument("--classes", help="comma-separated subset of b,plain,i")
    s.add_argument("--workers", type=int)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out", help="records file (default: stdout)")
    s.add_argument("--summary", help="JSON file with KS distances and histograms")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("covering", allow_abbrev=False, help="Monte-Carlo covering probabilities p_k or mu_k")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--samples", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--mu", action="store_true", help="estimate mu_k instead of p_k")
    c.set_defaults(func=cmd_covering)

    v = sub.add_parser("pva", allow_abbrev=False, help="Hausdorff distance of the Voronoi approximation")
    v.add_argument("--config")
    v.add_argument("--gamma", type=float, action="append")
    v.add_argument("--reps", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--grid-div", dest="grid_div", type=int)
    v.add_argument("--alpha", type=float, help="regularity constant (default per window)")
    v.add_argument("--window")
    v.add_argument("--workers", type=int)
    v.add_argument("--format", choices=["csv", "json"], default="csv")
    v.add_argument("--out")
    v.set_defaults(func=cmd_pva)

    k = sub.add_parser("constants", allow_abbrev=False, help="print alpha1, alpha2, alpha2' with provenance")
    k.set_defaults(func=cmd_constants)

    a = sub.add_parser("verify", allow_abbrev=False, help="run the acceptance suite")
    a.add_argument("--only", help="comma-separated criterion numbers")
    a.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PVError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
