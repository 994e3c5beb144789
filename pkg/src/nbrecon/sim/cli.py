"""Command line entry point: ``nbrecon <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .. import ldpc
from .engine import ExperimentSpec, alpha_sweep, d_saturation_study, efficiency_at_fer, fer_sweep
from .figures import FIGURES, reproduce
from .records import _convert, emit_csv, load_config, parse_snr_grid, to_records

log = logging.getLogger("nbrecon")

SPEC_FLAGS = {
    "q": int, "rate": str, "profile": str, "n": int, "alpha": float, "d": int, "snr_db": str,
    "frames": int, "min_frames": int, "max_errors": int, "max_iterations": int, "damping": float,
    "seed": int, "code_seed": int, "code_file": str, "snr_mismatch_db": float, "workers": int,
}


def _add_spec_flags(parser):
    parser.add_argument("--config", help="key = value experiment file; flags override it")
    for name, typ in SPEC_FLAGS.items():
        flag = "--" + name.replace("_", "-")
        if name == "snr_db":
            parser.add_argument("--snr", dest=name, type=str, help="dB list '8,9,10' or range '8:12:0.5'")
        else:
            parser.add_argument(flag, dest=name, type=typ)
    parser.add_argument("--out", "-o", default=None, help="output CSV path")


def _spec(args) -> ExperimentSpec:
    values = load_config(args.config) if args.config else {}
    for name in SPEC_FLAGS:
        raw = getattr(args, name, None)
        if raw is None:
            continue
        values[name] = _convert(name, str(raw)) if name in ("snr_db", "rate", "code_file") else raw
    return ExperimentSpec().replace(**values)


def cmd_construct(args):
    code = ldpc.make_code(args.q, args.n, args.rate, args.profile, args.seed, dv=args.dv,
                         max_depth=args.max_depth)
    ldpc.save(code, args.out)
    log.info("wrote %r to %s", code, args.out)
    print(args.out)


def cmd_fer(args):
    spec = _spec(args)
    print(emit_csv(fer_sweep(spec), args.out or "fer.csv"))


def cmd_efficiency(args):
    spec = _spec(args)
    window = parse_snr_grid(args.range) if args.range else None
    thr = efficiency_at_fer(spec, args.target, window)
    if not thr.ok:
        log.warning("FER does not cross %.3g in the search range", args.target)
    print(emit_csv(to_records(thr) + [dict(kind="probe", **r) for r in to_records(thr.probes)],
                   args.out or "efficiency.csv"))


def cmd_dstudy(args):
    spec = _spec(args)
    d_values = [int(x) for x in args.d_values.split(",")]
    print(emit_csv(d_saturation_study(spec, d_values), args.out or "dstudy.csv"))


def cmd_alphasweep(args):
    spec = _spec(args)
    alphas = [float(x) for x in args.alphas.split(",")]
    records = []
    for alpha, thr in alpha_sweep(spec, alphas, p=args.p, target_fer=args.target):
        records += to_records(thr, alpha=alpha)
    print(emit_csv(records, args.out or "alphasweep.csv"))


def cmd_reproduce(args):
    kwargs = {"frames": args.frames, "seed": args.seed, "workers": args.workers}
    if args.n_values:
        kwargs["n_values"] = tuple(int(float(x)) for x in args.n_values.split(","))
    if args.d_values:
        kwargs["d_values"] = tuple(int(x) for x in args.d_values.split(","))
    out = reproduce(args.figure, args.outdir, **kwargs)
    for path in out if isinstance(out, list) else [out]:
        print(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nbrecon", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a labelled parity-check code and save it")
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--profile", default="regular")
    p.add_argument("--dv", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("fer", help="frame error rate sweep over an SNR grid")
    _add_spec_flags(p)
    p.set_defaults(func=cmd_fer)

    p = sub.add_parser("efficiency", help="efficiency at the SNR where the FER crosses a target")
    _add_spec_flags(p)
    p.add_argument("--target", type=float, default=0.1)
    p.add_argument("--range", help="search interval 'lo,hi' in dB (default: ends of the SNR grid)")
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("dstudy", help="FER against the number of disclosed low bits")
    _add_spec_flags(p)
    p.add_argument("--d-values", default="1,2,3,4,5")
    p.set_defaults(func=cmd_dstudy)

    p = sub.add_parser("alphasweep", help="efficiency of a fixed-rate code against the cutoff")
    _add_spec_flags(p)
    p.add_argument("--alphas", default="4,6,8,10,12")
    p.add_argument("--p", type=int, default=9)
    p.add_argument("--target", type=float, default=0.1)
    p.set_defaults(func=cmd_alphasweep)

    p = sub.add_parser("reproduce", help="run a published experiment at configurable scale")
    p.add_argument("figure", choices=sorted(FIGURES))
    p.add_argument("--frames", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--n-values", default=None, help="frame lengths, e.g. '1000,10000'")
    p.add_argument("--d-values", default=None)
    p.add_argument("--outdir", default="results")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"nbrecon: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
