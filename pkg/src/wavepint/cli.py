"""Command line entry point: ``wavepint {solve,spectrum,sweep}``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

from . import bench
from .bench import ExperimentConfig


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with ExperimentConfig keys; flags override it")
    p.add_argument("--out", help="output path (.csv for solve records, .json otherwise)")
    p.add_argument("--workers", type=int, help="concurrent runs (default 1)")
    p.add_argument("--allow-large", action="store_true", default=None,
                   help="run sizes beyond the desk-scale caps")
    p.add_argument("--strict", action="store_true", default=None,
                   help="exit nonzero if any run fails to converge")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavepint", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve instances with MINRES and record iterations/errors")
    s.add_argument("--problem")
    s.add_argument("--gamma", nargs="+", type=float, dest="gammas")
    s.add_argument("--h", nargs="+", dest="hs", help="mesh sizes, e.g. 2^-7")
    s.add_argument("--precond", nargs="+", dest="preconditioners",
                   choices=sorted(bench.BUILDERS))
    s.add_argument("--tol", type=float)
    s.add_argument("--maxit", type=int)
    _add_common(s)

    sp = sub.add_parser("spectrum", help="dense spectra against symbol samples or +-1")
    sp.add_argument("--problem")
    size = sp.add_mutually_exclusive_group()
    size.add_argument("--m", type=int, help="spatial unknowns m (a perfect square in 2D)")
    size.add_argument("--m1", type=int, help="interior points per direction")
    sp.add_argument("--n", nargs="+", type=int, dest="ns")
    sp.add_argument("--gamma", nargs="+", type=float, dest="gammas")
    sp.add_argument("--precond", nargs="+", dest="preconditioners",
                    choices=sorted(bench.BUILDERS) + ["psi"],
                    help="psi compares A with the symbol; others give P^-1 A spectra")
    _add_common(sp)

    sw = sub.add_parser("sweep", help="run a named preset")
    sw.add_argument("--preset", required=True, choices=sorted(bench.PRESETS))
    _add_common(sw)
    return parser


def _m1_from_m(m: int, d: int) -> int:
    m1 = round(m ** (1.0 / d))
    if m1 ** d != m:
        raise ValueError(f"m={m} is not a perfect power for d={d}")
    return m1


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.command == "sweep":
        cfg = bench.get_preset(args.preset)
    elif args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        cfg = ExperimentConfig()
    if args.command == "spectrum":
        cfg = replace(cfg, mode="spectrum",
                      preconditioners=args.preconditioners or (cfg.preconditioners if args.config else ["psi"]))
    elif args.command == "solve":
        cfg = replace(cfg, mode="solve")

    overrides = {}
    for key in ("problem", "gammas", "hs", "preconditioners", "tol", "maxit", "ns",
                "out", "workers", "allow_large", "strict"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if args.command == "sweep" and args.config:
        # a config file on sweep only supplies run settings, not the grid
        extra = ExperimentConfig.from_file(args.config)
        for key in ("tol", "maxit", "workers", "allow_large", "strict", "out"):
            overrides.setdefault(key, getattr(extra, key))
    cfg = replace(cfg, **overrides)
    if args.command == "spectrum":
        if getattr(args, "m1", None) is not None:
            cfg = replace(cfg, m1s=[args.m1])
        elif getattr(args, "m", None) is not None:
            cfg = replace(cfg, m1s=[_m1_from_m(args.m, cfg.d)])
    cfg.validate()
    return cfg


def _print_records(records) -> None:
    print(f"{'gamma':>8} {'h':>10} {'dof':>8} {'precond':>10} {'iter':>5} {'conv':>5} "
          f"{'e_y':>10} {'e_p':>10}")
    for r in records:
        print(f"{r.gamma:8.0e} {r.h:10.3e} {r.dof:8d} {r.preconditioner:>10} {r.iterations:5d} "
              f"{str(r.converged):>5} {r.e_y:10.3e} {r.e_p:10.3e}")


def _print_reports(reports) -> None:
    for r in reports:
        g = r.grid
        print(f"{r.label:>22} d={g['d']} m1={g['m1']} n={g['n']} gamma={r.gamma:.0e} "
              f"size={r.size} max={r.max_abs_diff:.3e} mean={r.mean_abs_diff:.3e} "
              f"outliers={r.outlier_count}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = make_config(args)
        if cfg.mode == "spectrum":
            reports = bench.run_spectrum_study(cfg)
            _print_reports(reports)
            if cfg.out:
                bench.emit_json(reports, cfg.out)
            return 0
        records = bench.run_experiment(cfg)
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _print_records(records)
    if cfg.out:
        if cfg.out.endswith(".json"):
            bench.emit_json(records, cfg.out)
        else:
            bench.emit_csv(records, cfg.out)
    failed = [r for r in records if not r.converged]
    if cfg.strict and failed:
        for r in failed:
            print(f"not converged: gamma={r.gamma:g} h={r.h:g} {r.preconditioner} "
                  f"after {r.iterations} iterations", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
