"""Command-line interface.

Subcommands:
  run       one simulation, writes a round-level CSV
  sweep     regret experiment over a horizon grid, writes regret + summary CSVs
  bounds    closed-form regret curves as CSV
  example1  prints the benchmark per-round utilities

Exit codes: 0 success, 2 configuration error, 3 contract violation
during simulation.  The output directory resolves as --out flag, then
the FPAB_OUT environment variable, then the config's out_dir.
"""

from __future__ import annotations

import argparse
import os
import sys

import yaml

from .auction import ContractViolationError, result_to_csv
from .distributions import RngStream
from .harness import (
    OUT_DIR_ENV,
    ConfigError,
    bounds_table,
    example1_report,
    load_experiment,
    load_run,
    run_single,
    run_sweep,
)

EXIT_CONFIG = 2
EXIT_CONTRACT = 3


def _load_doc(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path!r} must be a mapping")
    return doc


def _resolve_out(flag_value, doc_default: str) -> str:
    return flag_value or os.environ.get(OUT_DIR_ENV) or doc_default


def _cmd_run(args) -> int:
    doc = _load_doc(args.config)
    spec = load_run(doc)
    if args.seed is not None:
        spec = type(spec)(**{**spec.__dict__, "seed": args.seed})
    result, cfg = run_single(spec)
    out_dir = _resolve_out(args.out, str(doc.get("out_dir", "out")))
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "rounds.csv")
    with open(path, "w") as fh:
        fh.write(result_to_csv(result, cfg.B))
    print(f"wrote {path} ({len(result.rounds)} rounds, stop time {result.tau_star}, "
          f"utility {result.total_utility:.6f})")
    return 0


def _cmd_sweep(args) -> int:
    doc = _load_doc(args.config)
    exp = load_experiment(doc)
    if args.seed is not None or args.reps is not None:
        exp = type(exp)(
            **{
                **{k: getattr(exp, k) for k in exp.__dataclass_fields__},
                "master_seed": args.seed if args.seed is not None else exp.master_seed,
                "replications": args.reps if args.reps is not None else exp.replications,
            }
        )
    out_dir = _resolve_out(args.out, exp.out_dir)
    reports, regret_path, summary_path = run_sweep(exp, threads=args.threads, out_dir=out_dir)
    for report in reports:
        slope = f"{report.slope.slope:.4f}" if report.slope else "n/a"
        print(f"{report.policy}: slope {slope}, "
              + ", ".join(f"T={h.T} regret {h.mean:.3f}±{h.stderr:.3f}" for h in report.horizons))
    print(f"wrote {regret_path} and {summary_path}")
    return 0


def _cmd_bounds(args) -> int:
    horizons = [int(tok) for tok in args.horizons.split(",") if tok]
    if not horizons:
        raise ConfigError("need at least one horizon")
    csv = bounds_table(horizons, args.lam)
    out_dir = _resolve_out(args.out, "out")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "bounds.csv")
    with open(path, "w") as fh:
        fh.write(csv)
    print(csv, end="")
    print(f"wrote {path}")
    return 0


def _cmd_example1(args) -> int:
    rep = example1_report(args.samples, RngStream(args.seed if args.seed is not None else 0))
    print(f"first_best_per_round {rep.first_best_per_round:.6f}")
    print(f"half_value_per_round {rep.half_value_per_round:.6f}")
    print(f"first_best_payment {rep.first_best_payment:.6f}")
    print(f"half_value_payment {rep.half_value_payment:.6f}")
    print(f"budget_slack_ok {rep.budget_slack_ok}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation, emits round CSV")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="regret experiment, emits regret + summary CSVs")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--reps", type=int)
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--threads", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_bounds = sub.add_parser("bounds", help="closed-form regret curves as CSV")
    p_bounds.add_argument("--lambda", dest="lam", type=float, required=True)
    p_bounds.add_argument("--horizons", required=True, help="comma-separated, e.g. 512,1024")
    p_bounds.add_argument("--out")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_ex1 = sub.add_parser("example1", help="benchmark per-round utilities")
    p_ex1.add_argument("--samples", type=int, default=10**6)
    p_ex1.add_argument("--seed", type=int)
    p_ex1.set_defaults(func=_cmd_example1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContractViolationError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
