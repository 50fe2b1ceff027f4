"""Command-line entry point: run, gamma-sweep, epsilon-sweep, verify.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime or
I/O failure, 3 acceptance failure. Output goes under --out, else under the
directory named by $PHENOTUMOR_OUT (default ./phenotumor_out).
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DimensionError, DomainError, ParameterError, PhenotumorError
from .experiments import (
    OUT_ENV,
    cmd_epsilon_sweep,
    cmd_gamma_sweep,
    execute_run,
    parse_config,
    resolve_out,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ACCEPTANCE = 0, 1, 2, 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    # bad arguments are validation errors, not argparse's default status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phenotumor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one simulation and write snapshot and diagnostics CSVs")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help=f"output directory (default: from config or ${OUT_ENV})")

    p = sub.add_parser("gamma-sweep", help="repeat a run for several pressure exponents")
    p.add_argument("--config", required=True)
    p.add_argument("--gammas", type=_float_list, default=[5.0, 20.0, 80.0, 320.0])
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("epsilon-sweep", help="repeat a run for several viscosities against eps = 0")
    p.add_argument("--config", required=True)
    p.add_argument("--epsilons", type=_float_list, default=[0.1, 0.03, 0.01, 0.0])
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("verify", help="run the acceptance suite and print a pass/fail table")
    p.add_argument("--config", help="directory with reference configs (default: bundled)")
    p.add_argument("--out", help="also write the CSV outputs of every suite run here")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def _print_sweep(result) -> None:
    cols = [result.parameter, "status"] + result.columns
    print("  ".join(f"{c:>14}" for c in cols))
    for row in result.rows:
        cells = [f"{row[result.parameter]:>14g}", f"{row['status'][:14]:>14}"]
        for c in result.columns:
            v = row.get(c)
            cells.append(f"{v:>14.6g}" if isinstance(v, (int, float)) else f"{'-':>14}")
        print("  ".join(cells))


def cmd_verify(config_dir=None, out=None, jobs: int = 1) -> int:
    """Run every acceptance check; 0 iff all pass."""
    from .acceptance import Suite
    from .experiments import load_reference_config

    # fail fast on a missing or unreadable config directory
    for name in ("barenblatt", "saturated_growth", "viscous_positivity"):
        load_reference_config(name, config_dir)
    results = Suite(config_dir, jobs=jobs, out=out).run_all(echo=lambda line: print(line, flush=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_ACCEPTANCE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args.config, args.out, args.jobs)
        cfg = parse_config(args.config)
        if args.command == "run":
            traj = execute_run(cfg, args.out)
            print(f"{traj.steps} steps to t={traj.final.t:g}; output in {resolve_out(cfg, args.out)}")
        elif args.command == "gamma-sweep":
            res = cmd_gamma_sweep(cfg, args.gammas, out=args.out, jobs=args.jobs)
            _print_sweep(res)
            return EXIT_RUNTIME if res.failures else EXIT_OK
        else:
            res = cmd_epsilon_sweep(cfg, args.epsilons, out=args.out, jobs=args.jobs)
            _print_sweep(res)
            return EXIT_RUNTIME if res.failures else EXIT_OK
    except (ConfigError, ParameterError, DomainError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhenotumorError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
