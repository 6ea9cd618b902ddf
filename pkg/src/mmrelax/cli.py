"""Command-line front end: ``mmrelax run|sweep|compare|list-scenarios``."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import harness
from .core import (ConfigError, EvaluationError, RunConfig, TauPolicy,
                   parse_config_text)
from .integrator import InitializationError

EXIT_OK, EXIT_RUN_FAILED, EXIT_BAD_ARGS = 0, 1, 2

# flag name -> config key
_OVERRIDES = {
    "mmpde": "mmpde", "tau": "tau", "gamma": "gamma", "smoothing_ip": "ip",
    "rtol": "rtol", "atol": "atol", "t_end": "t_end",
    "min_step": "min_step", "decades": "decades",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_ARGS)


def _add_common(p, multi_n):
    p.add_argument("scenario", help="scenario id (see list-scenarios)")
    if multi_n:
        p.add_argument("--N", type=int, nargs="+", required=True,
                       help="mesh sizes to run")
    else:
        p.add_argument("--N", type=int, help="number of mesh intervals")
    p.add_argument("--mmpde", choices=["MMPDE4", "MMPDE6"])
    p.add_argument("--tau", help="fixed:<tau> or "
                   "adaptive[:<tau_o>[,<tau_min>,<tau_max>]]")
    p.add_argument("--gamma", help="smoothing weight parameter")
    p.add_argument("--smoothing-ip", help="smoothing half-width ip")
    p.add_argument("--rtol")
    p.add_argument("--atol")
    p.add_argument("--t-end", help="final time")
    p.add_argument("--min-step", help="integrator step floor")
    p.add_argument("--decades", help="comma-separated snapshot decades")
    p.add_argument("--config", type=Path,
                   help="key=value file; flags take precedence")
    p.add_argument("--out", type=Path, help="output directory "
                   "(default: $MMRELAX_OUT or ./mmrelax_out)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmrelax", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)
    _add_common(sub.add_parser("run", help="run one scenario"), False)
    _add_common(sub.add_parser("sweep", help="refinement study over N"), True)
    cmp_ = sub.add_parser("compare",
                          help="fixed vs adaptive tau, run sequentially")
    _add_common(cmp_, True)
    cmp_.add_argument("--fixed-tau", type=float, default=1e-5)
    cmp_.add_argument("--adaptive-tau", default="adaptive")
    sub.add_parser("list-scenarios", help="print the scenario catalog")
    return parser


def resolve(args) -> harness.Scenario:
    """Scenario defaults, then the config file, then explicit flags."""
    scn = harness.get_scenario(args.scenario)
    items = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: "
                              f"{exc}", "config") from None
        items.update(parse_config_text(text))
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            items[key] = value
    if isinstance(args.N, int):
        items["N"] = str(args.N)
    elif args.N:
        items["N"] = str(args.N[0])
    config = RunConfig.from_items(items, scn.config)
    # every N of a study is checked before the first run starts
    for n in (args.N if isinstance(args.N, list) else ()):
        config.replace(N=n)
    return scn.with_config(config)


def _out_root(args) -> Path:
    return args.out if args.out is not None else harness.default_output_dir()


def _write_rows(path: Path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for row in rows:
            w.writerow({k: harness._fmt(v) for k, v in row.items()})


def _print_table(rows):
    keys = list(rows[0])
    print("  ".join(keys))
    for row in rows:
        print("  ".join(harness._fmt(row[k]) if isinstance(row[k], float)
                        else str(row[k]) for k in keys))


def _cmd_run(args, scn):
    result = harness.run_experiment(scn)
    out = harness.export(result, _out_root(args) / scn.id)
    print(f"{scn.id}: t_end={result.t_end!r} u_max={result.u_max_final:.6e} "
          f"termination={result.termination} "
          f"wall={result.wall_clock_seconds:.2f}s -> {out}")
    if scn.spec.prescribed and result.termination != "end":
        print(f"run stopped early: {result.message}", file=sys.stderr)
        return EXIT_RUN_FAILED
    return EXIT_OK


def _cmd_sweep(args, scn):
    rows = harness.refinement_study(scn, args.N)
    _print_table(rows)
    _write_rows(_out_root(args) / scn.id / "sweep.csv", rows)
    return EXIT_RUN_FAILED if any(r["error"] for r in rows) else EXIT_OK


def _cmd_compare(args, scn):
    adaptive = TauPolicy.parse(args.adaptive_tau)
    if adaptive.kind != "adaptive":
        raise ConfigError("--adaptive-tau must be an adaptive policy", "tau")
    if not args.fixed_tau > 0:
        raise ConfigError("--fixed-tau must be > 0", "tau")
    rows = harness.compare(scn, args.N, fixed_tau=args.fixed_tau,
                           adaptive=adaptive)
    _print_table(rows)
    _write_rows(_out_root(args) / scn.id / "compare.csv", rows)
    return EXIT_OK


def _cmd_list():
    for scn in harness.SCENARIOS.values():
        cfg = scn.config
        print(f"{scn.id:<11} {scn.description}")
        print(f"{'':<11} N={cfg.N} mmpde={cfg.mmpde} tau={cfg.tau} "
              f"gamma={cfg.gamma!r} ip={cfg.ip} t_end={cfg.t_end!r} "
              f"initial_mesh={scn.initial_mesh}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "list-scenarios":
        return _cmd_list()
    try:
        scn = resolve(args)
        if args.command == "run":
            return _cmd_run(args, scn)
        if args.command == "sweep":
            return _cmd_sweep(args, scn)
        return _cmd_compare(args, scn)
    except ConfigError as exc:
        where = f" [{exc.field_name}]" if exc.field_name else ""
        print(f"mmrelax: invalid configuration{where}: {exc}",
              file=sys.stderr)
        return EXIT_BAD_ARGS
    except (InitializationError, EvaluationError, OSError) as exc:
        print(f"mmrelax: run failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED


if __name__ == "__main__":
    sys.exit(main())
