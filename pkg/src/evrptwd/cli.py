"""Command-line harness: ``convert``, ``run``, ``train``, ``compare``, ``verify-tables``.

Global options (accepted before or after the subcommand): ``--seed``,
``--config`` (a ``section.key = value`` file with sections gen, ga, rl,
reward, weights, exact, convert) and ``--out``.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import bench
from .core import DEFAULT_WEIGHTS
from .dataio import GenParams, ParseError, convert_to_evrptwd, load_instance, read_solomon, write_instance
from .exact import SearchLimits
from .ga import GaConfig

USAGE_ERROR = 2


class UsageError(Exception):
    pass


def _global_options(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0,
                        help="random seed (default 0)")
    parser.add_argument("--config", default=default, help="key=value configuration file")
    parser.add_argument("--out", default=default, help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evrptwd", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="Solomon file to instance file")
    _global_options(p, suppress=True)
    p.add_argument("solomon")
    p.add_argument("--stations", type=int, required=True, help="customers turned into stations")
    p.add_argument("--grid-window", type=float, nargs=2, metavar=("G1", "G2"),
                   help="grid peak window as horizon fractions (default 0.35 0.65)")

    p = sub.add_parser("run", help="solve instance files, write a report")
    _global_options(p, suppress=True)
    p.add_argument("--method", choices=bench.METHODS, required=True)
    p.add_argument("--checkpoint", help="trained network (required for rl)")
    p.add_argument("--table", help="also write the aligned text table here")
    p.add_argument("instances", nargs="+")

    p = sub.add_parser("train", help="train the dispatching agent")
    _global_options(p, suppress=True)
    p.add_argument("--episodes", type=int)
    p.add_argument("--curve", help="learning-curve CSV path (default: next to the checkpoint)")

    p = sub.add_parser("compare", help="cost gap and time ratio between two reports")
    _global_options(p, suppress=True)
    p.add_argument("report_a")
    p.add_argument("report_b")

    p = sub.add_parser("verify-tables", help="recompute the cost column of a results table")
    _global_options(p, suppress=True)
    p.add_argument("table", nargs="?", help="CSV in report layout (default: bundled per-instance table)")
    p.add_argument("--tolerance", type=float, default=0.02)
    return parser


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _write(path, text: str, stdout) -> None:
    if path is None:
        stdout.write(text)
    else:
        Path(path).write_text(text)


def _config(args) -> dict:
    if getattr(args, "config", None) is None:
        return {}
    try:
        return bench.parse_config(_read(args.config))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _weights(cfg):
    return bench.apply_config(DEFAULT_WEIGHTS, cfg.get("weights", {}))


def cmd_convert(args, cfg, stdout) -> int:
    raw = read_solomon(args.solomon) if Path(args.solomon).exists() else None
    if raw is None:
        raise UsageError(f"no such file: {args.solomon}")
    opts = dict(cfg.get("convert", {}))
    window = tuple(args.grid_window) if args.grid_window else tuple(
        float(x) for x in opts.pop("grid_window", "0.35,0.65").split(","))
    if args.stations >= len(raw.customers) or args.stations < 0:
        raise UsageError(f"--stations must be below the customer count ({len(raw.customers)})")
    inst = convert_to_evrptwd(raw, args.stations, window, weights=_weights(cfg))
    header = (f"converted from {args.solomon}\n"
              f"stations {len(inst.stations)} customers {len(inst.customers)} "
              f"grid_window {window[0]!r} {window[1]!r} (horizon fractions)")
    _write(args.out, write_instance(inst, header), stdout)
    return 0


def _load_network(path):
    from .rl import load_checkpoint
    try:
        return load_checkpoint(path)[0]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad checkpoint {path}: {exc}") from None


def cmd_run(args, cfg, stdout, stderr) -> int:
    if args.method == "rl" and not args.checkpoint:
        raise UsageError("the rl method needs --checkpoint")
    network = _load_network(args.checkpoint) if args.method == "rl" else None
    weights = _weights(cfg)
    named = []
    for path in args.instances:
        try:
            inst = load_instance(path)
        except OSError:
            raise UsageError(f"no such file: {path}") from None
        except ParseError as exc:
            stderr.write(f"{path}: {exc}\n")
            return 1
        if weights != inst.weights:
            inst = dataclasses.replace(inst, weights=weights)
        named.append((inst.name or Path(path).stem, inst))
    ga_cfg = bench.apply_config(GaConfig(), cfg.get("ga", {}))
    limits = bench.apply_config(SearchLimits(), cfg.get("exact", {}))
    failures = []

    def on_error(name, exc):
        failures.append(name)
        stderr.write(f"{name}: infeasible ({exc})\n")

    rows = bench.run_instances(args.method, named, args.seed, ga_cfg, limits, network, on_error)
    _write(args.out, bench.report_csv(rows), stdout)
    if args.table:
        Path(args.table).write_text(bench.text_table(rows + bench.aggregate(rows)))
    return 1 if failures else 0


def cmd_train(args, cfg, stdout) -> int:
    from .rl import RewardWeights, RlConfig, curve_csv, save_checkpoint, train
    if args.out is None:
        raise UsageError("train needs --out for the checkpoint")
    gen = bench.apply_config(GenParams(), cfg.get("gen", {}))
    reward = bench.apply_config(RewardWeights(), cfg.get("reward", {}))
    rl_cfg = bench.apply_config(RlConfig(), cfg.get("rl", {}))
    rl_cfg = dataclasses.replace(rl_cfg, gen=gen, reward=reward, seed=args.seed)
    if args.episodes is not None:
        rl_cfg = dataclasses.replace(rl_cfg, episodes=args.episodes)
    result = train(rl_cfg)
    meta = {
        "seed": rl_cfg.seed,
        "episodes": rl_cfg.episodes,
        "gen": {k: v for k, v in dataclasses.asdict(gen).items() if k != "weights"},
        "final_instance_seed": result.final_instance_seed,
        "final_cost": result.final_cost,
    }
    try:
        save_checkpoint(args.out, result.network, meta)
        curve_path = args.curve or str(Path(args.out).with_suffix("")) + "_curve.csv"
        Path(curve_path).write_text(curve_csv(result.curve))
    except OSError as exc:
        raise UsageError(f"cannot write output: {exc.strerror or exc}") from None
    last = result.curve[-1].fulfilment_ratio if result.curve else 1.0
    stdout.write(f"final fulfilment ratio {last:.4f}\n")
    return 0


def cmd_compare(args, cfg, stdout) -> int:
    try:
        a = bench.read_report(_read(args.report_a))
        b = bench.read_report(_read(args.report_b))
        comparison, summary = bench.compare(a, b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, bench.comparison_text(comparison, summary), stdout)
    return 0


def cmd_verify_tables(args, cfg, stdout) -> int:
    text = _read(args.table) if args.table else bench.packaged_table("instance_table.csv")
    try:
        results = bench.verify_rows(bench.read_report(text), args.tolerance, _weights(cfg))
    except ValueError as exc:
        raise UsageError(f"malformed table: {exc}") from None
    lines = []
    for row, res, ok in results:
        lines.append(f"{'PASS' if ok else 'FAIL'} {row.dataset} {row.method} residual {res:.4f}")
    bad = sum(1 for *_, ok in results if not ok)
    lines.append(f"{len(results) - bad}/{len(results)} rows within {args.tolerance}")
    _write(args.out, "\n".join(lines) + "\n", stdout)
    return 0 if bad == 0 else 1


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        if args.command == "convert":
            return cmd_convert(args, cfg, stdout)
        if args.command == "run":
            return cmd_run(args, cfg, stdout, stderr)
        if args.command == "train":
            return cmd_train(args, cfg, stdout)
        if args.command == "compare":
            return cmd_compare(args, cfg, stdout)
        return cmd_verify_tables(args, cfg, stdout)
    except UsageError as exc:
        stderr.write(f"evrptwd {args.command}: {exc}\n")
        return USAGE_ERROR
    except ValueError as exc:
        stderr.write(f"evrptwd {args.command}: {exc}\n")
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
