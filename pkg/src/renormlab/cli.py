"""Command-line interface.

Every subcommand reads the same JSON config (defaults apply when no
--config is given), applies the common flag overrides, writes its
artifacts under --out, and prints a short human-readable summary. The
`run` subcommand executes the full staged pipeline.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .conjugacy import (
    ProbeConfig,
    density_histogram,
    derivative_probe,
    partition_stream,
    rotation_number_heights,
    singular_control,
)
from .errors import RenormError
from .plmaps import build_f0
from .rational import rat_to_decimal
from .renorm import build_theta, run_pipeline
from .schedules import parse_schedule, validate_hypotheses
from .sequences import solve_schedule, verify_inequalities
from .experiment import ExperimentConfig, load_config, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="renormlab",
        description="certified renormalization laboratory for circle maps "
        "with break points",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "validate": "check the schedule hypotheses",
        "convergents": "build and export the convergent table",
        "solve": "solve for the normalized lengths and the derivative value",
        "build-map": "construct the model circle map",
        "renorm": "run the renormalization pipelines and verify teeth",
        "theta": "build the surviving set levels",
        "probe": "sample difference quotients at a surviving point",
        "density": "export invariant-measure histograms",
        "control": "compare against the tuned control map",
        "run": "execute every stage and write a manifest",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, default=None, help="JSON config path")
        p.add_argument("--depth", type=int, default=None, help="stage depth override")
        p.add_argument(
            "--iterations", type=int, default=None, help="solver sweep count"
        )
        p.add_argument(
            "--guard-bits", type=int, default=None, help="certification guard bits"
        )
        p.add_argument(
            "--max-bits", type=int, default=None, help="bit-size watchdog cap"
        )
        p.add_argument(
            "--out", type=Path, default=Path("out"), help="output directory"
        )
        if name in ("probe", "run"):
            p.add_argument(
                "--seed", type=int, default=None, help="probe sampling seed"
            )
    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides: dict = {}
    if args.iterations is not None:
        overrides["iterations"] = args.iterations
    if args.guard_bits is not None:
        overrides["guard_bits"] = args.guard_bits
    if args.max_bits is not None:
        overrides["max_bits"] = args.max_bits
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return replace(cfg, **overrides) if overrides else cfg


def _solve(cfg: ExperimentConfig, depth: int | None = None):
    sched = parse_schedule(cfg.schedule, a_hint=cfg.slope)
    return solve_schedule(
        sched,
        cfg.slope,
        depth=depth if depth is not None else cfg.depth,
        iterations=cfg.iterations,
        guard_bits=cfg.guard_bits,
    )


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = _load(args)
    out: Path = args.out
    try:
        return _dispatch(args, cfg, out)
    except RenormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace, cfg: ExperimentConfig, out: Path) -> int:
    command = args.command

    if command == "validate":
        sched = parse_schedule(cfg.schedule, a_hint=cfg.slope)
        report = validate_hypotheses(sched, cfg.slope)
        for check in report.checks:
            print(f"{'pass' if check.passed else 'FAIL'}  {check.name}: {check.detail}")
        print("all hypotheses hold" if report.passed else "hypotheses violated")
        return 0 if report.passed else 1

    if command == "run":
        overrides: dict = {}
        if args.depth is not None:
            overrides["renorm_depth"] = args.depth
        run_cfg = replace(cfg, **overrides) if overrides else cfg
        manifest = run_experiment(run_cfg, out)
        for stage in manifest["stages"]:
            print(f"{stage['name']:12s} {stage['wall_ms']:6d} ms")
        print(f"heights: {manifest['summary']['heights']}")
        print(f"manifest: {out / 'manifest.json'}")
        return 0

    out.mkdir(parents=True, exist_ok=True)

    if command == "convergents":
        table, _ = _solve(cfg, args.depth)
        table.write_csv(str(out / "convergents.csv"))
        print(f"table depth {table.depth} -> {out / 'convergents.csv'}")
        return 0

    if command == "solve":
        table, sol = _solve(cfg, args.depth)
        sol.write_csv(str(out / "solution.csv"))
        with open(out / "solution.json", "w") as fh:
            json.dump(sol.manifest(), fh, indent=2)
            fh.write("\n")
        ineq = verify_inequalities(sol, table)
        with open(out / "inequalities.json", "w") as fh:
            json.dump(ineq.to_json(), fh, indent=2)
            fh.write("\n")
        print(f"alpha = {rat_to_decimal(sol.alpha, 20)} (+{rat_to_decimal(sol.alpha_err, 6)})")
        print(f"inequalities: {'all pass' if ineq.all_pass else 'see report'}")
        return 0

    if command == "build-map":
        _, sol = _solve(cfg, args.depth)
        lift = build_f0(sol)
        with open(out / "map.json", "w") as fh:
            json.dump(lift.to_json(), fh, indent=2)
            fh.write("\n")
        print(f"map with {len(lift.base.xs) - 1} linear pieces -> {out / 'map.json'}")
        return 0

    _, sol = _solve(cfg)
    lift = build_f0(sol)
    depth = args.depth

    if command == "renorm":
        d = depth if depth is not None else cfg.renorm_depth
        for direction in ("forward", "backward"):
            _, trace = run_pipeline(
                lift, Fraction(0), depth=d, direction=direction,
                max_bits=cfg.max_bits,
            )
            trace.write_json(str(out / f"renorm_{direction}.json"))
        readout = rotation_number_heights(trace)
        print(f"heights: {list(readout.heights)}"
              + ("" if readout.complete else f" ({readout.note})"))
        return 0

    if command == "theta":
        d = depth if depth is not None else cfg.theta_depth
        pairs, trace = run_pipeline(
            lift, Fraction(0), depth=d + 1, direction="backward",
            max_bits=cfg.max_bits,
        )
        theta = build_theta(pairs, d, trace.heights())
        for lv in theta.levels:
            print(
                f"level {lv.level}: {lv.count} segments, "
                f"measure {rat_to_decimal(lv.measure, 12)}"
            )
        return 0

    if command == "probe":
        d = depth if depth is not None else cfg.probe_n_hi
        pairs, trace = run_pipeline(
            lift, Fraction(0), depth=cfg.theta_depth + 1, direction="backward",
            max_bits=cfg.max_bits,
        )
        theta = build_theta(pairs, cfg.theta_depth, trace.heights())
        for chain in cfg.probe_chains:
            pc = ProbeConfig(
                theta_chain=chain[: cfg.theta_depth + 1],
                n_lo=cfg.probe_n_lo,
                n_hi=d,
                cases=cfg.probe_cases,
                samples=cfg.probe_samples,
                seed=cfg.seed,
            )
            report = derivative_probe(pc, theta, sol, lift, max_bits=cfg.max_bits)
            tag = "-".join(str(j) for j in pc.theta_chain)
            report.write_csv(str(out / f"probes_{tag}.csv"))
            verdicts = {"pass": 0, "fail": 0, "indeterminate": 0}
            for row in report.rows:
                verdicts[row.verdict] += 1
            meds = ", ".join(
                f"n={n}: {rat_to_decimal(v, 10)}"
                for n, v in sorted(report.medians.items())
            )
            print(f"chain {tag}: {verdicts}  medians {meds}")
        return 0

    if command == "density":
        levels = (depth,) if depth is not None else cfg.density_levels
        bins_list = cfg.density_bins[: len(levels)]
        for level, bins in zip(levels, bins_list):
            stream = partition_stream(lift, Fraction(0), level, max_bits=cfg.max_bits)
            hist = density_histogram(stream, bins)
            hist.write_csv(str(out / f"density_{level}_{bins}.csv"))
            print(
                f"level {level}, {bins} bins: min/max ratio "
                f"{rat_to_decimal(hist.min_max_ratio, 10)} ({hist.arc_count} arcs)"
            )
        return 0

    if command == "control":
        if not cfg.control:
            print("error: config has no control section", file=sys.stderr)
            return 1
        spec = cfg.control
        report = singular_control(
            cfg.slope,
            tuple(int(k) for k in spec["prefix"]),
            lift,
            depths=tuple(int(x) for x in spec.get("depths", (3, 5))),
            bins=tuple(int(x) for x in spec.get("bins", (64, 512))),
        )
        with open(out / "control.json", "w") as fh:
            json.dump(report.to_json(), fh, indent=2)
            fh.write("\n")
        print(
            f"control decay {rat_to_decimal(report.control_decay, 6)}, "
            f"main decay {rat_to_decimal(report.main_decay, 6)}: {report.verdict}"
        )
        return 0

    raise AssertionError(f"unhandled command {command!r}")


if __name__ == "__main__":
    sys.exit(main())
