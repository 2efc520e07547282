"""End-to-end experiment runner: staged pipeline, artifacts, manifest.

A run reads one structured config, executes the stages in a fixed order
(validate, convergents, solve, build-map, renorm, theta, probes,
histograms, optionally control), writes every artifact under one output
directory, and finishes with a manifest recording the config snapshot,
package versions, artifact hashes, and per-stage wall times.

Determinism contract: all CSV artifacts are byte-identical across reruns
of the same config on the same package version. The manifest itself
carries wall-clock times and is exempt. A rerun can be started from a
previous manifest; only its embedded config is consulted.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

from .conjugacy import (
    ProbeConfig,
    ProbeReport,
    birkhoff_mean,
    density_histogram,
    derivative_probe,
    partition_stream,
    rotation_number_heights,
    singular_control,
)
from .convergents import build_convergents, prefix_interval
from .errors import CertificationError, ExperimentError, RenormError, ScheduleError
from .plmaps import CircleLift, breaks_of, build_f0
from .rational import format_rat, rat_to_decimal
from .renorm import (
    build_theta,
    chain_midpoint,
    distinct_break_orbits,
    expected_teeth_backward,
    expected_teeth_forward,
    realize_chain,
    run_pipeline,
    sample_chains,
    verify_teeth,
)
from .schedules import k_floor, parse_schedule, validate_hypotheses
from .sequences import (
    SolverConfig,
    TailPolicy,
    required_table_depth,
    solve_fixed_point,
    verify_inequalities,
)

try:  # version string for the manifest; absent in uninstalled checkouts
    from importlib.metadata import PackageNotFoundError, version as _pkg_version

    try:
        _VERSION = _pkg_version("artifact")
    except PackageNotFoundError:
        _VERSION = "0.0.0+local"
except ImportError:  # pragma: no cover
    _VERSION = "0.0.0+local"


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Normalized run parameters. All values JSON-representable."""

    schedule: str = "poly:(n+5)^2"
    a: str = "2"
    depth: int = 10  # solver window: levels -1..depth are delivered
    iterations: int = 20
    guard_bits: int = 128
    renorm_depth: int = 6
    theta_depth: int = 4
    theta_samples: int = 100
    probe_chains: tuple[tuple[int, ...], ...] = ((0, 0, 0, 0),)
    probe_n_lo: int = 3
    probe_n_hi: int = 5
    probe_cases: tuple[int, ...] = (1, 2, 3)
    probe_samples: int = 2
    seed: int = 0
    density_levels: tuple[int, ...] = (2, 3)
    density_bins: tuple[int, ...] = (64, 512)
    control: dict | None = None
    max_bits: int | None = None
    height_cap: int | None = None
    tol_factor: int = 8

    def __post_init__(self) -> None:
        if len(self.density_levels) != len(self.density_bins):
            raise ScheduleError("density levels and bins must pair up")
        if not self.probe_chains:
            raise ScheduleError("at least one probe chain is required")
        if self.theta_depth >= self.renorm_depth:
            raise ScheduleError("theta depth must stay below the renorm depth")

    @property
    def slope(self) -> Fraction:
        return Fraction(self.a)

    def to_dict(self) -> dict:
        return {
            "schedule": self.schedule,
            "a": self.a,
            "depth": self.depth,
            "iterations": self.iterations,
            "guard_bits": self.guard_bits,
            "renorm_depth": self.renorm_depth,
            "theta_depth": self.theta_depth,
            "theta_samples": self.theta_samples,
            "probe_chains": [list(c) for c in self.probe_chains],
            "probe_n_lo": self.probe_n_lo,
            "probe_n_hi": self.probe_n_hi,
            "probe_cases": list(self.probe_cases),
            "probe_samples": self.probe_samples,
            "seed": self.seed,
            "density_levels": list(self.density_levels),
            "density_bins": list(self.density_bins),
            "control": self.control,
            "max_bits": self.max_bits,
            "height_cap": self.height_cap,
            "tol_factor": self.tol_factor,
        }

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        known = {
            "schedule",
            "a",
            "depth",
            "iterations",
            "guard_bits",
            "renorm_depth",
            "theta_depth",
            "theta_samples",
            "probe_chains",
            "probe_n_lo",
            "probe_n_hi",
            "probe_cases",
            "probe_samples",
            "seed",
            "density_levels",
            "density_bins",
            "control",
            "max_bits",
            "height_cap",
            "tol_factor",
        }
        extra = set(data) - known
        if extra:
            raise ScheduleError(f"unknown config keys: {sorted(extra)}")
        kwargs = dict(data)
        if "probe_chains" in kwargs:
            kwargs["probe_chains"] = tuple(
                tuple(int(j) for j in chain) for chain in kwargs["probe_chains"]
            )
        for key in ("probe_cases", "density_levels", "density_bins"):
            if key in kwargs:
                kwargs[key] = tuple(int(v) for v in kwargs[key])
        if "a" in kwargs:
            kwargs["a"] = str(kwargs["a"])
        return ExperimentConfig(**kwargs)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a config file; a manifest file is accepted and its embedded
    config snapshot is used, which is what makes reruns reproducible."""
    with open(path) as fh:
        data = json.load(fh)
    if "config" in data and "artifacts" in data:  # manifest from a prior run
        data = data["config"]
    return ExperimentConfig.from_dict(data)


# --------------------------------------------------------------------------
# stage bookkeeping


class _StageLog:
    """Tracks artifacts per stage so a failing stage can be cleaned up."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.stages: list[dict] = []
        self.artifacts: list[Path] = []
        self._current: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self._current.append(p)
        return p

    def run(self, name: str, fn: Callable[[], dict | None]) -> dict:
        self._current = []
        t0 = time.monotonic()
        try:
            notes = fn() or {}
        except RenormError as exc:
            for p in self._current:
                p.unlink(missing_ok=True)
            raise ExperimentError(name, str(exc)) from exc
        except Exception as exc:  # defensive: never leave partial files
            for p in self._current:
                p.unlink(missing_ok=True)
            raise ExperimentError(name, f"{type(exc).__name__}: {exc}") from exc
        wall_ms = int((time.monotonic() - t0) * 1000)
        self.artifacts.extend(self._current)
        entry = {"name": name, "wall_ms": wall_ms, "notes": notes}
        self.stages.append(entry)
        return notes


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


# --------------------------------------------------------------------------
# the runner


def run_experiment(config: ExperimentConfig, out_dir: str | Path) -> dict:
    """Execute every stage and return the manifest (also written to disk).

    Any stage failure removes that stage's partial artifacts and raises
    ExperimentError tagged with the stage name. A resource cap inside the
    renormalization is not a failure: the pipeline stops early, dependent
    stages shrink to the certified depth, and the manifest records the
    last certified level.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = _StageLog(out)
    a = config.slope
    state: dict = {}
    pipe_kwargs: dict = {"max_bits": config.max_bits}
    if config.height_cap is not None:
        pipe_kwargs["height_cap"] = config.height_cap

    def stage_validate() -> dict:
        sched = parse_schedule(config.schedule, a_hint=a)
        report = validate_hypotheses(sched, a)
        with open(log.path("hypotheses.json"), "w") as fh:
            json.dump(report.to_json(), fh, indent=2)
            fh.write("\n")
        if not report.passed:
            raise ScheduleError(
                f"hypothesis checks failed: {', '.join(report.failed_names())}"
            )
        state["sched"] = sched
        return {"passed": True}

    def stage_convergents() -> dict:
        sched = state["sched"]
        cfg = SolverConfig(
            a=a,
            depth=config.depth,
            iterations=config.iterations,
            tail=TailPolicy(guard_bits=config.guard_bits),
        )
        _, _, solver_need = required_table_depth(cfg, k_floor(sched, 1))
        need = max(
            solver_need,
            config.renorm_depth + 3,
            config.probe_n_hi + 4,
            (max(config.density_levels) if config.density_levels else 0) + 3,
            config.theta_depth + 2,
        )
        table = build_convergents(sched, need)
        table.write_csv(str(log.path("convergents.csv")))
        state["solver_cfg"] = cfg
        state["table"] = table
        return {"table_depth": table.depth}

    def stage_solve() -> dict:
        sol = solve_fixed_point(state["solver_cfg"], state["table"])
        sol.write_csv(str(log.path("solution.csv")))
        with open(log.path("solution.json"), "w") as fh:
            json.dump(sol.manifest(), fh, indent=2)
            fh.write("\n")
        ineq = verify_inequalities(sol, state["table"])
        # report the first level at which each bound holds and keeps
        # holding, instead of assuming a threshold up front
        names = sorted({r.name for r in ineq.rows})
        onset: dict[str, int | None] = {}
        for name in names:
            rows = sorted(ineq.by_name(name), key=lambda r: r.n)
            first = None
            for i, row in enumerate(rows):
                if all(r.verdict == "pass" for r in rows[i:]):
                    first = row.n
                    break
            onset[name] = first
        with open(log.path("inequalities.json"), "w") as fh:
            json.dump(
                {"rows": ineq.to_json(), "first_pass_level": onset},
                fh,
                indent=2,
            )
            fh.write("\n")
        state["sol"] = sol
        state["tol"] = Fraction(config.tol_factor) * max(sol.err.values())
        return {
            "alpha": rat_to_decimal(sol.alpha, 20),
            "alpha_err": rat_to_decimal(sol.alpha_err, 20),
            "inequalities_all_pass": ineq.all_pass,
        }

    def stage_build_map() -> dict:
        lift = build_f0(state["sol"])
        brs = breaks_of(lift.base)
        doc = {
            "lift": lift.to_json(),
            "rotation_offset": format_rat(lift.rotation_offset()),
            "breaks": [
                {"location": format_rat(b.location), "size": format_rat(b.size)}
                for b in brs
            ],
        }
        with open(log.path("map.json"), "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        state["lift"] = lift
        return {"breaks": len(brs)}

    def stage_renorm() -> dict:
        sol, lift, tol = state["sol"], state["lift"], state["tol"]
        notes: dict = {}
        for direction, expected_at in (
            ("forward", expected_teeth_forward),
            ("backward", expected_teeth_backward),
        ):
            pairs, trace = run_pipeline(
                lift,
                Fraction(0),
                depth=config.renorm_depth,
                direction=direction,
                **pipe_kwargs,
            )
            trace.write_json(str(log.path(f"renorm_{direction}.json")))
            rows_out = []
            worst = Fraction(0)
            for pair in pairs:
                exp_f, exp_g = expected_at(sol, pair.level)
                report = verify_teeth(pair, exp_f, exp_g, tol, sol.err[pair.level])
                if not report.all_pass or report.unmatched():
                    raise CertificationError(
                        f"{direction} teeth mismatch at level {pair.level}"
                    )
                for row in report.rows:
                    worst = max(worst, row.discrepancy)
                    rows_out.append(
                        [
                            pair.level,
                            row.which,
                            format_rat(row.computed.slope),
                            format_rat(row.computed.interval.lo),
                            format_rat(row.computed.interval.hi),
                            rat_to_decimal(row.discrepancy, 30),
                            row.verdict,
                        ]
                    )
            with open(log.path(f"teeth_{direction}.csv"), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(
                    [
                        "level",
                        "which",
                        "slope",
                        "lo",
                        "hi",
                        "discrepancy_decimal",
                        "verdict",
                    ]
                )
                writer.writerows(rows_out)
            state[f"pairs_{direction}"] = pairs
            state[f"trace_{direction}"] = trace
            notes[f"{direction}_levels"] = len(pairs)
            notes[f"{direction}_worst_discrepancy"] = rat_to_decimal(worst, 30)
        trace = state["trace_forward"]
        readout = rotation_number_heights(trace)
        notes["heights"] = list(readout.heights)
        notes["heights_complete"] = readout.complete
        # when a pipeline stops early (watchdog or rational rotation
        # number), later stages shrink to the certified prefix instead
        # of failing; an uncapped run is never clamped
        tb = state["trace_backward"]
        state["stopped"] = (
            trace.capped or trace.terminated or tb.capped or tb.terminated
        )
        state["certified"] = min(len(trace.heights()), len(tb.heights()))
        if trace.capped or state["trace_backward"].capped:
            notes["capped"] = True
            notes["cap_note"] = trace.cap_note or state["trace_backward"].cap_note
            notes["last_certified_level"] = min(
                state["pairs_forward"][-1].level,
                state["pairs_backward"][-1].level,
            )
        return notes

    def stage_theta() -> dict:
        sol, tol = state["sol"], state["tol"]
        pairs_bwd = state["pairs_backward"]
        heights = state["trace_backward"].heights()
        depth = min(config.theta_depth, len(pairs_bwd) - 1, len(heights) - 1)
        if depth < 0:
            raise CertificationError("no certified level to build the theta set on")
        theta = build_theta(pairs_bwd, depth, heights)
        with open(log.path("theta.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["level", "count", "segment_length", "measure", "measure_decimal"]
            )
            for lv in theta.levels:
                writer.writerow(
                    [
                        lv.level,
                        lv.count,
                        format_rat(lv.segment_length),
                        format_rat(lv.measure),
                        rat_to_decimal(lv.measure, 30),
                    ]
                )
        # sampled segment lengths against the certified normalized lengths
        sample_rows = []
        worst = Fraction(0)
        for n in range(depth + 1):
            chains = sample_chains(heights, n, config.theta_samples, config.seed)
            for chain in chains:
                seg = realize_chain(pairs_bwd, chain, heights)
                dev = abs(seg.width - sol.d[n])
                worst = max(worst, dev)
                if dev > tol:
                    raise CertificationError(
                        f"chain segment at level {n} deviates from d_n by "
                        f"{rat_to_decimal(dev, 12)}"
                    )
                sample_rows.append(
                    [
                        n,
                        "-".join(str(j) for j in chain),
                        format_rat(seg.lo),
                        format_rat(seg.width),
                        rat_to_decimal(dev, 30),
                    ]
                )
        with open(log.path("theta_samples.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["level", "chain", "lo", "length", "deviation_decimal"])
            writer.writerows(sample_rows)
        # break-orbit distinctness along a pipeline marked inside the
        # surviving set (interior marking keeps all four breaks visible)
        chain0 = config.probe_chains[0]
        m = min(len(chain0), depth + 1)
        eta0 = chain_midpoint(pairs_bwd, chain0[:m], heights)
        pairs_marked, _ = run_pipeline(
            state["lift"],
            eta0,
            depth=config.renorm_depth,
            direction="forward",
            **pipe_kwargs,
        )
        verdict = distinct_break_orbits(pairs_marked, a, tol)
        with open(log.path("orbits.json"), "w") as fh:
            json.dump(
                {
                    "marked_point": format_rat(eta0),
                    "all_distinct": verdict.all_distinct,
                    "levels": [
                        {
                            "level": r.level,
                            "break_count": r.break_count,
                            "sizes_ok": r.sizes_ok,
                            "min_gap": format_rat(r.min_gap)
                            if r.min_gap is not None
                            else None,
                            "verdict": r.verdict,
                        }
                        for r in verdict.rows
                    ],
                },
                fh,
                indent=2,
            )
            fh.write("\n")
        if not verdict.all_distinct:
            raise CertificationError(
                f"break orbits collide at level {verdict.first_collision()}"
            )
        state["theta"] = theta
        return {
            "depth": depth,
            "counts": [lv.count for lv in theta.levels],
            "theta_samples_worst_dev": rat_to_decimal(worst, 30),
            "orbits_distinct": True,
        }

    def stage_probes() -> dict:
        sol, theta, lift = state["sol"], state["theta"], state["lift"]
        n_hi = config.probe_n_hi
        if state["stopped"]:
            # a probe at level n needs its own pipeline certified to
            # n + 3, which would stop at the same prefix
            n_hi = min(n_hi, state["certified"] - 3)
            if n_hi < config.probe_n_lo:
                return {"skipped": "certified depth leaves no probe level"}
        reports: list[tuple[tuple[int, ...], ProbeReport]] = []
        for chain in config.probe_chains:
            cfg = ProbeConfig(
                theta_chain=chain[: theta.depth + 1],
                n_lo=config.probe_n_lo,
                n_hi=n_hi,
                cases=config.probe_cases,
                samples=config.probe_samples,
                seed=config.seed,
            )
            reports.append(
                (
                    cfg.theta_chain,
                    derivative_probe(cfg, theta, sol, lift, **pipe_kwargs),
                )
            )
        with open(log.path("probes.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "chain",
                    "level",
                    "case",
                    "j0",
                    "j1",
                    "endpoint",
                    "quotient_decimal",
                    "log_dev_lo",
                    "log_dev_hi",
                    "budget",
                    "verdict",
                ]
            )
            for chain, report in reports:
                tag = "-".join(str(j) for j in chain)
                for row in report.rows:
                    writer.writerow(
                        [
                            tag,
                            row.level,
                            row.case,
                            row.j0,
                            row.j1,
                            row.endpoint,
                            rat_to_decimal(row.quotient.mid, 30),
                            rat_to_decimal(row.log_dev.lo, 30),
                            rat_to_decimal(row.log_dev.hi, 30),
                            rat_to_decimal(row.budget, 30),
                            row.verdict,
                        ]
                    )
        verdicts = {"pass": 0, "fail": 0, "indeterminate": 0}
        summary = []
        for chain, report in reports:
            for row in report.rows:
                verdicts[row.verdict] += 1
            summary.append(
                {
                    "chain": list(chain),
                    "eta0": format_rat(report.eta0),
                    "all_pass": report.all_pass,
                    "medians_decreasing": report.medians_decreasing,
                    "medians": {
                        str(n): rat_to_decimal(v, 16)
                        for n, v in sorted(report.medians.items())
                    },
                    "budgets": {
                        str(n): rat_to_decimal(v, 16)
                        for n, v in sorted(report.budgets.items())
                    },
                }
            )
        with open(log.path("probe_summary.json"), "w") as fh:
            json.dump({"verdicts": verdicts, "chains": summary}, fh, indent=2)
            fh.write("\n")
        state["probe_reports"] = reports
        return {"verdicts": verdicts, "chains": len(reports)}

    def stage_histograms() -> dict:
        lift = state["lift"]
        ratios: dict = {}
        for level, bins in zip(config.density_levels, config.density_bins):
            if level + 2 > state["certified"]:
                ratios[f"{level}/{bins}"] = {"skipped": "beyond certified depth"}
                continue
            stream = partition_stream(lift, Fraction(0), level)
            hist = density_histogram(stream, bins)
            hist.write_csv(str(log.path(f"density_{level}_{bins}.csv")))
            ratios[f"{level}/{bins}"] = {
                "min_max_ratio": rat_to_decimal(hist.min_max_ratio, 12),
                "arcs": hist.arc_count,
            }
        with open(log.path("density.json"), "w") as fh:
            json.dump(ratios, fh, indent=2)
            fh.write("\n")
        return {"histograms": len(ratios)}

    def stage_control() -> dict:
        spec = config.control or {}
        prefix = tuple(int(k) for k in spec["prefix"])
        depths = tuple(int(d) for d in spec.get("depths", (3, 5)))
        bins = tuple(int(b) for b in spec.get("bins", (64, 512)))
        report = singular_control(
            a,
            prefix,
            state["lift"],
            depths=depths,  # type: ignore[arg-type]
            bins=bins,  # type: ignore[arg-type]
        )
        with open(log.path("control.json"), "w") as fh:
            json.dump(report.to_json(), fh, indent=2)
            fh.write("\n")
        return {"verdict": report.verdict}

    def write_manifest(status: str, failed_stage: str | None = None) -> dict:
        renorm_notes = next(
            (s["notes"] for s in log.stages if s["name"] == "renorm"), {}
        )
        manifest = {
            "kind": "run-manifest",
            "status": status,
            "failed_stage": failed_stage,
            "config": config.to_dict(),
            "versions": {"package": _VERSION, "python": platform.python_version()},
            "stages": log.stages,
            "artifacts": {
                p.name: {"sha256": _sha256(p), "bytes": p.stat().st_size}
                for p in sorted(log.artifacts, key=lambda p: p.name)
            },
            "summary": {
                "heights": renorm_notes.get("heights", []),
                "capped": bool(renorm_notes.get("capped", False)),
                "last_certified_level": renorm_notes.get(
                    "last_certified_level", state.get("certified")
                ),
            },
        }
        with open(out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
        return manifest

    try:
        log.run("validate", stage_validate)
        log.run("convergents", stage_convergents)
        log.run("solve", stage_solve)
        log.run("build-map", stage_build_map)
        log.run("renorm", stage_renorm)
        log.run("theta", stage_theta)
        log.run("probes", stage_probes)
        log.run("histograms", stage_histograms)
        if config.control is not None:
            log.run("control", stage_control)
    except ExperimentError as exc:
        write_manifest("failed", exc.stage)
        raise
    return write_manifest("ok")


def cross_check_rotation(
    lift: CircleLift, heights: list[int], level: int
) -> tuple[Fraction, bool]:
    """Ergodic-average cross-check of the detected heights.

    Averages the lift displacement over q_M steps from the marked point.
    By the closest-return identity that mean equals (p_M -+ d_M) / q_M,
    so it must land inside the level-M cylinder of the detected prefix.
    Returns (mean, inside).
    """
    from .convergents import prefix_pq

    _, q, _, _ = prefix_pq(list(heights[:level]))
    mean = birkhoff_mean(lift, Fraction(0), q)
    cyl = prefix_interval(list(heights[:level]))
    return mean, cyl.lo <= mean <= cyl.hi
