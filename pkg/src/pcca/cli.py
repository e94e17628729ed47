"""Command-line front end: run scenarios, sweep sample times, export artifacts.

Exit codes: 0 success, 1 requested assertion failed, 2 input error
(parse/validation/usage), 3 simulation abort.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    ScenarioParseError,
    ScenarioValidationError,
    load_scenario_file,
    scenario_digest,
)
from .sim import (
    MarginBracketError,
    SimulationAbort,
    Trace,
    dt_sweep,
    metrics,
    run_scenario,
)

__all__ = ["EXIT_ABORT", "EXIT_ASSERTION", "EXIT_INPUT", "EXIT_OK",
           "RunReport", "cmd_run", "cmd_sweep", "main", "read_trace_csv",
           "write_trace_csv"]

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_INPUT = 2
EXIT_ABORT = 3


@dataclass(eq=False)
class RunReport:
    """What a CLI invocation produced: inputs digest, metrics, files, checks."""

    digest: str
    metrics: dict
    outputs: list[str]
    assertions: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.assertions.values())


def _fmt(x: float) -> str:
    return repr(float(x))


def trace_csv_header(trace: Trace) -> list[str]:
    n = trace.position.shape[1]
    cols = ["time_s"]
    for i in range(n):
        cols += [f"x{i}", f"y{i}", f"vx{i}", f"vy{i}", f"ux{i}", f"uy{i}"]
    for i, j in trace.pairs:
        cols += [f"h_{i}_{j}", f"hr0_{i}_{j}"]
    cols += [f"flag{i}" for i in range(n)]
    return cols


def write_trace_csv(trace: Trace, path: str | Path) -> None:
    """Fixed column schema, floats via repr: reruns are byte-identical."""
    n = trace.position.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace_csv_header(trace))
        for k in range(trace.times.size):
            row = [_fmt(trace.times[k])]
            for i in range(n):
                row += [
                    _fmt(trace.position[k, i, 0]), _fmt(trace.position[k, i, 1]),
                    _fmt(trace.velocity[k, i, 0]), _fmt(trace.velocity[k, i, 1]),
                    _fmt(trace.control[k, i, 0]), _fmt(trace.control[k, i, 1]),
                ]
            for pi in range(len(trace.pairs)):
                row += [_fmt(trace.h[k, pi]), _fmt(trace.h_r0[k, pi])]
            row += [str(int(trace.flags[k, i])) for i in range(n)]
            writer.writerow(row)


def read_trace_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Columns back as arrays keyed by header name."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows)
    return {name: data[:, idx] for idx, name in enumerate(header)}


def cmd_run(
    scenario_path: str | Path,
    out_dir: str | Path | None = None,
    assert_theorem2: bool = False,
    assert_no_collision: bool = False,
    svg: bool = False,
) -> RunReport:
    """Run one scenario and write trace.csv / metrics.json (+ SVGs)."""
    scenario = load_scenario_file(scenario_path)
    trace = run_scenario(scenario)
    report = metrics(trace, scenario.barrier)
    digest = scenario_digest(scenario)

    assertions: dict[str, bool] = {}
    if assert_no_collision:
        assertions["no_collision"] = all(
            pair["min_h_r0"] >= 0.0 for pair in report["pairs"].values()
        )
    if assert_theorem2:
        ident = report["estimate_identity"]
        assertions["theorem2"] = (
            ident is not None
            and ident["max_residual"] <= 1e-9 * ident["scale"]
        )

    outputs: list[str] = []
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace_path = out / "trace.csv"
        write_trace_csv(trace, trace_path)
        outputs.append(str(trace_path))
        metrics_path = out / "metrics.json"
        payload = {"digest": digest, "metrics": report, "assertions": assertions}
        metrics_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        outputs.append(str(metrics_path))
        if svg:
            from .figures import plot_barriers, plot_trajectories

            traj_path = out / "trajectory.svg"
            plot_trajectories(trace, traj_path)
            outputs.append(str(traj_path))
            barrier_path = out / "barrier.svg"
            plot_barriers(trace, barrier_path)
            outputs.append(str(barrier_path))

    return RunReport(digest=digest, metrics=report, outputs=outputs, assertions=assertions)


def cmd_sweep(
    scenario_path: str | Path,
    dts: list[float],
    out_dir: str | Path | None = None,
) -> RunReport:
    """Required margin per sample time; writes sweep.csv."""
    scenario = load_scenario_file(scenario_path)
    rows = dt_sweep(scenario, dts)
    digest = scenario_digest(scenario)
    table = [
        {
            "dt_s": r.dt,
            "margin_m": r.margin,
            "min_h_m2": r.min_h,
            "min_hr0_m2": r.min_h_r0,
        }
        for r in rows
    ]
    outputs: list[str] = []
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        sweep_path = out / "sweep.csv"
        with open(sweep_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dt_s", "margin_m", "min_h_m2", "min_hr0_m2"])
            for r in rows:
                writer.writerow([_fmt(r.dt), _fmt(r.margin), _fmt(r.min_h), _fmt(r.min_h_r0)])
        outputs.append(str(sweep_path))
    return RunReport(
        digest=digest, metrics={"sweep": table}, outputs=outputs, assertions={}
    )


def _parse_dts(raw: str) -> list[float]:
    try:
        dts = [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dt list: {raw!r}") from None
    if not dts or any(dt <= 0 for dt in dts):
        raise argparse.ArgumentTypeError(f"dts must be positive numbers: {raw!r}")
    return dts


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcca",
        description="Barrier-constrained multi-agent runs: simulate scenarios, sweep sample times.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one scenario file")
    run_p.add_argument("scenario", help="scenario file path")
    run_p.add_argument("--out", default=None, help="output directory for trace.csv / metrics.json")
    run_p.add_argument("--assert-theorem2", action="store_true",
                       help="fail (exit 1) unless the two-host estimate identity holds")
    run_p.add_argument("--assert-no-collision", action="store_true",
                       help="fail (exit 1) if any pair's min h_r0 < 0")
    run_p.add_argument("--svg", action="store_true", help="also write trajectory.svg and barrier.svg")

    sweep_p = sub.add_parser("sweep", help="required margin per sample time")
    sweep_p.add_argument("scenario", help="scenario file path")
    sweep_p.add_argument("--dts", type=_parse_dts, required=True,
                         help="comma-separated sample times in seconds, e.g. 0.05,0.025,0.01")
    sweep_p.add_argument("--out", default=None, help="output directory for sweep.csv")
    return parser


def _print_run_report(report: RunReport) -> None:
    print(f"scenario digest: {report.digest}")
    for name, pair in report.metrics.get("pairs", {}).items():
        print(
            f"pair {name}: min h = {pair['min_h']:.6g}, "
            f"min h_r0 = {pair['min_h_r0']:.6g}, "
            f"max violation = {pair['max_violation']:.6g}"
        )
    for name, ok in report.assertions.items():
        print(f"assert {name}: {'PASS' if ok else 'FAIL'}")
    for path in report.outputs:
        print(f"wrote {path}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed the usage error; keep its code for --help (0)
        return EXIT_INPUT if exc.code not in (0, None) else 0

    try:
        if args.command == "run":
            report = cmd_run(
                args.scenario,
                out_dir=args.out,
                assert_theorem2=args.assert_theorem2,
                assert_no_collision=args.assert_no_collision,
                svg=args.svg,
            )
            _print_run_report(report)
            return EXIT_OK if report.ok else EXIT_ASSERTION
        report = cmd_sweep(args.scenario, args.dts, out_dir=args.out)
        for row in report.metrics["sweep"]:
            print(
                f"dt = {row['dt_s']:g} s: margin = {row['margin_m']:.6g} m, "
                f"min h = {row['min_h_m2']:.6g}, min h_r0 = {row['min_hr0_m2']:.6g}"
            )
        for path in report.outputs:
            print(f"wrote {path}")
        return EXIT_OK
    except (ScenarioParseError, ScenarioValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SimulationAbort, MarginBracketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
