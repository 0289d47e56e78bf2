"""Command-line entry point.

    broilersim run <scenario> [--seed N] [--out DIR] [--no-figures]
                              [--serve [--port P] [--rate R]] [--duration S]
    broilersim replay <run-dir-or-store> <scenario> [--seed N]
    broilersim analyze <csv> [--day-length S] [--out-dir DIR]
    broilersim export <variable> <t1> <t2> --store DIR [-o FILE]

Exit codes: 0 success, 1 validation problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import analysis, runner, scenario as scenario_mod
from .httpapi import ServiceServer
from .scenario import ScenarioError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="broilersim",
        description="Deterministic broiler-house monitoring pipeline: "
                    "plant, sensor node, serial gateway, telemetry service.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario end to end")
    p_run.add_argument("scenario",
                       help="scenario file or preset name "
                            f"({', '.join(scenario_mod.PRESET_NAMES)})")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.add_argument("--duration", type=int, default=None,
                       help="override the scenario duration (virtual s)")
    p_run.add_argument("--out", default=None,
                       help="artifact directory (default runs/<name>)")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering of the exported series")
    p_run.add_argument("--serve", action="store_true",
                       help="expose the telemetry service over HTTP and pace "
                            "the simulation against the wall clock")
    p_run.add_argument("--port", type=int, default=8787)
    p_run.add_argument("--rate", type=float, default=60.0,
                       help="virtual seconds per wall second in serve mode")

    p_replay = sub.add_parser(
        "replay", help="re-run a scenario and diff against a saved store")
    p_replay.add_argument("store", help="run directory (or its store/ subdir)")
    p_replay.add_argument("scenario")
    p_replay.add_argument("--seed", type=int, default=None)

    p_an = sub.add_parser("analyze", help="per-day means over an exported CSV")
    p_an.add_argument("csv")
    p_an.add_argument("--day-length", type=int, default=analysis.DAY_SECONDS)
    p_an.add_argument("--out-dir", default=None,
                      help="also write report.csv and figures here")

    p_ex = sub.add_parser("export", help="CSV range export from a saved store")
    p_ex.add_argument("variable")
    p_ex.add_argument("t1", type=float)
    p_ex.add_argument("t2", type=float)
    p_ex.add_argument("--store", required=True,
                      help="run directory (or its store/ subdir)")
    p_ex.add_argument("-o", "--output", default=None,
                      help="write to a file instead of stdout")
    return parser


def _load_scenario(ref: str, seed: int | None, duration: int | None = None):
    sc = scenario_mod.load(ref)
    if seed is not None:
        sc.seed = seed
    if duration is not None:
        if duration <= 0:
            raise ScenarioError("duration override must be positive")
        sc.duration = duration
    return sc


def _store_dir(ref: str) -> Path:
    path = Path(ref)
    if (path / "store").is_dir():
        return path / "store"
    if path.is_dir():
        return path
    raise FileNotFoundError(f"no store directory at {ref}")


def cmd_run(args) -> int:
    sc = _load_scenario(args.scenario, args.seed, args.duration)
    out_dir = Path(args.out) if args.out else Path("runs") / sc.name
    sim = runner.SimulationRun(sc)

    server = None
    rate = None
    checkpoint_dir = None
    if args.serve:
        server = ServiceServer(sim.store, port=args.port).start()
        rate = args.rate
        checkpoint_dir = out_dir / "store"
        print(f"serving telemetry API at {server.url} "
              f"(token: {sc.credentials.token!r}, {rate:g}x speedup)")

    try:
        result = sim.run(rate=rate, checkpoint_dir=checkpoint_dir)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        if server:
            server.stop()
        return EXIT_RUNTIME

    paths = runner.write_artifacts(result, out_dir,
                                   figures=not args.no_figures)
    stats = result.stats_dict()
    print(f"scenario {sc.name}: {result.ticks} virtual s "
          f"in {result.wall_seconds:.2f} wall s")
    print(f"frames sent {result.frames_sent}, decoded "
          f"{stats['decode']['frames_ok']}, pairs delivered "
          f"{stats['uplink']['delivered_pairs']}, events {len(result.events)}")
    print(f"artifacts in {out_dir}")
    for key in sorted(paths):
        print(f"  {key}: {paths[key]}")

    if server:
        print("simulation finished; service stays up for inspection "
              "(Ctrl-C to stop)")
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            pass
        finally:
            server.stop()
    return EXIT_OK


def cmd_replay(args) -> int:
    sc = _load_scenario(args.scenario, args.seed)
    from .service import default_store

    saved = default_store(token=sc.credentials.token,
                          temp_variable_id=sc.credentials.temp_variable_id,
                          load_variable_id=sc.credentials.load_variable_id)
    saved.load(_store_dir(args.store))
    fresh = runner.execute(sc)

    clean = True
    for vid in saved.variables():
        diff = runner.replay_diff(saved.export_csv(vid),
                                  fresh.store.export_csv(vid))
        if diff is None:
            print(f"{vid}: identical "
                  f"({len(saved.query_series(vid))} points)")
        else:
            clean = False
            print(f"{vid}: DIFFERS at {diff}")
    return EXIT_OK if clean else EXIT_RUNTIME


def cmd_analyze(args) -> int:
    data = Path(args.csv).read_bytes()
    imported = analysis.import_csv(data)
    for bad in imported.bad_rows:
        print(f"warning: line {bad.line_number}: {bad.reason}: {bad.content}",
              file=sys.stderr)
    report = analysis.daily_mean(imported.points, day_length=args.day_length)
    print(analysis.report_table(report))

    if args.out_dir:
        from . import report as figures

        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(analysis.report_csv(report),
                                            encoding="utf-8")
        stem = Path(args.csv).stem
        if imported.points:
            figures.plot_series(imported.points, "value", stem,
                                out_dir / f"{stem}_series.png")
        if report.days:
            figures.plot_daily_means(report, f"{stem} daily means",
                                     out_dir / f"{stem}_daily_means.png")
        print(f"report written to {out_dir}")
    return EXIT_OK


def cmd_export(args) -> int:
    from .service import TelemetryStore

    store = TelemetryStore(token="export")
    store.load(_store_dir(args.store))
    data = store.export_csv(args.variable, args.t1, args.t2)
    if args.output:
        Path(args.output).write_bytes(data)
        print(f"wrote {args.output}", file=sys.stderr)
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "replay": cmd_replay,
        "analyze": cmd_analyze,
        "export": cmd_export,
    }
    try:
        return handlers[args.command](args)
    except (ScenarioError, analysis.CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
