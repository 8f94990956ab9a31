"""Command line entry point: ``cacc-sim run | report | list-presets``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import io
from .config import FORMATS, PRESETS, ConfigError, RunConfig, parse_config, preset, serialize
from .metrics import evaluate
from .scenario import ScenarioError, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COLLISION = 3
EXIT_IO = 4

OUT_ENV = "CACC_SIM_OUT"

log = logging.getLogger("cacc_sim")


def _run_one(label: str, spec, out_dir: str, formats: Sequence[str]) -> dict:
    """Simulate one spec and write its artefacts; runs in a worker process."""
    trace = run(spec)
    report = evaluate(trace)
    run_dir = io.ensure_dir(Path(out_dir) / label)
    (run_dir / "scenario.ini").write_text(serialize(spec), encoding="utf-8")
    if "trace-csv" in formats:
        io.write_trace_csv(trace, run_dir / "trace.csv")
    if "summary" in formats:
        io.write_summary(report, run_dir / "summary.txt")
    if "plot-data" in formats:
        io.write_plot_data(trace, run_dir / "plots")
    c = trace.collision
    return {"label": label, "dir": str(run_dir),
            "collision": None if c is None else (c.t, c.follower - 1, c.follower),
            "rms_last": report.last.rms_accel, "min_R": min(v.min_R for v in report.vehicles)}


def run_command(cfg: RunConfig, jobs: int = 1, echo=print) -> int:
    runs = cfg.expand()
    out_dir = cfg.out_dir
    try:
        io.ensure_dir(out_dir)
    except OSError as exc:
        echo(f"error: cannot create output directory {out_dir}: {exc}")
        return EXIT_IO
    labels = [label if len(runs) > 1 else (label.replace("/", "_") or "run") for label, _ in runs]
    try:
        if jobs > 1 and len(runs) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_run_one, labels, [s for _, s in runs],
                                        [out_dir] * len(runs), [cfg.formats] * len(runs)))
        else:
            results = [_run_one(lbl, spec, out_dir, cfg.formats) for lbl, (_, spec) in zip(labels, runs)]
    except OSError as exc:
        echo(f"error: I/O failure at {getattr(exc, 'filename', None) or out_dir}: {exc}")
        return EXIT_IO

    collided = False
    for res in results:
        line = f"{res['label']}: rms_last={res['rms_last']:.4f} min_R={res['min_R']:.2f} -> {res['dir']}"
        if res["collision"]:
            t, a, b = res["collision"]
            line += f"  COLLISION at t={t:.2f}s between vehicles {a} and {b}"
            collided = True
        echo(line)
    return EXIT_COLLISION if collided else EXIT_OK


def _load_trace(path: Path):
    sidecar = path.parent / "scenario.ini"
    if not sidecar.exists():
        raise FileNotFoundError(f"{sidecar} (scenario description next to the trace)")
    spec = parse_config(sidecar.read_text(encoding="utf-8")).spec
    return io.read_trace_csv(path, spec)


def report_table(traces) -> list[str]:
    header = f"{'control logic':<14}{'time gap [s]':>13}{'RMS accel [m/s2]':>18}{'min R [m]':>11}" \
             f"{'string stable':>15}{'TFC [veh/h]':>13}  scenario"
    rows = [header, "-" * len(header)]
    kinds = {(t.spec.kind, t.spec.lead) for t in traces}
    if len(kinds) > 1:
        warnings.warn("traces come from different scenarios; rows are not directly comparable")
    for trace in traces:
        rep = evaluate(trace)
        logic = "Connected ACC" if rep.controller == "cacc" else "Commercial ACC"
        stable = "-" if rep.string_stable is None else ("yes" if rep.string_stable else "no")
        min_R = min(v.min_R for v in rep.vehicles)
        rows.append(f"{logic:<14}{rep.h:>13.2f}{rep.last.rms_accel:>18.3f}{min_R:>11.2f}"
                    f"{stable:>15}{rep.tfc:>13.0f}  {rep.scenario}")
    return rows


def report_command(paths: Sequence[str], echo=print) -> int:
    traces = []
    for p in paths:
        try:
            traces.append(_load_trace(Path(p)))
        except OSError as exc:
            echo(f"error: cannot read {p}: {exc}")
            return EXIT_IO
        except ConfigError as exc:
            echo(f"error: {p}: {exc}")
            return EXIT_CONFIG
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = report_table(traces)
    for w in caught:
        echo(f"warning: {w.message}")
    for row in rows:
        echo(row)
    return EXIT_OK


def build_run_config(args) -> RunConfig:
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = parse_config(text)
        if args.preset:
            cfg = replace(cfg, spec=preset(args.preset))
    elif args.preset:
        cfg = RunConfig(spec=preset(args.preset))
    else:
        raise ConfigError("missing required option: --config or --preset")
    if args.out:
        cfg.out_dir = args.out
    elif os.environ.get(OUT_ENV):
        cfg.out_dir = os.environ[OUT_ENV]
    if args.seed is not None:
        cfg.seed = args.seed
    if args.format:
        cfg.formats = tuple(args.format)
    return cfg


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cacc-sim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a preset or config file")
    p_run.add_argument("--config", metavar="PATH")
    p_run.add_argument("--preset", metavar="NAME")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out", metavar="DIR", help=f"output directory (env {OUT_ENV})")
    p_run.add_argument("--format", action="append", choices=FORMATS,
                       help="artefact to write; repeatable (default: all)")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")

    p_rep = sub.add_parser("report", help="tabulate metrics for trace files")
    p_rep.add_argument("traces", nargs="+", metavar="TRACE")

    sub.add_parser("list-presets", help="show shipped scenario presets")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list-presets":
        for name in PRESETS:
            spec = preset(name)
            print(f"{name:<24} {spec.kind:<12} n={spec.n_vehicles} {spec.controller:<5} "
                  f"h={spec.h:g} mu={spec.mu:g}")
        return EXIT_OK
    if args.command == "report":
        return report_command(args.traces)
    try:
        cfg = build_run_config(args)
    except (ConfigError, ScenarioError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_command(cfg, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
