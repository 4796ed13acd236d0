"""Command-line front end.

Exit codes: 0 every relation passed (warnings allowed), 1 at least one relation
failed, 2 bad usage or unreadable input, 3 a precondition did not hold.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import time
from contextlib import nullcontext

import numpy as np

from . import faults
from .adversarial import validation_windows
from .baseline import BaselineSet, RunSample, compute_baseline, summarize_values
from .config import RunConfig, load_config
from .correlation_mrs import run_correlation_suite
from .errors import CleanBuildFails, MetamorphError, TooFewRuns
from .forecaster import load_model, save_model, train
from .forecaster_mrs import fmr8_timestep_analysis, fmr9_adversarial, run_forecaster_suite
from .kill_matrix import run_kill_matrix
from .report import RunReport, environment, file_digest
from .series import CsvConfig, default_split, load_csv, load_series, synth_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PRECONDITION = 0, 1, 2, 3


class Precondition(Exception):
    """A required earlier step (clean build, matching baseline) does not hold."""


def _series(path, cfg: RunConfig):
    return load_series(path, cfg.data.timestamp_column, cfg.data.value_column)


def _split(args, cfg: RunConfig):
    if (args.train is None) != (args.val is None):
        raise ValueError("give both TRAIN and VAL CSVs, or neither for synthetic data")
    if args.train is None:
        return default_split(cfg.seed, cfg.data.n_train, cfg.data.n_val), {"synthetic": "sine+trend"}
    inputs = {"train": file_digest(args.train), "val": file_digest(args.val)}
    return (_series(args.train, cfg), _series(args.val, cfg)), inputs


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _log(line: str) -> None:
    print(line, file=sys.stderr)


def _log_verdicts(report: RunReport) -> None:
    for v in report.verdicts:
        _log(f"{v.mr_id:7s} {v.status:4s}  {v.details}")


def _finish(report: RunReport, args, started: float) -> int:
    report.timing = {"elapsed_s": round(time.perf_counter() - started, 3)}
    _log_verdicts(report)
    _emit(report.to_json(), args.out)
    return EXIT_FAIL if report.failed else EXIT_OK


def cmd_corr_mrs(args, cfg: RunConfig) -> RunReport:
    if args.csv:
        target = args.target or cfg.data.target or cfg.data.value_column
        table = load_csv(args.csv, CsvConfig(cfg.data.timestamp_column, target))
        inputs = {"csv": file_digest(args.csv)}
    else:
        table = synth_table(cfg.data.table_rows, cfg.seed)
        inputs = {"synthetic": "feature table"}
    verdicts = run_correlation_suite(table, seed=cfg.seed)
    return RunReport("corr-mrs", verdicts, environment=environment(cfg, args.fault, inputs))


def _samples_file(path) -> list[RunSample]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "forecast" not in rows[0]:
        raise ValueError("samples CSV needs a 'forecast' column")
    return [
        RunSample(i, float(r["forecast"]), float(r.get("loss") or "nan"), float(r.get("train_loss") or "nan"))
        for i, r in enumerate(rows)
    ]


def cmd_baseline(args, cfg: RunConfig) -> RunReport:
    env_inputs = {}
    if args.samples:
        samples = _samples_file(args.samples)
        env_inputs["samples"] = file_digest(args.samples)
        stats = {"forecast": summarize_values([s.first_forecast for s in samples], "forecast")}
        losses = [s.validation_loss for s in samples]
        if not np.isnan(losses).any():
            stats["loss"] = summarize_values(losses, "loss")
        payload = {"samples": [s.__dict__ for s in samples]}
        baselines = {m: b.to_dict() for m, b in stats.items()}
    else:
        (train_s, val_s), env_inputs = _split(args, cfg)
        bset = compute_baseline(train_s, val_s, cfg.train, cfg.n_runs)
        if args.save_model:
            save_model(train(train_s, cfg.train), args.save_model)
        payload = {"baseline": bset.to_dict()}
        baselines = {m: b.to_dict() for m, b in bset.baselines.items()}
    return RunReport("baseline", [], baselines, environment(cfg, args.fault, env_inputs), payload)


def _load_baseline(path, cfg: RunConfig) -> BaselineSet:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    raw = doc.get("results", {}).get("baseline", doc)
    bset = BaselineSet.from_dict(raw)
    if bset.config != cfg.train or bset.n_runs != cfg.n_runs:
        raise Precondition("stored baseline was built with a different training config or run count")
    return bset


def cmd_forecast_mrs(args, cfg: RunConfig) -> RunReport:
    (train_s, val_s), inputs = _split(args, cfg)
    bset = None
    if args.baseline:
        bset = _load_baseline(args.baseline, cfg)
        inputs["baseline"] = file_digest(args.baseline)
    res = run_forecaster_suite(train_s, val_s, cfg.suite(), bset)
    payload = {
        "timestep_curve": None if res.curve is None else {"points": res.curve.points, "elbow": res.curve.elbow},
        "adversarial": [r.to_dict() for r in res.adversarial],
    }
    baselines = None if res.baseline is None else {m: b.to_dict() for m, b in res.baseline.baselines.items()}
    return RunReport("forecast-mrs", res.verdicts, baselines, environment(cfg, args.fault, inputs), payload)


def curve_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_step", "loss"])
    w.writerows((s, repr(l)) for s, l in points)
    return buf.getvalue()


def adversarial_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window", "y_s", "y_p", "ratio", "relative_distance", "initial_loss", "final_loss", "success"])
    for i, r in enumerate(results):
        w.writerow([i, repr(r.y_s), repr(r.y_p), repr(r.ratio), repr(r.relative_distance),
                    repr(r.loss_trace[0]), repr(r.loss_trace[-1]), int(r.success)])
    return buf.getvalue()


def cmd_timesteps(args, cfg: RunConfig) -> RunReport:
    series = _series(args.csv, cfg)
    curve, verdict = fmr8_timestep_analysis(series, args.time_steps or cfg.train.time_steps, cfg.timestep_max)
    if curve is None:
        raise ValueError(verdict.details)
    if args.csv_out:
        with open(args.csv_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(curve_csv(curve.points))
    payload = {"elbow": curve.elbow, "points": curve.points}
    return RunReport("timesteps", [verdict], None, environment(cfg, args.fault, {"csv": file_digest(args.csv)}), payload)


def cmd_adversarial(args, cfg: RunConfig) -> RunReport:
    model = load_model(args.model)
    val_s = _series(args.val, cfg)
    windows = validation_windows(model, val_s, cfg.adversarial_windows)
    steps = cfg.adversarial_steps if args.steps is None else args.steps
    results, verdict = fmr9_adversarial(model, windows, steps)
    frac = float(np.mean([r.success for r in results])) if results else 0.0
    _log(f"success fraction {frac:.2f} over {len(results)} window(s)")
    if args.csv_out:
        with open(args.csv_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(adversarial_csv(results))
    payload = {"steps": steps, "success_fraction": frac, "results": [r.to_dict() for r in results]}
    inputs = {"model": file_digest(args.model), "val": file_digest(args.val)}
    return RunReport("adversarial", [verdict], None, environment(cfg, args.fault, inputs), payload)


def cmd_faults(args, cfg: RunConfig) -> tuple[RunReport, int]:
    if not args.matrix and not args.fault:
        raise ValueError("faults needs --matrix or --fault ID")
    ids = None if args.matrix else [args.fault]
    try:
        km = run_kill_matrix(ids, cfg.matrix, gate=not args.skip_gate,
                             progress=lambda f, k: _log(f"{f:34s} {'killed by ' + ', '.join(k) if k else 'survived'}"))
    except CleanBuildFails as exc:
        raise Precondition(str(exc)) from exc
    if args.csv_out:
        with open(args.csv_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(km.to_csv())
    missed = km.missed_expectations()
    _log(f"kill rate {km.kill_rate:.1%} ({sum(km.killed(f) for f in km.fault_ids)}/{len(km.fault_ids)})")
    for fid, mrs in missed.items():
        _log(f"{fid}: documented killer(s) {', '.join(mrs)} did not fail")
    payload = {"kill_matrix": km.to_dict(), "missed_expectations": missed, "dead_mrs": km.dead_mrs()}
    report = RunReport("faults", [], None, environment(cfg, None), payload)
    return report, (EXIT_FAIL if missed else EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON run configuration")
    common.add_argument("--seed", type=int, help="overrides the config seed and METAMORPH_SEED")
    common.add_argument("--runs", type=int, help="training runs per baseline")
    common.add_argument("--fault", help="activate one catalogued fault for this run")
    common.add_argument("--out", help="write the JSON report here instead of stdout")

    p = argparse.ArgumentParser(prog="metamorph", description="Metamorphic checks for a forecasting pipeline.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("corr-mrs", parents=[common], help="correlation relations CMR-1..10")
    s.add_argument("csv", nargs="?", help="feature table CSV (synthetic table when omitted)")
    s.add_argument("--target", help="target column name")

    s = sub.add_parser("baseline", parents=[common], help="run-to-run variation baseline")
    s.add_argument("train", nargs="?")
    s.add_argument("val", nargs="?")
    s.add_argument("--samples", help="CSV of per-run results (column 'forecast', optional 'loss') to summarize")
    s.add_argument("--save-model", help="also save the model trained with the configured seed (.npz)")

    s = sub.add_parser("forecast-mrs", parents=[common], help="forecaster relations FMR-1..9")
    s.add_argument("train", nargs="?")
    s.add_argument("val", nargs="?")
    s.add_argument("--baseline", help="report written by the baseline subcommand")

    s = sub.add_parser("timesteps", parents=[common], help="window-length reconstruction curve")
    s.add_argument("csv")
    s.add_argument("--time-steps", type=int, help="configured window length to judge")
    s.add_argument("--csv-out", help="also write the curve points as CSV")

    s = sub.add_parser("adversarial", parents=[common], help="search for forecast-doubling inputs")
    s.add_argument("model", help="model .npz written by save_model")
    s.add_argument("val", help="validation series CSV")
    s.add_argument("--steps", type=int, help="optimizer steps per window")
    s.add_argument("--csv-out", help="also write one row per searched window as CSV")

    s = sub.add_parser("faults", parents=[common], help="kill matrix over the fault catalog")
    s.add_argument("--matrix", action="store_true", help="run every catalogued fault")
    s.add_argument("--skip-gate", action="store_true", help="skip the clean-build gate")
    s.add_argument("--csv-out", help="also write the matrix as CSV")
    return p


COMMANDS = {
    "corr-mrs": cmd_corr_mrs,
    "baseline": cmd_baseline,
    "forecast-mrs": cmd_forecast_mrs,
    "timesteps": cmd_timesteps,
    "adversarial": cmd_adversarial,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    started = time.perf_counter()
    try:
        cfg = load_config(args.config, args.seed)
        if args.runs is not None:
            if args.runs < 2:
                raise TooFewRuns(f"need at least 2 runs, got {args.runs}")
            cfg = dataclasses.replace(cfg, n_runs=args.runs)
        if args.fault:
            faults.get_fault(args.fault)
        if args.command == "faults":
            report, code = cmd_faults(args, cfg)
            report.timing = {"elapsed_s": round(time.perf_counter() - started, 3)}
            _emit(report.to_json(), args.out)
            return code
        ctx = faults.injected(args.fault) if args.fault else nullcontext()
        with ctx:
            report = COMMANDS[args.command](args, cfg)
        return _finish(report, args, started)
    except Precondition as exc:
        _log(f"precondition failed: {exc}")
        return EXIT_PRECONDITION
    except FileNotFoundError as exc:
        _log(f"error: no such file: {exc.filename or exc}")
        return EXIT_USAGE
    except (MetamorphError, ValueError, KeyError, OSError) as exc:
        _log(f"error: {type(exc).__name__}: {exc}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
