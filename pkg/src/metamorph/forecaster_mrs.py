"""Metamorphic relations FMR-1..FMR-9 for the LSTM forecasting pipeline.

Retraining relations (1, 3, 5-train) are judged against the run-to-run variation
baseline; the rest hold a trained model fixed and are judged deterministically.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import adversarial, spectral
from .baseline import BaselineSet, calibration_error, collect_runs, compute_baseline, within_ci
from .errors import InsufficientData, SeriesTooShort, ZeroRange
from .forecaster import TrainConfig, TrainedModel, evaluate, train
from .series import TimeSeries, load_series, series_to_table, window_count, write_csv
from .verdict import FAIL, PASS, WARN, MrVerdict, guarded

CI_ATOL = 1e-9  # relative slack on CI edges, for zero-width intervals and rounding
CALIBRATION_TOL = 1e-6
EXACT_TOL = 0.0
CHANGE_RTOL = 1e-9
SCALING_CASES = (("add", 309.0), ("subtract", 50.0), ("multiply", 2.0), ("multiply", 0.5))
MODES = ("add", "subtract", "multiply")


@dataclass(frozen=True)
class MrConfig:
    """Constant and tolerance policy for one scaling relation."""

    k: float = 309.0
    mode: str = "add"
    policy: str = "ci"  # "ci" or "absolute"
    atol: float = CI_ATOL
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.policy not in ("ci", "absolute"):
            raise ValueError("policy must be 'ci' or 'absolute'")
        if self.mode == "multiply" and self.k == 0:
            raise ValueError("k must be non-zero for multiplicative cases")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.mode == "add":
            return x + self.k
        if self.mode == "subtract":
            return x - self.k
        return x * self.k

    def inverse(self, y):
        y = np.asarray(y, dtype=np.float64)
        if self.mode == "add":
            return y - self.k
        if self.mode == "subtract":
            return y + self.k
        return y / self.k


@dataclass(frozen=True)
class SuiteConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    n_runs: int = 30
    scaling_cases: tuple[tuple[str, float], ...] = SCALING_CASES
    adversarial_steps: int = adversarial.DEFAULT_STEPS
    adversarial_windows: int = 10
    timestep_max: int | None = None


def _map(series: TimeSeries, fn) -> TimeSeries:
    return TimeSeries(series.timestamps, fn(series.values))


def _scale_tol(*values: float) -> float:
    return CI_ATOL * max(1.0, *(abs(v) for v in values if math.isfinite(v)))


def _gate(baseline: BaselineSet, metric: str, observed: float) -> tuple[bool, dict]:
    b = baseline[metric]
    ok = math.isfinite(observed) and within_ci(b, observed, _scale_tol(b.low, b.high))
    return ok, {"metric": metric, "observed": observed, "ci": [b.low, b.high]}


def _followup_means(train_s, val_s, baseline: BaselineSet, inverse=lambda y: y) -> dict[str, float]:
    """Mean of each metric over follow-up runs that reuse the baseline seed schedule."""
    runs = collect_runs(train_s, val_s, baseline.config, baseline.n_runs, baseline.base_seed)
    return {
        "forecast": float(np.mean([float(inverse(r.first_forecast)) for r in runs])),
        "loss": float(np.mean([r.validation_loss for r in runs])),
        "train_loss": float(np.mean([r.train_loss for r in runs])),
    }


def _calibrated() -> tuple[bool, float]:
    err = calibration_error()
    return err <= CALIBRATION_TOL, err


@guarded("FMR-1", "follow-up losses and back-transformed forecast inside the baseline CIs", CI_ATOL)
def fmr1_linear_scaling(train_s: TimeSeries, val_s: TimeSeries, config: TrainConfig,
                        baseline: BaselineSet, k: float = 309.0, mode: str = "add") -> MrVerdict:
    mc = MrConfig(k, mode, seed=config.seed)
    expected = f"train/val {mode} {k:g}: losses and shifted-back forecast inside baseline CIs"
    calibrated, err = _calibrated()
    means = _followup_means(_map(train_s, mc.forward), _map(val_s, mc.forward), baseline, mc.inverse)
    checks = [_gate(baseline, m, means[m]) for m in ("loss", "train_loss", "forecast")]
    bad = [c for ok, c in checks if not ok]
    observed = {"mode": mode, "k": k, "n_runs": baseline.n_runs, "calibration_error": err,
                "checks": [c for _, c in checks]}
    if not calibrated:
        return MrVerdict("FMR-1", FAIL, observed, expected, CI_ATOL,
                         f"CI machinery off the reference sample by {err:.3g}")
    status = FAIL if bad else PASS
    details = f"outside CI: {[c['metric'] for c in bad]}" if bad else "all metrics inside their CIs"
    return MrVerdict("FMR-1", status, observed, expected, CI_ATOL, details)


@guarded("FMR-2", "forecast on shifted validation data differs from the unshifted one", CHANGE_RTOL)
def fmr2_validation_only_scaling(model: TrainedModel, val_s: TimeSeries, k: float | None = None,
                                 mode: str = "add") -> MrVerdict:
    if k is None:
        k = 3.0 * model.normalizer.max_x
    mc = MrConfig(k, mode)
    before = float(evaluate(model, val_s).first_forecast[0])
    after = float(mc.inverse(evaluate(model, _map(val_s, mc.forward)).first_forecast[0]))
    same = abs(after - before) <= CHANGE_RTOL * max(1.0, abs(before))
    observed = {"mode": mode, "k": k, "forecast": before, "followup_shifted_back": after}
    expected = "fixed normalizer: shifted inputs must move the forecast"
    details = ("forecast unchanged after shifting validation data; normalizer depends on validation data"
               if same else "forecast moved")
    return MrVerdict("FMR-2", FAIL if same else PASS, observed, expected, CHANGE_RTOL, details)


def boundary_lengths(config: TrainConfig) -> dict[str, tuple[int, int]]:
    """Case -> (series length, expected window count). Count 0 means a clean InsufficientData."""
    t, h, b = config.time_steps, config.horizon, config.batch_size
    return {
        "case1": (t + h, 1),
        "case2": (t + h - 1, 0),
        "case3": (b + t + h - 2, b - 1),
        "case4": (b + t + h - 1, b),
    }


def _boundary(run, config: TrainConfig, source: TimeSeries) -> tuple[dict, list[str]]:
    cases, problems = {}, []
    for name, (length, want) in boundary_lengths(config).items():
        if length > len(source):
            raise InsufficientData(f"{name} needs {length} points, source has {len(source)}")
        if length < 1:
            cases[name] = {"length": length, "skipped": "non-positive length"}
            continue
        cut = source.head(length)
        oracle = window_count(length, config.time_steps, config.horizon)
        try:
            got = run(cut)
        except InsufficientData as exc:
            cases[name] = {"length": length, "expected": want, "raised": str(exc)}
            if want != 0:
                problems.append(f"{name}: unexpected InsufficientData")
            continue
        cases[name] = {"length": length, "expected": want, "oracle": oracle, "observed": got}
        if want == 0:
            problems.append(f"{name}: produced {got} window(s) instead of an error")
        elif got != want or got != oracle:
            problems.append(f"{name}: {got} window(s), expected {want}")
    return cases, problems


@guarded("FMR-3", "truncated training data trains on exactly the expected window count", EXACT_TOL)
def fmr3_train_boundaries(train_s: TimeSeries, config: TrainConfig) -> MrVerdict:
    quick = config.replace(epochs=1)  # window count does not depend on epoch count

    def run(cut):
        model = train(cut, quick)
        if not model.params.all_finite() or not math.isfinite(model.final_train_loss):
            raise FloatingPointError("training produced non-finite parameters")
        return model.n_train_sequences

    cases, problems = _boundary(run, config, train_s)
    return MrVerdict("FMR-3", FAIL if problems else PASS, cases,
                     "counts 1, error, batch-1, batch", EXACT_TOL, "; ".join(problems) or "all four cases hold")


@guarded("FMR-4", "truncated validation data evaluates exactly the expected window count", EXACT_TOL)
def fmr4_validation_boundaries(model: TrainedModel, val_s: TimeSeries) -> MrVerdict:
    def run(cut):
        res = evaluate(model, cut)
        if not math.isfinite(res.validation_loss):
            raise FloatingPointError("non-finite validation loss")
        return res.n_windows

    cases, problems = _boundary(run, model.config, val_s)
    return MrVerdict("FMR-4", FAIL if problems else PASS, cases,
                     "counts 1, no forecast, batch-1, batch", EXACT_TOL, "; ".join(problems) or "all four cases hold")


def shuffle_rows(series: TimeSeries, seed: int) -> TimeSeries:
    """Permute rows (timestamps included), write them as CSV and read them back through the loader."""
    perm = np.random.default_rng([seed, 3]).permutation(len(series))
    buf = io.StringIO()
    write_csv(buf, series_to_table(series).take_rows(perm))
    buf.seek(0)
    return load_series(buf)


@guarded("FMR-5", "row order of the input files does not matter", EXACT_TOL)
def fmr5_shuffle(train_s: TimeSeries, val_s: TimeSeries, model: TrainedModel, baseline: BaselineSet,
                 seed: int = 0) -> MrVerdict:
    ref = evaluate(model, val_s)
    got = evaluate(model, shuffle_rows(val_s, seed))
    val_same = got.validation_loss == ref.validation_loss and np.array_equal(got.first_forecast, ref.first_forecast)

    means = _followup_means(shuffle_rows(train_s, seed), val_s, baseline)
    checks = [_gate(baseline, m, means[m]) for m in ("loss", "train_loss", "forecast")]
    bad = [c["metric"] for ok, c in checks if not ok]
    observed = {
        "validation": {"loss": [ref.validation_loss, got.validation_loss],
                       "forecast": [float(ref.first_forecast[0]), float(got.first_forecast[0])]},
        "training": [c for _, c in checks],
    }
    problems = ([] if val_same else ["validation branch not bit-identical"]) + [f"training {m} outside CI" for m in bad]
    return MrVerdict("FMR-5", FAIL if problems else PASS, observed,
                     "validation exact, training inside baseline CI", EXACT_TOL,
                     "; ".join(problems) or "both branches hold")


@guarded("FMR-6", "constant training data is rejected with ZeroRange", EXACT_TOL)
def fmr6_zero_range_train(config: TrainConfig, length: int | None = None) -> MrVerdict:
    length = length or config.time_steps + config.horizon + config.batch_size
    outcomes, problems = {}, []
    for level in (7.0, 0.0):
        series = TimeSeries.from_values(np.full(length, level))
        try:
            with np.errstate(all="ignore"):
                model = train(series, config.replace(epochs=1))
        except ZeroRange as exc:
            outcomes[f"constant {level:g}"] = f"ZeroRange: {exc}"
            continue
        finite = model.params.all_finite() and math.isfinite(model.final_train_loss)
        outcomes[f"constant {level:g}"] = f"trained (finite={finite})"
        problems.append(f"constant {level:g} series was accepted")
    return MrVerdict("FMR-6", FAIL if problems else PASS, outcomes, "ZeroRange for every constant series",
                     EXACT_TOL, "; ".join(problems) or "rejected cleanly")


@guarded("FMR-7", "constant validation data evaluates normally with a finite loss", EXACT_TOL)
def fmr7_zero_range_validation(model: TrainedModel, length: int | None = None) -> MrVerdict:
    cfg = model.config
    length = length or cfg.time_steps + cfg.horizon + cfg.batch_size
    n = model.normalizer
    levels = {"train mean": 0.5 * (n.min_x + n.max_x), "10x train max": 10.0 * n.max_x}
    losses, problems = {}, []
    for name, level in levels.items():
        res = evaluate(model, TimeSeries.from_values(np.full(length, level)))
        losses[name] = res.validation_loss
        if not (math.isfinite(res.validation_loss) and np.isfinite(res.first_forecast).all()):
            problems.append(f"{name}: non-finite result")
    return MrVerdict("FMR-7", FAIL if problems else PASS, losses, "finite loss for constant validation series",
                     EXACT_TOL, "; ".join(problems) or "evaluated normally")


DC_TOL = 1e-9


def fmr8_timestep_analysis(val_s: TimeSeries, configured_time_steps: int,
                           max_step: int | None = None) -> tuple[spectral.TimestepLossCurve | None, MrVerdict]:
    """Window-length curve plus a verdict; warns when the configured window is left of the elbow.

    Raises SeriesTooShort before any analysis when the series cannot hold a 6-point window.
    """
    expected = "configured time_steps at or beyond the elbow; curve finite, non-negative, DC-invariant"
    if len(val_s) < spectral.MIN_STEP + 1:
        raise SeriesTooShort(f"need at least {spectral.MIN_STEP + 1} points, got {len(val_s)}")
    try:
        curve = spectral.timestep_curve(val_s, max_step=max_step)
        shift = 10.0 * (1.0 + float(np.abs(val_s.values).max()))
        shifted = spectral.timestep_curve(val_s.values + shift, max_step=max_step)
    except Exception as exc:  # noqa: BLE001 - a crash is a failed relation
        return None, MrVerdict("FMR-8", FAIL, None, expected, DC_TOL, f"subject raised {type(exc).__name__}: {exc}")
    losses = curve.losses
    dc_gap = float(np.max(np.abs(shifted.losses - losses)))
    observed = {"elbow": curve.elbow, "configured_time_steps": configured_time_steps, "dc_shift_gap": dc_gap,
                "n_points": len(losses)}
    if not np.isfinite(losses).all() or (losses < 0).any():
        return curve, MrVerdict("FMR-8", FAIL, observed, expected, DC_TOL, "non-finite or negative losses")
    if dc_gap > DC_TOL * max(1.0, float(losses.max())):
        return curve, MrVerdict("FMR-8", FAIL, observed, expected, DC_TOL,
                                f"curve moved by {dc_gap:.3g} after adding a constant")
    if configured_time_steps < curve.elbow:
        return curve, MrVerdict("FMR-8", WARN, observed, expected, DC_TOL,
                                f"time_steps {configured_time_steps} is left of the elbow at {curve.elbow}")
    return curve, MrVerdict("FMR-8", PASS, observed, expected, DC_TOL, f"elbow at {curve.elbow}")


SUCCESS_WARN_FRACTION = 0.5


def fmr9_adversarial(model: TrainedModel, windows, steps: int = adversarial.DEFAULT_STEPS
                     ) -> tuple[list[adversarial.AdversarialResult], MrVerdict]:
    """Search each window for a nearby input with a doubled forecast; many successes mean a fragile model."""
    expected = "total loss decreases on every window; success fraction at most 0.5"
    try:
        results = [adversarial.search(model.params, w, steps) for w in np.atleast_2d(windows)]
    except Exception as exc:  # noqa: BLE001
        return [], MrVerdict("FMR-9", FAIL, None, expected, SUCCESS_WARN_FRACTION,
                             f"subject raised {type(exc).__name__}: {exc}")
    frac = float(np.mean([r.success for r in results]))
    finite = all(np.isfinite(r.loss_trace).all() for r in results)
    decreased = [r.loss_trace[-1] < r.loss_trace[0] for r in results]
    observed = {"success_fraction": frac, "n_windows": len(results),
                "initial_loss": [r.loss_trace[0] for r in results],
                "final_loss": [r.loss_trace[-1] for r in results]}
    if steps > 0 and (not finite or not all(decreased)):
        bad = [i for i, d in enumerate(decreased) if not d]
        return results, MrVerdict("FMR-9", FAIL, observed, expected, SUCCESS_WARN_FRACTION,
                                  f"loss did not decrease on window(s) {bad}" if finite else "non-finite loss trace")
    if frac > SUCCESS_WARN_FRACTION:
        return results, MrVerdict("FMR-9", WARN, observed, expected, SUCCESS_WARN_FRACTION,
                                  f"trained model is not robust: {frac:.0%} of windows doubled")
    return results, MrVerdict("FMR-9", PASS, observed, expected, SUCCESS_WARN_FRACTION, f"success fraction {frac:.0%}")


FMR_IDS = tuple(f"FMR-{i}" for i in range(1, 10))
RETRAINING = ("FMR-1", "FMR-5")


@dataclass
class ForecasterSuiteResult:
    verdicts: list[MrVerdict]
    baseline: BaselineSet | None
    curve: spectral.TimestepLossCurve | None = None
    adversarial: list[adversarial.AdversarialResult] = field(default_factory=list)


def _crashed(mr_id: str, exc: Exception) -> MrVerdict:
    return MrVerdict(mr_id, FAIL, None, "suite setup succeeds", EXACT_TOL,
                     f"subject raised {type(exc).__name__}: {exc}")


def run_forecaster_suite(train_s: TimeSeries, val_s: TimeSeries, suite: SuiteConfig = SuiteConfig(),
                         baseline: BaselineSet | None = None, only=None) -> ForecasterSuiteResult:
    """Run the selected FMRs against whatever the pipeline currently does (faults included).

    The baseline is computed here unless one is supplied; the fixed-model
    relations share a single model trained with the configured seed.
    """
    want = set(FMR_IDS if only is None else only)
    cfg = suite.train
    verdicts: list[MrVerdict] = []
    curve, adv = None, []

    if want & set(RETRAINING) and baseline is None:
        try:
            baseline = compute_baseline(train_s, val_s, cfg, suite.n_runs)
        except Exception as exc:  # noqa: BLE001
            verdicts += [_crashed(m, exc) for m in RETRAINING if m in want]
            want -= set(RETRAINING)
    model = None
    if want & {"FMR-2", "FMR-4", "FMR-5", "FMR-7", "FMR-9"}:
        try:
            model = train(train_s, cfg)
        except Exception as exc:  # noqa: BLE001
            fixed = [m for m in ("FMR-2", "FMR-4", "FMR-5", "FMR-7", "FMR-9") if m in want]
            verdicts += [_crashed(m, exc) for m in fixed]
            want -= set(fixed)

    if "FMR-1" in want:
        verdicts += [fmr1_linear_scaling(train_s, val_s, cfg, baseline, k, mode) for mode, k in suite.scaling_cases]
    if "FMR-2" in want:
        verdicts += [fmr2_validation_only_scaling(model, val_s),
                     fmr2_validation_only_scaling(model, val_s, 5.0, "multiply")]
    if "FMR-3" in want:
        verdicts.append(fmr3_train_boundaries(train_s, cfg))
    if "FMR-4" in want:
        verdicts.append(fmr4_validation_boundaries(model, val_s))
    if "FMR-5" in want:
        verdicts.append(fmr5_shuffle(train_s, val_s, model, baseline, cfg.seed))
    if "FMR-6" in want:
        verdicts.append(fmr6_zero_range_train(cfg))
    if "FMR-7" in want:
        verdicts.append(fmr7_zero_range_validation(model))
    if "FMR-8" in want:
        curve, v = fmr8_timestep_analysis(val_s, cfg.time_steps, suite.timestep_max)
        verdicts.append(v)
    if "FMR-9" in want:
        try:
            windows = adversarial.validation_windows(model, val_s, suite.adversarial_windows)
        except Exception as exc:  # noqa: BLE001
            verdicts.append(_crashed("FMR-9", exc))
        else:
            adv, v = fmr9_adversarial(model, windows, suite.adversarial_steps)
            verdicts.append(v)
    order = {m: i for i, m in enumerate(FMR_IDS)}
    verdicts.sort(key=lambda v: order[v.mr_id])
    return ForecasterSuiteResult(verdicts, baseline, curve, adv)
