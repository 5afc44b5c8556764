"""Experiment runner: configs, step-size tuning, sweeps, CSV/JSON/SVG output."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import metrics
from .charts import emit_svg_chart
from .data import IrisSpec, SyntheticSpec, load_iris, scale_to_unit_ball, synth_two_circles, two_point_dataset
from .erm_game import GameParams, erm_lower_bound_iters, run_erm_game
from .losses import Dataset
from .trainers import (
    TRACE_COLUMNS,
    DivergenceError,
    StepSchedule,
    TrainTrace,
    run_alpha_gd,
    run_alpha_perceptron,
    run_alpha_sgd,
    run_slow_gd_instance,
)

log = logging.getLogger(__name__)

ALGORITHMS = ("agd", "asgd", "aperceptron", "slow_gd", "erm_game")
TUNING_GRID = tuple(0.1 / 2 ** k for k in range(10))
TUNING_ITERS = 500
TUNING_TRIALS = 5


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    dataset: dict = field(default_factory=lambda: {"kind": "synthetic"})
    algorithm: str = "agd"
    alphas: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75])
    iterations: int = 1000
    step_size: object = "tune"  # float, "tune" or "theory_cap"
    trials: int = 1
    seed: int = 0
    normalize: bool = False
    output_dir: str = "out"
    init: object = "zero"  # "zero", "reference" or an explicit vector
    alpha_relative: bool = False  # alphas given as fractions of the max-margin
    svg: bool = True
    game: dict = field(default_factory=dict)
    slow_gd: dict = field(default_factory=dict)
    bound_constants: dict = field(default_factory=lambda: {"c": 1.0, "q": 2.0, "delta": 0.1})

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if any(a < 0 for a in self.alphas):
            raise ConfigError("alphas must be nonnegative")
        if self.trials < 1 or self.iterations < 1:
            raise ConfigError("trials and iterations must be >= 1")
        if not (isinstance(self.step_size, (int, float)) and self.step_size > 0) and \
                self.step_size not in ("tune", "theory_cap"):
            raise ConfigError(f"step_size must be a positive number, 'tune' or 'theory_cap', got {self.step_size!r}")
        kind = self.dataset.get("kind")
        if kind not in ("synthetic", "iris", "two_point"):
            raise ConfigError(f"unknown dataset kind {kind!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class TuningResult:
    alpha: float
    chosen: float
    grid: list  # (eta, mean final robust risk); inf for diverged runs


# -- CSV -----------------------------------------------------------------------

def _g(v: float) -> str:
    return f"{v:.17g}"


def trace_to_csv(trace: TrainTrace, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    cols = [trace.column(c) for c in TRACE_COLUMNS]
    for k in range(len(trace)):
        w.writerow([str(int(cols[0][k]))] + [_g(float(c[k])) for c in cols[1:]])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def trace_from_csv(path) -> TrainTrace:
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = [[float(v) for v in row] for row in r if row]
    a = np.array(rows).reshape(-1, len(TRACE_COLUMNS))
    return TrainTrace(a[:, 0].astype(np.int64), *(a[:, k].copy() for k in range(1, 6)))


def aggregate_to_csv(traces, metric_names, path=None, averaged: bool = False) -> str:
    """Per-t mean and (population) standard deviation across trials."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["t"]
    for m in metric_names:
        header += [f"mean_{m}", f"std_{m}"]
    w.writerow(header)
    src = [tr.averaged if averaged else tr for tr in traces]
    ts = src[0].t
    stacks = {m: np.stack([s.column(m) for s in src]) for m in metric_names}
    for k in range(len(ts)):
        row = [str(int(ts[k]))]
        for m in metric_names:
            col = stacks[m][:, k]
            row += [_g(float(np.mean(col))), _g(float(np.std(col)))]
        w.writerow(row)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


# -- datasets and step sizes -----------------------------------------------------

def build_dataset(config: ExperimentConfig):
    """Returns (dataset, scale); scale is 1 unless ``normalize`` is set."""
    spec = dict(config.dataset)
    kind = spec.pop("kind")
    if kind == "synthetic":
        spec.setdefault("seed", config.seed)
        S = synth_two_circles(SyntheticSpec(**spec))
    elif kind == "iris":
        S = load_iris(IrisSpec(**spec))
    else:
        S = two_point_dataset(spec.get("gamma", 1.0), spec.get("d", 2))
    scale = 1.0
    if config.normalize:
        S, scale = scale_to_unit_ball(S)
    return S, scale


def initial_model(config: ExperimentConfig, S: Dataset, trial: int = 0):
    init = config.init
    if isinstance(init, list):
        return np.array(init, dtype=np.float64)
    if init == "zero":
        return np.zeros(S.d)
    if init == "reference":
        # (0, 1) on the 2-d synthetic set, standard normal entries otherwise
        if config.dataset.get("kind") == "synthetic":
            return np.array([0.0, 1.0])
        return np.random.default_rng(config.seed + trial + 10_000).standard_normal(S.d)
    raise ConfigError(f"unknown init {init!r}")


def _train(config, S, alpha, eta, T, trial, w0):
    if config.algorithm == "agd":
        return run_alpha_gd(S, alpha, StepSchedule.constant(eta), T, w0=w0)
    return run_alpha_sgd(S, alpha, eta, T, seed=config.seed + trial, w0=w0)


def tune_step_size(config: ExperimentConfig, alpha: float, S: Optional[Dataset] = None) -> TuningResult:
    """Grid search over eta in {0.1 / 2^k : 0 <= k < 10}, scoring the robust
    risk after 500 iterations (mean over 5 trials for alpha-SGD).  Ties go to
    the smaller step."""
    if config.algorithm not in ("agd", "asgd"):
        raise ConfigError("tuning applies to agd and asgd only")
    if S is None:
        S, _ = build_dataset(config)
    trials = 1 if config.algorithm == "agd" else TUNING_TRIALS
    grid = []
    for eta in TUNING_GRID:
        scores = []
        for k in range(trials):
            try:
                tr = _train(config, S, alpha, eta, TUNING_ITERS, k, initial_model(config, S, k))
                scores.append(tr.robust_risk[-1])
            except DivergenceError:
                scores.append(math.inf)
        grid.append((eta, float(np.mean(scores))))
    finite = [g for g in grid if math.isfinite(g[1])]
    if not finite:
        raise RuntimeError(f"every step size diverged for alpha={alpha}")
    best = min(finite, key=lambda g: (g[1], g[0]))
    return TuningResult(alpha, best[0], grid)


def _step_for(config, S, gamma, alpha, tuned: dict) -> float:
    if isinstance(config.step_size, (int, float)):
        return float(config.step_size)
    if config.step_size == "theory_cap":
        if config.algorithm == "asgd":
            return metrics.sgd_step_cap(alpha)
        if alpha >= gamma:
            raise ConfigError(f"theory_cap needs alpha < gamma (alpha={alpha:g}, gamma={gamma:g})")
        return metrics.gd_step_cap(gamma, alpha)
    tuned[alpha] = tune_step_size(config, alpha, S)
    return tuned[alpha].chosen


# -- reports ---------------------------------------------------------------------

def emit_bound_table(inputs: metrics.BoundInputs, t_grid, path=None) -> str:
    """Rows of gd/sgd bounds per t; corollary thresholds in ``#`` footer lines."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "gd_bound", "sgd_bound", "margin_trigger_level"])
    level = metrics.margin_trigger_level(inputs.n)
    for t in t_grid:
        gd = metrics.gd_bound(t, inputs.gamma, inputs.alpha, inputs.eta) if t >= 2 else math.nan
        sgd = metrics.sgd_bound(t, inputs.gamma, inputs.alpha, inputs.eta, inputs.delta_conf)
        w.writerow([str(t), _g(gd), _g(sgd), _g(level)])
    try:
        cg = _g(metrics.corollary_gd_iters(inputs))
        cs = _g(metrics.corollary_sgd_iters(inputs))
    except RuntimeError as exc:
        cg = cs = f"unavailable ({exc})"
    buf.write(f"# corollary_gd_iters(q={inputs.q:g}) = {cg}\n")
    buf.write(f"# corollary_sgd_iters(q={inputs.q:g}, c={inputs.c:g}, delta={inputs.delta_conf:g}) = {cs}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def _num(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None
    return v


def _charts(out: Path, prefix: str, traces: dict, metric_names):
    for m in metric_names:
        series = {}
        for label, tr in traces.items():
            col = tr.column(m)
            series[label] = [(float(t), float(v)) for t, v in zip(tr.t, col) if math.isfinite(v)]
        emit_svg_chart(series, False, out / f"{prefix}{m}.svg", title=m, ylabel=m)
        pos = {k: [(t, v) for t, v in s if t > 0 and v > 0] for k, s in series.items()}
        pos = {k: s for k, s in pos.items() if s}
        if pos:
            emit_svg_chart(pos, True, out / f"{prefix}{m}_loglog.svg", title=m, ylabel=m)


def run_experiment(config: ExperimentConfig) -> dict:
    """Run the configured sweep and write traces, aggregates, charts and summary.json.

    Any failure removes the partially written output directory.
    """
    out = Path(config.output_dir)
    existed = out.exists()
    try:
        out.mkdir(parents=True, exist_ok=True)
        summary = _run(config, out)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")
        return summary
    except BaseException:
        if not existed:
            shutil.rmtree(out, ignore_errors=True)
        raise


def _fmt_alpha(a: float) -> str:
    return f"{a:g}"


def _run(config: ExperimentConfig, out: Path) -> dict:
    if config.algorithm == "erm_game":
        g = config.game
        params = GameParams(g.get("d", 50), g.get("gamma", 0.5), g.get("alpha", 0.4), g.get("eps", 0.1))
        state = run_erm_game(params, g.get("T", config.iterations), seed=config.seed)
        return {"gamma": params.gamma, "alphas": [params.alpha], "step_sizes": {}, "bounds": {
            "erm_lower_bound_iters": erm_lower_bound_iters(
                params.d, params.gamma, params.eps, config.bound_constants.get("c", 1.0))},
            "rate_slopes": {}, "margin_attained_at": {}, "game": state.summary(),
            "constants": config.bound_constants}
    if config.algorithm == "slow_gd":
        c = config.slow_gd.get("c", 5.0)
        summary = {"gamma": 1.0, "alphas": list(config.alphas), "step_sizes": {}, "bounds": {},
                   "rate_slopes": {}, "margin_attained_at": {}}
        traces = {}
        for a in config.alphas:
            tr = run_slow_gd_instance(c, a, config.iterations)
            trace_to_csv(tr, out / f"trace_alpha={_fmt_alpha(a)}.csv")
            summary["bounds"][_fmt_alpha(a)] = {"exp_gd_threshold": metrics.exp_gd_threshold(c, a),
                                                "exp_gd_threshold_tight": metrics.exp_gd_threshold_tight(c, a)}
            summary["margin_attained_at"][_fmt_alpha(a)] = tr.first_margin_at_least(a)
            traces[f"alpha={_fmt_alpha(a)}"] = tr
        if config.svg:
            _charts(out, "", traces, ("margin",))
        return summary

    S, scale = build_dataset(config)
    mm = metrics.max_margin(S)
    gamma = mm.gamma
    consts = config.bound_constants
    alphas = [a * gamma for a in config.alphas] if config.alpha_relative else list(config.alphas)
    summary = {"gamma": gamma, "scale": scale, "n": S.n, "d": S.d, "alphas": alphas,
               "step_sizes": {}, "bounds": {}, "rate_slopes": {}, "margin_attained_at": {},
               "constants": consts}
    if config.algorithm == "aperceptron":
        for a in alphas:
            rep = run_alpha_perceptron(S, a, max_epochs=config.iterations)
            key = _fmt_alpha(a)
            summary["margin_attained_at"][key] = None
            summary.setdefault("perceptron", {})[key] = {
                "nonzero_updates": rep.nonzero_updates, "epochs": rep.epochs,
                "terminated": rep.terminated,
                "final_margin": metrics.margin(rep.final_model, S).margin if np.any(rep.final_model) else None,
                "update_bound": metrics.perceptron_update_bound(gamma, a) if a < gamma else None,
            }
        return summary

    tuned: dict = {}
    traces = {}
    for a in alphas:
        key = _fmt_alpha(a)
        eta = _step_for(config, S, gamma, a, tuned)
        summary["step_sizes"][key] = eta
        runs = []
        n_trials = config.trials if config.algorithm == "asgd" else 1
        for k in range(n_trials):
            tr = _train(config, S, a, eta, config.iterations, k, initial_model(config, S, k))
            suffix = f"_trial={k}" if config.algorithm == "asgd" and n_trials > 1 else ""
            trace_to_csv(tr, out / f"trace_alpha={key}{suffix}.csv")
            runs.append(tr)
        if len(runs) > 1:
            names = ("empirical_risk", "robust_risk", "truncated_margin")
            aggregate_to_csv(runs, names, out / f"aggregate_alpha={key}.csv")
            aggregate_to_csv(runs, names, out / f"aggregate_averaged_alpha={key}.csv", averaged=True)
        first = runs[0]
        summary["margin_attained_at"][key] = (
            [r.first_margin_at_least(a) for r in runs] if len(runs) > 1 else first.first_margin_at_least(a))
        try:
            summary["rate_slopes"][key] = metrics.rate_slope(first, "robust_risk", max(1, config.iterations // 50),
                                                             config.iterations)
        except ValueError:
            summary["rate_slopes"][key] = None
        b = {}
        T = config.iterations
        if a < gamma:
            if T >= 2:
                b["gd_bound_at_T"] = metrics.gd_bound(T, gamma, a, eta)
            b["sgd_bound_at_T"] = metrics.sgd_bound(T, gamma, a, eta, consts.get("delta", 0.1))
            b["gd_step_cap"] = metrics.gd_step_cap(gamma, a)
            b["perceptron_update_bound"] = metrics.perceptron_update_bound(gamma, a)
        b["sgd_step_cap"] = metrics.sgd_step_cap(a)
        b["margin_trigger_level"] = metrics.margin_trigger_level(S.n)
        summary["bounds"][key] = {k: _num(v) for k, v in b.items()}
        traces[f"alpha={key}"] = first
    if tuned:
        summary["tuning"] = {_fmt_alpha(a): [[e, _num(s)] for e, s in r.grid] for a, r in tuned.items()}
    if config.svg:
        _charts(out, "", traces, ("empirical_risk", "truncated_margin", "robust_risk"))
    return summary
