"""Reproducible experiment driver: seed fan-out, the three observer strategies
against the learner baseline, burn-in sweeps, rate studies, diagnostics, and
persistence of results (CSV + manifest).

Determinism contract: identical config and seeds produce byte-identical
results.csv except for the wall_ms column. Seeds run in a bounded worker
pool (capped by ICB_LAB_THREADS); rows are sorted before writing so
completion order never matters.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .environment import RngStream, make_instance
from .learners import LearnerConfig, run_episode_with_state
from .metrics import (
    DiagnosticsReport,
    cumulative_regret,
    direction_error,
    clean_risk,
    late_policy_generalization,
    make_evaluation_set,
    massart_transfer_check,
    mean_ci,
    predictability_diagnostic,
    predictive_regret,
    random_massart_instance,
)
from .observer import (
    BurnInSchedule,
    FitConfig,
    oracle_sweep,
    project_observer_view,
)

RESULT_COLUMNS = (
    "experiment", "seed", "algorithm", "d", "K", "N", "alpha", "T", "L",
    "pred_regret", "dir_error", "clean_risk", "learner_regret", "wall_ms",
)
DIAGNOSTIC_COLUMNS = ("experiment", "seed", "algorithm", "series", "position", "value")

LEARNER_ALPHA_SENTINEL = -1.0  # alpha column value for learner baseline rows

EXPERIMENTS = (
    "burnin_sweep", "learner_vs_observer", "rate_study", "diagnostics", "transfer_check",
)


class InsufficientGrid(ValueError):
    """A rate study needs >= 2 horizons spanning >= 1.5 decades."""


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 50
    K: int = 200
    N: int = 10000
    sigma: float = 0.1
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    schedule: BurnInSchedule = field(default_factory=BurnInSchedule)
    fit: FitConfig = field(default_factory=FitConfig)
    seeds: tuple[int, ...] = tuple(range(1, 21))
    eval_size: int = 5000
    output_dir: str | None = None
    experiment: str = "burnin_sweep"
    n_grid: tuple[int, ...] = (500, 1000, 2000, 5000, 10000)
    rate_grid: tuple[int, ...] = (500, 1581, 5000, 15811)
    sweep_metric: str = "dir_error"  # "dir_error" | "pred_regret"
    normalize: str = "cap"
    diag_bins: int = 10
    diag_split: float = 0.8
    diag_tail_frac: float = 0.3
    diag_window: int | None = None  # None -> max(50, N // 40)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; choose one of {EXPERIMENTS}"
            )
        if self.sweep_metric not in ("dir_error", "pred_regret"):
            raise ValueError(f"unknown sweep_metric {self.sweep_metric!r}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")

    def resolve_diag_window(self) -> int:
        return self.diag_window if self.diag_window is not None else max(50, self.N // 40)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    seed: int
    algorithm: str
    d: int
    K: int
    N: int
    alpha: float
    T: int
    L: int
    pred_regret: float
    dir_error: float
    clean_risk: float
    learner_regret: float
    wall_ms: float


@dataclass(frozen=True)
class DiagnosticRow:
    experiment: str
    seed: int
    algorithm: str
    series: str
    position: float
    value: float


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run's deterministic outputs."""

    experiment: str
    config: dict
    code_version: str
    seed_streams: dict
    created: str

    @staticmethod
    def for_config(cfg: ExperimentConfig) -> "RunManifest":
        streams = {
            str(seed): {
                purpose: RngStream(seed).split(purpose).stream_id
                for purpose in ("theta", "episode", "eval", "diag_split")
            }
            for seed in cfg.seeds
        }
        return RunManifest(
            experiment=cfg.experiment,
            config=asdict(cfg),
            code_version=__version__,
            seed_streams=streams,
            created=datetime.now(timezone.utc).isoformat(),
        )


def max_workers() -> int:
    env = os.environ.get("ICB_LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map_seeds(task_fn, tasks: list, workers: int | None = None) -> list:
    """Run per-seed tasks, in-process when only one worker is available."""
    workers = workers or max_workers()
    workers = min(workers, len(tasks))
    if workers <= 1 or len(tasks) <= 1:
        return [task_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, tasks))


def _safe_direction_error(theta, theta_star) -> float:
    if np.linalg.norm(theta) < 1e-15:
        return 2.0  # no direction at all: report the worst case
    return direction_error(theta, theta_star)


# ---------------------------------------------------------------------------
# Per-seed cores (module-level so they pickle into the worker pool)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _SweepOutcome:
    seed: int
    N: int
    learner_regret: float
    learner_metrics: dict
    points: list  # per-alpha dicts with metrics and timing


def _effective_grid(cfg: ExperimentConfig) -> tuple[float, ...]:
    grid = set(cfg.schedule.sweep_grid)
    grid.add(0.0)  # naive strategy
    grid.add(cfg.schedule.alpha)  # rule-based strategy
    return tuple(sorted(grid))


def _seed_sweep_task(args: tuple[ExperimentConfig, int, int]) -> _SweepOutcome:
    """One seed: run the episode, fit every burn-in exponent, score everything."""
    cfg, seed, N = args
    inst = make_instance(cfg.d, cfg.K, cfg.sigma, seed, cfg.normalize)
    base = RngStream(seed)
    t0 = time.perf_counter()
    records, state = run_episode_with_state(inst, cfg.learner, N, base.split("episode"))
    episode_ms = (time.perf_counter() - t0) * 1e3
    view = project_observer_view(records)
    eval_set = make_evaluation_set(inst, cfg.eval_size, base.split("eval"))
    learner_regret = float(cumulative_regret(records, inst)[-1])

    def eval_regret(theta):
        return predictive_regret(theta, inst, eval_set)

    grid = _effective_grid(cfg)
    t_sweep = time.perf_counter()
    _, points = oracle_sweep(view, grid, cfg.fit, eval_regret)
    sweep_ms = (time.perf_counter() - t_sweep) * 1e3

    per_alpha = []
    for p in points:
        theta = p.policy.theta_tilde
        per_alpha.append(
            {
                "alpha": p.alpha,
                "T": p.T,
                "L": p.L,
                "pred_regret": p.metric,
                "dir_error": _safe_direction_error(theta, inst.theta_star),
                "clean_risk": clean_risk(theta, inst, eval_set),
                "wall_ms": sweep_ms / len(points),
            }
        )
    learner_metrics = {
        "pred_regret": predictive_regret(state.theta_hat, inst, eval_set),
        "dir_error": _safe_direction_error(state.theta_hat, inst.theta_star),
        "clean_risk": clean_risk(state.theta_hat, inst, eval_set),
        "wall_ms": episode_ms,
    }
    return _SweepOutcome(
        seed=seed,
        N=N,
        learner_regret=learner_regret,
        learner_metrics=learner_metrics,
        points=per_alpha,
    )


def _strategy_rows(cfg: ExperimentConfig, out: _SweepOutcome, experiment: str) -> list[ResultRow]:
    """Learner baseline plus naive / rule-based / oracle observer rows."""
    common = dict(
        experiment=experiment, seed=out.seed, d=cfg.d, K=cfg.K, N=out.N,
        learner_regret=out.learner_regret,
    )
    rows = [
        ResultRow(
            algorithm=cfg.learner.algorithm,
            alpha=LEARNER_ALPHA_SENTINEL, T=0, L=0,
            pred_regret=out.learner_metrics["pred_regret"],
            dir_error=out.learner_metrics["dir_error"],
            clean_risk=out.learner_metrics["clean_risk"],
            wall_ms=out.learner_metrics["wall_ms"],
            **common,
        )
    ]
    by_alpha = {p["alpha"]: p for p in out.points}
    for name, point in (
        ("naive", by_alpha[0.0]),
        ("rule_based", by_alpha[cfg.schedule.alpha]),
        ("oracle", min(out.points, key=lambda p: (p[cfg.sweep_metric], p["alpha"]))),
    ):
        rows.append(
            ResultRow(
                algorithm=name, alpha=point["alpha"], T=point["T"], L=point["L"],
                pred_regret=point["pred_regret"], dir_error=point["dir_error"],
                clean_risk=point["clean_risk"], wall_ms=point["wall_ms"],
                **common,
            )
        )
    return rows


def sort_rows(rows: list[ResultRow]) -> list[ResultRow]:
    return sorted(
        rows, key=lambda r: (r.experiment, r.algorithm, r.N, r.alpha, r.T, r.seed)
    )


def run_burnin_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """One episode per seed, one observer fit per burn-in exponent."""
    tasks = [(cfg, seed, cfg.N) for seed in cfg.seeds]
    outcomes = _map_seeds(_seed_sweep_task, tasks)
    rows = []
    for out in outcomes:
        for p in out.points:
            rows.append(
                ResultRow(
                    experiment="burnin_sweep", seed=out.seed,
                    algorithm=cfg.learner.algorithm,
                    d=cfg.d, K=cfg.K, N=out.N,
                    alpha=p["alpha"], T=p["T"], L=p["L"],
                    pred_regret=p["pred_regret"], dir_error=p["dir_error"],
                    clean_risk=p["clean_risk"],
                    learner_regret=out.learner_regret, wall_ms=p["wall_ms"],
                )
            )
    return sort_rows(rows)


def run_learner_vs_observer(
    cfg: ExperimentConfig, N_grid: Sequence[int] | None = None
) -> list[ResultRow]:
    """Learner baseline vs naive / rule-based / oracle observers across horizons."""
    grid = tuple(N_grid) if N_grid is not None else cfg.n_grid
    tasks = [(cfg, seed, N) for N in grid for seed in cfg.seeds]
    outcomes = _map_seeds(_seed_sweep_task, tasks)
    rows = []
    for out in outcomes:
        rows.extend(_strategy_rows(cfg, out, "learner_vs_observer"))
    return sort_rows(rows)


def fit_loglog_slope(ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(n)."""
    ns = np.asarray(ns, dtype=float)
    vals = np.maximum(np.asarray(values, dtype=float), 1e-300)
    if len(ns) < 2:
        raise InsufficientGrid("slope fit needs at least 2 points")
    return float(np.polyfit(np.log(ns), np.log(vals), 1)[0])


@dataclass(frozen=True)
class RateStudyResult:
    slopes: dict[str, float]  # per strategy label
    rows: list[ResultRow]


def run_rate_study(
    cfg: ExperimentConfig, N_grid: Sequence[int] | None = None
) -> RateStudyResult:
    """Seed-mean predictive regret per horizon and its log-log slope, for the
    oracle / rule-based / naive observers and the learner baseline.

    Oracle points are selected by predictive regret here, since that is the
    quantity whose rate is being measured.
    """
    grid = tuple(sorted(set(N_grid if N_grid is not None else cfg.rate_grid)))
    if len(grid) < 2:
        raise InsufficientGrid("rate study needs at least 2 horizons")
    # the canonical grid {500, 1581, 5000, 15811} spans 1.4999952 decades,
    # so the check needs a little slack below 1.5
    span_decades = math.log10(grid[-1] / grid[0])
    if span_decades < 1.5 - 1e-3:
        raise InsufficientGrid(
            f"rate study needs >= 1.5 decades of horizon, got {span_decades:.2f}"
        )
    rate_cfg = replace(cfg, sweep_metric="pred_regret")
    tasks = [(rate_cfg, seed, N) for N in grid for seed in rate_cfg.seeds]
    outcomes = _map_seeds(_seed_sweep_task, tasks)
    rows = []
    for out in outcomes:
        rows.extend(_strategy_rows(rate_cfg, out, "rate_study"))
    rows = sort_rows(rows)

    slopes = {}
    for label in ("oracle", "rule_based", "naive", cfg.learner.algorithm):
        means = []
        for N in grid:
            vals = [r.pred_regret for r in rows if r.algorithm == label and r.N == N]
            means.append(float(np.mean(vals)))
        slopes[label] = fit_loglog_slope(grid, means)
    return RateStudyResult(slopes=slopes, rows=rows)


# ---------------------------------------------------------------------------
# Diagnostics experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _DiagOutcome:
    seed: int
    bin_accuracies: tuple[float, ...]
    spearman_r: float
    early_late_gap: float
    agreement_curve: tuple[tuple[int, float], ...]
    late_early_gap: float


def _seed_diag_task(args: tuple[ExperimentConfig, int]) -> _DiagOutcome:
    cfg, seed = args
    inst = make_instance(cfg.d, cfg.K, cfg.sigma, seed, cfg.normalize)
    base = RngStream(seed)
    records, _ = run_episode_with_state(inst, cfg.learner, cfg.N, base.split("episode"))
    view = project_observer_view(records)
    pred = predictability_diagnostic(
        view, cfg.diag_bins, cfg.diag_split, cfg.fit, base.split("diag_split")
    )
    late = late_policy_generalization(
        view, cfg.diag_tail_frac, cfg.resolve_diag_window(), cfg.fit
    )
    return _DiagOutcome(
        seed=seed,
        bin_accuracies=pred.bin_accuracies,
        spearman_r=pred.spearman_r,
        early_late_gap=pred.early_late_gap,
        agreement_curve=late.agreement_curve,
        late_early_gap=late.late_early_gap,
    )


@dataclass(frozen=True, eq=False)
class DiagnosticsRunResult:
    report: DiagnosticsReport
    per_seed: list[_DiagOutcome]
    rows: list[DiagnosticRow]


def run_diagnostics(cfg: ExperimentConfig) -> DiagnosticsRunResult:
    """Per-bin predictability and late-policy generalization, aggregated over seeds."""
    outcomes = _map_seeds(_seed_diag_task, [(cfg, seed) for seed in cfg.seeds])
    algo = cfg.learner.algorithm
    rows: list[DiagnosticRow] = []
    for out in outcomes:
        for j, acc in enumerate(out.bin_accuracies, start=1):
            rows.append(DiagnosticRow("diagnostics", out.seed, algo, "bin_accuracy", float(j), acc))
        for start, agree in out.agreement_curve:
            rows.append(DiagnosticRow("diagnostics", out.seed, algo, "agreement", float(start), agree))
        rows.append(DiagnosticRow("diagnostics", out.seed, algo, "spearman_r", 0.0, out.spearman_r))
        rows.append(DiagnosticRow("diagnostics", out.seed, algo, "early_late_gap", 0.0, out.early_late_gap))
        rows.append(
            DiagnosticRow("diagnostics", out.seed, algo, "late_early_agreement_gap", 0.0, out.late_early_gap)
        )
    rows.sort(key=lambda r: (r.series, r.position, r.seed))

    bins = np.array([out.bin_accuracies for out in outcomes])
    curves = np.array([[a for _, a in out.agreement_curve] for out in outcomes])
    starts = [s for s, _ in outcomes[0].agreement_curve]
    report = DiagnosticsReport(
        bin_accuracies=tuple(bins.mean(axis=0)),
        spearman_r=float(np.mean([o.spearman_r for o in outcomes])),
        early_late_gap=mean_ci([o.early_late_gap for o in outcomes]),
        agreement_curve=tuple(zip(starts, curves.mean(axis=0))),
        late_early_agreement_gap=mean_ci([o.late_early_gap for o in outcomes]),
    )
    return DiagnosticsRunResult(report=report, per_seed=outcomes, rows=rows)


# ---------------------------------------------------------------------------
# Transfer-check experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransferCheckResult:
    instances: int
    etas: tuple[float, ...]
    checks: int
    holds: bool
    failures: tuple[str, ...]


def run_transfer_check(
    n_instances: int = 100,
    etas: Sequence[float] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.49),
    seed: int = 0,
    slack: float = 1e-12,
) -> TransferCheckResult:
    """Brute-force the noisy-label transfer inequality on random small instances."""
    gen = np.random.default_rng(seed)
    failures = []
    checks = 0
    for i in range(n_instances):
        inst = random_massart_instance(gen)
        for eta in etas:
            checks += 1
            report = massart_transfer_check(eta, inst, slack=slack)
            if not report.holds:
                failures.append(f"instance {i} eta={eta}")
    return TransferCheckResult(
        instances=n_instances,
        etas=tuple(etas),
        checks=checks,
        holds=not failures,
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _format_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _write_csv(path: Path, columns: tuple[str, ...], rows: list) -> None:
    # LF endings and '.' decimals regardless of platform/locale
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_value(getattr(row, c)) for c in columns])


def summarize(rows: list[ResultRow]) -> list[dict]:
    """Seed means and 95% CI half-widths per group.

    Burn-in sweeps group by exponent (it is the x-axis there); the other
    experiments group by strategy and horizon, reporting the mean exponent.
    """
    groups: dict[tuple, list[ResultRow]] = {}
    for r in rows:
        key = (r.experiment, r.algorithm, r.d, r.K, r.N)
        if r.experiment == "burnin_sweep":
            key = key + (r.alpha,)
        groups.setdefault(key, []).append(r)
    out = []
    for key in sorted(groups):
        members = groups[key]
        entry = {
            "experiment": members[0].experiment,
            "algorithm": members[0].algorithm,
            "d": members[0].d,
            "K": members[0].K,
            "N": members[0].N,
            "alpha": float(np.mean([m.alpha for m in members])),
            "n_seeds": len(members),
        }
        for metric in ("pred_regret", "dir_error", "clean_risk", "learner_regret"):
            ci = mean_ci([getattr(m, metric) for m in members])
            entry[f"{metric}_mean"] = ci.mean
            entry[f"{metric}_ci"] = ci.half_width
        out.append(entry)
    return out


SUMMARY_COLUMNS = (
    "experiment", "algorithm", "d", "K", "N", "alpha", "n_seeds",
    "pred_regret_mean", "pred_regret_ci", "dir_error_mean", "dir_error_ci",
    "clean_risk_mean", "clean_risk_ci", "learner_regret_mean", "learner_regret_ci",
)


def write_manifest(manifest: RunManifest, output_dir: str | Path) -> Path:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def emit_results(
    rows: list[ResultRow],
    manifest: RunManifest,
    output_dir: str | Path,
    diagnostic_rows: list[DiagnosticRow] | None = None,
) -> dict[str, Path]:
    """Write manifest.json, results.csv, summary.csv (and diagnostics.csv)."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"manifest": write_manifest(manifest, out)}

    results_path = out / "results.csv"
    _write_csv(results_path, RESULT_COLUMNS, rows)
    paths["results"] = results_path

    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for entry in summarize(rows):
            writer.writerow([_format_value(entry[c]) for c in SUMMARY_COLUMNS])
    paths["summary"] = summary_path

    if diagnostic_rows is not None:
        diag_path = out / "diagnostics.csv"
        _write_csv(diag_path, DIAGNOSTIC_COLUMNS, diagnostic_rows)
        paths["diagnostics"] = diag_path
    return paths


_ROW_TYPES = {
    "experiment": str, "seed": int, "algorithm": str, "d": int, "K": int,
    "N": int, "alpha": float, "T": int, "L": int, "pred_regret": float,
    "dir_error": float, "clean_risk": float, "learner_regret": float,
    "wall_ms": float,
}


def read_results(path: str | Path) -> list[ResultRow]:
    """Parse a results.csv back into rows (round-trips emit_results exactly)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise ValueError(f"unexpected results.csv header in {path}")
        return [
            ResultRow(**{k: _ROW_TYPES[k](v) for k, v in raw.items()})
            for raw in reader
        ]
