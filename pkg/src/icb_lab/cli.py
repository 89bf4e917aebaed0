"""Command-line entry points.

  icb-lab run --experiment <name> [--config file] [overrides] --out <dir>
  icb-lab verify

`run` writes manifest.json before any computation starts, then results.csv,
summary.csv and, for the diagnostics experiment, diagnostics.csv. `verify`
executes the fast invariant and transfer-check battery and exits 0 only if
every check passes.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .harness import (
    EXPERIMENTS,
    ExperimentConfig,
    RunManifest,
    emit_results,
    run_burnin_sweep,
    run_diagnostics,
    run_learner_vs_observer,
    run_rate_study,
    run_transfer_check,
    write_manifest,
)
from .learners import LearnerConfig
from .observer import BurnInSchedule, FitConfig, burn_in_length


def _parse_seeds(text: str) -> tuple[int, ...]:
    """Accept "1,2,3" or a range "1:20" (inclusive)."""
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(s) for s in text.split(",") if s.strip())


def _parse_grid(text: str, cast=float) -> tuple:
    return tuple(cast(s) for s in text.split(",") if s.strip())


def load_config_file(path: str | Path) -> ExperimentConfig:
    """Sectioned key=value config mirroring the module configs.

    Sections: [environment], [learner], [schedule], [fit], [harness].
    Any key may be omitted; command-line flags override file values.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")

    cfg = ExperimentConfig()
    env = parser["environment"] if parser.has_section("environment") else {}
    learner = parser["learner"] if parser.has_section("learner") else {}
    schedule = parser["schedule"] if parser.has_section("schedule") else {}
    fit = parser["fit"] if parser.has_section("fit") else {}
    harness = parser["harness"] if parser.has_section("harness") else {}

    learner_cfg = LearnerConfig(
        algorithm=learner.get("algorithm", cfg.learner.algorithm),
        alpha_ucb=float(learner.get("alpha_ucb", cfg.learner.alpha_ucb)),
        nu=float(learner["nu"]) if "nu" in learner else cfg.learner.nu,
        ridge=float(learner.get("ridge", cfg.learner.ridge)),
    )
    schedule_cfg = BurnInSchedule(
        kind=schedule.get("kind", cfg.schedule.kind),
        alpha=float(schedule.get("alpha", cfg.schedule.alpha)),
        t_fixed=int(schedule.get("t_fixed", cfg.schedule.t_fixed)),
        sweep_grid=_parse_grid(schedule["sweep_grid"])
        if "sweep_grid" in schedule
        else cfg.schedule.sweep_grid,
    )
    fit_cfg = FitConfig(
        l2=float(fit.get("lambda", cfg.fit.l2)),
        max_iters=int(fit.get("max_iters", cfg.fit.max_iters)),
        grad_tol=float(fit.get("grad_tol", cfg.fit.grad_tol)),
        step_rule=fit.get("step_rule", cfg.fit.step_rule),
        step_size=float(fit.get("step_size", cfg.fit.step_size)),
    )
    return replace(
        cfg,
        d=int(env.get("d", cfg.d)),
        K=int(env.get("k", env.get("K", cfg.K))),
        N=int(env.get("n", env.get("N", cfg.N))),
        sigma=float(env.get("sigma", cfg.sigma)),
        normalize=env.get("normalize", cfg.normalize),
        learner=learner_cfg,
        schedule=schedule_cfg,
        fit=fit_cfg,
        seeds=_parse_seeds(harness["seeds"]) if "seeds" in harness else cfg.seeds,
        eval_size=int(harness.get("eval_size", cfg.eval_size)),
        experiment=harness.get("experiment", cfg.experiment),
        output_dir=harness.get("out", cfg.output_dir),
        n_grid=_parse_grid(harness["n_grid"], int) if "n_grid" in harness else cfg.n_grid,
        rate_grid=_parse_grid(harness["rate_grid"], int)
        if "rate_grid" in harness
        else cfg.rate_grid,
        sweep_metric=harness.get("sweep_metric", cfg.sweep_metric),
    )


def apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    learner = cfg.learner
    if args.algorithm is not None:
        learner = replace(learner, algorithm=args.algorithm)
    if args.alpha_ucb is not None:
        learner = replace(learner, alpha_ucb=args.alpha_ucb)
    if args.nu is not None:
        learner = replace(learner, nu=args.nu)
    schedule = cfg.schedule
    if args.schedule is not None:
        schedule = replace(schedule, kind=args.schedule)
    if args.alpha is not None:
        schedule = replace(schedule, alpha=args.alpha)
    fit = cfg.fit
    if args.lam is not None:
        fit = replace(fit, l2=args.lam)
    updates = dict(learner=learner, schedule=schedule, fit=fit)
    for name, attr in (
        ("d", "d"), ("k", "K"), ("n", "N"), ("sigma", "sigma"),
        ("eval_size", "eval_size"), ("experiment", "experiment"), ("out", "output_dir"),
        ("sweep_metric", "sweep_metric"),
    ):
        value = getattr(args, name)
        if value is not None:
            updates[attr] = value
    if args.seeds is not None:
        updates["seeds"] = _parse_seeds(args.seeds)
    if args.n_grid is not None:
        updates["n_grid"] = _parse_grid(args.n_grid, int)
        updates["rate_grid"] = _parse_grid(args.n_grid, int)
    return replace(cfg, **updates)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icb-lab")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and persist its results")
    run.add_argument("--experiment", choices=EXPERIMENTS, default=None)
    run.add_argument("--config", default=None, help="sectioned key=value config file")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--d", type=int, default=None)
    run.add_argument("--k", type=int, default=None)
    run.add_argument("--n", type=int, default=None)
    run.add_argument("--sigma", type=float, default=None)
    run.add_argument("--algorithm", choices=("linucb", "lints"), default=None)
    run.add_argument("--alpha-ucb", dest="alpha_ucb", type=float, default=None)
    run.add_argument("--nu", type=float, default=None)
    run.add_argument("--schedule", choices=("naive", "rule_based", "fixed", "oracle_sweep"), default=None)
    run.add_argument("--alpha", type=float, default=None)
    run.add_argument("--lambda", dest="lam", type=float, default=None)
    run.add_argument("--seeds", default=None, help='"1,2,3" or "1:20"')
    run.add_argument("--eval-size", dest="eval_size", type=int, default=None)
    run.add_argument("--n-grid", dest="n_grid", default=None, help="comma-separated horizons")
    run.add_argument("--sweep-metric", dest="sweep_metric", choices=("dir_error", "pred_regret"), default=None)

    sub.add_parser("verify", help="run the invariant and transfer-check battery")
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config_file(args.config) if args.config else ExperimentConfig()
    cfg = apply_overrides(cfg, args)
    if cfg.output_dir is None:
        print("error: an output directory is required (--out or [harness] out)", file=sys.stderr)
        return 2
    out = Path(cfg.output_dir)
    manifest = RunManifest.for_config(cfg)
    write_manifest(manifest, out)  # before any computation, for post-mortems

    diagnostic_rows = None
    extras: dict = {}
    if cfg.experiment == "burnin_sweep":
        rows = run_burnin_sweep(cfg)
    elif cfg.experiment == "learner_vs_observer":
        rows = run_learner_vs_observer(cfg)
    elif cfg.experiment == "rate_study":
        result = run_rate_study(cfg)
        rows = result.rows
        extras["slopes"] = result.slopes
    elif cfg.experiment == "diagnostics":
        result = run_diagnostics(cfg)
        rows = []
        diagnostic_rows = result.rows
        extras["early_late_gap"] = asdict(result.report.early_late_gap)
        extras["late_early_agreement_gap"] = asdict(result.report.late_early_agreement_gap)
        extras["spearman_r"] = result.report.spearman_r
    else:  # transfer_check
        result = run_transfer_check()
        rows = []
        extras["transfer_check"] = {
            "checks": result.checks,
            "holds": result.holds,
            "failures": list(result.failures),
        }
        if not result.holds:
            print("transfer check FAILED", file=sys.stderr)

    paths = emit_results(rows, manifest, out, diagnostic_rows)
    if extras:
        with open(out / "extras.json", "w", encoding="utf-8") as fh:
            json.dump(extras, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"wrote {paths['results']}")
    if cfg.experiment == "transfer_check" and not extras["transfer_check"]["holds"]:
        return 1
    return 0


def _verify_checks() -> list[tuple[str, bool, str]]:
    from .environment import make_instance, sample_context, RngStream
    from .linalg import sherman_morrison_update, softmax_nll_and_grad
    from .metrics import clean_risk, make_evaluation_set, predictive_regret

    checks: list[tuple[str, bool, str]] = []

    # Burn-in arithmetic
    t = burn_in_length(BurnInSchedule(kind="rule_based", alpha=0.9), 10000)
    checks.append(("burn-in length floor(10000^0.9) == 3981", t == 3981, f"got {t}"))

    # Rank-one inverse updates against direct inversion
    gen = np.random.default_rng(11)
    d = 20
    A = np.eye(d)
    inv = np.eye(d)
    worst = 0.0
    for _ in range(100):
        x = gen.standard_normal(d) / np.sqrt(d)
        A = A + np.outer(x, x)
        inv = sherman_morrison_update(inv, x)
        direct = np.linalg.inv(A)
        worst = max(worst, np.linalg.norm(inv - direct) / np.linalg.norm(direct))
    checks.append(("incremental inverse matches direct (<= 1e-8)", worst <= 1e-8, f"max rel err {worst:.2e}"))

    # Softmax gradient against central finite differences
    inst = make_instance(6, 5, seed=3)
    ctxs = [sample_context(inst, t, RngStream(3).split("verify")) for t in range(40)]
    labels = [int(gen.integers(0, 5)) for _ in ctxs]
    worst = 0.0
    for trial in range(20):
        theta = gen.standard_normal(6)
        _, grad = softmax_nll_and_grad(theta, ctxs, labels, 1e-4)
        fd = np.empty_like(theta)
        h = 1e-5
        for i in range(len(theta)):
            up, dn = theta.copy(), theta.copy()
            up[i] += h
            dn[i] -= h
            fd[i] = (
                softmax_nll_and_grad(up, ctxs, labels, 1e-4)[0]
                - softmax_nll_and_grad(dn, ctxs, labels, 1e-4)[0]
            ) / (2 * h)
        worst = max(worst, np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-30))
    checks.append(("softmax gradient matches finite differences (<= 1e-6)", worst <= 1e-6, f"max rel err {worst:.2e}"))

    # Regret never exceeds twice the clean risk
    inst = make_instance(8, 6, seed=5)
    eval_set = make_evaluation_set(inst, 500, RngStream(5).split("eval"))
    violations = 0
    for _ in range(2000):
        theta = gen.standard_normal(8)
        if predictive_regret(theta, inst, eval_set) > 2.0 * clean_risk(theta, inst, eval_set) + 1e-12:
            violations += 1
    checks.append(("predictive regret <= 2 x clean risk", violations == 0, f"{violations} violations"))

    # Noisy-label transfer inequality, brute force
    result = run_transfer_check(n_instances=100)
    checks.append(
        (
            "noisy-label transfer inequality holds on random instances",
            result.holds,
            f"{result.checks} checks, {len(result.failures)} failures",
        )
    )
    return checks


def cmd_verify() -> int:
    checks = _verify_checks()
    failed = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name} ({detail})")
        failed += not ok
    return 1 if failed else 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_verify()


if __name__ == "__main__":
    sys.exit(main())
