"""Reward-free observer: burn-in truncation plus suffix imitation by ERM.

The observer sees only (context, chosen arm). It discards a burn-in prefix,
then fits a linear scoring rule by minimizing the regularized conditional
softmax loss over the suffix, as a convex surrogate for the 0-1 imitation
objective; the 0-1 risk itself is reported by empirical_imitation_risk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .environment import ContextSet
from .learners import InteractionRecord
from .linalg import argmax_arm, softmax_nll_grad_packed

DEFAULT_SWEEP_GRID: tuple[float, ...] = (
    0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99,
)


class InvalidSchedule(ValueError):
    """Burn-in schedule parameters are out of range."""


class EmptySuffix(ValueError):
    """Burn-in left no samples to fit or evaluate on."""


@dataclass(frozen=True)
class BurnInSchedule:
    """How much prefix to discard: nothing, N^alpha rounds, or a fixed count."""

    kind: str = "rule_based"  # "naive" | "rule_based" | "fixed" | "oracle_sweep"
    alpha: float = 0.9
    t_fixed: int = 0
    sweep_grid: tuple[float, ...] = DEFAULT_SWEEP_GRID

    def __post_init__(self):
        if self.kind not in ("naive", "rule_based", "fixed", "oracle_sweep"):
            raise InvalidSchedule(f"unknown schedule kind {self.kind!r}")


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings for the suffix fit.

    step_rule "lbfgs" is the default solver; "backtracking" (Armijo 1e-4,
    shrink 0.5) and "constant" run plain first-order descent and expose an
    iteration trace. All three are full-batch and deterministic.
    """

    l2: float = 1e-4
    max_iters: int = 5000
    grad_tol: float = 1e-6
    step_rule: str = "lbfgs"  # "lbfgs" | "backtracking" | "constant"
    step_size: float = 1.0

    def __post_init__(self):
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.step_rule not in ("lbfgs", "backtracking", "constant"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")


@dataclass(frozen=True, eq=False)
class ObserverPolicy:
    """Fitted parameter vector; the decision rule is argmax_arm(theta_tilde, .)."""

    theta_tilde: np.ndarray
    fit_meta: dict = field(default_factory=dict)

    def act(self, c: ContextSet) -> int:
        return argmax_arm(self.theta_tilde, c)


@dataclass(frozen=True, eq=False)
class ObserverRecord:
    """What the observer is allowed to see: no reward, no optimal arm."""

    round: int
    context: ContextSet
    chosen_arm: int


def burn_in_length(s: BurnInSchedule, N: int) -> int:
    """Burn-in rounds T for horizon N, always in [0, N-1]."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if s.kind == "naive":
        return 0
    if s.kind == "rule_based":
        if not 0.0 <= s.alpha <= 1.0:
            raise InvalidSchedule(f"rule_based alpha must be in [0,1], got {s.alpha}")
        return min(int(math.floor(N**s.alpha)), N - 1)
    if s.kind == "fixed":
        return min(max(s.t_fixed, 0), N - 1)
    raise InvalidSchedule("oracle_sweep has no single burn-in length; sweep the grid")


def project_observer_view(log: Sequence[InteractionRecord]) -> list[ObserverRecord]:
    """Strip rewards and optimal arms; the output type cannot represent them."""
    return [ObserverRecord(r.round, r.context, r.chosen_arm) for r in log]


def _pack_view(view: Sequence[ObserverRecord]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Group records by arm count and stack features: [(feats [n,K,d], labels)]."""
    sizes = np.array([rec.context.n_arms for rec in view])
    groups = []
    for k in np.unique(sizes):
        idx = np.nonzero(sizes == k)[0]
        feats = np.stack([view[i].context.features for i in idx])
        labels = np.array([view[i].chosen_arm for i in idx])
        groups.append((feats, labels))
    return groups


def _objective(groups, n_total: int, l2: float) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    def value_and_grad(theta: np.ndarray) -> tuple[float, np.ndarray]:
        loss = 0.0
        grad = np.zeros_like(theta)
        for feats, labels in groups:
            g_loss, g_grad = softmax_nll_grad_packed(theta, feats, labels, 0.0)
            w = len(labels) / n_total
            loss += g_loss * w
            grad += g_grad * w
        return loss + 0.5 * l2 * float(theta @ theta), grad + l2 * theta

    return value_and_grad


def _descent(value_and_grad, theta0, cfg: FitConfig, record_trace: bool):
    """Full-batch first-order descent, constant step or Armijo backtracking."""
    theta = theta0
    loss, grad = value_and_grad(theta)
    trace = [loss]
    step = cfg.step_size
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= cfg.grad_tol:
            iters -= 1
            break
        if cfg.step_rule == "constant":
            theta = theta - cfg.step_size * grad
            loss, grad = value_and_grad(theta)
        else:
            step = min(step * 2.0, 1e8)  # let the step re-grow between rounds
            while True:
                candidate = theta - step * grad
                cand_loss, cand_grad = value_and_grad(candidate)
                if cand_loss <= loss - 1e-4 * step * grad_norm**2 or step < 1e-18:
                    break
                step *= 0.5
            theta, loss, grad = candidate, cand_loss, cand_grad
        if record_trace:
            trace.append(loss)
    return theta, loss, grad, iters, trace


def fit_observer(
    view: Sequence[ObserverRecord],
    T: int,
    cfg: FitConfig | None = None,
    record_trace: bool = False,
) -> ObserverPolicy:
    """Fit the linear scoring rule on records after the first T rounds."""
    cfg = cfg or FitConfig()
    suffix = list(view[T:])
    if not suffix:
        raise EmptySuffix(f"burn-in T={T} leaves no suffix (N={len(view)})")
    d = suffix[0].context.features.shape[1]
    groups = _pack_view(suffix)
    value_and_grad = _objective(groups, len(suffix), cfg.l2)
    theta0 = np.zeros(d)

    trace: list[float] = []
    if cfg.step_rule == "lbfgs":
        if record_trace:
            trace.append(value_and_grad(theta0)[0])
            cb = lambda xk: trace.append(value_and_grad(xk)[0])
        else:
            cb = None
        res = minimize(
            value_and_grad,
            theta0,
            jac=True,
            method="L-BFGS-B",
            callback=cb,
            options={"maxiter": cfg.max_iters, "gtol": cfg.grad_tol, "ftol": 0.0},
        )
        theta, loss = res.x, float(res.fun)
        grad = value_and_grad(theta)[1]
        iters = int(res.nit)
    else:
        theta, loss, grad, iters, trace = _descent(
            value_and_grad, theta0, cfg, record_trace
        )

    grad_norm = float(np.linalg.norm(grad))
    meta = {
        "iterations": iters,
        "final_loss": loss,
        "converged": grad_norm <= cfg.grad_tol,
        "grad_norm": grad_norm,
        "T_used": T,
        "L_used": len(suffix),
    }
    if record_trace:
        meta["loss_trace"] = trace
    return ObserverPolicy(theta_tilde=theta, fit_meta=meta)


def empirical_imitation_risk(
    theta: np.ndarray, view: Sequence[ObserverRecord], T: int
) -> float:
    """Fraction of post-burn-in rounds where argmax(theta) disagrees with the log."""
    suffix = view[T:]
    if len(suffix) == 0:
        raise EmptySuffix(f"burn-in T={T} leaves nothing to evaluate")
    mistakes = sum(argmax_arm(theta, rec.context) != rec.chosen_arm for rec in suffix)
    return mistakes / len(suffix)


@dataclass(frozen=True, eq=False)
class SweepPoint:
    alpha: float
    T: int
    L: int
    metric: float
    policy: ObserverPolicy


def oracle_sweep(
    view: Sequence[ObserverRecord],
    grid: Sequence[float],
    cfg: FitConfig,
    eval_fn: Callable[[np.ndarray], float],
) -> tuple[float, list[SweepPoint]]:
    """Fit one policy per burn-in exponent and pick the best in hindsight.

    alpha = 0 means no burn-in; other values use T = floor(N^alpha). Returns
    the argmin alpha under eval_fn plus the full table (ties to the smaller
    alpha).
    """
    if len(grid) == 0:
        raise ValueError("sweep grid must be non-empty")
    N = len(view)
    points: list[SweepPoint] = []
    for alpha in grid:
        if not 0.0 <= alpha <= 1.0:
            raise InvalidSchedule(f"sweep alpha must be in [0,1], got {alpha}")
        T = 0 if alpha == 0.0 else min(int(math.floor(N**alpha)), N - 1)
        policy = fit_observer(view, T, cfg)
        metric = float(eval_fn(policy.theta_tilde))
        points.append(SweepPoint(alpha=alpha, T=T, L=N - T, metric=metric, policy=policy))
    best = min(points, key=lambda p: (p.metric, p.alpha))
    return best.alpha, points
