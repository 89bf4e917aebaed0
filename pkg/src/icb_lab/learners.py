"""Reward-aware online agents (LinUCB, LinTS) that generate interaction logs.

Both maintain the same ridge statistics; they differ only in how a round's
arm is scored. The inverse design matrix is kept incrementally via rank-one
updates, with a periodic drift audit against direct inversion in debug runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import (
    ContextSet,
    ProblemInstance,
    RngStream,
    optimal_arm,
    realize_reward,
    sample_context,
)
from .linalg import argmax_arm, cholesky, sherman_morrison_update

AUDIT_EVERY = 1000  # rounds between inverse-drift audits (debug builds only)


@dataclass(frozen=True)
class LearnerConfig:
    """Algorithm choice and its exploration knobs."""

    algorithm: str = "lints"  # "linucb" | "lints"
    alpha_ucb: float = 0.1
    nu: float | None = None  # None -> sigma^2 * d at episode start
    ridge: float = 1.0

    def __post_init__(self):
        if self.algorithm not in ("linucb", "lints"):
            raise ValueError(f"unknown learner algorithm {self.algorithm!r}")
        if self.algorithm == "linucb" and self.alpha_ucb <= 0:
            raise ValueError("alpha_ucb must be > 0 for linucb")
        if self.algorithm == "lints" and self.nu is not None and self.nu <= 0:
            raise ValueError("nu must be > 0 for lints")

    def resolve_nu(self, inst: ProblemInstance) -> float:
        return self.nu if self.nu is not None else inst.sigma**2 * inst.d


@dataclass(frozen=True, eq=False)
class LearnerState:
    """Ridge statistics: V = ridge*I + sum x x^T, b = sum r*x, theta_hat = V^-1 b."""

    V: np.ndarray
    V_inv: np.ndarray
    b: np.ndarray
    theta_hat: np.ndarray
    t: int
    ridge: float


@dataclass(frozen=True, eq=False)
class InteractionRecord:
    """One logged round. reward and optimal_arm exist for evaluation only;
    the observer consumes a projected view that cannot carry them."""

    round: int
    context: ContextSet
    chosen_arm: int
    reward: float | None = None
    optimal_arm: int | None = None


def init_state(d: int, ridge: float = 1.0) -> LearnerState:
    if ridge <= 0:
        raise ValueError("ridge must be > 0")
    return LearnerState(
        V=ridge * np.eye(d),
        V_inv=np.eye(d) / ridge,
        b=np.zeros(d),
        theta_hat=np.zeros(d),
        t=0,
        ridge=ridge,
    )


def linucb_select(state: LearnerState, c: ContextSet, alpha_ucb: float) -> int:
    """Argmax of <x, theta_hat> + alpha_ucb * sqrt(x^T V^-1 x), lowest index wins ties."""
    mean = c.features @ state.theta_hat
    bonus = np.sqrt(np.einsum("ad,de,ae->a", c.features, state.V_inv, c.features))
    return int(np.argmax(mean + alpha_ucb * bonus))


def lints_select(state: LearnerState, c: ContextSet, nu: float, rng: RngStream) -> int:
    """Sample theta from N(theta_hat, nu * V^-1) and play its argmax arm."""
    lower = cholesky(state.V_inv)
    draw = state.theta_hat + np.sqrt(nu) * (lower @ rng.gen.standard_normal(len(state.b)))
    return argmax_arm(draw, c)


def learner_update(state: LearnerState, x: np.ndarray, r: float) -> LearnerState:
    """Fold one (feature, reward) observation into the ridge statistics."""
    x = np.asarray(x, dtype=float)
    V = state.V + np.outer(x, x)
    V_inv = sherman_morrison_update(state.V_inv, x)
    b = state.b + r * x
    theta_hat = V_inv @ b
    t = state.t + 1
    if __debug__ and t % AUDIT_EVERY == 0:
        drift = np.linalg.norm(V_inv @ V - np.eye(len(b))) / np.sqrt(len(b))
        if drift > 1e-8:
            raise ArithmeticError(f"incremental inverse drifted: {drift:.3e}")
    return LearnerState(V=V, V_inv=V_inv, b=b, theta_hat=theta_hat, t=t, ridge=state.ridge)


def select_arm(state: LearnerState, c: ContextSet, cfg: LearnerConfig, nu: float, rng: RngStream) -> int:
    if cfg.algorithm == "linucb":
        return linucb_select(state, c, cfg.alpha_ucb)
    return lints_select(state, c, nu, rng)


def run_episode_with_state(
    inst: ProblemInstance, cfg: LearnerConfig, N: int, rng: RngStream
) -> tuple[list[InteractionRecord], LearnerState]:
    """Play N rounds and return the full log plus the final learner state.

    Per round: sample context, select, realize reward, update. Uses three
    child streams ("context", "reward", "select") so the pieces never share
    random state.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    ctx_rng = rng.split("context")
    reward_rng = rng.split("reward")
    select_rng = rng.split("select")
    nu = cfg.resolve_nu(inst)
    state = init_state(inst.d, cfg.ridge)
    records: list[InteractionRecord] = []
    for t in range(1, N + 1):
        c = sample_context(inst, t, ctx_rng)
        arm = select_arm(state, c, cfg, nu, select_rng)
        x = c.features[arm]
        r = realize_reward(inst, x, reward_rng)
        state = learner_update(state, x, r)
        records.append(
            InteractionRecord(
                round=t,
                context=c,
                chosen_arm=arm,
                reward=r,
                optimal_arm=optimal_arm(inst, c),
            )
        )
    return records, state


def run_episode(
    inst: ProblemInstance, cfg: LearnerConfig, N: int, rng: RngStream
) -> list[InteractionRecord]:
    """Play N rounds and return the interaction log."""
    records, _ = run_episode_with_state(inst, cfg, N, rng)
    return records
