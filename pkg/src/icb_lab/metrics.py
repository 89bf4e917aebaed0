"""Evaluation quantities: predictive regret, direction error, risks, the
bounded-noise transfer inequality checked by brute force, and the trajectory
diagnostics (per-bin predictability, late-policy generalization).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .environment import ContextSet, ProblemInstance, RngStream, sample_context
from .learners import InteractionRecord
from .linalg import spearman_rho
from .observer import FitConfig, ObserverRecord, empirical_imitation_risk, fit_observer


class ZeroVector(ValueError):
    """Direction is undefined for a (near-)zero vector."""


class InvalidEta(ValueError):
    """Label-noise level must be < 1/2 for the transfer inequality."""


class BinTooSmall(ValueError):
    """A diagnostic time bin has too few held-out samples."""


@dataclass(frozen=True)
class MeanCI:
    """Seed mean with a 95% normal-approximation confidence interval."""

    mean: float
    lo: float
    hi: float

    @property
    def half_width(self) -> float:
        return (self.hi - self.lo) / 2.0


def mean_ci(values: Sequence[float]) -> MeanCI:
    arr = np.asarray(values, dtype=float)
    m = float(arr.mean())
    if len(arr) < 2:
        return MeanCI(m, m, m)
    half = 1.96 * float(arr.std(ddof=1)) / math.sqrt(len(arr))
    return MeanCI(m, m - half, m + half)


@dataclass(eq=False)
class EvaluationSet:
    """Held-out i.i.d. contexts with pre-stacked features for fast scoring."""

    contexts: list[ContextSet]

    def __post_init__(self):
        if not self.contexts:
            raise ValueError("evaluation set must be non-empty")
        self._features = np.stack([c.features for c in self.contexts])  # [M,K,d]

    @property
    def size(self) -> int:
        return len(self.contexts)

    @property
    def features(self) -> np.ndarray:
        return self._features


def make_evaluation_set(inst: ProblemInstance, size: int, rng: RngStream) -> EvaluationSet:
    """Fresh contexts from a dedicated stream, disjoint from training episodes."""
    return EvaluationSet([sample_context(inst, i, rng) for i in range(size)])


def _choices(theta: np.ndarray, eval_set: EvaluationSet) -> np.ndarray:
    return np.argmax(eval_set.features @ np.asarray(theta, dtype=float), axis=1)


def predictive_regret(theta: np.ndarray, inst: ProblemInstance, eval_set: EvaluationSet) -> float:
    """Mean expected-reward gap between the optimal arm and theta's arm."""
    star_values = eval_set.features @ inst.theta_star  # [M,K]
    rows = np.arange(eval_set.size)
    best = star_values.max(axis=1)
    picked = star_values[rows, _choices(theta, eval_set)]
    return float((best - picked).mean())


def clean_risk(theta: np.ndarray, inst: ProblemInstance, eval_set: EvaluationSet) -> float:
    """Fraction of evaluation contexts where theta's arm is not the optimal arm."""
    star_values = eval_set.features @ inst.theta_star
    optimal = np.argmax(star_values, axis=1)
    return float((_choices(theta, eval_set) != optimal).mean())


def direction_error(theta_tilde: np.ndarray, theta_star: np.ndarray) -> float:
    """Euclidean distance between the unit-normalized vectors, in [0, 2]."""
    nt = np.linalg.norm(theta_tilde)
    ns = np.linalg.norm(theta_star)
    if nt < 1e-15 or ns < 1e-15:
        raise ZeroVector("direction error is undefined for a zero vector")
    return float(np.linalg.norm(theta_tilde / nt - theta_star / ns))


def windowed_error_rate(
    log: Sequence[InteractionRecord], window: tuple[int, int]
) -> float:
    """Fraction of rounds in the half-open position window [start, end) where
    the learner missed the optimal arm. Uses the evaluation-only fields."""
    start, end = window
    if not (0 <= start < end <= len(log)):
        raise ValueError(f"window {window} out of range for log of length {len(log)}")
    rounds = log[start:end]
    if any(r.optimal_arm is None for r in rounds):
        raise ValueError("windowed_error_rate needs records with optimal_arm set")
    return sum(r.chosen_arm != r.optimal_arm for r in rounds) / len(rounds)


def cumulative_regret(log: Sequence[InteractionRecord], inst: ProblemInstance) -> np.ndarray:
    """Running sum over rounds of the chosen arm's expected-reward gap."""
    gaps = np.empty(len(log))
    for i, rec in enumerate(log):
        values = rec.context.features @ inst.theta_star
        gaps[i] = values.max() - values[rec.chosen_arm]
    return np.cumsum(gaps)


# ---------------------------------------------------------------------------
# Bounded-label-noise transfer inequality, checked exactly on finite instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MassartInstance:
    """Tiny finite problem: explicit context probabilities, arm counts, and
    the correct arm per context. Small enough to enumerate every policy."""

    context_probs: tuple[Fraction, ...]
    n_arms: tuple[int, ...]
    optimal_arms: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.context_probs) == len(self.n_arms) == len(self.optimal_arms)):
            raise ValueError("per-context fields must have equal length")
        if sum(self.context_probs, Fraction(0)) != 1:
            raise ValueError("context probabilities must sum to 1")
        for k, a in zip(self.n_arms, self.optimal_arms):
            if k < 2 or not 0 <= a < k:
                raise ValueError("each context needs >= 2 arms and a feasible optimum")


@dataclass(frozen=True)
class MassartReport:
    policies: tuple[tuple[int, ...], ...]
    lhs_per_policy: tuple[float, ...]
    rhs_per_policy: tuple[float, ...]
    holds: bool


def massart_transfer_check(
    eta: float | Fraction, instance: MassartInstance, slack: float = 1e-12
) -> MassartReport:
    """Verify, for every deterministic policy on a finite instance, that the
    excess imitation risk against a noisy labeler dominates (1-2*eta) times
    the clean risk.

    The label channel keeps the correct arm with probability 1-eta and
    otherwise flips to a uniformly random wrong arm. All arithmetic is exact
    over rationals; `slack` only relaxes the final comparison.
    """
    eta_f = Fraction(eta)
    if eta_f >= Fraction(1, 2):
        raise InvalidEta(f"eta must be < 1/2, got {float(eta_f)}")
    if eta_f < 0:
        raise InvalidEta("eta must be >= 0")
    one = Fraction(1)
    slack_f = Fraction(slack)

    policies = tuple(itertools.product(*(range(k) for k in instance.n_arms)))
    lhs_list, rhs_list = [], []
    holds = True
    for pol in policies:
        excess = Fraction(0)
        clean = Fraction(0)
        for p, k, a_star, a_pol in zip(
            instance.context_probs, instance.n_arms, instance.optimal_arms, pol
        ):
            if a_pol != a_star:
                # P(label != a_pol) - P(label != a_star)
                #   = (1 - eta/(k-1)) - eta
                excess += p * (one - eta_f / (k - 1) - eta_f)
                clean += p
        rhs = (one - 2 * eta_f) * clean
        if excess + slack_f < rhs:
            holds = False
        lhs_list.append(float(excess))
        rhs_list.append(float(rhs))
    return MassartReport(
        policies=policies,
        lhs_per_policy=tuple(lhs_list),
        rhs_per_policy=tuple(rhs_list),
        holds=holds,
    )


def random_massart_instance(
    rng: np.random.Generator, max_contexts: int = 4, max_arms: int = 4
) -> MassartInstance:
    """Random small instance with rational context probabilities."""
    n_ctx = int(rng.integers(1, max_contexts + 1))
    weights = rng.integers(1, 10, size=n_ctx)
    total = int(weights.sum())
    probs = tuple(Fraction(int(w), total) for w in weights)
    n_arms = tuple(int(rng.integers(2, max_arms + 1)) for _ in range(n_ctx))
    optimal = tuple(int(rng.integers(0, k)) for k in n_arms)
    return MassartInstance(context_probs=probs, n_arms=n_arms, optimal_arms=optimal)


# ---------------------------------------------------------------------------
# Trajectory diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredictabilityResult:
    bin_accuracies: tuple[float, ...]
    spearman_r: float
    early_late_gap: float


@dataclass(frozen=True)
class LatePolicyResult:
    agreement_curve: tuple[tuple[int, float], ...]  # (window start round, agreement)
    late_early_gap: float


@dataclass(frozen=True)
class DiagnosticsReport:
    """Seed-aggregated diagnostics with 95% CIs over seeds."""

    bin_accuracies: tuple[float, ...]  # seed-mean per bin
    spearman_r: float  # seed-mean of per-seed rank correlations
    early_late_gap: MeanCI
    agreement_curve: tuple[tuple[int, float], ...]  # seed-mean per window
    late_early_agreement_gap: MeanCI


def _edge_fraction_mean(values: Sequence[float], frac: float) -> tuple[float, float]:
    """(mean of first ~frac, mean of last ~frac) of a sequence."""
    n_edge = max(1, int(round(frac * len(values))))
    arr = np.asarray(values, dtype=float)
    return float(arr[:n_edge].mean()), float(arr[-n_edge:].mean())


def predictability_diagnostic(
    view: Sequence[ObserverRecord],
    J: int,
    split: float,
    cfg: FitConfig,
    rng: RngStream,
) -> PredictabilityResult:
    """Within-bin imitation accuracy across J equal time bins.

    Each bin gets its own observer fit on a random `split` fraction and is
    scored on the held-out rest; rising accuracy over bins is the observable
    signature of the learner settling down.
    """
    if J < 2:
        raise ValueError("need at least 2 bins")
    if not 0.0 < split < 1.0:
        raise ValueError("split must be in (0,1)")
    bins = np.array_split(np.arange(len(view)), J)
    gen = rng.gen
    accuracies = []
    for bin_idx in bins:
        n_test = len(bin_idx) - int(round(split * len(bin_idx)))
        if n_test < 10:
            raise BinTooSmall(f"bin has only {n_test} held-out samples (< 10)")
        perm = gen.permutation(len(bin_idx))
        test_ids = bin_idx[perm[:n_test]]
        train_ids = bin_idx[perm[n_test:]]
        policy = fit_observer([view[i] for i in train_ids], 0, cfg)
        risk = empirical_imitation_risk(policy.theta_tilde, [view[i] for i in test_ids], 0)
        accuracies.append(1.0 - risk)
    if len(set(accuracies)) == 1:
        rho = 0.0  # flat profile (e.g. every bin saturated): no trend
    else:
        rho = spearman_rho(np.arange(1, J + 1), accuracies)
    early, late = _edge_fraction_mean(accuracies, 0.3)
    return PredictabilityResult(
        bin_accuracies=tuple(accuracies),
        spearman_r=rho,
        early_late_gap=late - early,
    )


def late_policy_generalization(
    view: Sequence[ObserverRecord],
    tail_frac: float,
    window: int,
    cfg: FitConfig,
) -> LatePolicyResult:
    """Fit on the trajectory tail, then score action agreement on rolling
    windows across the whole horizon. Higher late-vs-early agreement means
    the late policy describes settled behavior, not the exploratory prefix."""
    if not 0.0 < tail_frac < 1.0:
        raise ValueError("tail_frac must be in (0,1)")
    if window < 10:
        raise ValueError("window must be >= 10")
    N = len(view)
    tail_start = N - int(round(tail_frac * N))
    policy = fit_observer(view, tail_start, cfg)
    starts = range(0, N - window + 1, window)
    curve = []
    for s in starts:
        risk = empirical_imitation_risk(policy.theta_tilde, view[s : s + window], 0)
        curve.append((view[s].round, 1.0 - risk))
    if len(curve) < 2:
        raise ValueError("horizon too short for the requested window")
    agreements = [a for _, a in curve]
    early, late = _edge_fraction_mean(agreements, 0.3)
    return LatePolicyResult(agreement_curve=tuple(curve), late_early_gap=late - early)
