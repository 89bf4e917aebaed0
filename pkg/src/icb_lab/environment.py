"""Synthetic linear bandit environment: instances, per-round contexts, rewards.

All randomness flows through RngStream, a counter-based scheme in which
(seed, stream_id, round) fully determine the draws, so parallel seeds never
share state and any context can be regenerated in isolation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .linalg import argmax_arm

_MASK64 = (1 << 64) - 1


def _purpose_id(seed: int, parent_id: int, purpose: str) -> int:
    """Stable 64-bit child stream id (process-independent, unlike hash())."""
    digest = hashlib.blake2b(
        f"{seed}:{parent_id}:{purpose}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    """Seeded, splittable random stream backed by the Philox counter generator.

    Identical (seed, stream_id) reproduce identical draw sequences bit-exactly.
    `gen` is the stream's stateful generator for in-order draws; `at_round(t)`
    returns a generator keyed to round t that is independent of call order.

    Sequential draws occupy the same counter region as `at_round(0)`, so a
    given stream should be used either sequentially or round-keyed, not both;
    `split` off a child stream per purpose.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._gen: np.random.Generator | None = None

    def _key(self) -> np.ndarray:
        return np.array([self.seed, self.stream_id], dtype=np.uint64)

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.Generator(np.random.Philox(key=self._key()))
        return self._gen

    def at_round(self, t: int) -> np.random.Generator:
        # 2**64 counter blocks per round: rounds can never overlap.
        bitgen = np.random.Philox(key=self._key(), counter=int(t) << 64)
        return np.random.Generator(bitgen)

    def split(self, purpose: str) -> "RngStream":
        """Disjoint child stream for a named purpose (e.g. "reward", "eval").

        The child id hashes (seed, parent id, purpose), so different seeds
        never share a stream id.
        """
        return RngStream(self.seed, _purpose_id(self.seed, self.stream_id, purpose))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


@dataclass(frozen=True, eq=False)
class ContextSet:
    """One round's feasible arms and their feature vectors (rows of `features`)."""

    round: int
    arm_ids: tuple[int, ...]
    features: np.ndarray  # [n_arms, d], each row norm <= 1

    def __post_init__(self):
        if len(set(self.arm_ids)) != len(self.arm_ids):
            raise ValueError("arm_ids must be distinct")
        if len(self.features) != len(self.arm_ids):
            raise ValueError("one feature row per feasible arm")

    @property
    def n_arms(self) -> int:
        return len(self.arm_ids)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Hidden environment: unit-norm parameter, dimensions, reward noise scale.

    norm_mode controls how raw Gaussian features are brought inside the unit
    ball: "cap" divides by max(1, norm) and keeps short vectors intact,
    "project" puts every arm on the sphere.
    """

    theta_star: np.ndarray
    d: int
    K: int
    sigma: float
    feasible_set_mode: str = "all-arms"
    norm_mode: str = "cap"

    def __post_init__(self):
        if abs(np.linalg.norm(self.theta_star) - 1.0) > 1e-12:
            raise ValueError("theta_star must be unit norm")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.norm_mode not in ("cap", "project"):
            raise ValueError(f"unknown norm_mode {self.norm_mode!r}")
        if self.feasible_set_mode != "all-arms":
            raise ValueError("only the all-arms feasible set mode is supported")


def sample_theta_star(d: int, rng: RngStream) -> np.ndarray:
    """Unit vector drawn uniformly from the d-sphere (normalized Gaussian)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    while True:
        raw = rng.gen.standard_normal(d)
        norm = np.linalg.norm(raw)
        if norm > 0:
            return raw / norm


def make_instance(
    d: int,
    K: int,
    sigma: float = 0.1,
    seed: int = 0,
    norm_mode: str = "cap",
) -> ProblemInstance:
    """Problem instance with theta_star drawn from the seed's "theta" stream."""
    theta = sample_theta_star(d, RngStream(seed).split("theta"))
    return ProblemInstance(theta_star=theta, d=d, K=K, sigma=sigma, norm_mode=norm_mode)


def sample_context(inst: ProblemInstance, t: int, rng: RngStream) -> ContextSet:
    """K feature vectors for round t, i.i.d. standard normal then norm-capped.

    Deterministic in (rng.seed, rng.stream_id, t): calling twice with the
    same arguments returns bit-identical features.
    """
    raw = rng.at_round(t).standard_normal((inst.K, inst.d))
    norms = np.linalg.norm(raw, axis=1)
    if inst.norm_mode == "cap":
        scale = np.maximum(1.0, norms)
    else:  # project
        scale = np.where(norms > 0, norms, 1.0)
    features = raw / scale[:, None]
    return ContextSet(round=t, arm_ids=tuple(range(inst.K)), features=features)


def realize_reward(inst: ProblemInstance, x: np.ndarray, rng: RngStream) -> float:
    """<x, theta_star> plus Gaussian noise with std inst.sigma."""
    noise = rng.gen.standard_normal()
    return float(x @ inst.theta_star + inst.sigma * noise)


def optimal_arm(inst: ProblemInstance, c: ContextSet) -> int:
    """Arm with the highest expected reward; ties break to the lowest index."""
    return argmax_arm(inst.theta_star, c)


def minimum_gap(inst: ProblemInstance, contexts: list[ContextSet]) -> float:
    """Smallest best-vs-second-best expected reward gap over the given contexts.

    An empirical proxy over sampled contexts; the population infimum is not
    computable.
    """
    gaps = []
    for c in contexts:
        if c.n_arms < 2:
            raise ValueError("minimum_gap needs >= 2 arms per context")
        values = c.features @ inst.theta_star
        top2 = np.partition(values, -2)[-2:]
        gaps.append(float(top2[1] - top2[0]))
    return min(gaps)
