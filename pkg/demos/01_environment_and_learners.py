"""A first tour: build a synthetic bandit instance, let a reward-aware agent
play it, and watch its mistakes dry up.

Run: python demos/01_environment_and_learners.py
"""

import numpy as np

from icb_lab import (
    LearnerConfig,
    RngStream,
    cumulative_regret,
    make_instance,
    minimum_gap,
    run_episode,
    sample_context,
    windowed_error_rate,
)

# A hidden unit-norm parameter theta* in R^10, 20 arms per round, reward
# noise sigma=0.1. Everything is keyed by the seed: rebuilding this instance
# reproduces it bit for bit.
inst = make_instance(d=10, K=20, sigma=0.1, seed=7)
print(f"instance: d={inst.d} K={inst.K} sigma={inst.sigma} |theta*|={np.linalg.norm(inst.theta_star):.3f}")

# Contexts are fresh i.i.d. feature sets each round, norm-capped to the unit ball.
ctx_rng = RngStream(7).split("peek")
contexts = [sample_context(inst, t, ctx_rng) for t in range(500)]
print(f"empirical minimum gap over 500 contexts: {minimum_gap(inst, contexts):.4f}")

# Play 5000 rounds with each agent. The log records, per round, the context,
# the chosen arm, the realized reward, and (for evaluation only) the optimal arm.
N = 5000
for algo in ("linucb", "lints"):
    log = run_episode(inst, LearnerConfig(algorithm=algo), N, RngStream(7).split("episode"))
    regret = cumulative_regret(log, inst)
    print(f"\n{algo}: cumulative regret R_N = {regret[-1]:.2f}")
    for lo, hi in ((0, 1000), (2000, 3000), (4000, 5000)):
        rate = windowed_error_rate(log, (lo, hi))
        print(f"  mistake rate in rounds {lo:>4}-{hi:>4}: {rate:.3f}")
    checkpoints = np.array([100, 500, 1000, 2500, 5000])
    avg = regret[checkpoints - 1] / checkpoints
    print("  average regret R_N/N at N =", ", ".join(f"{n}: {a:.4f}" for n, a in zip(checkpoints, avg)))
