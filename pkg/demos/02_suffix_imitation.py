"""The core act: a reward-free observer recovers the hidden parameter from
nothing but (context, chosen arm) pairs, and discarding the learner's early
rounds makes the recovery better.

Run: python demos/02_suffix_imitation.py
"""

import numpy as np

from icb_lab import (
    BurnInSchedule,
    FitConfig,
    LearnerConfig,
    RngStream,
    burn_in_length,
    clean_risk,
    direction_error,
    empirical_imitation_risk,
    fit_observer,
    make_evaluation_set,
    make_instance,
    predictive_regret,
    project_observer_view,
    run_episode_with_state,
)

inst = make_instance(d=15, K=30, sigma=0.1, seed=3)
N = 8000
log, learner_state = run_episode_with_state(
    inst, LearnerConfig(algorithm="lints"), N, RngStream(3).split("episode")
)

# The observer's view: rewards and optimal arms are not merely unread, the
# record type cannot carry them.
view = project_observer_view(log)
print("observer record fields:", sorted(vars(view[0])))

eval_set = make_evaluation_set(inst, 3000, RngStream(3).split("eval"))

print(f"\n{'schedule':>12} {'T':>5} {'L':>5} {'imitation':>9} {'dir err':>8} {'regret':>9} {'risk':>7}")
for schedule in (
    BurnInSchedule(kind="naive"),
    BurnInSchedule(kind="rule_based", alpha=0.5),
    BurnInSchedule(kind="rule_based", alpha=0.9),
    BurnInSchedule(kind="fixed", t_fixed=6000),
):
    T = burn_in_length(schedule, N)
    policy = fit_observer(view, T, FitConfig())
    label = schedule.kind if schedule.kind != "rule_based" else f"N^{schedule.alpha}"
    print(
        f"{label:>12} {T:>5} {N - T:>5} "
        f"{empirical_imitation_risk(policy.theta_tilde, view, T):>9.4f} "
        f"{direction_error(policy.theta_tilde, inst.theta_star):>8.4f} "
        f"{predictive_regret(policy.theta_tilde, inst, eval_set):>9.6f} "
        f"{clean_risk(policy.theta_tilde, inst, eval_set):>7.4f}"
    )

learner_err = direction_error(learner_state.theta_hat, inst.theta_star)
print(f"\nreward-aware learner's own direction error after {N} rounds: {learner_err:.4f}")
print("the observer gets close to that while never seeing a single reward.")
