"""Why trust the learner's later actions? Two observable diagnostics.

The bounded-noise story behind suffix imitation cannot be verified directly
(the optimal arm is hidden in real logs), but it leaves fingerprints: the
learner's actions become more predictable from the context alone over time,
and a policy fit on the tail agrees with the log far more on late windows
than on early ones.

Run: python demos/05_trajectory_diagnostics.py     (about a minute)
"""

from icb_lab import (
    FitConfig,
    LearnerConfig,
    RngStream,
    late_policy_generalization,
    make_instance,
    predictability_diagnostic,
    project_observer_view,
    run_episode,
)

inst = make_instance(d=15, K=30, sigma=0.1, seed=11)
N = 8000
log = run_episode(inst, LearnerConfig(algorithm="lints"), N, RngStream(11).split("episode"))
view = project_observer_view(log)

pred = predictability_diagnostic(view, J=10, split=0.8, cfg=FitConfig(), rng=RngStream(11).split("diag"))
print("within-bin imitation accuracy, earliest to latest tenth of the log:")
for j, acc in enumerate(pred.bin_accuracies, start=1):
    print(f"  bin {j:>2}: {acc:.3f} {'#' * int(round(40 * acc))}")
print(f"rank correlation with time: {pred.spearman_r:.3f}")
print(f"late-minus-early accuracy gap: {pred.early_late_gap:+.3f}")

late = late_policy_generalization(view, tail_frac=0.3, window=N // 40, cfg=FitConfig())
print("\nagreement of a tail-trained policy with the log, over rolling windows:")
for start, agree in late.agreement_curve[::4]:
    print(f"  rounds from {start:>5}: {agree:.3f} {'#' * int(round(40 * agree))}")
print(f"late-minus-early agreement gap: {late.late_early_gap:+.3f}")
