"""The burn-in dial: sweep the discard exponent and watch the U-shape appear.

Too little burn-in keeps exploration-polluted labels; too much starves the
fit of samples. The best sits in between. This runs the same experiment the
harness persists for the U-curve figure, at a small scale.

Run: python demos/03_burnin_tradeoff.py            (about a minute)
"""

import numpy as np

from icb_lab import ExperimentConfig, LearnerConfig, run_burnin_sweep

cfg = ExperimentConfig(
    d=15,
    K=30,
    N=6000,
    seeds=tuple(range(1, 9)),
    eval_size=2000,
    learner=LearnerConfig(algorithm="lints"),
)
rows = run_burnin_sweep(cfg)

alphas = sorted({r.alpha for r in rows})
print(f"{'alpha':>6} {'T':>5} {'L':>5} {'dir err':>9} {'regret':>10}   (means over {len(cfg.seeds)} seeds)")
curve = {}
for a in alphas:
    of_a = [r for r in rows if r.alpha == a]
    dir_err = float(np.mean([r.dir_error for r in of_a]))
    regret = float(np.mean([r.pred_regret for r in of_a]))
    curve[a] = dir_err
    bar = "#" * int(round(250 * dir_err))
    print(f"{a:>6.2f} {of_a[0].T:>5} {of_a[0].L:>5} {dir_err:>9.4f} {regret:>10.6f}  {bar}")

best = min(curve, key=curve.get)
print(f"\nbest exponent on this grid: alpha={best} "
      f"(endpoints {curve[alphas[0]]:.4f} / {curve[alphas[-1]]:.4f}, interior best {curve[best]:.4f})")
