import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icb_lab.environment import ContextSet, RngStream, make_instance
from icb_lab.learners import LearnerConfig, run_episode
from icb_lab.linalg import argmax_arm
from icb_lab.observer import (
    DEFAULT_SWEEP_GRID,
    BurnInSchedule,
    EmptySuffix,
    FitConfig,
    InvalidSchedule,
    ObserverRecord,
    burn_in_length,
    empirical_imitation_risk,
    fit_observer,
    oracle_sweep,
    project_observer_view,
)


def ctx(features, round=0):
    feats = np.asarray(features, dtype=float)
    return ContextSet(round=round, arm_ids=tuple(range(len(feats))), features=feats)


def synthetic_view(theta, n, d, k, seed, flip_frac=0.0):
    """Observer records whose labels follow argmax(theta), optionally flipped."""
    gen = np.random.default_rng(seed)
    records = []
    for t in range(n):
        feats = gen.standard_normal((k, d))
        feats /= np.maximum(1.0, np.linalg.norm(feats, axis=1))[:, None]
        c = ctx(feats, round=t + 1)
        label = argmax_arm(theta, c)
        if flip_frac and gen.random() < flip_frac:
            label = int((label + gen.integers(1, k)) % k)
        records.append(ObserverRecord(round=t + 1, context=c, chosen_arm=label))
    return records


class TestBurnInLength:
    def test_rule_based_paper_default(self):
        s = BurnInSchedule(kind="rule_based", alpha=0.9)
        assert burn_in_length(s, 10000) == 3981

    def test_naive_zero(self):
        for n in (2, 100, 10**6):
            assert burn_in_length(BurnInSchedule(kind="naive"), n) == 0

    def test_alpha_one_clamped(self):
        assert burn_in_length(BurnInSchedule(kind="rule_based", alpha=1.0), 100) == 99

    def test_fixed_clamped(self):
        assert burn_in_length(BurnInSchedule(kind="fixed", t_fixed=50), 200) == 50
        assert burn_in_length(BurnInSchedule(kind="fixed", t_fixed=500), 200) == 199

    def test_invalid_alpha(self):
        with pytest.raises(InvalidSchedule):
            burn_in_length(BurnInSchedule(kind="rule_based", alpha=1.5), 100)
        with pytest.raises(InvalidSchedule):
            burn_in_length(BurnInSchedule(kind="rule_based", alpha=-0.1), 100)

    def test_oracle_sweep_has_no_length(self):
        with pytest.raises(InvalidSchedule):
            burn_in_length(BurnInSchedule(kind="oracle_sweep"), 100)

    def test_monotone_in_alpha(self):
        for n in (10, 1234, 10**5):
            lengths = [
                burn_in_length(BurnInSchedule(kind="rule_based", alpha=a), n)
                for a in np.linspace(0.0, 1.0, 21)
            ]
            assert lengths == sorted(lengths)
            assert all(0 <= t < n for t in lengths)

    @settings(max_examples=150, deadline=None)
    @given(
        st.integers(min_value=2, max_value=10**7),
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_range_and_monotonicity_property(self, n, a1, a2):
        lo, hi = sorted((a1, a2))
        t_lo = burn_in_length(BurnInSchedule(kind="rule_based", alpha=lo), n)
        t_hi = burn_in_length(BurnInSchedule(kind="rule_based", alpha=hi), n)
        assert 0 <= t_lo <= t_hi <= n - 1


class TestProjection:
    def test_strips_reward_fields(self):
        inst = make_instance(3, 4, seed=1)
        log = run_episode(inst, LearnerConfig(), 20, RngStream(1).split("episode"))
        view = project_observer_view(log)
        assert len(view) == len(log)
        fields = {f.name for f in dataclasses.fields(ObserverRecord)}
        assert fields == {"round", "context", "chosen_arm"}
        assert not hasattr(view[0], "reward")
        assert not hasattr(view[0], "optimal_arm")
        assert [v.chosen_arm for v in view] == [r.chosen_arm for r in log]
        assert [v.round for v in view] == [r.round for r in log]


class TestFitObserver:
    def test_separable_alignment(self):
        # one arm carries +x, all others -x, labels always pick +x:
        # the fit must point along x
        gen = np.random.default_rng(0)
        x = gen.standard_normal(6)
        x /= np.linalg.norm(x)
        records = []
        for t in range(60):
            feats = np.tile(-x, (4, 1))
            winner = int(gen.integers(0, 4))
            feats[winner] = x
            records.append(ObserverRecord(round=t + 1, context=ctx(feats), chosen_arm=winner))
        policy = fit_observer(records, 0, FitConfig())
        cosine = float(policy.theta_tilde @ x / np.linalg.norm(policy.theta_tilde))
        assert cosine > 0.99

    def test_huge_regularization_shrinks(self):
        theta0 = np.array([1.0, 0.0, 0.0])
        view = synthetic_view(theta0, 50, 3, 4, seed=1)
        policy = fit_observer(view, 0, FitConfig(l2=1e6))
        assert np.linalg.norm(policy.theta_tilde) < 1e-3

    def test_noiseless_training_accuracy(self):
        theta0 = np.array([0.8, -0.6])
        view = synthetic_view(theta0, 50, 2, 2, seed=2)
        policy = fit_observer(view, 0, FitConfig())
        agree = sum(
            argmax_arm(policy.theta_tilde, r.context) == argmax_arm(theta0, r.context)
            for r in view
        )
        assert agree >= 49

    def test_empty_suffix(self):
        view = synthetic_view(np.array([1.0, 0.0]), 10, 2, 3, seed=3)
        with pytest.raises(EmptySuffix):
            fit_observer(view, 10, FitConfig())

    def test_meta_fields(self):
        view = synthetic_view(np.array([1.0, 0.0, 0.0]), 40, 3, 3, seed=4)
        policy = fit_observer(view, 10, FitConfig())
        meta = policy.fit_meta
        assert meta["T_used"] == 10 and meta["L_used"] == 30
        assert meta["iterations"] >= 1 and np.isfinite(meta["final_loss"])
        assert isinstance(meta["converged"], bool)

    @pytest.mark.parametrize("rule", ["backtracking", "constant"])
    def test_descent_loss_non_increasing(self, rule):
        theta0 = np.array([0.5, 0.5, -0.7])
        view = synthetic_view(theta0, 80, 3, 4, seed=5, flip_frac=0.1)
        cfg = FitConfig(step_rule=rule, step_size=0.5, max_iters=200)
        policy = fit_observer(view, 0, cfg, record_trace=True)
        trace = policy.fit_meta["loss_trace"]
        assert len(trace) >= 2
        if rule == "backtracking":
            assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def test_solvers_agree(self):
        theta0 = np.array([0.3, -0.9, 0.1])
        view = synthetic_view(theta0, 100, 3, 4, seed=6, flip_frac=0.15)
        thetas = {}
        for rule in ("lbfgs", "backtracking"):
            cfg = FitConfig(step_rule=rule, max_iters=2000)
            thetas[rule] = fit_observer(view, 0, cfg).theta_tilde
        gap = np.linalg.norm(thetas["lbfgs"] - thetas["backtracking"])
        assert gap <= 1e-3 * max(1.0, np.linalg.norm(thetas["lbfgs"]))

    def test_objective_convex_along_segments(self):
        # convexity spot-check of the fitted objective on fixed data
        from icb_lab.linalg import softmax_nll_and_grad

        theta0 = np.array([0.2, 0.4, -0.5])
        view = synthetic_view(theta0, 60, 3, 4, seed=7, flip_frac=0.2)
        contexts = [r.context for r in view]
        labels = [r.chosen_arm for r in view]
        gen = np.random.default_rng(8)
        for _ in range(50):
            t1, t2 = gen.standard_normal((2, 3)) * 3
            w = float(gen.random())
            mid = w * t1 + (1 - w) * t2
            f = lambda th: softmax_nll_and_grad(th, contexts, labels, 1e-4)[0]
            assert f(mid) <= w * f(t1) + (1 - w) * f(t2) + 1e-10


class TestImitationRisk:
    def test_exact_replay_zero(self):
        theta0 = np.array([0.6, -0.3, 0.2])
        view = synthetic_view(theta0, 40, 3, 5, seed=9)
        assert empirical_imitation_risk(theta0, view, 0) == 0.0

    def test_single_mismatch(self):
        c = ctx([[1.0, 0.0], [0.0, 1.0]])
        view = [ObserverRecord(round=1, context=c, chosen_arm=1)]
        assert empirical_imitation_risk(np.array([1.0, 0.0]), view, 0) == 1.0

    def test_uniform_labels_concentration(self):
        # binomial oracle: risk of any fixed rule on uniform labels is ~ 1 - 1/K
        gen = np.random.default_rng(10)
        k, n = 5, 10**4
        theta = gen.standard_normal(3)
        records = []
        for t in range(n):
            feats = gen.standard_normal((k, 3)) / 2
            records.append(
                ObserverRecord(round=t + 1, context=ctx(feats), chosen_arm=int(gen.integers(0, k)))
            )
        risk = empirical_imitation_risk(theta, records, 0)
        p = 1.0 - 1.0 / k
        assert abs(risk - p) <= 3 * np.sqrt(p * (1 - p) / n)

    def test_empty_suffix(self):
        view = synthetic_view(np.array([1.0, 0.0]), 5, 2, 2, seed=11)
        with pytest.raises(EmptySuffix):
            empirical_imitation_risk(np.array([1.0, 0.0]), view, 5)

    def test_erm_not_worse_than_random_directions(self):
        # on separable training data the fit reaches zero empirical risk, so
        # no random direction can beat it
        gen = np.random.default_rng(12)
        theta0 = gen.standard_normal(5)
        view = synthetic_view(theta0, 200, 5, 4, seed=13)
        policy = fit_observer(view, 0, FitConfig())
        fit_risk = empirical_imitation_risk(policy.theta_tilde, view, 0)
        for _ in range(100):
            u = gen.standard_normal(5)
            u /= np.linalg.norm(u)
            assert fit_risk <= empirical_imitation_risk(u, view, 0) + 1e-9


class TestOracleSweep:
    def test_single_zero_alpha_is_naive(self):
        theta0 = np.array([0.7, 0.3])
        view = synthetic_view(theta0, 30, 2, 3, seed=14)
        naive = fit_observer(view, 0, FitConfig())
        best_alpha, points = oracle_sweep(
            view, [0.0], FitConfig(), lambda th: empirical_imitation_risk(th, view, 0)
        )
        assert best_alpha == 0.0
        assert len(points) == 1
        assert points[0].T == 0
        assert np.allclose(points[0].policy.theta_tilde, naive.theta_tilde)

    def test_three_point_table(self):
        theta0 = np.array([0.7, 0.3, -0.1])
        view = synthetic_view(theta0, 100, 3, 4, seed=15, flip_frac=0.1)
        grid = [0.0, 0.5, 0.9]
        best_alpha, points = oracle_sweep(
            view, grid, FitConfig(), lambda th: float(np.linalg.norm(th - theta0))
        )
        assert [p.alpha for p in points] == grid
        assert all(p.L == 100 - p.T for p in points)
        metrics = [p.metric for p in points]
        assert best_alpha == grid[int(np.argmin(metrics))]

    def test_grid_validation(self):
        view = synthetic_view(np.array([1.0, 0.0]), 20, 2, 2, seed=16)
        with pytest.raises(ValueError):
            oracle_sweep(view, [], FitConfig(), lambda th: 0.0)
        with pytest.raises(InvalidSchedule):
            oracle_sweep(view, [1.2], FitConfig(), lambda th: 0.0)

    def test_default_grid_bounds(self):
        assert DEFAULT_SWEEP_GRID[0] == 0.0
        assert DEFAULT_SWEEP_GRID[-1] == 0.99
        assert all(0.0 <= a <= 1.0 for a in DEFAULT_SWEEP_GRID)
