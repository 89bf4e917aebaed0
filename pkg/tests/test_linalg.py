import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icb_lab.environment import ContextSet, RngStream, make_instance, sample_context
from icb_lab.linalg import (
    DegenerateInput,
    EmptyDataset,
    NotPositiveDefinite,
    argmax_arm,
    cholesky,
    sherman_morrison_update,
    softmax_nll_and_grad,
    spearman_rho,
)


def ctx(features, round=0):
    feats = np.asarray(features, dtype=float)
    return ContextSet(round=round, arm_ids=tuple(range(len(feats))), features=feats)


def random_spd(gen, d):
    m = gen.standard_normal((d, d))
    return m @ m.T + d * np.eye(d)


class TestCholesky:
    def test_identity(self):
        assert np.allclose(cholesky(np.eye(3)), np.eye(3))

    def test_two_by_two_reconstruction(self):
        m = np.array([[4.0, 2.0], [2.0, 3.0]])
        lower = cholesky(m)
        # direct multiplication oracle for the reconstruction
        assert np.allclose(lower @ lower.T, m, rtol=1e-10)
        assert np.allclose(lower, [[2.0, 0.0], [1.0, np.sqrt(2.0)]])
        assert lower[0, 1] == 0.0

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_tiny_pivot_raises(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.diag([1.0, 1e-14]))

    def test_random_spd_reconstruction(self):
        gen = np.random.default_rng(0)
        for _ in range(25):
            m = random_spd(gen, int(gen.integers(1, 12)))
            lower = cholesky(m)
            rel = np.linalg.norm(lower @ lower.T - m) / np.linalg.norm(m)
            assert rel <= 1e-10
            assert np.allclose(np.triu(lower, 1), 0.0)


class TestShermanMorrison:
    def test_zero_update(self):
        assert np.allclose(sherman_morrison_update(np.eye(2), np.zeros(2)), np.eye(2))

    def test_unit_vector(self):
        # direct inversion oracle: (I + e1 e1^T) = diag(2, 1)
        expected = np.linalg.inv(np.array([[2.0, 0.0], [0.0, 1.0]]))
        got = sherman_morrison_update(np.eye(2), np.array([1.0, 0.0]))
        assert np.allclose(got, expected)
        assert np.allclose(got, [[0.5, 0.0], [0.0, 1.0]])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=1, max_value=20), st.integers(min_value=0, max_value=2**31))
    def test_matches_direct_inverse(self, d, seed):
        gen = np.random.default_rng(seed)
        a = random_spd(gen, d)
        x = gen.standard_normal(d)
        got = sherman_morrison_update(np.linalg.inv(a), x)
        expected = np.linalg.inv(a + np.outer(x, x))
        assert np.linalg.norm(got - expected) / np.linalg.norm(expected) <= 1e-8


class TestSoftmaxLoss:
    def test_symmetric_logits(self):
        x = np.array([0.3, -0.4])
        c = ctx([x, x])
        theta = np.array([0.7, -0.2])
        lam = 0.01
        loss, grad = softmax_nll_and_grad(theta, [c], [0], lam)
        assert loss == pytest.approx(np.log(2.0) + 0.5 * lam * theta @ theta)
        assert np.allclose(grad, lam * theta)

    def test_zero_theta_uniform(self):
        gen = np.random.default_rng(1)
        for k in (2, 3, 7):
            c = ctx(gen.standard_normal((k, 4)) * 0.3)
            loss, _ = softmax_nll_and_grad(np.zeros(4), [c], [1 % k], 0.0)
            assert loss == pytest.approx(np.log(k))

    def test_gradient_finite_differences(self):
        gen = np.random.default_rng(2)
        inst = make_instance(4, 5, seed=9)
        contexts = [sample_context(inst, t, RngStream(9).split("fd")) for t in range(5)]
        labels = [int(gen.integers(0, 5)) for _ in contexts]
        theta = gen.standard_normal(4)
        lam = 1e-4
        _, grad = softmax_nll_and_grad(theta, contexts, labels, lam)
        h = 1e-5
        fd = np.empty_like(theta)
        for i in range(len(theta)):
            up, dn = theta.copy(), theta.copy()
            up[i] += h
            dn[i] -= h
            fd[i] = (
                softmax_nll_and_grad(up, contexts, labels, lam)[0]
                - softmax_nll_and_grad(dn, contexts, labels, lam)[0]
            ) / (2 * h)
        assert np.linalg.norm(grad - fd) / np.linalg.norm(fd) <= 1e-6

    def test_mixed_arm_counts(self):
        gen = np.random.default_rng(3)
        contexts = [ctx(gen.standard_normal((k, 3)) * 0.4) for k in (2, 4, 4, 3)]
        labels = [1, 3, 0, 2]
        theta = gen.standard_normal(3)
        loss, grad = softmax_nll_and_grad(theta, contexts, labels, 0.0)
        # per-sample oracle: average of individual losses/grads
        per = [softmax_nll_and_grad(theta, [c], [y], 0.0) for c, y in zip(contexts, labels)]
        assert loss == pytest.approx(np.mean([p[0] for p in per]))
        assert np.allclose(grad, np.mean([p[1] for p in per], axis=0))

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            softmax_nll_and_grad(np.zeros(2), [], [], 0.0)

    def test_large_logits_stable(self):
        c = ctx([[1.0, 0.0], [-1.0, 0.0]])
        loss, grad = softmax_nll_and_grad(np.array([500.0, 0.0]), [c], [0], 0.0)
        assert np.isfinite(loss) and np.all(np.isfinite(grad))


class TestArgmaxArm:
    def test_dominant_inner_product(self):
        c = ctx([[0.5, 0.0], [0.9, 0.0]])
        assert argmax_arm(np.array([1.0, 0.0]), c) == 1

    def test_all_ties_lowest_index(self):
        c = ctx([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])
        assert argmax_arm(np.zeros(2), c) == 0

    @settings(max_examples=50, deadline=None)
    @given(
        st.integers(min_value=0, max_value=2**31),
        st.floats(min_value=1e-6, max_value=1e6),
    )
    def test_positive_scale_invariance(self, seed, scale):
        gen = np.random.default_rng(seed)
        c = ctx(gen.standard_normal((5, 3)))
        theta = gen.standard_normal(3)
        assert argmax_arm(theta, c) == argmax_arm(scale * theta, c)


class TestSpearman:
    def test_monotone(self):
        assert spearman_rho([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
        assert spearman_rho([1, 2, 3], [30, 20, 10]) == pytest.approx(-1.0)

    def test_hand_ranked(self):
        # ranks of y are (2,1,4,3): sum d^2 = 4, n = 4
        # 1 - 6*4 / (4*(16-1)) = 0.6
        assert spearman_rho([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6)

    def test_ties_average_ranks(self):
        # with y ties, compare against Pearson on hand-averaged ranks
        x = [1.0, 2.0, 3.0, 4.0]
        y = [5.0, 5.0, 7.0, 8.0]
        rx = np.array([1.0, 2.0, 3.0, 4.0])
        ry = np.array([1.5, 1.5, 3.0, 4.0])
        expected = np.corrcoef(rx, ry)[0, 1]
        assert spearman_rho(x, y) == pytest.approx(expected)

    def test_constant_raises(self):
        with pytest.raises(DegenerateInput):
            spearman_rho([1, 1, 1], [1, 2, 3])
        with pytest.raises(DegenerateInput):
            spearman_rho([1, 2, 3], [4, 4, 4])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            spearman_rho([1, 2], [1, 2, 3])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31), st.integers(min_value=2, max_value=40))
    def test_bounded_in_unit_interval(self, seed, n):
        gen = np.random.default_rng(seed)
        x = gen.integers(0, 5, size=n).astype(float)  # ties likely
        y = gen.integers(0, 5, size=n).astype(float)
        if np.all(x == x[0]) or np.all(y == y[0]):
            return
        assert -1.0 - 1e-12 <= spearman_rho(x, y) <= 1.0 + 1e-12
