"""Small dense linear-algebra and statistical kernels shared by all modules.

Everything here is a pure function of its inputs; no global state, safe to
call from parallel workers.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .environment import ContextSet

# Pivots below this are treated as a failed factorization rather than being
# jittered away; callers add explicit ridge terms when they need one.
PIVOT_FLOOR = 1e-12


class NotPositiveDefinite(ValueError):
    """Cholesky pivot fell below the floor; matrix is not usably SPD."""


class EmptyDataset(ValueError):
    """An operation that averages over samples received none."""


class DegenerateInput(ValueError):
    """A statistic is undefined on constant input."""


def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T == m (symmetric m, positive pivots).

    Raises NotPositiveDefinite when the factorization fails or any pivot
    (squared diagonal of L) is below PIVOT_FLOOR. No automatic jitter.
    """
    a = np.asarray(m, dtype=float)
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix is not positive definite: {exc}") from None
    pivots = np.diagonal(lower) ** 2
    if pivots.min() < PIVOT_FLOOR:
        raise NotPositiveDefinite(
            f"pivot {pivots.min():.3e} below floor {PIVOT_FLOOR:.0e}"
        )
    return lower


def sherman_morrison_update(inv: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Return (A + x x^T)^-1 given inv = A^-1 for SPD A.

    The denominator 1 + x^T A^-1 x is >= 1 for SPD A, so no conditioning
    check is needed here.
    """
    inv = np.asarray(inv, dtype=float)
    x = np.asarray(x, dtype=float)
    ix = inv @ x
    return inv - np.outer(ix, ix) / (1.0 + x @ ix)


def softmax_nll_grad_packed(
    theta: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray]:
    """Loss and gradient on pre-stacked features of shape [n, K, d].

    This is the hot kernel behind softmax_nll_and_grad; fitting code stacks
    its data once and calls this inside the optimizer loop.
    """
    n = features.shape[0]
    logits = features @ theta  # [n, K]
    m = logits.max(axis=1, keepdims=True)  # max-logit shift for stability
    z = np.exp(logits - m)
    total = z.sum(axis=1)
    rows = np.arange(n)
    loglik = logits[rows, labels] - (m[:, 0] + np.log(total))
    loss = -float(loglik.mean()) + 0.5 * l2 * float(theta @ theta)
    probs = z / total[:, None]
    grad_mat = np.einsum("nk,nkd->nd", probs, features) - features[rows, labels]
    grad = grad_mat.mean(axis=0) + l2 * theta
    return loss, grad


def softmax_nll_and_grad(
    theta: np.ndarray,
    contexts: Sequence["ContextSet"],
    labels: Sequence[int],
    lam: float,
) -> tuple[float, np.ndarray]:
    """Mean conditional softmax negative log-likelihood plus (lam/2)*||theta||^2.

    Each sample's class set is its own context's arm features; the gradient
    is exact. Contexts may have differing arm counts.
    """
    if len(contexts) == 0:
        raise EmptyDataset("softmax loss needs at least one sample")
    theta = np.asarray(theta, dtype=float)
    labels_arr = np.asarray(labels, dtype=int)
    sizes = np.array([c.n_arms for c in contexts])
    n = len(contexts)
    loss_sum = 0.0
    grad_sum = np.zeros_like(theta)
    for k in np.unique(sizes):
        idx = np.nonzero(sizes == k)[0]
        feats = np.stack([contexts[i].features for i in idx])
        grp_loss, grp_grad = softmax_nll_grad_packed(theta, feats, labels_arr[idx], 0.0)
        loss_sum += grp_loss * len(idx)
        grad_sum += grp_grad * len(idx)
    loss = loss_sum / n + 0.5 * lam * float(theta @ theta)
    grad = grad_sum / n + lam * theta
    return loss, grad


def argmax_arm(theta: np.ndarray, c: "ContextSet") -> int:
    """Index of the feasible arm maximizing <x_a, theta>.

    Ties break to the lowest index, which np.argmax already guarantees.
    """
    scores = c.features @ np.asarray(theta, dtype=float)
    return int(np.argmax(scores))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks, ties replaced by the mean rank of their group."""
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    return ((starts + ends) / 2.0)[inverse]


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation in [-1, 1] with average ranks for ties."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1 or len(xa) < 2:
        raise ValueError("spearman_rho needs two equal-length 1-d inputs, n >= 2")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise DegenerateInput("rank correlation is undefined for constant input")
    rx = _average_ranks(xa)
    ry = _average_ranks(ya)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float(rx @ ry / np.sqrt((rx @ rx) * (ry @ ry)))
