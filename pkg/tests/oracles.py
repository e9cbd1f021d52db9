"""Independent reference implementations used to check the package.

Everything here deliberately takes a different computational route from the
code under test: AUROC by explicit pair enumeration instead of ranks, Youden
by an exact-rational exhaustive scan instead of the cumulative-count trick,
t-tail probabilities by high-precision quadrature of the density instead of
the incomplete-beta closed form, and gradients by finite differences.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath as mp
import numpy as np


def pairwise_auroc(labels, scores) -> float:
    """AUROC as the literal average over positive/negative pairs.

    Each pair contributes 1 for a correctly ordered pair, 0.5 for a tie,
    0 otherwise.  O(P*N); fine for the n <= a few hundred used in tests.
    """
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=float)
    pos = s[y == 1]
    neg = s[y == 0]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("AUROC needs both classes")
    diff = pos[:, None] - neg[None, :]
    wins = np.sum(diff > 0) + 0.5 * np.sum(diff == 0)
    return float(wins) / (pos.size * neg.size)


def exhaustive_youden(labels, scores) -> float:
    """Youden-optimal threshold by exact-rational scan of observed scores.

    Evaluates J = sensitivity + specificity - 1 with Fraction arithmetic at
    every distinct observed score (the decision rule is ``score >= t`` so no
    other cut point yields a new confusion table), keeping the smallest
    threshold among the maximizers.
    """
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=float)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("Youden needs both classes")
    best_t = None
    best_j = None
    for t in sorted(set(s.tolist())):
        pred = s >= t
        tp = int(np.sum(pred & (y == 1)))
        tn = int(np.sum(~pred & (y == 0)))
        j = Fraction(tp, n_pos) + Fraction(tn, n_neg) - 1
        if best_j is None or j > best_j:
            best_j = j
            best_t = t
    return float(best_t)


def t_two_sided_p(t_stat: float, df: int) -> float:
    """Two-sided Student-t p-value by 50-digit quadrature of the density."""
    with mp.workdps(50):
        v = mp.mpf(df)
        t = abs(mp.mpf(repr(float(t_stat))))
        if t == 0:
            return 1.0
        const = mp.gamma((v + 1) / 2) / (mp.sqrt(v * mp.pi) * mp.gamma(v / 2))
        tail = mp.quad(lambda u: (1 + u * u / v) ** (-(v + 1) / 2), [t, mp.inf])
        return float(min(2 * const * tail, mp.mpf(1)))


def fd_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        g[i] = (f(x + step) - f(x - step)) / (2 * h)
    return g
