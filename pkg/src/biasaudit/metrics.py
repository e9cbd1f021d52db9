"""Classification metrics for binary risk scores.

All functions take plain label/score sequences so they can run on any slice
of a cohort.  Where a metric has no defined value (a subgroup with one class,
a zero denominator) the convention is: ratio fields inside result objects are
``None``, while the scalar entry points ``auroc`` and ``youden_threshold``
raise ``UndefinedMetricError`` so callers decide whether skipping is
acceptable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import UndefinedMetricError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp


@dataclass(frozen=True)
class ThresholdMetrics:
    """Ratio metrics at a fixed decision threshold; None where undefined."""

    threshold: float
    ppv: float | None
    sensitivity: float | None
    specificity: float | None
    fnr: float | None
    fpr: float | None


@dataclass(frozen=True)
class CalibrationBin:
    mean_score: float
    positive_fraction: float
    count: int


@dataclass(frozen=True)
class CalibrationCurve:
    """Equal-width reliability bins over [0, 1]; empty bins are dropped."""

    bins: tuple[CalibrationBin, ...]
    n_bins: int


def _validate(labels, scores) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=float)
    if y.ndim != 1 or s.ndim != 1 or y.shape != s.shape:
        raise ValueError(f"labels and scores must be equal-length 1-d, got {y.shape} and {s.shape}")
    if y.size == 0:
        raise ValueError("empty input")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    return y.astype(np.int64), s


def confusion(labels, scores, threshold: float) -> ConfusionCounts:
    """Count outcomes of the decision rule ``score >= threshold``."""
    y, s = _validate(labels, scores)
    pred = s >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def threshold_metrics(counts: ConfusionCounts, threshold: float = float("nan")) -> ThresholdMetrics:
    """Derive ratio metrics from confusion counts.

    ppv = tp/(tp+fp), sensitivity = tp/(tp+fn), specificity = tn/(tn+fp),
    fnr = fn/(tp+fn), fpr = fp/(tn+fp).  A zero denominator yields None for
    that field only; sensitivity + fnr = 1 and specificity + fpr = 1 hold to
    float rounding whenever both terms are defined (shared denominators).
    """
    return ThresholdMetrics(
        threshold=threshold,
        ppv=_ratio(counts.tp, counts.tp + counts.fp),
        sensitivity=_ratio(counts.tp, counts.positives),
        specificity=_ratio(counts.tn, counts.negatives),
        fnr=_ratio(counts.fn, counts.positives),
        fpr=_ratio(counts.fp, counts.negatives),
    )


def _auroc_or_none(y: np.ndarray, s: np.ndarray) -> float | None:
    """Rank-based AUROC (Mann-Whitney with midranks); None on single-class."""
    n_pos = int(np.sum(y))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s)
    rank_sum = float(np.sum(ranks[y == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auroc(labels, scores) -> float:
    """Area under the ROC curve: P(score_pos > score_neg) + 0.5 P(tie).

    Computed from midranks, which is exactly the average over all
    positive/negative pairs.  Raises UndefinedMetricError when only one class
    is present; callers auditing subgroups catch this and record the skip.
    """
    y, s = _validate(labels, scores)
    value = _auroc_or_none(y, s)
    if value is None:
        raise UndefinedMetricError("AUROC undefined: labels contain a single class")
    return value


def _youden_or_none(y: np.ndarray, s: np.ndarray) -> float | None:
    n_pos = int(np.sum(y))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(s, kind="stable")
    ss = s[order]
    ys = y[order]
    uniq, first = np.unique(ss, return_index=True)
    cum_pos = np.concatenate(([0], np.cumsum(ys)))
    tp = n_pos - cum_pos[first]
    tn = first - cum_pos[first]
    # J = tp/P + tn/N - 1; maximizing the integer tp*N + tn*P is equivalent
    # and makes the tie toward the smallest threshold exact.
    j_num = tp * n_neg + tn * n_pos
    return float(uniq[int(np.argmax(j_num))])


def youden_threshold(labels, scores) -> float:
    """Threshold maximizing Youden's J = sensitivity + specificity - 1.

    Candidates are the distinct observed scores (the decision rule is
    ``score >= t``, so other cut points change nothing); among maximizers the
    smallest threshold wins.  Raises UndefinedMetricError on single-class
    input.
    """
    y, s = _validate(labels, scores)
    value = _youden_or_none(y, s)
    if value is None:
        raise UndefinedMetricError("Youden threshold undefined: labels contain a single class")
    return value


def calibration_curve(labels, scores, n_bins: int = 10) -> CalibrationCurve:
    """Reliability curve over equal-width score bins on [0, 1].

    Each non-empty bin reports its mean score, observed positive fraction,
    and member count; empty bins are dropped rather than zero-filled.  A
    score of exactly 1.0 lands in the last bin.  Requires n_bins >= 2: one
    bin cannot show miscalibration, so asking for it is a caller bug.
    """
    y, s = _validate(labels, scores)
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    if np.any(s < 0) or np.any(s > 1):
        raise ValueError("calibration expects scores in [0, 1]")
    idx = np.minimum((s * n_bins).astype(int), n_bins - 1)
    bins = []
    for b in range(n_bins):
        mask = idx == b
        count = int(np.sum(mask))
        if count == 0:
            continue
        bins.append(
            CalibrationBin(
                mean_score=float(np.mean(s[mask])),
                positive_fraction=float(np.mean(y[mask])),
                count=count,
            )
        )
    return CalibrationCurve(bins=tuple(bins), n_bins=n_bins)
