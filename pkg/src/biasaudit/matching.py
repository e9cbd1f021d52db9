"""Propensity-score matching between two protected-attribute levels.

The pipeline mirrors the usual observational-study recipe: estimate the
probability of belonging to the smaller ("treated") level from covariates,
then greedily pair each treated record with the nearest unmatched control on
the logit-propensity scale, subject to a caliper.  Balance is judged by
standardized mean differences before and after matching.
"""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .cohort import MISSING, Cohort, attribute_values
from .errors import PropensityError
from .glm import LogisticModel, encode_design, fit_logistic, predict_proba

_CLIP = 1e-12


@dataclass(frozen=True)
class MatchedPair:
    """Indices are positions in whatever array the matcher was handed; the
    pipeline wrapper rewrites them to cohort record positions."""

    treated: int
    control: int
    distance: float


@dataclass(frozen=True)
class MatchedSample:
    pairs: tuple[MatchedPair, ...]
    unmatched_treated: int
    caliper: float | None
    attribute: str | None = None
    treated_level: str | None = None
    control_level: str | None = None

    @property
    def n_matched(self) -> int:
        return 2 * len(self.pairs)


@dataclass(frozen=True)
class CovariateBalance:
    name: str
    smd_before: float | None
    smd_after: float | None


@dataclass(frozen=True)
class BalanceReport:
    covariates: tuple[CovariateBalance, ...]
    matched_n: int
    passes_min_n: bool


@dataclass(frozen=True, eq=False)
class PropensityResult:
    """Two-level subset with fitted membership probabilities.

    ``indices`` are cohort record positions; ``treated`` flags membership in
    the treated level, aligned with ``indices``.
    """

    indices: np.ndarray
    treated: np.ndarray
    propensities: np.ndarray
    model: LogisticModel
    attribute: str
    treated_level: str
    control_level: str


def estimate_propensity(
    cohort: Cohort,
    attribute: str,
    treated_level: str,
    control_level: str,
    covariates,
    ridge: float = 1e-6,
    subset=None,
) -> PropensityResult:
    """Fit P(level = treated | covariates) on the two-level subset.

    Protected attributes must not appear among the covariates: the propensity
    model is supposed to explain membership through legitimate clinical
    variables, and including the attribute itself (or another protected
    column) would let group identity leak into the match.  ``subset``
    optionally restricts the rows considered (record positions).
    """
    names = list(covariates)
    protected_names = {p.name for p in cohort.schema.protected_columns}
    leaked = [n for n in names if n in protected_names]
    if leaked:
        raise PropensityError(
            f"propensity covariates must exclude protected attributes, got {', '.join(leaked)}"
        )
    if not names:
        raise PropensityError("propensity estimation needs at least one covariate")
    if treated_level == control_level:
        raise PropensityError("treated and control levels are identical")

    values = attribute_values(cohort, attribute)
    pool = range(cohort.n) if subset is None else [int(i) for i in subset]
    indices = [i for i in pool if values[i] in (treated_level, control_level)]
    flags = np.asarray([values[i] == treated_level for i in indices], dtype=bool)
    n_treated = int(flags.sum())
    n_control = len(indices) - n_treated
    if n_treated < 2 or n_control < 2:
        raise PropensityError(
            f"need at least two records per level, got {n_treated} {treated_level!r} "
            f"and {n_control} {control_level!r} on {attribute!r}"
        )

    design = encode_design(cohort, indices, names)
    model = fit_logistic(design, flags.astype(float), ridge=ridge)
    prop = predict_proba(model, design)
    return PropensityResult(
        indices=np.asarray(indices, dtype=np.int64),
        treated=flags,
        propensities=prop,
        model=model,
        attribute=attribute,
        treated_level=treated_level,
        control_level=control_level,
    )


def _logit(p: np.ndarray) -> np.ndarray:
    q = np.clip(p, _CLIP, 1.0 - _CLIP)
    return np.log(q) - np.log1p(-q)


def greedy_match(
    propensities,
    treated,
    caliper_multiplier: float | None = 0.2,
) -> MatchedSample:
    """Greedy 1:1 nearest-neighbor matching without replacement.

    Distance is absolute difference of logit propensities.  Treated records
    choose in descending propensity order (hardest to match first); each takes
    the nearest still-unmatched control, ties going to the lower control
    index.  A pair is rejected when its distance exceeds the caliper,
    ``caliper_multiplier`` times the pooled standard deviation of the logit
    propensities; pass ``caliper_multiplier=None`` to disable the caliper.
    Rejected and unmatchable treated records are counted, never silently
    dropped.
    """
    prop = np.asarray(propensities, dtype=float)
    flags = np.asarray(treated, dtype=bool)
    if prop.shape != flags.shape or prop.ndim != 1:
        raise ValueError("propensities and treated flags must be equal-length 1-d")
    logits = _logit(prop)

    caliper: float | None = None
    if caliper_multiplier is not None:
        spread = float(np.std(logits))
        if spread == 0.0:
            warnings.warn(
                "logit propensities have zero spread; caliper disabled for this match",
                stacklevel=2,
            )
        else:
            caliper = caliper_multiplier * spread

    treated_pos = np.flatnonzero(flags)
    control_pos = np.flatnonzero(~flags)
    # Descending propensity; ties broken by ascending original position so the
    # visit order is deterministic.
    order = np.lexsort((treated_pos, -logits[treated_pos]))
    control_logits = logits[control_pos]
    available = np.ones(control_pos.size, dtype=bool)

    pairs: list[MatchedPair] = []
    unmatched = 0
    for t in treated_pos[order]:
        if not available.any():
            unmatched += 1
            continue
        live = np.flatnonzero(available)
        dist = np.abs(control_logits[live] - logits[t])
        best = live[int(np.argmin(dist))]  # first minimum: lowest control index
        d = float(abs(control_logits[best] - logits[t]))
        if caliper is not None and d > caliper:
            unmatched += 1
            continue
        available[best] = False
        pairs.append(MatchedPair(treated=int(t), control=int(control_pos[best]), distance=d))

    pairs.sort(key=lambda p: p.treated)
    return MatchedSample(pairs=tuple(pairs), unmatched_treated=unmatched, caliper=caliper)


def match_contrast(
    cohort: Cohort,
    attribute: str,
    level_a: str,
    level_b: str,
    covariates,
    caliper_multiplier: float | None = 0.2,
    ridge: float = 1e-6,
    subset=None,
) -> tuple[MatchedSample, PropensityResult]:
    """Full pipeline for one level pair: propensity fit plus greedy matching.

    The smaller level is treated (tie broken toward ``level_a``), so every
    treated record can in principle find a control.  Pair indices in the
    returned sample are cohort record positions.
    """
    values = attribute_values(cohort, attribute)
    pool = range(cohort.n) if subset is None else [int(i) for i in subset]
    n_a = sum(1 for i in pool if values[i] == level_a)
    n_b = sum(1 for i in pool if values[i] == level_b)
    if n_a <= n_b:
        treated_level, control_level = level_a, level_b
    else:
        treated_level, control_level = level_b, level_a

    prop = estimate_propensity(
        cohort, attribute, treated_level, control_level, covariates, ridge=ridge, subset=subset
    )
    raw = greedy_match(prop.propensities, prop.treated, caliper_multiplier)
    pairs = tuple(
        replace(p, treated=int(prop.indices[p.treated]), control=int(prop.indices[p.control]))
        for p in raw.pairs
    )
    sample = MatchedSample(
        pairs=pairs,
        unmatched_treated=raw.unmatched_treated,
        caliper=raw.caliper,
        attribute=attribute,
        treated_level=treated_level,
        control_level=control_level,
    )
    return sample, prop


def smd(values, group_a, group_b) -> float | None:
    """Absolute standardized mean difference between two index groups.

    Pooled scale is ``sqrt((var_a + var_b) / 2)`` with sample (n-1)
    variances.  Missing entries (nan) are ignored per group.  Returns None
    when the pooled variance is zero or either group has fewer than two
    observed values, since the ratio is undefined rather than zero.
    """
    vals = np.asarray(values, dtype=float)
    a = vals[np.asarray(group_a, dtype=np.int64)]
    b = vals[np.asarray(group_b, dtype=np.int64)]
    a = a[np.isfinite(a)]
    b = b[np.isfinite(b)]
    if a.size < 2 or b.size < 2:
        return None
    pooled_var = (float(np.var(a, ddof=1)) + float(np.var(b, ddof=1))) / 2.0
    if pooled_var == 0.0:
        return None
    return float(abs(a.mean() - b.mean()) / np.sqrt(pooled_var))


def _covariate_numeric_views(cohort: Cohort, name: str, kind: str) -> list[tuple[str, np.ndarray]]:
    """Numeric view(s) of one covariate for SMD purposes.

    Numeric and binary covariates yield themselves (nan for missing);
    categorical covariates yield one 0/1 indicator per observed level.
    """
    raw = [rec.covariates[name] for rec in cohort.records]
    if kind in ("numeric", "binary"):
        arr = np.asarray([np.nan if v is MISSING else float(v) for v in raw])
        return [(name, arr)]
    levels: list[str] = []
    for v in raw:
        if v is MISSING:
            continue
        if v not in levels:
            levels.append(v)
    views = []
    for level in levels:
        views.append((f"{name}={level}", np.asarray([1.0 if v == level else 0.0 for v in raw])))
    return views


def balance_report(
    cohort: Cohort,
    matched: MatchedSample,
    covariates,
    min_matched_n: int = 100,
) -> BalanceReport:
    """Covariate SMDs before and after matching for one contrast.

    "Before" compares all records of the two levels; "after" compares the two
    arms of the matched pairs.  ``passes_min_n`` reports whether the matched
    sample reaches ``min_matched_n`` records counting both arms.
    """
    if matched.attribute is None or matched.treated_level is None or matched.control_level is None:
        raise ValueError("matched sample lacks contrast labels; build it via match_contrast")
    values = attribute_values(cohort, matched.attribute)
    before_a = [i for i, v in enumerate(values) if v == matched.treated_level]
    before_b = [i for i, v in enumerate(values) if v == matched.control_level]
    after_a = [p.treated for p in matched.pairs]
    after_b = [p.control for p in matched.pairs]

    rows: list[CovariateBalance] = []
    for name in covariates:
        kind = None
        for col in cohort.schema.covariate_columns:
            if col.name == name:
                kind = col.kind
        if kind is None:
            raise PropensityError(f"unknown covariate {name!r} in balance report")
        for label, arr in _covariate_numeric_views(cohort, name, kind):
            rows.append(
                CovariateBalance(
                    name=label,
                    smd_before=smd(arr, before_a, before_b),
                    smd_after=smd(arr, after_a, after_b) if matched.pairs else None,
                )
            )
    return BalanceReport(
        covariates=tuple(rows),
        matched_n=matched.n_matched,
        passes_min_n=matched.n_matched >= min_matched_n,
    )


def export_pairs(cohort: Cohort, matched: MatchedSample, path) -> None:
    """Write matched pairs as csv: treated_id, control_id, distance."""
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["treated_id", "control_id", "distance"])
        for p in matched.pairs:
            writer.writerow(
                [cohort.records[p.treated].id, cohort.records[p.control].id, repr(p.distance)]
            )
