"""Bootstrap subgroup audits, matched audits, and discrepancy summaries.

The central quantity everywhere is the diff-from-average: a subgroup's metric
minus the unweighted mean of that metric over all defined subgroups of the
same attribute.  Within every bootstrap replicate these diffs sum to zero
across defined levels by construction, so a positive cell always has a
negative counterweight somewhere in the same table.

Uncertainty: each cell collects one diff per bootstrap replicate.  The spread
of those replicate diffs is itself the standard error of the point estimate,
so the cell statistic is ``t = mean / sd`` (not mean / (sd/sqrt(B)) - the
replicates are B re-measurements of one quantity, not B independent
observations; dividing by sqrt(B) would let the false-positive rate grow
toward 1 as B grows, and a resampling check confirms exactly that).  Two-sided
p-values use a Student t reference with B - 1 degrees of freedom.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc
from scipy.stats import rankdata

from ._rng import stream
from .cohort import Cohort, label_values, score_values, subgroup_partition
from .errors import ConfigError, FitError, InsufficientDataError, PropensityError
from .matching import match_contrast

log = logging.getLogger(__name__)

METRICS = ("PPV", "SENS", "SPEC", "FNR", "FPR", "AUROC")
_THRESHOLD_METRICS = ("PPV", "SENS", "SPEC", "FNR", "FPR")

STATUS_OK = "ok"
STATUS_INSUFFICIENT = "insufficient"
STATUS_SKIPPED = "skipped"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class ThresholdPolicy:
    """How the decision threshold is chosen for threshold metrics.

    "youden" re-derives the threshold on the pooled data of every bootstrap
    replicate, so threshold uncertainty propagates into the cells; "fixed"
    uses the given value everywhere.
    """

    kind: str
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("youden", "fixed"):
            raise ConfigError(f"threshold policy kind must be 'youden' or 'fixed', got {self.kind!r}")
        if self.kind == "fixed" and self.value is None:
            raise ConfigError("fixed threshold policy needs a value")
        if self.kind == "youden" and self.value is not None:
            raise ConfigError("youden threshold policy takes no value")

    @classmethod
    def youden(cls) -> "ThresholdPolicy":
        return cls(kind="youden")

    @classmethod
    def fixed(cls, value: float) -> "ThresholdPolicy":
        return cls(kind="fixed", value=float(value))


@dataclass(frozen=True)
class AuditConfig:
    """Knobs shared by the subgroup and matched audits."""

    metrics: tuple[str, ...] = METRICS
    n_bootstrap: int = 150
    alpha: float = 0.05
    seed: int = 0
    threshold_policy: ThresholdPolicy = field(default_factory=ThresholdPolicy.youden)
    propensity_covariates: tuple[str, ...] = ()
    caliper_multiplier: float | None = 0.2
    min_group_size: int = 100
    min_matched_n: int = 100
    rounding: int = 2
    ridge: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "propensity_covariates", tuple(self.propensity_covariates))
        if not self.metrics:
            raise ConfigError("metrics list is empty")
        unknown = [m for m in self.metrics if m not in METRICS]
        if unknown:
            raise ConfigError(f"unknown metric(s) {', '.join(unknown)}; choose from {METRICS}")
        if len(set(self.metrics)) != len(self.metrics):
            raise ConfigError("duplicate metrics in config")
        if self.n_bootstrap < 2:
            raise ConfigError(f"n_bootstrap must be >= 2, got {self.n_bootstrap}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.min_group_size < 0:
            raise ConfigError("min_group_size must be >= 0")
        if self.min_matched_n < 0:
            raise ConfigError("min_matched_n must be >= 0")
        if self.rounding < 0:
            raise ConfigError("rounding must be >= 0")
        if self.caliper_multiplier is not None and self.caliper_multiplier <= 0:
            raise ConfigError("caliper_multiplier must be positive or None")
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0")


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    p_value: float
    df: int
    degenerate: bool = False


@dataclass(frozen=True)
class SubgroupAuditResult:
    """One audited cell: (model, attribute, level, metric)."""

    model: str
    attribute: str
    level: str
    metric: str
    mean_diff: float | None
    sd: float | None
    t_stat: float | None
    p_value: float | None
    significant: bool | None
    n_effective: int
    status: str = STATUS_OK


@dataclass(frozen=True)
class MatchedCell:
    """One level-vs-opponent matched contrast seen from the level's side."""

    opponent: str
    status: str
    result: SubgroupAuditResult | None = None
    detail: str = ""


@dataclass(frozen=True)
class MatchedAuditResult:
    model: str
    attribute: str
    level: str
    cells: tuple[MatchedCell, ...]


@dataclass(frozen=True)
class DiscrepancySummary:
    """Largest minus smallest subgroup diff for one attribute and metric."""

    model: str
    attribute: str
    metric: str
    matching: str  # "before" or "after"
    gap: float
    n_levels: int


@dataclass(frozen=True)
class GroupDiff:
    value: float | None
    diff: float | None
    n: int


@dataclass(frozen=True)
class DeltaCell:
    attribute: str
    level: str
    metric: str
    phase: str  # "before" or "after"
    opponent: str | None
    delta: float | None


@dataclass(frozen=True)
class ComparisonReport:
    model_a: str
    model_b: str
    subgroup_a: tuple[SubgroupAuditResult, ...]
    subgroup_b: tuple[SubgroupAuditResult, ...]
    matched_a: tuple[MatchedAuditResult, ...]
    matched_b: tuple[MatchedAuditResult, ...]
    deltas: tuple[DeltaCell, ...]
    overall: dict


def _t_two_sided(t_stat: float, df: int) -> float:
    """Two-sided Student-t tail probability via the regularized beta function.

    P(|T| >= |t|) = I_x(df/2, 1/2) with x = df / (df + t^2).
    """
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if math.isinf(t_stat):
        return 0.0
    x = df / (df + t_stat * t_stat)
    return float(betainc(df / 2.0, 0.5, x))


def t_test_one_sample(samples, mu0: float = 0.0) -> TTestResult:
    """Classic one-sample t-test of H0: mean == mu0.

    ``t = (mean - mu0) / (sd / sqrt(n))`` with sample sd and ``df = n - 1``.
    Zero-variance input is flagged degenerate with p = 1 when the common
    value equals mu0 and p = 0 otherwise.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("t-test needs a 1-d sample of size >= 2")
    if not np.all(np.isfinite(x)):
        raise ValueError("t-test input must be finite")
    n = x.size
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == mu0:
            return TTestResult(t_stat=0.0, p_value=1.0, df=df, degenerate=True)
        sign = 1.0 if mean > mu0 else -1.0
        return TTestResult(t_stat=sign * math.inf, p_value=0.0, df=df, degenerate=True)
    t_stat = (mean - mu0) / (sd / math.sqrt(n))
    return TTestResult(t_stat=t_stat, p_value=_t_two_sided(t_stat, df), df=df)


def _metric_matrix(y: np.ndarray, s: np.ndarray, codes: np.ndarray, n_levels: int,
                   metrics: tuple[str, ...], threshold: float | None) -> np.ndarray:
    """Per-level metric values, nan where undefined.  Shape (n_levels, n_metrics)."""
    out = np.full((n_levels, len(metrics)), np.nan)
    need_threshold = any(m in _THRESHOLD_METRICS for m in metrics)
    for g in range(n_levels):
        mask = codes == g
        if not mask.any():
            continue
        yg = y[mask]
        sg = s[mask]
        pos = yg == 1
        n_pos = int(pos.sum())
        n_neg = yg.size - n_pos
        tp = fp = tn = fn = 0
        if need_threshold and threshold is not None:
            pred = sg >= threshold
            tp = int(np.count_nonzero(pred & pos))
            fp = int(np.count_nonzero(pred & ~pos))
            fn = n_pos - tp
            tn = n_neg - fp
        for j, m in enumerate(metrics):
            if m == "AUROC":
                if n_pos and n_neg:
                    ranks = rankdata(sg)
                    out[g, j] = (float(ranks[pos].sum()) - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
            elif threshold is not None:
                if m == "PPV" and tp + fp:
                    out[g, j] = tp / (tp + fp)
                elif m == "SENS" and n_pos:
                    out[g, j] = tp / n_pos
                elif m == "SPEC" and n_neg:
                    out[g, j] = tn / n_neg
                elif m == "FNR" and n_pos:
                    out[g, j] = fn / n_pos
                elif m == "FPR" and n_neg:
                    out[g, j] = fp / n_neg
    return out


def _diffs_from_values(values: np.ndarray) -> np.ndarray:
    """Column-wise diff-from-average; columns with < 2 defined entries go all-nan."""
    out = np.full_like(values, np.nan)
    for j in range(values.shape[1]):
        col = values[:, j]
        defined = np.isfinite(col)
        if int(defined.sum()) >= 2:
            out[defined, j] = col[defined] - col[defined].mean()
    return out


def _pooled_youden(y: np.ndarray, s: np.ndarray) -> float | None:
    from .metrics import _youden_or_none

    return _youden_or_none(y, s)


class _Prep:
    """Eligible-record arrays and per-attribute level codes for one model."""

    def __init__(self, cohort: Cohort, model: str, config: AuditConfig):
        scores = score_values(cohort, model)
        self.eligible = np.flatnonzero(~np.isnan(scores))
        if self.eligible.size == 0:
            raise InsufficientDataError(f"model {model!r} scored no records")
        self.y = label_values(cohort)[self.eligible]
        self.s = scores[self.eligible]
        self.n = int(self.eligible.size)
        self.attributes: list[tuple[str, tuple[str, ...], np.ndarray]] = []
        self.skipped: list[tuple[str, str]] = []
        for col in cohort.schema.protected_columns:
            try:
                part = subgroup_partition(cohort, col.name, config.min_group_size, subset=self.eligible)
            except InsufficientDataError as exc:
                self.skipped.append((col.name, str(exc)))
                log.info("skipping attribute %r: %s", col.name, exc)
                continue
            codes = np.full(self.n, -1, dtype=np.int32)
            for g, (_, idx) in enumerate(part.groups):
                codes[np.searchsorted(self.eligible, np.asarray(idx, dtype=np.int64))] = g
            self.attributes.append((col.name, part.levels, codes))


def _run_replicates(fn, n_replicates: int, workers: int) -> list:
    if workers <= 1:
        return [fn(b) for b in range(n_replicates)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_replicates)))


def _cell_result(model: str, attribute: str, level: str, metric: str,
                 diffs: np.ndarray, alpha: float) -> SubgroupAuditResult:
    finite = diffs[np.isfinite(diffs)]
    n_eff = int(finite.size)
    if n_eff < 2:
        return SubgroupAuditResult(
            model=model, attribute=attribute, level=level, metric=metric,
            mean_diff=None, sd=None, t_stat=None, p_value=None,
            significant=None, n_effective=n_eff, status=STATUS_INSUFFICIENT,
        )
    mean = float(finite.mean())
    sd = float(finite.std(ddof=1))
    if sd == 0.0:
        t_stat = 0.0 if mean == 0.0 else math.copysign(math.inf, mean)
        p_value = 1.0 if mean == 0.0 else 0.0
    else:
        t_stat = mean / sd
        p_value = _t_two_sided(t_stat, n_eff - 1)
    return SubgroupAuditResult(
        model=model, attribute=attribute, level=level, metric=metric,
        mean_diff=mean, sd=sd, t_stat=t_stat, p_value=p_value,
        significant=bool(p_value < alpha), n_effective=n_eff, status=STATUS_OK,
    )


def group_diffs(cohort: Cohort, indices, attribute: str, metric: str, model: str,
                threshold: float | None = None, min_group_size: int = 1) -> dict:
    """Single-pass subgroup metric values and diff-from-average.

    Groups ``indices`` by attribute level, computes ``metric`` per group
    (None where undefined), and subtracts the unweighted mean over defined
    groups.  Returns {level: GroupDiff(value, diff, n)} in partition order.
    Threshold metrics require ``threshold``.  Raises InsufficientDataError
    when fewer than two levels have a defined metric, since no average exists
    to diff against.
    """
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}; choose from {METRICS}")
    if metric in _THRESHOLD_METRICS and threshold is None:
        raise ConfigError(f"metric {metric} needs a threshold")
    part = subgroup_partition(cohort, attribute, min_group_size, subset=indices)
    y_all = label_values(cohort)
    s_all = score_values(cohort, model)
    result: dict[str, GroupDiff] = {}
    values: list[float | None] = []
    for level, idx in part.groups:
        arr = np.asarray(idx, dtype=np.int64)
        sg = s_all[arr]
        keep = ~np.isnan(sg)
        yg = y_all[arr][keep]
        sg = sg[keep]
        if yg.size == 0:
            values.append(None)
            result[level] = GroupDiff(value=None, diff=None, n=0)
            continue
        mat = _metric_matrix(yg, sg, np.zeros(yg.size, dtype=np.int32), 1, (metric,), threshold)
        v = mat[0, 0]
        values.append(None if np.isnan(v) else float(v))
        result[level] = GroupDiff(value=None if np.isnan(v) else float(v), diff=None, n=int(yg.size))
    defined = [v for v in values if v is not None]
    if len(defined) < 2:
        raise InsufficientDataError(
            f"{metric} is defined for {len(defined)} level(s) of {attribute!r}; "
            "need at least 2 to diff against their average"
        )
    avg = float(np.mean(defined))
    for level, v in zip(result.keys(), values):
        if v is not None:
            result[level] = GroupDiff(value=v, diff=v - avg, n=result[level].n)
    return result


def bootstrap_audit(cohort: Cohort, model: str, config: AuditConfig, workers: int = 1) -> list[SubgroupAuditResult]:
    """Bootstrap diff-from-average audit of one model across all attributes.

    Each replicate resamples the scored records with replacement (replicate
    ``b`` draws from its own random stream, so results do not depend on
    evaluation order or ``workers``), re-derives the decision threshold under
    the configured policy, and computes per-level diffs for every requested
    metric.  Cells with fewer than two defined replicates come back with
    status "insufficient" instead of fabricated statistics.
    """
    prep = _Prep(cohort, model, config)
    if not prep.attributes:
        return []

    metrics = config.metrics
    need_threshold = any(m in _THRESHOLD_METRICS for m in metrics)
    policy = config.threshold_policy

    cells: list[tuple[str, str, str]] = []
    layout: list[tuple[str, tuple[str, ...], np.ndarray]] = prep.attributes
    for attr, levels, _ in layout:
        for level in levels:
            for m in metrics:
                cells.append((attr, level, m))
    n_cells = len(cells)

    def replicate(b: int) -> np.ndarray:
        rng = stream(config.seed, "bootstrap", b)
        idx = rng.integers(0, prep.n, prep.n)
        yb = prep.y[idx]
        sb = prep.s[idx]
        threshold: float | None = None
        if need_threshold:
            threshold = policy.value if policy.kind == "fixed" else _pooled_youden(yb, sb)
        out = np.empty(n_cells)
        cursor = 0
        for attr, levels, codes in layout:
            mat = _metric_matrix(yb, sb, codes[idx], len(levels), metrics, threshold)
            diffs = _diffs_from_values(mat)
            block = len(levels) * len(metrics)
            out[cursor : cursor + block] = diffs.ravel()
            cursor += block
        return out

    draws = np.vstack(_run_replicates(replicate, config.n_bootstrap, workers))
    return [
        _cell_result(model, attr, level, metric, draws[:, j], config.alpha)
        for j, (attr, level, metric) in enumerate(cells)
    ]


def matched_audit(cohort: Cohort, model: str, config: AuditConfig, workers: int = 1) -> list[MatchedAuditResult]:
    """Re-run the subgroup audit on propensity-matched pairs.

    Every pair of surviving levels is matched separately (smaller level
    treated); the paired structure is preserved by resampling pairs, not
    records.  With two matched arms the diff-from-average reduces to half the
    arm difference, mirrored in sign between the two perspectives.  Contrasts
    whose matched sample is too small are reported "skipped" with counts;
    propensity failures surface as "failed" cells rather than exceptions.
    """
    if not config.propensity_covariates:
        raise ConfigError("matched audit needs propensity_covariates in the config")
    prep = _Prep(cohort, model, config)
    if not prep.attributes:
        return []

    metrics = config.metrics
    need_threshold = any(m in _THRESHOLD_METRICS for m in metrics)
    policy = config.threshold_policy
    y_all = label_values(cohort)
    s_all = score_values(cohort, model)

    per_level_cells: dict[tuple[str, str], list[MatchedCell]] = {}
    for attr, levels, _ in prep.attributes:
        for level in levels:
            per_level_cells[(attr, level)] = []

    for attr, levels, _ in prep.attributes:
        for i in range(len(levels)):
            for j in range(i + 1, len(levels)):
                li, lj = levels[i], levels[j]
                try:
                    sample, _ = match_contrast(
                        cohort, attr, li, lj, config.propensity_covariates,
                        caliper_multiplier=config.caliper_multiplier,
                        ridge=config.ridge, subset=prep.eligible,
                    )
                except (FitError, PropensityError) as exc:
                    detail = str(exc)
                    per_level_cells[(attr, li)].append(MatchedCell(opponent=lj, status=STATUS_FAILED, detail=detail))
                    per_level_cells[(attr, lj)].append(MatchedCell(opponent=li, status=STATUS_FAILED, detail=detail))
                    continue
                if sample.n_matched < config.min_matched_n:
                    detail = (
                        f"{len(sample.pairs)} pairs ({sample.n_matched} records) "
                        f"below min_matched_n={config.min_matched_n}"
                    )
                    per_level_cells[(attr, li)].append(MatchedCell(opponent=lj, status=STATUS_SKIPPED, detail=detail))
                    per_level_cells[(attr, lj)].append(MatchedCell(opponent=li, status=STATUS_SKIPPED, detail=detail))
                    continue

                t_idx = np.asarray([p.treated for p in sample.pairs], dtype=np.int64)
                c_idx = np.asarray([p.control for p in sample.pairs], dtype=np.int64)
                y_t, s_t = y_all[t_idx], s_all[t_idx]
                y_c, s_c = y_all[c_idx], s_all[c_idx]
                n_pairs = t_idx.size
                treated_level = sample.treated_level

                def replicate(b: int, _data=(y_t, s_t, y_c, s_c, n_pairs, attr, li, lj)) -> np.ndarray:
                    yt, st, yc, sc, np_, attr_, li_, lj_ = _data
                    rng = stream(config.seed, "matched", attr_, li_, lj_, b)
                    draw = rng.integers(0, np_, np_)
                    ytb, stb = yt[draw], st[draw]
                    ycb, scb = yc[draw], sc[draw]
                    threshold: float | None = None
                    if need_threshold:
                        if policy.kind == "fixed":
                            threshold = policy.value
                        else:
                            threshold = _pooled_youden(
                                np.concatenate([ytb, ycb]), np.concatenate([stb, scb])
                            )
                    y2 = np.concatenate([ytb, ycb])
                    s2 = np.concatenate([stb, scb])
                    codes = np.concatenate([np.zeros(np_, dtype=np.int32), np.ones(np_, dtype=np.int32)])
                    mat = _metric_matrix(y2, s2, codes, 2, metrics, threshold)
                    # Treated-perspective diff: (treated - control) / 2 when both defined.
                    out = np.full(len(metrics), np.nan)
                    both = np.isfinite(mat[0]) & np.isfinite(mat[1])
                    out[both] = (mat[0, both] - mat[1, both]) / 2.0
                    return out

                draws = np.vstack(_run_replicates(replicate, config.n_bootstrap, workers))
                for m_j, metric in enumerate(metrics):
                    treated_result = _cell_result(model, attr, treated_level, metric, draws[:, m_j], config.alpha)
                    mirrored = _cell_result(model, attr,
                                            lj if treated_level == li else li,
                                            metric, -draws[:, m_j], config.alpha)
                    for level, res in ((li, treated_result if treated_level == li else mirrored),
                                       (lj, treated_result if treated_level == lj else mirrored)):
                        opponent = lj if level == li else li
                        per_level_cells[(attr, level)].append(
                            MatchedCell(
                                opponent=opponent,
                                status=res.status,
                                result=res,
                                detail=f"{n_pairs} pairs",
                            )
                        )

    results: list[MatchedAuditResult] = []
    for attr, levels, _ in prep.attributes:
        opponent_order = {level: [o for o in levels if o != level] for level in levels}
        for level in levels:
            cells = per_level_cells[(attr, level)]
            ordered = []
            for opp in opponent_order[level]:
                for c in cells:
                    if c.opponent == opp:
                        ordered.append(c)
            results.append(MatchedAuditResult(model=model, attribute=attr, level=level, cells=tuple(ordered)))
    return results


def summarize_discrepancy(
    subgroup_results,
    matched_results,
    metric: str,
) -> list[DiscrepancySummary]:
    """Max minus min subgroup diff per (model, attribute), before and after matching.

    Matched cells are collapsed per level first (unweighted mean over that
    level's ok contrasts), so a level matched against several opponents
    contributes one number.  Gaps are order-invariant in the levels and left
    unrounded; rendering applies display rounding.
    """
    summaries: list[DiscrepancySummary] = []
    models: list[str] = []
    attrs: list[str] = []
    for r in subgroup_results:
        if r.model not in models:
            models.append(r.model)
        if r.attribute not in attrs:
            attrs.append(r.attribute)
    for r in matched_results:
        if r.model not in models:
            models.append(r.model)
        if r.attribute not in attrs:
            attrs.append(r.attribute)

    for model in models:
        for attr in attrs:
            before = [
                r.mean_diff
                for r in subgroup_results
                if r.model == model and r.attribute == attr and r.metric == metric
                and r.status == STATUS_OK and r.mean_diff is not None
            ]
            if len(before) >= 2:
                summaries.append(
                    DiscrepancySummary(
                        model=model, attribute=attr, metric=metric, matching="before",
                        gap=float(max(before) - min(before)), n_levels=len(before),
                    )
                )
            after: list[float] = []
            for row in matched_results:
                if row.model != model or row.attribute != attr:
                    continue
                vals = [
                    c.result.mean_diff
                    for c in row.cells
                    if c.status == STATUS_OK and c.result is not None
                    and c.result.metric == metric and c.result.mean_diff is not None
                ]
                if vals:
                    after.append(float(np.mean(vals)))
            if len(after) >= 2:
                summaries.append(
                    DiscrepancySummary(
                        model=model, attribute=attr, metric=metric, matching="after",
                        gap=float(max(after) - min(after)), n_levels=len(after),
                    )
                )
    return summaries


def compare_models(cohort: Cohort, model_a: str, model_b: str, config: AuditConfig, workers: int = 1) -> ComparisonReport:
    """Audit two score columns side by side on the same cohort.

    Replicate randomness depends only on (seed, replicate), so when both
    models score the same records the two audits resample identical index
    sets and cell deltas are paired.  Deltas are model_b minus model_a,
    None when either side is unavailable.
    """
    if model_a == model_b:
        raise ConfigError("compare_models needs two distinct score columns")
    for m in (model_a, model_b):
        if m not in cohort.model_names:
            raise ConfigError(f"unknown model {m!r}; cohort has {cohort.model_names}")

    sub_a = bootstrap_audit(cohort, model_a, config, workers)
    sub_b = bootstrap_audit(cohort, model_b, config, workers)
    run_matched = bool(config.propensity_covariates)
    mat_a = matched_audit(cohort, model_a, config, workers) if run_matched else []
    mat_b = matched_audit(cohort, model_b, config, workers) if run_matched else []
    return build_comparison(cohort, model_a, model_b, config, sub_a, sub_b, mat_a, mat_b)


def build_comparison(
    cohort: Cohort,
    model_a: str,
    model_b: str,
    config: AuditConfig,
    sub_a,
    sub_b,
    mat_a=(),
    mat_b=(),
) -> ComparisonReport:
    """Pair already-computed audit results of two models into a comparison."""
    deltas: list[DeltaCell] = []
    by_key_b = {(r.attribute, r.level, r.metric): r for r in sub_b}
    for ra in sub_a:
        rb = by_key_b.get((ra.attribute, ra.level, ra.metric))
        ok = rb is not None and ra.status == STATUS_OK and rb.status == STATUS_OK
        deltas.append(
            DeltaCell(
                attribute=ra.attribute, level=ra.level, metric=ra.metric,
                phase="before", opponent=None,
                delta=(rb.mean_diff - ra.mean_diff) if ok else None,
            )
        )
    cell_key_b = {}
    for row in mat_b:
        for c in row.cells:
            if c.result is not None:
                cell_key_b[(row.attribute, row.level, c.opponent, c.result.metric)] = c
    for row in mat_a:
        for c in row.cells:
            if c.result is None:
                continue
            cb = cell_key_b.get((row.attribute, row.level, c.opponent, c.result.metric))
            ok = (
                cb is not None and cb.result is not None
                and c.status == STATUS_OK and cb.status == STATUS_OK
            )
            deltas.append(
                DeltaCell(
                    attribute=row.attribute, level=row.level, metric=c.result.metric,
                    phase="after", opponent=c.opponent,
                    delta=(cb.result.mean_diff - c.result.mean_diff) if ok else None,
                )
            )

    overall: dict = {}
    for m in (model_a, model_b):
        scores = score_values(cohort, m)
        keep = ~np.isnan(scores)
        y = label_values(cohort)[keep]
        s = scores[keep]
        entry: dict = {"n": int(keep.sum())}
        threshold: float | None = None
        if any(x in _THRESHOLD_METRICS for x in config.metrics):
            threshold = (
                config.threshold_policy.value
                if config.threshold_policy.kind == "fixed"
                else _pooled_youden(y, s)
            )
            entry["threshold"] = threshold
        mat = _metric_matrix(y, s, np.zeros(y.size, dtype=np.int32), 1, config.metrics, threshold)
        for j, name in enumerate(config.metrics):
            v = mat[0, j]
            entry[name] = None if np.isnan(v) else float(v)
        overall[m] = entry

    return ComparisonReport(
        model_a=model_a, model_b=model_b,
        subgroup_a=tuple(sub_a), subgroup_b=tuple(sub_b),
        matched_a=tuple(mat_a), matched_b=tuple(mat_b),
        deltas=tuple(deltas), overall=overall,
    )
