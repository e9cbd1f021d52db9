"""Cohort data model: ingestion, validation, binning, and subgroup partitions.

A cohort is a flat table of patients: one id column, one binary outcome label,
one score column per model, plus protected attributes and covariates.  Parsing
is strict about anything that would silently corrupt an audit (bad labels,
out-of-range scores, duplicate ids) and lenient only where the downstream
analysis has a well-defined answer (missing values).

Missing values are carried as the ``MISSING`` sentinel rather than ``nan`` or
``None`` so that "absent" is distinguishable from both legitimate data and
from bugs.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CohortValidationError,
    ConfigError,
    InsufficientDataError,
    RowIssue,
    SchemaError,
)


class _MissingType:
    """Singleton marker for an absent value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MISSING"

    def __reduce__(self):
        return (_MissingType, ())


MISSING = _MissingType()

# Pseudo-level label under which records missing a protected attribute are
# grouped.  Kept out of attribute_levels; appended last in partitions.
MISSING_LABEL = "MISSING"

_PROTECTED_KINDS = ("categorical", "continuous")
_COVARIATE_KINDS = ("numeric", "binary", "categorical")


@dataclass(frozen=True)
class ProtectedColumn:
    """A protected attribute column.

    Continuous attributes are binned into ordered bands before any grouping:
    either at explicit ``bin_edges`` (a full, strictly increasing breakpoint
    list) or, when ``bin_edges`` is None, at observed tertiles.
    """

    name: str
    kind: str = "categorical"
    bin_edges: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in _PROTECTED_KINDS:
            raise SchemaError(
                f"protected column {self.name!r}: kind must be one of "
                f"{_PROTECTED_KINDS}, got {self.kind!r}"
            )
        if self.bin_edges is not None:
            if self.kind != "continuous":
                raise SchemaError(
                    f"protected column {self.name!r}: bin_edges only apply to "
                    "continuous columns"
                )
            object.__setattr__(self, "bin_edges", tuple(float(e) for e in self.bin_edges))


@dataclass(frozen=True)
class CovariateColumn:
    name: str
    kind: str = "numeric"

    def __post_init__(self):
        if self.kind not in _COVARIATE_KINDS:
            raise SchemaError(
                f"covariate column {self.name!r}: kind must be one of "
                f"{_COVARIATE_KINDS}, got {self.kind!r}"
            )


@dataclass(frozen=True)
class CohortSchema:
    """Names and roles of every column the parser should read.

    ``score_columns`` maps model names to file columns, in report order.
    ``missing_tokens`` are the exact strings (after whitespace stripping)
    treated as absent values; matching is case-sensitive.
    """

    id_column: str
    label_column: str
    score_columns: tuple[tuple[str, str], ...]
    protected_columns: tuple[ProtectedColumn, ...] = ()
    covariate_columns: tuple[CovariateColumn, ...] = ()
    missing_tokens: tuple[str, ...] = ("", "NA")
    delimiter: str = ","

    def __post_init__(self):
        object.__setattr__(self, "score_columns", tuple((str(m), str(c)) for m, c in self.score_columns))
        object.__setattr__(self, "protected_columns", tuple(self.protected_columns))
        object.__setattr__(self, "covariate_columns", tuple(self.covariate_columns))
        object.__setattr__(self, "missing_tokens", tuple(self.missing_tokens))
        if not self.score_columns:
            raise SchemaError("schema needs at least one score column")
        names = [self.id_column, self.label_column]
        names += [c for _, c in self.score_columns]
        names += [p.name for p in self.protected_columns]
        names += [c.name for c in self.covariate_columns]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise SchemaError(f"schema assigns multiple roles to column(s): {', '.join(dupes)}")
        models = [m for m, _ in self.score_columns]
        if len(set(models)) != len(models):
            raise SchemaError("duplicate model names in score_columns")

    @property
    def model_names(self) -> tuple[str, ...]:
        return tuple(m for m, _ in self.score_columns)

    def protected(self, name: str) -> ProtectedColumn:
        for col in self.protected_columns:
            if col.name == name:
                return col
        raise ConfigError(f"unknown protected attribute {name!r}")


@dataclass(frozen=True)
class CohortRecord:
    """One row of the cohort.  Mappings are never mutated after construction.

    ``scores`` holds only the models that scored this record (absent scores
    are simply missing keys); ``protected`` keeps continuous attributes as raw
    floats, binning happens at the cohort level; ``covariates`` values are
    float, int 0/1, str, or MISSING depending on the declared kind.
    """

    id: str
    label: int
    scores: dict
    protected: dict
    covariates: dict


@dataclass(frozen=True)
class Cohort:
    """An immutable, validated cohort.

    ``attribute_levels`` fixes the reporting order of subgroup levels: for
    categorical attributes, distinct non-missing values in first-appearance
    order; for continuous attributes, bin labels in ascending band order.
    ``breakpoints`` stores the resolved bin boundaries of each continuous
    attribute so partitions and serialization round-trips stay consistent.
    ``diagnostics`` records rows dropped during parsing (and why).
    """

    records: tuple[CohortRecord, ...]
    schema: CohortSchema
    attribute_levels: dict[str, tuple[str, ...]]
    breakpoints: dict[str, tuple[float, ...]] = field(default_factory=dict)
    diagnostics: tuple[RowIssue, ...] = ()

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def model_names(self) -> tuple[str, ...]:
        return self.schema.model_names


def _fmt_edge(x: float) -> str:
    return format(x, "g")


def _bin_labels(breakpoints: tuple[float, ...]) -> tuple[str, ...]:
    labels = []
    for i in range(len(breakpoints) - 1):
        close = "]" if i == len(breakpoints) - 2 else ")"
        labels.append(f"[{_fmt_edge(breakpoints[i])} - {_fmt_edge(breakpoints[i + 1])}{close}")
    return tuple(labels)


def _resolve_breakpoints(observed: np.ndarray, edges: tuple[float, ...] | None) -> tuple[float, ...]:
    """Breakpoints for binning: explicit edges, or min/tertile/tertile/max."""
    if edges is not None:
        bp = tuple(float(e) for e in edges)
        if len(bp) < 2:
            raise ValueError("explicit bin edges need at least two breakpoints")
    else:
        if observed.size == 0:
            raise ValueError("cannot derive tertiles: no observed values")
        if observed.size < 3:
            raise ValueError(
                f"tertile binning needs at least 3 non-missing values, got {observed.size}"
            )
        q1, q2 = np.quantile(observed, [1.0 / 3.0, 2.0 / 3.0])
        bp = (float(observed.min()), float(q1), float(q2), float(observed.max()))
    for a, b in zip(bp, bp[1:]):
        if not a < b:
            raise ValueError(
                f"bin breakpoints must be strictly increasing, got {bp}; "
                "the data is too tied for tertiles, supply explicit bin edges"
            )
    return bp


def _assign_bin(value: float, breakpoints: tuple[float, ...], labels: tuple[str, ...]) -> str:
    if value < breakpoints[0] or value > breakpoints[-1]:
        raise ValueError(
            f"value {value!r} falls outside the bin range "
            f"[{breakpoints[0]}, {breakpoints[-1]}]"
        )
    if value == breakpoints[-1]:
        return labels[-1]
    idx = int(np.searchsorted(breakpoints, value, side="right")) - 1
    return labels[idx]


def bin_continuous(values, edges: tuple[float, ...] | None = None) -> list:
    """Bin numeric values into labelled bands; MISSING passes through.

    With ``edges=None`` the bands are observed tertiles: breakpoints at the
    minimum, the 1/3 and 2/3 quantiles (linear interpolation), and the
    maximum.  Explicit ``edges`` are taken as the full breakpoint list.  Bands
    are left-closed, the last band right-closed, labelled like
    ``"[14 - 52)"`` and ``"[67 - 102]"``.

    Raises ValueError when breakpoints are not strictly increasing (tied
    data under tertiles) or an observed value falls outside explicit edges.
    """
    vals = list(values)
    observed = np.asarray([v for v in vals if v is not MISSING], dtype=float)
    bp = _resolve_breakpoints(observed, edges)
    labels = _bin_labels(bp)
    return [v if v is MISSING else _assign_bin(float(v), bp, labels) for v in vals]


def attribute_values(cohort: Cohort, attribute: str) -> list:
    """Per-record level labels for one protected attribute.

    Categorical values come back as-is; continuous values are mapped through
    the cohort's stored breakpoints.  MISSING stays MISSING.
    """
    col = cohort.schema.protected(attribute)
    raw = [rec.protected[attribute] for rec in cohort.records]
    if col.kind == "categorical":
        return raw
    bp = cohort.breakpoints[attribute]
    labels = _bin_labels(bp)
    return [v if v is MISSING else _assign_bin(float(v), bp, labels) for v in raw]


def label_values(cohort: Cohort) -> np.ndarray:
    return np.fromiter((rec.label for rec in cohort.records), dtype=np.int64, count=cohort.n)


def score_values(cohort: Cohort, model: str) -> np.ndarray:
    """Scores for one model as a float array, nan where the record was unscored."""
    if model not in cohort.model_names:
        raise ConfigError(f"unknown model {model!r}; cohort has {cohort.model_names}")
    return np.fromiter(
        (rec.scores.get(model, np.nan) for rec in cohort.records), dtype=float, count=cohort.n
    )


@dataclass(frozen=True)
class SubgroupPartition:
    """Disjoint index groups for one protected attribute.

    ``groups`` are (level, record indices) in reporting order, missing-value
    pseudo-level last.  ``excluded`` lists levels left out as
    (level, count, reason) with reason "too small", "missing", or "empty".
    Together they cover every record exactly once.
    """

    attribute: str
    groups: tuple[tuple[str, tuple[int, ...]], ...]
    excluded: tuple[tuple[str, int, str], ...] = ()

    @property
    def levels(self) -> tuple[str, ...]:
        return tuple(level for level, _ in self.groups)


def subgroup_partition(
    cohort: Cohort,
    attribute: str,
    min_group_size: int = 100,
    subset=None,
) -> SubgroupPartition:
    """Split record indices by protected-attribute level.

    Levels with fewer than ``min_group_size`` members are excluded (reason
    "too small"); records missing the attribute form their own pseudo-level,
    kept if it clears the same threshold and excluded with reason "missing"
    otherwise.  ``subset`` restricts the records considered (positions, e.g.
    only those a model actually scored).  Raises InsufficientDataError when
    fewer than two groups survive, since a diff-from-average audit needs
    something to compare.
    """
    values = attribute_values(cohort, attribute)
    pool = range(cohort.n) if subset is None else sorted(int(i) for i in subset)
    order = list(cohort.attribute_levels[attribute])
    buckets: dict[str, list[int]] = {level: [] for level in order}
    missing_idx: list[int] = []
    for i in pool:
        v = values[i]
        if v is MISSING:
            missing_idx.append(i)
        else:
            buckets[v].append(i)

    groups: list[tuple[str, tuple[int, ...]]] = []
    excluded: list[tuple[str, int, str]] = []
    for level in order:
        idx = buckets[level]
        if not idx:
            excluded.append((level, 0, "empty"))
        elif len(idx) < min_group_size:
            excluded.append((level, len(idx), "too small"))
        else:
            groups.append((level, tuple(idx)))
    if missing_idx:
        if len(missing_idx) >= min_group_size:
            groups.append((MISSING_LABEL, tuple(missing_idx)))
        else:
            excluded.append((MISSING_LABEL, len(missing_idx), "missing"))

    if len(groups) < 2:
        raise InsufficientDataError(
            f"partition on {attribute!r} leaves {len(groups)} group(s) at "
            f"min_group_size={min_group_size}; nothing to compare"
        )
    return SubgroupPartition(attribute=attribute, groups=tuple(groups), excluded=tuple(excluded))


def _build(records: list[CohortRecord], schema: CohortSchema, diagnostics: tuple[RowIssue, ...] = ()) -> Cohort:
    """Assemble a Cohort: derive attribute level order and bin breakpoints."""
    attribute_levels: dict[str, tuple[str, ...]] = {}
    breakpoints: dict[str, tuple[float, ...]] = {}
    for col in schema.protected_columns:
        raw = [rec.protected[col.name] for rec in records]
        if col.kind == "categorical":
            seen: list[str] = []
            for v in raw:
                if v is not MISSING and v not in seen:
                    seen.append(v)
            attribute_levels[col.name] = tuple(seen)
        else:
            observed = np.asarray([v for v in raw if v is not MISSING], dtype=float)
            bp = _resolve_breakpoints(observed, col.bin_edges)
            breakpoints[col.name] = bp
            attribute_levels[col.name] = _bin_labels(bp)
    return Cohort(
        records=tuple(records),
        schema=schema,
        attribute_levels=attribute_levels,
        breakpoints=breakpoints,
        diagnostics=diagnostics,
    )


def _parse_float(text: str) -> float:
    value = float(text)
    if not np.isfinite(value):
        raise ValueError("non-finite")
    return value


def parse_cohort(source, schema: CohortSchema) -> Cohort:
    """Read and validate a delimited cohort file.

    ``source`` is a path or an open text stream.  Rows with a missing label or
    with every score missing are dropped and logged in ``diagnostics``; any
    other defect (malformed number, label outside {0, 1}, score outside
    [0, 1], missing or duplicate id, ragged row) is collected and raised as a
    CohortValidationError listing each offending line.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(os.fspath(source), "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text), delimiter=schema.delimiter)
    rows = list(reader)
    if not rows:
        raise CohortValidationError([RowIssue(None, None, "empty cohort file")])

    header = [h.strip() for h in rows[0]]
    required = [schema.id_column, schema.label_column]
    required += [c for _, c in schema.score_columns]
    required += [p.name for p in schema.protected_columns]
    required += [c.name for c in schema.covariate_columns]
    absent = [c for c in required if c not in header]
    if absent:
        raise SchemaError(f"cohort header is missing column(s): {', '.join(absent)}")
    pos = {name: header.index(name) for name in required}

    tokens = set(schema.missing_tokens)
    issues: list[RowIssue] = []
    dropped: list[RowIssue] = []
    records: list[CohortRecord] = []
    seen_ids: set[str] = set()

    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != len(header):
            issues.append(RowIssue(line_no, None, f"expected {len(header)} fields, found {len(row)}"))
            continue

        def cell(name: str):
            raw = row[pos[name]].strip()
            return MISSING if raw in tokens else raw

        row_bad = False

        rid = cell(schema.id_column)
        if rid is MISSING:
            issues.append(RowIssue(line_no, schema.id_column, "missing id"))
            row_bad = True
        elif rid in seen_ids:
            issues.append(RowIssue(line_no, schema.id_column, f"duplicate id {rid!r}"))
            row_bad = True
        else:
            seen_ids.add(rid)

        label_raw = cell(schema.label_column)
        label: int | None = None
        if label_raw is MISSING:
            label = None
        elif label_raw in ("0", "1"):
            label = int(label_raw)
        else:
            issues.append(RowIssue(line_no, schema.label_column, f"label must be 0 or 1, got {label_raw!r}"))
            row_bad = True

        scores: dict = {}
        for model, colname in schema.score_columns:
            raw = cell(colname)
            if raw is MISSING:
                continue
            try:
                value = _parse_float(raw)
            except ValueError:
                issues.append(RowIssue(line_no, colname, f"unparseable score {raw!r}"))
                row_bad = True
                continue
            if not 0.0 <= value <= 1.0:
                issues.append(RowIssue(line_no, colname, f"score {value} outside [0, 1]"))
                row_bad = True
                continue
            scores[model] = value

        protected: dict = {}
        for col in schema.protected_columns:
            raw = cell(col.name)
            if raw is MISSING:
                protected[col.name] = MISSING
            elif col.kind == "categorical":
                protected[col.name] = raw
            else:
                try:
                    protected[col.name] = _parse_float(raw)
                except ValueError:
                    issues.append(RowIssue(line_no, col.name, f"unparseable numeric value {raw!r}"))
                    row_bad = True

        covariates: dict = {}
        for col in schema.covariate_columns:
            raw = cell(col.name)
            if raw is MISSING:
                covariates[col.name] = MISSING
            elif col.kind == "categorical":
                covariates[col.name] = raw
            elif col.kind == "binary":
                if raw in ("0", "1"):
                    covariates[col.name] = int(raw)
                else:
                    issues.append(RowIssue(line_no, col.name, f"binary covariate must be 0 or 1, got {raw!r}"))
                    row_bad = True
            else:
                try:
                    covariates[col.name] = _parse_float(raw)
                except ValueError:
                    issues.append(RowIssue(line_no, col.name, f"unparseable numeric value {raw!r}"))
                    row_bad = True

        if row_bad:
            continue
        if label is None:
            dropped.append(RowIssue(line_no, schema.label_column, "label missing; row dropped"))
            continue
        if not scores:
            dropped.append(RowIssue(line_no, None, "all scores missing; row dropped"))
            continue
        records.append(
            CohortRecord(id=rid, label=label, scores=scores, protected=protected, covariates=covariates)
        )

    if issues:
        raise CohortValidationError(issues)
    if not records:
        raise CohortValidationError([RowIssue(None, None, "no usable rows after validation")])

    try:
        return _build(records, schema, diagnostics=tuple(dropped))
    except ValueError as exc:
        raise CohortValidationError([RowIssue(None, None, str(exc))]) from exc


def _render_value(value, kind: str, missing_token: str) -> str:
    if value is MISSING:
        return missing_token
    if kind == "float":
        return repr(float(value))
    if kind == "int":
        return str(int(value))
    return str(value)


def write_cohort(cohort: Cohort, path) -> None:
    """Serialize a cohort so that re-parsing it yields an equal Cohort.

    ``path`` may also be an open text stream, mirroring ``parse_cohort``.
    Floats are written with ``repr`` (exact round-trip); continuous protected
    attributes are written as their raw values, not bin labels, so the
    re-parsed cohort re-derives identical bins.
    """
    schema = cohort.schema
    if not schema.missing_tokens:
        has_missing = any(
            v is MISSING
            for rec in cohort.records
            for v in (*rec.protected.values(), *rec.covariates.values())
        ) or any(len(rec.scores) < len(schema.score_columns) for rec in cohort.records)
        if has_missing:
            raise ValueError("cohort has missing values but the schema declares no missing tokens")
        token = ""
    else:
        token = schema.missing_tokens[0]

    header = [schema.id_column, schema.label_column]
    header += [c for _, c in schema.score_columns]
    header += [p.name for p in schema.protected_columns]
    header += [c.name for c in schema.covariate_columns]

    def _emit(fh) -> None:
        writer = csv.writer(fh, delimiter=schema.delimiter, lineterminator="\n")
        writer.writerow(header)
        for rec in cohort.records:
            row = [rec.id, str(rec.label)]
            for model, _ in schema.score_columns:
                row.append(repr(float(rec.scores[model])) if model in rec.scores else token)
            for col in schema.protected_columns:
                kind = "float" if col.kind == "continuous" else "str"
                row.append(_render_value(rec.protected[col.name], kind, token))
            for col in schema.covariate_columns:
                kind = {"numeric": "float", "binary": "int", "categorical": "str"}[col.kind]
                row.append(_render_value(rec.covariates[col.name], kind, token))
            writer.writerow(row)

    if hasattr(path, "write"):
        _emit(path)
        return
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        _emit(fh)


def with_score_column(cohort: Cohort, model: str, column: str, scores) -> Cohort:
    """Return a new cohort with one extra score column appended.

    ``scores`` aligns with record order; nan entries mean "unscored".  Used by
    the synthetic training helper to attach model outputs.
    """
    if model in cohort.model_names:
        raise ConfigError(f"model name {model!r} already present")
    schema = replace(cohort.schema, score_columns=cohort.schema.score_columns + ((model, column),))
    arr = np.asarray(scores, dtype=float)
    if arr.shape != (cohort.n,):
        raise ValueError(f"scores must align with {cohort.n} records, got shape {arr.shape}")
    if np.any((arr < 0) & ~np.isnan(arr)) or np.any((arr > 1) & ~np.isnan(arr)):
        raise ValueError("scores must lie in [0, 1]")
    records = []
    for rec, s in zip(cohort.records, arr):
        scores_map = dict(rec.scores)
        if not np.isnan(s):
            scores_map[model] = float(s)
        records.append(replace(rec, scores=scores_map))
    return Cohort(
        records=tuple(records),
        schema=schema,
        attribute_levels=dict(cohort.attribute_levels),
        breakpoints=dict(cohort.breakpoints),
        diagnostics=cohort.diagnostics,
    )
