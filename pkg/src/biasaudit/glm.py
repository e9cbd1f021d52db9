"""Design-matrix encoding and Newton-method logistic regression.

The solver is deliberately small: dense numpy linear algebra, an optional
ridge penalty on non-intercept terms, and honest convergence reporting.  It
exists so propensity models and synthetic demo models run identically
everywhere with no modelling-framework dependency.

Feature descriptors make encodings reusable: encoding a new subset against a
fitted model's columns applies the stored centering, scaling, and imputation
rather than re-deriving them, which is what scoring held-out data requires.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .cohort import MISSING, MISSING_LABEL, Cohort
from .errors import ConfigError, FitError

log = logging.getLogger(__name__)

_CLIP = 1e-12


@dataclass(frozen=True)
class FeatureColumn:
    """One column of a design matrix.

    kind "intercept": constant 1.
    kind "numeric":   (value - center) / scale, missing values imputed with
                      ``impute`` before the transform.
    kind "indicator": 1 when the record's value equals ``level`` (missing
                      values compare as MISSING_LABEL, so an indicator with
                      level MISSING_LABEL is a missingness flag).
    """

    kind: str
    name: str = ""
    level: str | None = None
    center: float = 0.0
    scale: float = 1.0
    impute: float = 0.0

    def label(self) -> str:
        if self.kind == "intercept":
            return "intercept"
        if self.kind == "numeric":
            return self.name
        return f"{self.name}={self.level}"


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    columns: tuple[FeatureColumn, ...]
    values: np.ndarray
    row_index: tuple[int, ...]
    dropped: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class LogisticModel:
    columns: tuple[FeatureColumn, ...]
    coefficients: np.ndarray
    converged: bool
    iterations: int
    final_gradient_norm: float
    ridge: float


def _covariate_kind(cohort: Cohort, name: str) -> str:
    for col in cohort.schema.covariate_columns:
        if col.name == name:
            return col.kind
    raise ConfigError(f"unknown covariate {name!r}")


def _raw_column(cohort: Cohort, indices, name: str) -> list:
    return [cohort.records[i].covariates[name] for i in indices]


def _grouping_value(v) -> str:
    return MISSING_LABEL if v is MISSING else str(v)


def encode_design(
    cohort: Cohort,
    indices,
    covariates,
    reuse: tuple[FeatureColumn, ...] | None = None,
) -> DesignMatrix:
    """Encode cohort rows into a numeric design matrix.

    The intercept column comes first.  Numeric covariates are standardized to
    mean 0, sd 1 on the encoded rows (population sd), with missing values
    imputed at the observed mean and flagged by an extra indicator column.
    Binary covariates pass through as 0/1 (imputed at the observed rate when
    missing).  Categorical covariates become k-1 indicators against the first
    observed level, with missingness as its own level.  Columns with zero
    variance are dropped and logged.

    With ``reuse`` the stored descriptors are applied verbatim instead, so a
    model fitted on one subset can score another.
    """
    idx = [int(i) for i in indices]
    if not idx:
        raise ValueError("cannot encode an empty row subset")
    names = list(covariates)

    if reuse is not None:
        return _encode_reuse(cohort, idx, reuse)

    columns: list[FeatureColumn] = [FeatureColumn(kind="intercept")]
    vectors: list[np.ndarray] = [np.ones(len(idx))]
    dropped: list[str] = []

    for name in names:
        kind = _covariate_kind(cohort, name)
        raw = _raw_column(cohort, idx, name)
        if kind in ("numeric", "binary"):
            observed = np.asarray([v for v in raw if v is not MISSING], dtype=float)
            if observed.size == 0:
                raise ConfigError(f"covariate {name!r} is entirely missing on the encoded subset")
            mean = float(observed.mean())
            filled = np.asarray([mean if v is MISSING else float(v) for v in raw])
            has_missing = len(observed) < len(raw)
            if kind == "numeric":
                sd = float(filled.std())
                if sd == 0.0:
                    dropped.append(name)
                    log.warning("dropping zero-variance covariate column %r", name)
                else:
                    columns.append(
                        FeatureColumn(kind="numeric", name=name, center=mean, scale=sd, impute=mean)
                    )
                    vectors.append((filled - mean) / sd)
            else:
                if filled.std() == 0.0:
                    dropped.append(name)
                    log.warning("dropping constant binary covariate column %r", name)
                else:
                    columns.append(FeatureColumn(kind="numeric", name=name, impute=mean))
                    vectors.append(filled)
            if has_missing and name not in dropped:
                columns.append(FeatureColumn(kind="indicator", name=name, level=MISSING_LABEL))
                vectors.append(np.asarray([1.0 if v is MISSING else 0.0 for v in raw]))
        else:
            grouped = [_grouping_value(v) for v in raw]
            levels: list[str] = []
            for v in grouped:
                if v not in levels:
                    levels.append(v)
            for level in levels[1:]:
                columns.append(FeatureColumn(kind="indicator", name=name, level=level))
                vectors.append(np.asarray([1.0 if v == level else 0.0 for v in grouped]))

    values = np.column_stack(vectors)
    return DesignMatrix(
        columns=tuple(columns), values=values, row_index=tuple(idx), dropped=tuple(dropped)
    )


def _encode_reuse(cohort: Cohort, idx: list[int], reuse: tuple[FeatureColumn, ...]) -> DesignMatrix:
    vectors: list[np.ndarray] = []
    for col in reuse:
        if col.kind == "intercept":
            vectors.append(np.ones(len(idx)))
            continue
        raw = _raw_column(cohort, idx, col.name)
        if col.kind == "numeric":
            filled = np.asarray([col.impute if v is MISSING else float(v) for v in raw])
            vectors.append((filled - col.center) / col.scale)
        else:
            grouped = [_grouping_value(v) for v in raw]
            vectors.append(np.asarray([1.0 if v == col.level else 0.0 for v in grouped]))
    return DesignMatrix(
        columns=tuple(reuse), values=np.column_stack(vectors), row_index=tuple(idx)
    )


def fit_logistic(
    design: DesignMatrix,
    outcomes,
    ridge: float = 1e-6,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> LogisticModel:
    """Fit logistic regression by Newton's method from a zero start.

    Maximizes the log-likelihood minus ``ridge/2 * ||beta||^2`` over the
    non-intercept coefficients.  Stops when the penalized gradient max-norm
    or the step max-norm drops to ``tol``; ``converged`` reports whether the
    final gradient actually meets the tolerance.  A singular Hessian on the
    very first step is structural (collinear columns with ridge=0) and raises
    FitError; singularity appearing later, the signature of separation-driven
    divergence, ends the fit with ``converged=False``.

    Complete separation at ridge=0 can also saturate the gradient to zero at
    enormous coefficients instead of breaking the Hessian.  That case is
    caught directly: when every fitted probability lies within 1e-6 of its
    label, the coefficients themselves witness a separating hyperplane, the
    true maximum is at infinity, and the fit is reported ``converged=False``.
    """
    y = np.asarray(outcomes, dtype=float)
    X = design.values
    if y.shape != (X.shape[0],):
        raise ValueError(f"outcomes shape {y.shape} does not match design rows {X.shape[0]}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("outcomes must be 0 or 1")
    if y.min() == y.max():
        raise ValueError("outcomes are single-class; nothing to fit")
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")

    n, p = X.shape
    mask = np.asarray([0.0 if c.kind == "intercept" else 1.0 for c in design.columns])
    beta = np.zeros(p)
    iterations = 0

    def gradient(b: np.ndarray) -> np.ndarray:
        return X.T @ (y - expit(X @ b)) - ridge * mask * b

    for it in range(1, max_iter + 1):
        g = gradient(beta)
        if np.max(np.abs(g)) <= tol:
            break
        p_hat = expit(X @ beta)
        w = p_hat * (1.0 - p_hat)
        hess = (X * w[:, None]).T @ X + ridge * np.diag(mask)
        try:
            step = np.linalg.solve(hess, g)
        except np.linalg.LinAlgError:
            step = None
        if step is None or not np.all(np.isfinite(step)):
            if it == 1:
                raise FitError(
                    "Hessian is singular at the start: the design has collinear "
                    "columns; drop redundant covariates or set ridge > 0"
                )
            break
        beta = beta + step
        iterations = it
        if np.max(np.abs(step)) <= tol:
            break

    g_final = gradient(beta)
    norm = float(np.max(np.abs(g_final)))
    separated = ridge == 0.0 and bool(np.max(np.abs(expit(X @ beta) - y)) < 1e-6)
    return LogisticModel(
        columns=design.columns,
        coefficients=beta,
        converged=bool(norm <= tol) and not separated,
        iterations=iterations,
        final_gradient_norm=norm,
        ridge=float(ridge),
    )


def predict_proba(model: LogisticModel, design: DesignMatrix) -> np.ndarray:
    """Predicted probabilities, clipped away from exact 0 and 1.

    The design must carry the same feature descriptors the model was fitted
    with (encode with ``reuse=model.columns`` for new rows).
    """
    if design.columns != model.columns:
        raise ValueError("design matrix columns do not match the model's feature descriptors")
    return np.clip(expit(design.values @ model.coefficients), _CLIP, 1.0 - _CLIP)


def _column_dict(col: FeatureColumn) -> dict:
    return {
        "kind": col.kind,
        "name": col.name,
        "level": col.level,
        "center": col.center,
        "scale": col.scale,
        "impute": col.impute,
    }


def export_model(model: LogisticModel, path=None) -> str:
    """Serialize a fitted model to JSON; optionally write it to ``path``."""
    doc = {
        "schema_version": 1,
        "columns": [_column_dict(c) for c in model.columns],
        "coefficients": [float(b) for b in model.coefficients],
        "converged": model.converged,
        "iterations": model.iterations,
        "final_gradient_norm": model.final_gradient_norm,
        "ridge": model.ridge,
    }
    text = json.dumps(doc, indent=2)
    if path is not None:
        with open(os.fspath(path), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text


def load_model(source) -> LogisticModel:
    """Inverse of export_model; accepts a path or the JSON text itself."""
    if isinstance(source, (str, os.PathLike)) and os.path.exists(os.fspath(source)):
        with open(os.fspath(source), "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = json.loads(source)
    columns = tuple(
        FeatureColumn(
            kind=c["kind"],
            name=c["name"],
            level=c["level"],
            center=c["center"],
            scale=c["scale"],
            impute=c["impute"],
        )
        for c in doc["columns"]
    )
    return LogisticModel(
        columns=columns,
        coefficients=np.asarray(doc["coefficients"], dtype=float),
        converged=bool(doc["converged"]),
        iterations=int(doc["iterations"]),
        final_gradient_norm=float(doc["final_gradient_norm"]),
        ridge=float(doc["ridge"]),
    )
