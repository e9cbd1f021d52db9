"""Synthetic cohorts with known ground truth.

The generator draws protected attributes, covariates shifted per level,
outcome labels from a logistic model, and a risk score that is either the
true probability plus noise or a logistic model trained on the generated
data.  Bias is then injected per subgroup (extra score noise, a score shift,
or label flips), each injection drawing from its own random stream so that
two configs differing only in injections share identical base data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ._rng import stream
from .cohort import (
    Cohort,
    CohortRecord,
    CohortSchema,
    CovariateColumn,
    ProtectedColumn,
    _build,
    attribute_values,
    label_values,
    score_values,
    with_score_column,
)
from .errors import ConfigError
from .glm import encode_design, fit_logistic, predict_proba
from .metrics import _auroc_or_none

_MECHANISMS = ("score_noise", "score_shift", "label_flip")


@dataclass(frozen=True)
class ProtectedSpec:
    name: str
    levels: tuple[str, ...]
    weights: tuple[float, ...]


@dataclass(frozen=True)
class CovariateSpec:
    """One synthetic covariate.

    ``shifts`` moves the covariate per protected level: a gaussian covariate
    gets its mean shifted, a bernoulli covariate gets the shift added on the
    log-odds scale.  Keyed as {attribute: {level: shift}}.
    """

    name: str
    kind: str = "gaussian"
    mu: float = 0.0
    sigma: float = 1.0
    p: float = 0.5
    shifts: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OutcomeModel:
    """Logistic outcome: logit P(y=1) = intercept + sum(weights * covariate)
    plus optional per-level protected terms."""

    intercept: float = 0.0
    weights: dict = field(default_factory=dict)
    protected_weights: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScoreModel:
    """How the risk score is produced.

    "oracle_noise": the true outcome probability plus N(0, noise_sd), clamped
    to [0, 1].  "trained_logistic": fit a logistic model on ``features`` over
    the generated data and use its predictions.
    """

    kind: str = "oracle_noise"
    noise_sd: float = 0.05
    features: tuple[str, ...] = ()


@dataclass(frozen=True)
class Injection:
    """Deliberate degradation of one subgroup.

    mechanism "score_noise": add N(0, amount) to the subgroup's scores;
    "score_shift": add ``amount`` to the subgroup's scores;
    "label_flip": flip each subgroup label with probability ``amount``.
    Scores are re-clamped to [0, 1] after every injection.
    """

    attribute: str
    level: str
    mechanism: str
    amount: float


@dataclass(frozen=True)
class SynthConfig:
    n: int
    protected: tuple[ProtectedSpec, ...] = ()
    covariates: tuple[CovariateSpec, ...] = ()
    outcome: OutcomeModel = field(default_factory=OutcomeModel)
    score: ScoreModel = field(default_factory=ScoreModel)
    injections: tuple[Injection, ...] = ()
    seed: int = 0
    score_name: str = "score"


def _validate(config: SynthConfig) -> dict[str, dict[str, float]]:
    """Cross-field checks; returns normalized level weights per attribute."""
    if config.n < 1:
        raise ConfigError(f"synthetic cohort size must be >= 1, got {config.n}")
    if not config.score_name:
        raise ConfigError("score_name must be non-empty")
    weights: dict[str, dict[str, float]] = {}
    for spec in config.protected:
        if len(spec.levels) != len(spec.weights):
            raise ConfigError(f"protected {spec.name!r}: levels and weights differ in length")
        if len(set(spec.levels)) != len(spec.levels):
            raise ConfigError(f"protected {spec.name!r}: duplicate levels")
        w = np.asarray(spec.weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise ConfigError(f"protected {spec.name!r}: weights must be non-negative with positive sum")
        weights[spec.name] = dict(zip(spec.levels, (w / w.sum()).tolist()))
    cov_names = [c.name for c in config.covariates]
    if len(set(cov_names)) != len(cov_names):
        raise ConfigError("duplicate covariate names")
    for cov in config.covariates:
        if cov.kind not in ("gaussian", "bernoulli"):
            raise ConfigError(f"covariate {cov.name!r}: kind must be gaussian or bernoulli")
        if cov.kind == "gaussian" and cov.sigma <= 0:
            raise ConfigError(f"covariate {cov.name!r}: sigma must be positive")
        if cov.kind == "bernoulli" and not 0 < cov.p < 1:
            raise ConfigError(f"covariate {cov.name!r}: p must be inside (0, 1)")
        for attr, by_level in cov.shifts.items():
            if attr not in weights:
                raise ConfigError(f"covariate {cov.name!r}: shift references unknown attribute {attr!r}")
            for level in by_level:
                if level not in weights[attr]:
                    raise ConfigError(f"covariate {cov.name!r}: shift references unknown level {level!r}")
    for name in config.outcome.weights:
        if name not in cov_names:
            raise ConfigError(f"outcome model references unknown covariate {name!r}")
    for attr, by_level in config.outcome.protected_weights.items():
        if attr not in weights:
            raise ConfigError(f"outcome model references unknown attribute {attr!r}")
        for level in by_level:
            if level not in weights[attr]:
                raise ConfigError(f"outcome model references unknown level {level!r}")
    if config.score.kind not in ("oracle_noise", "trained_logistic"):
        raise ConfigError(f"score model kind must be oracle_noise or trained_logistic, got {config.score.kind!r}")
    if config.score.kind == "oracle_noise" and config.score.noise_sd < 0:
        raise ConfigError("score noise_sd must be >= 0")
    if config.score.kind == "trained_logistic":
        missing = [f for f in config.score.features if f not in cov_names]
        if missing:
            raise ConfigError(f"score model features not among covariates: {', '.join(missing)}")
        if not config.score.features:
            raise ConfigError("trained_logistic score model needs features")
    for inj in config.injections:
        if inj.mechanism not in _MECHANISMS:
            raise ConfigError(f"unknown injection mechanism {inj.mechanism!r}; choose from {_MECHANISMS}")
        if inj.attribute not in weights:
            raise ConfigError(f"injection references unknown attribute {inj.attribute!r}")
        if inj.level not in weights[inj.attribute]:
            raise ConfigError(f"injection references unknown level {inj.level!r} of {inj.attribute!r}")
        if weights[inj.attribute][inj.level] == 0.0:
            raise ConfigError(
                f"injection targets level {inj.level!r} of {inj.attribute!r}, which has probability 0"
            )
        if inj.mechanism == "label_flip" and not 0 <= inj.amount <= 1:
            raise ConfigError("label_flip amount is a probability and must lie in [0, 1]")
        if inj.mechanism == "score_noise" and inj.amount < 0:
            raise ConfigError("score_noise amount must be >= 0")
    return weights


def generate(config: SynthConfig) -> tuple[Cohort, dict]:
    """Generate a scored cohort plus a manifest of the planted truth.

    Every stochastic step has its own stream keyed by purpose, so editing one
    part of the config (say, adding an injection) leaves all other one draws
    untouched: a biased cohort and its bias-free twin differ only where the
    injection touched.
    """
    weights = _validate(config)
    n = config.n

    level_draws: dict[str, np.ndarray] = {}
    for spec in config.protected:
        rng = stream(config.seed, "protected", spec.name)
        p = np.asarray([weights[spec.name][lv] for lv in spec.levels])
        level_draws[spec.name] = rng.choice(np.asarray(spec.levels, dtype=object), size=n, p=p)

    cov_values: dict[str, np.ndarray] = {}
    for cov in config.covariates:
        rng = stream(config.seed, "covariate", cov.name)
        shift = np.zeros(n)
        for attr, by_level in cov.shifts.items():
            drawn = level_draws[attr]
            for level, delta in by_level.items():
                shift[drawn == level] += delta
        if cov.kind == "gaussian":
            cov_values[cov.name] = rng.normal(cov.mu, cov.sigma, n) + shift
        else:
            base = np.log(cov.p) - np.log1p(-cov.p)
            prob = expit(base + shift)
            cov_values[cov.name] = (rng.random(n) < prob).astype(np.int64)

    eta = np.full(n, float(config.outcome.intercept))
    for name, w in config.outcome.weights.items():
        eta += float(w) * cov_values[name].astype(float)
    for attr, by_level in config.outcome.protected_weights.items():
        drawn = level_draws[attr]
        for level, w in by_level.items():
            eta[drawn == level] += float(w)
    p_true = expit(eta)
    labels = (stream(config.seed, "outcome").random(n) < p_true).astype(np.int64)

    if config.score.kind == "oracle_noise":
        noise = stream(config.seed, "score").normal(0.0, config.score.noise_sd, n) \
            if config.score.noise_sd > 0 else np.zeros(n)
        scores = np.clip(p_true + noise, 0.0, 1.0)
    else:
        scores = None  # filled in after records exist; needs a design matrix

    for i, inj in enumerate(config.injections):
        mask = level_draws[inj.attribute] == inj.level
        rng = stream(config.seed, "injection", i)
        if inj.mechanism == "label_flip":
            u = rng.random(n)
            flip = mask & (u < inj.amount)
            labels = np.where(flip, 1 - labels, labels)
        elif scores is not None:
            if inj.mechanism == "score_noise":
                extra = rng.normal(0.0, inj.amount, n)
                scores = np.where(mask, scores + extra, scores)
            else:
                scores = np.where(mask, scores + inj.amount, scores)
            scores = np.clip(scores, 0.0, 1.0)

    width = max(4, len(str(n)))
    records = []
    for i in range(n):
        records.append(
            CohortRecord(
                id=f"r{i + 1:0{width}d}",
                label=int(labels[i]),
                scores={},
                protected={spec.name: str(level_draws[spec.name][i]) for spec in config.protected},
                covariates={
                    cov.name: (float(cov_values[cov.name][i]) if cov.kind == "gaussian"
                               else int(cov_values[cov.name][i]))
                    for cov in config.covariates
                },
            )
        )
    schema = CohortSchema(
        id_column="id",
        label_column="label",
        score_columns=((config.score_name, config.score_name),),
        protected_columns=tuple(ProtectedColumn(name=s.name) for s in config.protected),
        covariate_columns=tuple(
            CovariateColumn(name=c.name, kind="numeric" if c.kind == "gaussian" else "binary")
            for c in config.covariates
        ),
    )

    if scores is None:
        bare = _build(records, schema)
        design = encode_design(bare, range(n), config.score.features)
        model = fit_logistic(design, labels.astype(float), ridge=1e-6)
        scores = predict_proba(model, design)
        # trained scores see post-injection labels, as a refit in the wild would
        for inj_i, inj in enumerate(config.injections):
            if inj.mechanism == "label_flip":
                continue
            mask = level_draws[inj.attribute] == inj.level
            rng = stream(config.seed, "injection", inj_i)
            if inj.mechanism == "score_noise":
                scores = np.where(mask, scores + rng.normal(0.0, inj.amount, n), scores)
            else:
                scores = np.where(mask, scores + inj.amount, scores)
            scores = np.clip(scores, 0.0, 1.0)

    for i, rec in enumerate(records):
        records[i] = CohortRecord(
            id=rec.id, label=rec.label,
            scores={config.score_name: float(scores[i])},
            protected=rec.protected, covariates=rec.covariates,
        )
    cohort = _build(records, schema)

    manifest = {
        "schema_version": 1,
        "seed": config.seed,
        "n": n,
        "score_name": config.score_name,
        "protected": [
            {"name": s.name, "levels": list(s.levels), "weights": [weights[s.name][lv] for lv in s.levels]}
            for s in config.protected
        ],
        "covariates": [
            {"name": c.name, "kind": c.kind, "mu": c.mu, "sigma": c.sigma, "p": c.p,
             "shifts": {a: dict(b) for a, b in c.shifts.items()}}
            for c in config.covariates
        ],
        "outcome": {
            "intercept": config.outcome.intercept,
            "weights": dict(config.outcome.weights),
            "protected_weights": {a: dict(b) for a, b in config.outcome.protected_weights.items()},
        },
        "score_model": {
            "kind": config.score.kind,
            "noise_sd": config.score.noise_sd,
            "features": list(config.score.features),
        },
        "injections": [
            {"attribute": j.attribute, "level": j.level, "mechanism": j.mechanism, "amount": j.amount}
            for j in config.injections
        ],
        "empirical": _empirical_summary(cohort, config.score_name),
    }
    return cohort, manifest


def _empirical_summary(cohort: Cohort, model: str) -> dict:
    y = label_values(cohort)
    s = score_values(cohort, model)
    out: dict = {
        "prevalence": float(y.mean()),
        "auroc_overall": _auroc_or_none(y, s),
        "subgroups": [],
    }
    for col in cohort.schema.protected_columns:
        vals = attribute_values(cohort, col.name)
        for level in cohort.attribute_levels[col.name]:
            idx = [i for i, v in enumerate(vals) if v == level]
            if not idx:
                continue
            arr = np.asarray(idx)
            out["subgroups"].append(
                {
                    "attribute": col.name,
                    "level": level,
                    "n": len(idx),
                    "auroc": _auroc_or_none(y[arr], s[arr]),
                }
            )
    return out


def _require_keys(doc: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = [k for k in doc if k not in allowed]
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def config_from_dict(doc: dict) -> SynthConfig:
    """Build a SynthConfig from a plain JSON document.

    Expected shape::

        {"n": 3000, "seed": 7, "score_name": "score",
         "protected": [{"name": "race", "levels": [...], "weights": [...]}],
         "covariates": [{"name": "sofa", "kind": "gaussian", "mu": 0, "sigma": 1,
                         "shifts": {"race": {"Black": 0.4}}}],
         "outcome": {"intercept": -1.0, "weights": {"sofa": 1.5},
                     "protected_weights": {}},
         "score": {"kind": "oracle_noise", "noise_sd": 0.05},
         "injections": [{"attribute": "race", "level": "Black",
                         "mechanism": "score_noise", "amount": 0.3}]}

    Unknown keys anywhere raise ConfigError so typos fail loudly.
    """
    _require_keys(doc, ("n", "seed", "score_name", "protected", "covariates",
                        "outcome", "score", "injections"), "synth config")
    if "n" not in doc:
        raise ConfigError("synth config needs 'n'")
    protected = []
    for p in doc.get("protected", []):
        _require_keys(p, ("name", "levels", "weights"), f"protected spec {p.get('name', '?')!r}")
        protected.append(
            ProtectedSpec(name=p["name"], levels=tuple(p["levels"]), weights=tuple(p["weights"]))
        )
    covariates = []
    for c in doc.get("covariates", []):
        _require_keys(c, ("name", "kind", "mu", "sigma", "p", "shifts"),
                      f"covariate spec {c.get('name', '?')!r}")
        covariates.append(
            CovariateSpec(
                name=c["name"], kind=c.get("kind", "gaussian"),
                mu=float(c.get("mu", 0.0)), sigma=float(c.get("sigma", 1.0)),
                p=float(c.get("p", 0.5)), shifts=dict(c.get("shifts", {})),
            )
        )
    o = doc.get("outcome", {})
    _require_keys(o, ("intercept", "weights", "protected_weights"), "outcome model")
    outcome = OutcomeModel(
        intercept=float(o.get("intercept", 0.0)),
        weights=dict(o.get("weights", {})),
        protected_weights=dict(o.get("protected_weights", {})),
    )
    s = doc.get("score", {})
    _require_keys(s, ("kind", "noise_sd", "features"), "score model")
    score = ScoreModel(
        kind=s.get("kind", "oracle_noise"),
        noise_sd=float(s.get("noise_sd", 0.05)),
        features=tuple(s.get("features", ())),
    )
    injections = []
    for j in doc.get("injections", []):
        _require_keys(j, ("attribute", "level", "mechanism", "amount"), "injection")
        injections.append(
            Injection(attribute=j["attribute"], level=j["level"],
                      mechanism=j["mechanism"], amount=float(j["amount"]))
        )
    return SynthConfig(
        n=int(doc["n"]),
        protected=tuple(protected),
        covariates=tuple(covariates),
        outcome=outcome,
        score=score,
        injections=tuple(injections),
        seed=int(doc.get("seed", 0)),
        score_name=doc.get("score_name", "score"),
    )


def split_train_test(cohort: Cohort, test_fraction: float, seed: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Label-stratified train/test split of record positions.

    Each class is permuted in its own stream and ``round(fraction * n_class)``
    members go to test, clamped so both splits keep both classes whenever a
    class has at least two records.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test fraction must lie inside (0, 1), got {test_fraction}")
    y = label_values(cohort)
    if y.min() == y.max():
        raise ValueError("cohort is single-class; stratified split impossible")
    test: list[int] = []
    train: list[int] = []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        rng = stream(seed, "split", cls)
        perm = rng.permutation(idx.size)
        k = round(test_fraction * idx.size)
        if idx.size >= 2:
            k = min(max(k, 1), idx.size - 1)
        chosen = idx[perm[:k]]
        rest = idx[perm[k:]]
        test.extend(int(i) for i in chosen)
        train.extend(int(i) for i in rest)
    return tuple(sorted(train)), tuple(sorted(test))


def demo_train(cohort: Cohort, train_indices, features, ridge: float = 1e-6,
               score_name: str = "trained"):
    """Fit a logistic model on the training rows and score the whole cohort.

    Returns (cohort with the new score column, fitted model).  Encoding
    statistics come from the training rows only; the rest of the cohort is
    scored through the stored descriptors, as held-out data should be.
    """
    idx = [int(i) for i in train_indices]
    y = label_values(cohort)
    design = encode_design(cohort, idx, features)
    model = fit_logistic(design, y[idx].astype(float), ridge=ridge)
    full = encode_design(cohort, range(cohort.n), features, reuse=model.columns)
    preds = predict_proba(model, full)
    return with_score_column(cohort, score_name, score_name, preds), model
