"""
Comparing two candidate models on the same cohort
=================================================

Should protected attributes be model inputs?  Train one model without them
(M1) and one with (M2) on the same training rows, score the held-out rows
with both, and run the paired comparison: replicate randomness depends only
on the seed and replicate number, so both models see identical resamples and
their per-cell deltas are directly interpretable.
"""

from biasaudit.audit import AuditConfig, compare_models
from biasaudit.cohort import CohortSchema, CovariateColumn, ProtectedColumn, parse_cohort, write_cohort
from biasaudit.metrics import auroc
from biasaudit.cohort import label_values, score_values
from biasaudit.synth import (
    CovariateSpec,
    OutcomeModel,
    ProtectedSpec,
    ScoreModel,
    SynthConfig,
    demo_train,
    generate,
    split_train_test,
)

config = SynthConfig(
    n=5000,
    protected=(
        ProtectedSpec("race", ("Black", "White", "Other"), (0.25, 0.55, 0.20)),
        ProtectedSpec("sex", ("F", "M"), (0.5, 0.5)),
    ),
    covariates=(
        CovariateSpec("severity", shifts={"race": {"Black": 0.5}}),
        CovariateSpec("labs"),
    ),
    # The outcome depends on race directly here, so M2 has real signal to
    # gain by using it, and the fairness question has teeth.
    outcome=OutcomeModel(intercept=-1.0, weights={"severity": 0.9, "labs": 0.7},
                         protected_weights={"race": {"Black": 0.4}}),
    score=ScoreModel(kind="oracle_noise", noise_sd=0.05),
    seed=29,
)
cohort, _ = generate(config)
write_cohort(cohort, "demo_training_cohort.csv")

# Reparse with the protected columns declared as categorical covariates so
# they are available as model features; the audit below reparses them as
# protected attributes instead.
train_schema = CohortSchema(
    id_column="id", label_column="label", score_columns=(("score", "score"),),
    covariate_columns=(
        CovariateColumn("severity"), CovariateColumn("labs"),
        CovariateColumn("race", "categorical"), CovariateColumn("sex", "categorical"),
    ),
)
trainable = parse_cohort("demo_training_cohort.csv", train_schema)
train_idx, test_idx = split_train_test(trainable, test_fraction=0.3, seed=1)

trainable, m1 = demo_train(trainable, train_idx, ("severity", "labs"), score_name="m1")
trainable, m2 = demo_train(trainable, train_idx,
                           ("severity", "labs", "race", "sex"), score_name="m2")

y = label_values(trainable)
test = list(test_idx)
print("held-out overall AUROC:")
for name in ("m1", "m2"):
    s = score_values(trainable, name)
    print(f"  {name}: {auroc(y[test], s[test]):.4f}")

# Audit view of the scored cohort: race and sex are protected again.
write_cohort(trainable, "demo_scored_cohort.csv")
audit_schema = CohortSchema(
    id_column="id", label_column="label",
    score_columns=(("m1", "m1"), ("m2", "m2")),
    protected_columns=(ProtectedColumn("race"), ProtectedColumn("sex")),
    covariate_columns=(CovariateColumn("severity"), CovariateColumn("labs")),
)
audit_cohort = parse_cohort("demo_scored_cohort.csv", audit_schema)

audit_config = AuditConfig(
    metrics=("AUROC",),
    n_bootstrap=150,
    seed=0,
    propensity_covariates=("severity", "labs"),
    min_group_size=100,
    min_matched_n=100,
)
report = compare_models(audit_cohort, "m1", "m2", audit_config)

print()
print(f"comparison is {report.model_b} minus {report.model_a}; positive "
      "delta = the model with protected features does better for that cell")
print()
print("cell deltas (AUROC):")
for d in report.deltas:
    if d.delta is None:
        continue
    cell = f"{d.attribute}={d.level}" + (f" vs {d.opponent}" if d.opponent else "")
    print(f"  {d.phase:<7} {cell:<22} {d.delta:+.4f}")
