"""
Auditing a model for subgroup bias
==================================

The core question: does the model perform differently for one subgroup than
for the others?  Each metric is computed per level and reported as a diff
from the unweighted average over levels, so the diffs always sum to zero and
a single bad subgroup stands out as one negative number.  Significance comes
from bootstrap resampling; matching then re-asks the question on comparable
pairs to separate model bias from case-mix differences.
"""

from biasaudit.audit import AuditConfig, bootstrap_audit, matched_audit, summarize_discrepancy
from biasaudit.synth import (
    CovariateSpec,
    Injection,
    OutcomeModel,
    ProtectedSpec,
    ScoreModel,
    SynthConfig,
    generate,
)

# Ground truth: the score is degraded (extra noise, sd 0.3) for Black
# patients only.  Severity also differs by group, so part of any raw gap is
# case mix, not model behavior.
config = SynthConfig(
    n=4000,
    protected=(
        ProtectedSpec("race", ("Black", "White", "Other"), (0.25, 0.55, 0.20)),
        ProtectedSpec("sex", ("F", "M"), (0.5, 0.5)),
    ),
    covariates=(CovariateSpec("severity", shifts={"race": {"Black": 0.5}}),),
    outcome=OutcomeModel(intercept=-1.0, weights={"severity": 1.6}),
    score=ScoreModel(kind="oracle_noise", noise_sd=0.05),
    injections=(Injection("race", "Black", "score_noise", 0.3),),
    seed=7,
)
cohort, _ = generate(config)

audit_config = AuditConfig(
    metrics=("AUROC", "SENS", "FPR"),
    n_bootstrap=150,
    alpha=0.05,
    seed=0,
    propensity_covariates=("severity",),
    min_group_size=100,
    min_matched_n=100,
)

results = bootstrap_audit(cohort, "score", audit_config)

print("subgroup audit (diff from average; * = significant at alpha=0.05):")
current = None
for r in results:
    if (r.attribute, r.level) != current:
        current = (r.attribute, r.level)
        print(f"  {r.attribute} = {r.level}:")
    if r.status != "ok":
        print(f"    {r.metric:<6} {r.status}")
        continue
    star = "*" if r.significant else " "
    print(f"    {r.metric:<6} {r.mean_diff:+.4f}{star}  (sd {r.sd:.4f}, "
          f"p {r.p_value:.3f})")

# The matched pass re-evaluates each level against every other level of its
# attribute on propensity-matched pairs.  A gap that survives matching is
# model behavior, not case mix.
matched = matched_audit(cohort, "score", audit_config)

print()
print("matched audit (per opponent contrast):")
for row in matched:
    cells = []
    for c in row.cells:
        if c.status != "ok":
            cells.append(f"{c.opponent}: {c.status}")
        elif c.result.metric == "AUROC":
            star = "*" if c.result.significant else ""
            cells.append(f"{c.opponent}: {c.result.mean_diff:+.4f}{star}")
    if cells:
        print(f"  {row.attribute}={row.level:<7} AUROC vs {{{', '.join(cells)}}}")

# One number per attribute: the spread (max - min) of the collapsed diffs,
# before and after matching.
print()
print("max discrepancy per attribute (AUROC):")
for s in summarize_discrepancy(results, matched, "AUROC"):
    print(f"  {s.attribute:<6} {s.matching:<7} gap {s.gap:.4f} over {s.n_levels} levels")
