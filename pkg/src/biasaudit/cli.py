"""Command-line front end.

Subcommands:

``audit``     bootstrap + matched subgroup audit of one or more score columns
``compare``   side-by-side audit of exactly two score columns
``match``     propensity matching and balance diagnostics only
``synth``     generate a synthetic cohort from a config
``validate``  parse a cohort and emit a machine-readable validation report

Exit codes: 0 success, 2 configuration or validation failure, 3 statistical
failure (every audited cell insufficient), 4 report rendering failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .audit import (
    STATUS_OK,
    AuditConfig,
    ThresholdPolicy,
    bootstrap_audit,
    build_comparison,
    matched_audit,
    summarize_discrepancy,
)
from .cohort import (
    CohortSchema,
    CovariateColumn,
    ProtectedColumn,
    label_values,
    parse_cohort,
    score_values,
    subgroup_partition,
    write_cohort,
)
from .errors import (
    AuditError,
    CohortValidationError,
    ConfigError,
    FitError,
    InsufficientDataError,
    PropensityError,
    SchemaError,
)
from .matching import balance_report, export_pairs, match_contrast
from .metrics import calibration_curve
from .report import build_bundle, render
from .synth import config_from_dict as synth_config_from_dict
from .synth import generate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STATISTICAL = 3
EXIT_RENDER = 4

_RUN_KEYS = ("cohort", "schema", "audit", "output_dir", "formats", "workers",
             "calibration_bins", "models")
_SCHEMA_KEYS = ("id_column", "label_column", "score_columns", "protected",
                "covariates", "missing_tokens", "delimiter")
_AUDIT_KEYS = ("metrics", "n_bootstrap", "alpha", "seed", "threshold",
               "propensity_covariates", "caliper_multiplier", "min_group_size",
               "min_matched_n", "rounding", "ridge")


@dataclass(frozen=True)
class RunConfig:
    cohort: str
    schema: CohortSchema
    audit: AuditConfig
    output_dir: str = "report"
    formats: tuple[str, ...] = ("json", "csv", "markdown", "svg")
    workers: int = 1
    calibration_bins: int = 10
    models: tuple[str, ...] | None = None
    config_hash: str = ""


def _check_keys(doc: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = [k for k in doc if k not in allowed]
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _schema_from_dict(doc: dict) -> CohortSchema:
    _check_keys(doc, _SCHEMA_KEYS, "schema")
    for key in ("id_column", "label_column", "score_columns"):
        if key not in doc:
            raise ConfigError(f"schema needs {key!r}")
    raw_scores = doc["score_columns"]
    score_columns: list[tuple[str, str]] = []
    for entry in raw_scores:
        if isinstance(entry, str):
            score_columns.append((entry, entry))
        elif isinstance(entry, (list, tuple)) and len(entry) == 2:
            score_columns.append((str(entry[0]), str(entry[1])))
        else:
            raise ConfigError(
                "score_columns entries must be 'name' or ['model', 'column'], "
                f"got {entry!r}"
            )
    protected = []
    for p in doc.get("protected", []):
        _check_keys(p, ("name", "kind", "bin_edges"), f"protected column {p.get('name', '?')!r}")
        if "name" not in p:
            raise ConfigError("protected column entry needs 'name'")
        edges = p.get("bin_edges")
        protected.append(
            ProtectedColumn(
                name=p["name"],
                kind=p.get("kind", "categorical"),
                bin_edges=None if edges is None else tuple(edges),
            )
        )
    covariates = []
    for c in doc.get("covariates", []):
        _check_keys(c, ("name", "kind"), f"covariate column {c.get('name', '?')!r}")
        if "name" not in c:
            raise ConfigError("covariate column entry needs 'name'")
        covariates.append(CovariateColumn(name=c["name"], kind=c.get("kind", "numeric")))
    return CohortSchema(
        id_column=doc["id_column"],
        label_column=doc["label_column"],
        score_columns=tuple(score_columns),
        protected_columns=tuple(protected),
        covariate_columns=tuple(covariates),
        missing_tokens=tuple(doc.get("missing_tokens", ("", "NA"))),
        delimiter=doc.get("delimiter", ","),
    )


def _threshold_from_value(value) -> ThresholdPolicy:
    if value is None or value == "youden":
        return ThresholdPolicy.youden()
    if isinstance(value, (int, float)):
        return ThresholdPolicy.fixed(float(value))
    if isinstance(value, dict):
        _check_keys(value, ("kind", "value"), "threshold policy")
        kind = value.get("kind", "youden")
        if kind == "youden":
            return ThresholdPolicy.youden()
        if kind == "fixed":
            if "value" not in value:
                raise ConfigError("fixed threshold policy needs 'value'")
            return ThresholdPolicy.fixed(float(value["value"]))
    raise ConfigError(f"cannot interpret threshold policy {value!r}")


def _audit_from_dict(doc: dict) -> AuditConfig:
    _check_keys(doc, _AUDIT_KEYS, "audit config")
    kwargs: dict = {}
    if "metrics" in doc:
        kwargs["metrics"] = tuple(doc["metrics"])
    for key in ("n_bootstrap", "seed", "min_group_size", "min_matched_n", "rounding"):
        if key in doc:
            kwargs[key] = int(doc[key])
    for key in ("alpha", "ridge"):
        if key in doc:
            kwargs[key] = float(doc[key])
    if "caliper_multiplier" in doc:
        cm = doc["caliper_multiplier"]
        kwargs["caliper_multiplier"] = None if cm is None else float(cm)
    if "propensity_covariates" in doc:
        kwargs["propensity_covariates"] = tuple(doc["propensity_covariates"])
    if "threshold" in doc:
        kwargs["threshold_policy"] = _threshold_from_value(doc["threshold"])
    return AuditConfig(**kwargs)


def load_run_config(path, overrides: dict | None = None) -> RunConfig:
    """Load a run config JSON file; ``overrides`` are flag values that win
    over file values (None entries are ignored)."""
    try:
        with open(os.fspath(path), "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(doc, _RUN_KEYS, "run config")
    for key in ("cohort", "schema"):
        if key not in doc:
            raise ConfigError(f"run config needs {key!r}")

    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    audit_doc = dict(doc.get("audit", {}))
    for key in ("seed", "n_bootstrap"):
        if key in overrides:
            audit_doc[key] = overrides[key]

    schema = _schema_from_dict(doc["schema"])
    audit = _audit_from_dict(audit_doc)

    cohort_path = doc["cohort"]
    if not os.path.isabs(cohort_path):
        cohort_path = os.path.join(os.path.dirname(os.path.abspath(os.fspath(path))), cohort_path)

    # The hash fingerprints the analysis, not the execution: where the report
    # lands, which formats get rendered, and how many worker threads run must
    # not change it, or identical analyses would disagree about provenance.
    execution_keys = ("output_dir", "formats", "workers")
    hashed_doc = {k: v for k, v in doc.items() if k not in execution_keys}
    hashed_overrides = {k: v for k, v in overrides.items() if k not in execution_keys}
    canonical = json.dumps({"config": hashed_doc, "overrides": hashed_overrides},
                           sort_keys=True, separators=(",", ":"))
    config_hash = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    models = doc.get("models")
    return RunConfig(
        cohort=cohort_path,
        schema=schema,
        audit=audit,
        output_dir=overrides.get("output_dir", doc.get("output_dir", "report")),
        formats=tuple(doc.get("formats", ("json", "csv", "markdown", "svg"))),
        workers=int(overrides.get("workers", doc.get("workers", 1))),
        calibration_bins=int(doc.get("calibration_bins", 10)),
        models=None if models is None else tuple(models),
        config_hash=config_hash,
    )


def _read_cohort(rc: RunConfig):
    try:
        return parse_cohort(rc.cohort, rc.schema)
    except OSError as exc:
        raise ConfigError(f"cannot read cohort file {rc.cohort!r}: {exc}") from exc


def _metadata(rc: RunConfig, cohort, models) -> dict:
    cfg = rc.audit
    policy = cfg.threshold_policy
    skipped = []
    for col in cohort.schema.protected_columns:
        try:
            subgroup_partition(cohort, col.name, cfg.min_group_size)
        except InsufficientDataError as exc:
            skipped.append({"attribute": col.name, "reason": str(exc)})
    return {
        "version": __version__,
        "config_hash": rc.config_hash,
        "models": list(models),
        "n_records": cohort.n,
        "n_dropped_rows": len(cohort.diagnostics),
        "seed": cfg.seed,
        "n_bootstrap": cfg.n_bootstrap,
        "alpha": cfg.alpha,
        "rounding": cfg.rounding,
        "metrics": list(cfg.metrics),
        "threshold_policy": policy.kind if policy.value is None else f"{policy.kind}={policy.value}",
        "min_group_size": cfg.min_group_size,
        "min_matched_n": cfg.min_matched_n,
        "caliper_multiplier": cfg.caliper_multiplier,
        "propensity_covariates": list(cfg.propensity_covariates),
        "skipped_attributes": skipped,
    }


def _balance_rows(cohort, model: str, cfg: AuditConfig) -> list[dict]:
    """Matching diagnostics per level pair, mirroring the matched audit's
    contrasts for one model's scored records."""
    scores = score_values(cohort, model)
    eligible = np.flatnonzero(~np.isnan(scores))
    rows: list[dict] = []
    for col in cohort.schema.protected_columns:
        try:
            part = subgroup_partition(cohort, col.name, cfg.min_group_size, subset=eligible)
        except InsufficientDataError:
            continue
        levels = part.levels
        for i in range(len(levels)):
            for j in range(i + 1, len(levels)):
                row: dict = {"model": model, "attribute": col.name}
                try:
                    sample, _ = match_contrast(
                        cohort, col.name, levels[i], levels[j],
                        cfg.propensity_covariates,
                        caliper_multiplier=cfg.caliper_multiplier,
                        ridge=cfg.ridge, subset=eligible,
                    )
                except (FitError, PropensityError) as exc:
                    row.update(
                        treated_level=levels[i], control_level=levels[j],
                        status="failed", detail=str(exc), covariates=[],
                        matched_n=0, passes_min_n=False,
                    )
                    rows.append(row)
                    continue
                bal = balance_report(cohort, sample, cfg.propensity_covariates, cfg.min_matched_n)
                status = STATUS_OK if bal.passes_min_n else "skipped"
                detail = "" if bal.passes_min_n else (
                    f"{len(sample.pairs)} pairs ({sample.n_matched} records) "
                    f"below min_matched_n={cfg.min_matched_n}"
                )
                row.update(
                    treated_level=sample.treated_level,
                    control_level=sample.control_level,
                    caliper=sample.caliper,
                    unmatched_treated=sample.unmatched_treated,
                    matched_n=bal.matched_n,
                    passes_min_n=bal.passes_min_n,
                    status=status,
                    detail=detail,
                    covariates=[
                        {"name": c.name, "smd_before": c.smd_before, "smd_after": c.smd_after}
                        for c in bal.covariates
                    ],
                )
                rows.append(row)
    return rows


def _audit_pipeline(rc: RunConfig, models) -> tuple:
    """Run the full audit for the given models; returns (bundle, exit_code)."""
    cohort = _read_cohort(rc)
    available = cohort.model_names
    for m in models or ():
        if m not in available:
            raise ConfigError(f"unknown model {m!r}; cohort has {available}")
    models = tuple(models) if models else available

    cfg = rc.audit
    subgroup_all = []
    matched_all = []
    balance_rows: list[dict] = []
    calibration = {}
    for model in models:
        subgroup_all.extend(bootstrap_audit(cohort, model, cfg, rc.workers))
        if cfg.propensity_covariates:
            matched_all.extend(matched_audit(cohort, model, cfg, rc.workers))
            balance_rows.extend(_balance_rows(cohort, model, cfg))
        scores = score_values(cohort, model)
        keep = ~np.isnan(scores)
        calibration[model] = calibration_curve(
            label_values(cohort)[keep], scores[keep], rc.calibration_bins
        )

    discrepancy = []
    for metric in cfg.metrics:
        discrepancy.extend(summarize_discrepancy(subgroup_all, matched_all, metric))

    comparison = None
    if len(models) == 2:
        sub_a = [r for r in subgroup_all if r.model == models[0]]
        sub_b = [r for r in subgroup_all if r.model == models[1]]
        mat_a = [r for r in matched_all if r.model == models[0]]
        mat_b = [r for r in matched_all if r.model == models[1]]
        comparison = build_comparison(cohort, models[0], models[1], cfg,
                                      sub_a, sub_b, mat_a, mat_b)

    bundle = build_bundle(
        metadata=_metadata(rc, cohort, models),
        subgroup=subgroup_all,
        matched=matched_all,
        discrepancy=discrepancy,
        balance=balance_rows,
        calibration=calibration,
        comparison=comparison,
    )
    code = EXIT_OK
    if not subgroup_all or all(r.status != STATUS_OK for r in subgroup_all):
        print("warning: no audited cell reached sufficiency", file=sys.stderr)
        code = EXIT_STATISTICAL
    return bundle, code


def _render_bundle(bundle, rc: RunConfig) -> int:
    try:
        paths = render(bundle, rc.output_dir, rc.formats)
    except OSError as exc:
        print(f"error: could not write report: {exc}", file=sys.stderr)
        return EXIT_RENDER
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_audit(args) -> int:
    rc = load_run_config(args.config, {
        "seed": args.seed, "n_bootstrap": args.n_bootstrap,
        "workers": args.workers, "output_dir": args.output_dir,
    })
    bundle, code = _audit_pipeline(rc, rc.models)
    render_code = _render_bundle(bundle, rc)
    return render_code if render_code != EXIT_OK else code


def cmd_compare(args) -> int:
    rc = load_run_config(args.config, {
        "seed": args.seed, "n_bootstrap": args.n_bootstrap,
        "workers": args.workers, "output_dir": args.output_dir,
    })
    models = tuple(args.models) if args.models else (rc.models or ())
    if not models:
        schema_models = [m for m, _ in rc.schema.score_columns]
        models = tuple(schema_models)
    if len(models) != 2:
        raise ConfigError(f"compare needs exactly two models, got {list(models)}")
    if models[0] == models[1]:
        raise ConfigError("compare needs two distinct models")
    bundle, code = _audit_pipeline(rc, models)
    render_code = _render_bundle(bundle, rc)
    return render_code if render_code != EXIT_OK else code


def _safe_name(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "-" for ch in text)


def cmd_match(args) -> int:
    rc = load_run_config(args.config, {"output_dir": args.output_dir})
    if not rc.audit.propensity_covariates:
        raise ConfigError("match needs audit.propensity_covariates in the config")
    cohort = _read_cohort(rc)
    cfg = rc.audit
    os.makedirs(rc.output_dir, exist_ok=True)

    rows: list[dict] = []
    for col in cohort.schema.protected_columns:
        try:
            part = subgroup_partition(cohort, col.name, cfg.min_group_size)
        except InsufficientDataError as exc:
            print(f"note: skipping {col.name!r}: {exc}", file=sys.stderr)
            continue
        levels = part.levels
        for i in range(len(levels)):
            for j in range(i + 1, len(levels)):
                try:
                    sample, _ = match_contrast(
                        cohort, col.name, levels[i], levels[j],
                        cfg.propensity_covariates,
                        caliper_multiplier=cfg.caliper_multiplier, ridge=cfg.ridge,
                    )
                except (FitError, PropensityError) as exc:
                    rows.append({
                        "attribute": col.name, "treated_level": levels[i],
                        "control_level": levels[j], "status": "failed",
                        "detail": str(exc), "matched_n": 0, "passes_min_n": False,
                        "covariates": [],
                    })
                    continue
                bal = balance_report(cohort, sample, cfg.propensity_covariates, cfg.min_matched_n)
                name = (f"pairs_{_safe_name(col.name)}_{_safe_name(sample.treated_level)}"
                        f"_vs_{_safe_name(sample.control_level)}.csv")
                pair_path = os.path.join(rc.output_dir, name)
                export_pairs(cohort, sample, pair_path)
                print(pair_path)
                rows.append({
                    "attribute": col.name,
                    "treated_level": sample.treated_level,
                    "control_level": sample.control_level,
                    "caliper": sample.caliper,
                    "unmatched_treated": sample.unmatched_treated,
                    "matched_n": bal.matched_n,
                    "passes_min_n": bal.passes_min_n,
                    "status": STATUS_OK if bal.passes_min_n else "skipped",
                    "detail": "" if bal.passes_min_n else (
                        f"{len(sample.pairs)} pairs ({bal.matched_n} records) "
                        f"below min_matched_n={cfg.min_matched_n}"
                    ),
                    "pairs_file": name,
                    "covariates": [
                        {"name": c.name, "smd_before": c.smd_before, "smd_after": c.smd_after}
                        for c in bal.covariates
                    ],
                })

    summary_path = os.path.join(rc.output_dir, "matching.json")
    try:
        with open(summary_path, "w", encoding="utf-8") as fh:
            json.dump({"schema_version": 1, "contrasts": rows}, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        print(f"error: could not write matching summary: {exc}", file=sys.stderr)
        return EXIT_RENDER
    print(summary_path)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {args.config}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    config = synth_config_from_dict(doc)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    cohort, manifest = generate(config)
    try:
        write_cohort(cohort, args.output)
        manifest_path = args.manifest or f"{args.output}.manifest.json"
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        print(f"error: could not write output: {exc}", file=sys.stderr)
        return EXIT_RENDER
    print(args.output)
    print(manifest_path)
    return EXIT_OK


def cmd_validate(args) -> int:
    rc = load_run_config(args.config, {})
    report_path = args.report or os.path.join(rc.output_dir, "validation_report.json")
    os.makedirs(os.path.dirname(report_path) or ".", exist_ok=True)

    def emit(doc: dict) -> None:
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")

    try:
        cohort = _read_cohort(rc)
    except CohortValidationError as exc:
        emit({"valid": False, "issues": [i.to_dict() for i in exc.issues], "dropped_rows": []})
        for issue in exc.issues:
            loc = f"line {issue.line}" if issue.line else "file"
            col = f", column {issue.column}" if issue.column else ""
            print(f"invalid: {loc}{col}: {issue.message}", file=sys.stderr)
        print(report_path)
        return EXIT_CONFIG
    except SchemaError as exc:
        emit({"valid": False, "issues": [{"line": None, "column": None, "message": str(exc)}],
              "dropped_rows": []})
        print(f"invalid: {exc}", file=sys.stderr)
        print(report_path)
        return EXIT_CONFIG
    emit({
        "valid": True,
        "n_records": cohort.n,
        "issues": [],
        "dropped_rows": [i.to_dict() for i in cohort.diagnostics],
    })
    print(report_path)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biasaudit",
        description="Subgroup bias audits for binary risk scores",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="run config JSON file")
        p.add_argument("--seed", type=int, default=None, help="override audit seed")
        p.add_argument("--n-bootstrap", type=int, default=None, help="override replicate count")
        p.add_argument("--workers", type=int, default=None, help="override worker threads")
        p.add_argument("--output-dir", default=None, help="override output directory")

    p_audit = sub.add_parser("audit", help="run the subgroup bias audit")
    common(p_audit)
    p_audit.set_defaults(func=cmd_audit)

    p_cmp = sub.add_parser("compare", help="audit two models side by side")
    common(p_cmp)
    p_cmp.add_argument("--models", nargs=2, metavar=("A", "B"), default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_match = sub.add_parser("match", help="propensity matching and balance only")
    p_match.add_argument("config")
    p_match.add_argument("--output-dir", default=None)
    p_match.set_defaults(func=cmd_match)

    p_synth = sub.add_parser("synth", help="generate a synthetic cohort")
    p_synth.add_argument("config", help="synth config JSON file")
    p_synth.add_argument("output", help="cohort csv to write")
    p_synth.add_argument("--manifest", default=None, help="manifest path (default: <output>.manifest.json)")
    p_synth.add_argument("--seed", type=int, default=None, help="override generator seed")
    p_synth.set_defaults(func=cmd_synth)

    p_val = sub.add_parser("validate", help="validate a cohort file")
    p_val.add_argument("config")
    p_val.add_argument("--report", default=None, help="validation report path")
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CohortValidationError as exc:
        for issue in exc.issues:
            loc = f"line {issue.line}" if issue.line else "file"
            col = f", column {issue.column}" if issue.column else ""
            print(f"error: {loc}{col}: {issue.message}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STATISTICAL
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: file operation failed: {exc}", file=sys.stderr)
        return EXIT_RENDER


if __name__ == "__main__":
    sys.exit(main())
