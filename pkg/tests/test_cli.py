"""Command-line interface: configs, subcommands, exit codes, output stability."""

import json
import os

import pytest

from biasaudit.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RENDER,
    EXIT_STATISTICAL,
    load_run_config,
    main,
)
from biasaudit.errors import ConfigError


SYNTH_DOC = {
    "n": 800,
    "seed": 11,
    "protected": [
        {"name": "race", "levels": ["Black", "White", "Other"], "weights": [0.3, 0.5, 0.2]},
        {"name": "sex", "levels": ["F", "M"], "weights": [0.5, 0.5]},
    ],
    "covariates": [
        {"name": "sofa", "kind": "gaussian", "mu": 0.0, "sigma": 1.0,
         "shifts": {"race": {"Black": 0.5}}},
    ],
    "outcome": {"intercept": -0.5, "weights": {"sofa": 1.5}},
    "score": {"kind": "oracle_noise", "noise_sd": 0.05},
    "injections": [],
}

RUN_SCHEMA = {
    "id_column": "id",
    "label_column": "label",
    "score_columns": ["score"],
    "protected": [{"name": "race"}, {"name": "sex"}],
    "covariates": [{"name": "sofa", "kind": "numeric"}],
}

RUN_AUDIT = {
    "metrics": ["AUROC", "SENS"],
    "n_bootstrap": 20,
    "seed": 5,
    "min_group_size": 30,
    "min_matched_n": 30,
    "propensity_covariates": ["sofa"],
}


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
    return str(path)


def make_cohort(tmp_path, synth_overrides=None, name="cohort.csv"):
    doc = dict(SYNTH_DOC)
    doc.update(synth_overrides or {})
    config = write_json(tmp_path / "synth.json", doc)
    out = str(tmp_path / name)
    assert main(["synth", config, out]) == EXIT_OK
    return out


def make_run_config(tmp_path, cohort_path, name="run.json", **overrides):
    doc = {
        "cohort": cohort_path,
        "schema": RUN_SCHEMA,
        "audit": dict(RUN_AUDIT),
        "output_dir": str(tmp_path / "report"),
        "formats": ["json", "csv", "markdown", "svg"],
    }
    doc.update(overrides)
    return write_json(tmp_path / name, doc)


class TestLoadRunConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_run_config(path)

    def test_non_object_root(self, tmp_path):
        path = tmp_path / "arr.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            load_run_config(path)

    def test_unknown_top_level_key(self, tmp_path):
        path = write_json(tmp_path / "run.json",
                          {"cohort": "c.csv", "schema": RUN_SCHEMA, "extra": 1})
        with pytest.raises(ConfigError, match="run config"):
            load_run_config(path)

    @pytest.mark.parametrize("missing", ["cohort", "schema"])
    def test_required_keys(self, tmp_path, missing):
        doc = {"cohort": "c.csv", "schema": RUN_SCHEMA}
        del doc[missing]
        path = write_json(tmp_path / "run.json", doc)
        with pytest.raises(ConfigError, match=missing):
            load_run_config(path)

    def test_relative_cohort_path_resolves_against_config_dir(self, tmp_path):
        sub = tmp_path / "configs"
        sub.mkdir()
        path = write_json(sub / "run.json", {"cohort": "data.csv", "schema": RUN_SCHEMA})
        rc = load_run_config(path)
        assert rc.cohort == str(sub / "data.csv")

    def test_absolute_cohort_path_kept(self, tmp_path):
        path = write_json(tmp_path / "run.json",
                          {"cohort": "/data/c.csv", "schema": RUN_SCHEMA})
        assert load_run_config(path).cohort == "/data/c.csv"

    def test_overrides_beat_file_values(self, tmp_path):
        path = write_json(
            tmp_path / "run.json",
            {"cohort": "c.csv", "schema": RUN_SCHEMA,
             "audit": {"seed": 1, "n_bootstrap": 10}, "workers": 2},
        )
        rc = load_run_config(path, {"seed": 99, "workers": 8, "n_bootstrap": None})
        assert rc.audit.seed == 99
        assert rc.audit.n_bootstrap == 10  # None override ignored
        assert rc.workers == 8

    def test_score_column_forms(self, tmp_path):
        schema = dict(RUN_SCHEMA)
        schema["score_columns"] = ["plain", ["model_a", "col_a"]]
        path = write_json(tmp_path / "run.json", {"cohort": "c.csv", "schema": schema})
        rc = load_run_config(path)
        assert rc.schema.score_columns == (("plain", "plain"), ("model_a", "col_a"))

    def test_bad_score_column_entry(self, tmp_path):
        schema = dict(RUN_SCHEMA)
        schema["score_columns"] = [{"model": "m"}]
        path = write_json(tmp_path / "run.json", {"cohort": "c.csv", "schema": schema})
        with pytest.raises(ConfigError, match="score_columns"):
            load_run_config(path)

    @pytest.mark.parametrize(
        "value, kind, fixed",
        [
            (None, "youden", None),
            ("youden", "youden", None),
            (0.4, "fixed", 0.4),
            ({"kind": "fixed", "value": 0.3}, "fixed", 0.3),
            ({"kind": "youden"}, "youden", None),
        ],
    )
    def test_threshold_forms(self, tmp_path, value, kind, fixed):
        audit = {} if value is None else {"threshold": value}
        path = write_json(tmp_path / "run.json",
                          {"cohort": "c.csv", "schema": RUN_SCHEMA, "audit": audit})
        policy = load_run_config(path).audit.threshold_policy
        assert policy.kind == kind
        assert policy.value == fixed

    def test_bad_threshold_rejected(self, tmp_path):
        path = write_json(tmp_path / "run.json",
                          {"cohort": "c.csv", "schema": RUN_SCHEMA,
                           "audit": {"threshold": "best"}})
        with pytest.raises(ConfigError, match="threshold policy"):
            load_run_config(path)

    def test_unknown_audit_key(self, tmp_path):
        path = write_json(tmp_path / "run.json",
                          {"cohort": "c.csv", "schema": RUN_SCHEMA,
                           "audit": {"bootstraps": 100}})
        with pytest.raises(ConfigError, match="audit config"):
            load_run_config(path)

    def test_unknown_schema_key(self, tmp_path):
        schema = dict(RUN_SCHEMA)
        schema["sep"] = ";"
        path = write_json(tmp_path / "run.json", {"cohort": "c.csv", "schema": schema})
        with pytest.raises(ConfigError, match="schema"):
            load_run_config(path)

    def test_config_hash_tracks_analysis_content(self, tmp_path):
        p1 = write_json(tmp_path / "a.json", {"cohort": "c.csv", "schema": RUN_SCHEMA})
        p2 = write_json(tmp_path / "b.json",
                        {"cohort": "c.csv", "schema": RUN_SCHEMA, "audit": {"seed": 3}})
        h1 = load_run_config(p1).config_hash
        h2 = load_run_config(p2).config_hash
        assert len(h1) == 16 and all(c in "0123456789abcdef" for c in h1)
        assert h1 != h2
        assert load_run_config(p1).config_hash == h1

    def test_config_hash_ignores_execution_settings(self, tmp_path):
        base = {"cohort": "c.csv", "schema": RUN_SCHEMA}
        p1 = write_json(tmp_path / "a.json", base)
        p2 = write_json(tmp_path / "b.json",
                        {**base, "workers": 3, "output_dir": "elsewhere",
                         "formats": ["json"]})
        h1 = load_run_config(p1).config_hash
        assert load_run_config(p2).config_hash == h1
        assert load_run_config(p1, {"workers": 8}).config_hash == h1
        assert load_run_config(p1, {"seed": 8}).config_hash != h1


class TestSynthCommand:
    def test_writes_cohort_and_manifest(self, tmp_path, capsys):
        config = write_json(tmp_path / "synth.json", SYNTH_DOC)
        out = str(tmp_path / "c.csv")
        assert main(["synth", config, out]) == EXIT_OK
        printed = capsys.readouterr().out.splitlines()
        assert printed == [out, out + ".manifest.json"]
        manifest = json.load(open(out + ".manifest.json"))
        assert manifest["n"] == 800
        assert manifest["schema_version"] == 1
        header = open(out).readline().strip()
        assert header == "id,label,score,race,sex,sofa"

    def test_deterministic_for_same_seed(self, tmp_path):
        config = write_json(tmp_path / "synth.json", SYNTH_DOC)
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["synth", config, a]) == EXIT_OK
        assert main(["synth", config, b]) == EXIT_OK
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_seed_flag_overrides_config(self, tmp_path):
        config = write_json(tmp_path / "synth.json", SYNTH_DOC)
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["synth", config, a]) == EXIT_OK
        assert main(["synth", config, b, "--seed", "99"]) == EXIT_OK
        assert open(a, "rb").read() != open(b, "rb").read()

    def test_custom_manifest_path(self, tmp_path):
        config = write_json(tmp_path / "synth.json", SYNTH_DOC)
        out = str(tmp_path / "c.csv")
        manifest = str(tmp_path / "truth.json")
        assert main(["synth", config, out, "--manifest", manifest]) == EXIT_OK
        assert json.load(open(manifest))["seed"] == 11

    def test_bad_config_exits_2(self, tmp_path, capsys):
        doc = dict(SYNTH_DOC)
        doc["mystery"] = True
        config = write_json(tmp_path / "synth.json", doc)
        assert main(["synth", config, str(tmp_path / "c.csv")]) == EXIT_CONFIG
        assert "mystery" in capsys.readouterr().err

    def test_missing_config_exits_2(self, tmp_path, capsys):
        code = main(["synth", str(tmp_path / "nope.json"), str(tmp_path / "c.csv")])
        assert code == EXIT_CONFIG
        assert "not found" in capsys.readouterr().err


class TestValidateCommand:
    def test_valid_cohort(self, tmp_path, capsys):
        cohort = make_cohort(tmp_path)
        config = make_run_config(tmp_path, cohort)
        capsys.readouterr()  # discard the synth command's path printout
        assert main(["validate", config]) == EXIT_OK
        report_path = capsys.readouterr().out.strip()
        doc = json.load(open(report_path))
        assert doc["valid"] is True
        assert doc["n_records"] == 800
        assert doc["issues"] == []
        assert doc["dropped_rows"] == []

    def test_dropped_rows_are_reported_but_valid(self, tmp_path, capsys):
        cohort_path = tmp_path / "c.csv"
        cohort_path.write_text(
            "id,label,score,race,sex,sofa\n"
            "r1,1,0.9,Black,F,0.1\n"
            "r2,,0.4,White,M,0.2\n"   # missing label: dropped, not fatal
            "r3,0,0.2,White,F,0.3\n"
        )
        config = make_run_config(tmp_path, str(cohort_path))
        assert main(["validate", config]) == EXIT_OK
        report_path = capsys.readouterr().out.strip()
        doc = json.load(open(report_path))
        assert doc["valid"] is True
        assert doc["n_records"] == 2
        assert len(doc["dropped_rows"]) == 1
        assert doc["dropped_rows"][0]["line"] == 3

    def test_invalid_cohort_exits_2_with_report(self, tmp_path, capsys):
        cohort_path = tmp_path / "c.csv"
        cohort_path.write_text(
            "id,label,score,race,sex,sofa\n"
            "r1,2,0.9,Black,F,0.1\n"   # label outside {0, 1}
            "r2,0,1.7,White,M,0.2\n"   # score outside [0, 1]
        )
        config = make_run_config(tmp_path, str(cohort_path))
        assert main(["validate", config]) == EXIT_CONFIG
        captured = capsys.readouterr()
        report_path = captured.out.strip()
        doc = json.load(open(report_path))
        assert doc["valid"] is False
        assert len(doc["issues"]) == 2
        assert all(i["line"] is not None for i in doc["issues"])
        assert "invalid: line 2" in captured.err

    def test_missing_cohort_file_exits_2(self, tmp_path, capsys):
        config = make_run_config(tmp_path, str(tmp_path / "ghost.csv"))
        assert main(["validate", config]) == EXIT_CONFIG
        assert "cannot read cohort file" in capsys.readouterr().err

    def test_custom_report_path(self, tmp_path):
        cohort = make_cohort(tmp_path)
        config = make_run_config(tmp_path, cohort)
        report = str(tmp_path / "deep" / "check.json")
        assert main(["validate", config, "--report", report]) == EXIT_OK
        assert json.load(open(report))["valid"] is True


class TestAuditCommand:
    def test_end_to_end_outputs(self, tmp_path, capsys):
        cohort = make_cohort(tmp_path)
        config = make_run_config(tmp_path, cohort)
        capsys.readouterr()  # discard the synth command's path printout
        assert main(["audit", config]) == EXIT_OK
        printed = capsys.readouterr().out.splitlines()
        report_dir = tmp_path / "report"
        expected = {"report.json", "subgroup.csv", "matched.csv", "discrepancy.csv",
                    "balance.csv", "calibration.csv", "report.md", "calibration_score.svg"}
        assert {os.path.basename(p) for p in printed} == expected
        doc = json.load(open(report_dir / "report.json"))
        assert doc["schema_version"] == 1
        assert doc["metadata"]["models"] == ["score"]
        assert doc["metadata"]["seed"] == 5
        assert doc["metadata"]["n_records"] == 800
        assert len(doc["metadata"]["config_hash"]) == 16
        assert doc["subgroup"]
        assert doc["matched"]
        assert doc["balance"]
        assert doc["discrepancy"]
        md = (report_dir / "report.md").read_text()
        assert "(matched)" in md

    def test_run_to_run_byte_stability(self, tmp_path):
        cohort = make_cohort(tmp_path)
        config_a = make_run_config(tmp_path, cohort, name="ra.json",
                                   output_dir=str(tmp_path / "out_a"))
        config_b = make_run_config(tmp_path, cohort, name="rb.json",
                                   output_dir=str(tmp_path / "out_b"))
        assert main(["audit", config_a]) == EXIT_OK
        assert main(["audit", config_b]) == EXIT_OK
        for name in ("report.md", "subgroup.csv", "matched.csv"):
            a = open(tmp_path / "out_a" / name, "rb").read()
            b = open(tmp_path / "out_b" / name, "rb").read()
            assert a == b

    def test_worker_count_does_not_change_results(self, tmp_path):
        cohort = make_cohort(tmp_path)
        config = make_run_config(tmp_path, cohort)
        assert main(["audit", config, "--workers", "1",
                     "--output-dir", str(tmp_path / "w1")]) == EXIT_OK
        assert main(["audit", config, "--workers", "8",
                     "--output-dir", str(tmp_path / "w8")]) == EXIT_OK
        for name in ("report.json", "subgroup.csv"):
            a = open(tmp_path / "w1" / name, "rb").read()
            b = open(tmp_path / "w8" / name, "rb").read()
            assert a == b

    def test_seed_override_changes_report(self, tmp_path):
        cohort = make_cohort(tmp_path)
        config = make_run_config(tmp_path, cohort)
        assert main(["audit", config, "--seed", "1",
                     "--output-dir", str(tmp_path / "s1")]) == EXIT_OK
        assert main(["audit", config, "--seed", "2",
                     "--output-dir", str(tmp_path / "s2")]) == EXIT_OK
        a = json.load(open(tmp_path / "s1" / "report.json"))
        b = json.load(open(tmp_path / "s2" / "report.json"))
        assert a["metadata"]["seed"] == 1
        assert a["subgroup"] != b["subgroup"]

    def test_unknown_protected_column_exits_2_naming_it(self, tmp_path, capsys):
        cohort = make_cohort(tmp_path)
        schema = dict(RUN_SCHEMA)
        schema["protected"] = [{"name": "zodiac"}]
        config = make_run_config(tmp_path, cohort, schema=schema)
        assert main(["audit", config]) == EXIT_CONFIG
        assert "zodiac" in capsys.readouterr().err

    def test_unknown_model_exits_2_naming_it(self, tmp_path, capsys):
        cohort = make_cohort(tmp_path)
        config = make_run_config(tmp_path, cohort, models=["phantom"])
        assert main(["audit", config]) == EXIT_CONFIG
        assert "phantom" in capsys.readouterr().err

    def test_all_cells_insufficient_exits_3(self, tmp_path, capsys):
        cohort_path = tmp_path / "onesided.csv"
        lines = ["id,label,score,g"]
        for i in range(40):
            level = "a" if i < 20 else "b"
            lines.append(f"r{i},1,0.{50 + i % 40:02d},{level}")
        cohort_path.write_text("\n".join(lines) + "\n")
        config = write_json(
            tmp_path / "run.json",
            {
                "cohort": str(cohort_path),
                "schema": {
                    "id_column": "id", "label_column": "label",
                    "score_columns": ["score"], "protected": [{"name": "g"}],
                },
                "audit": {"metrics": ["AUROC"], "n_bootstrap": 10, "min_group_size": 5},
                "output_dir": str(tmp_path / "report"),
                "formats": ["json"],
            },
        )
        assert main(["audit", config]) == EXIT_STATISTICAL
        assert "no audited cell reached sufficiency" in capsys.readouterr().err
        # the report is still written for inspection
        doc = json.load(open(tmp_path / "report" / "report.json"))
        assert all(r["status"] == "insufficient" for r in doc["subgroup"])

    def test_render_failure_exits_4(self, tmp_path, capsys):
        cohort = make_cohort(tmp_path)
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory")
        config = make_run_config(tmp_path, cohort, output_dir=str(blocker))
        assert main(["audit", config]) == EXIT_RENDER
        assert "could not write report" in capsys.readouterr().err

    def test_missing_cohort_exits_2(self, tmp_path, capsys):
        config = make_run_config(tmp_path, str(tmp_path / "ghost.csv"))
        assert main(["audit", config]) == EXIT_CONFIG
        assert "cannot read cohort file" in capsys.readouterr().err


class TestCompareCommand:
    def two_model_cohort(self, tmp_path):
        import numpy as np
        from scipy.special import expit

        from biasaudit.cohort import write_cohort
        from helpers import build_cohort

        rng = np.random.default_rng(31)
        n = 600
        x = rng.normal(0, 1, n)
        y = (rng.uniform(0, 1, n) < expit(1.5 * x)).astype(int)
        s1 = expit(1.5 * x + rng.normal(0, 0.3, n))
        s2 = expit(1.5 * x + rng.normal(0, 0.3, n))
        group = ["a" if i % 2 else "b" for i in range(n)]
        cohort = build_cohort(
            labels=y.tolist(),
            scores={"m1": s1.tolist(), "m2": s2.tolist()},
            protected={"g": group},
        )
        path = tmp_path / "two.csv"
        write_cohort(cohort, path)
        schema = {
            "id_column": "pid", "label_column": "label",
            "score_columns": ["m1", "m2"], "protected": [{"name": "g"}],
        }
        return str(path), schema

    def test_compare_writes_comparison_section(self, tmp_path):
        cohort_path, schema = self.two_model_cohort(tmp_path)
        config = write_json(
            tmp_path / "run.json",
            {"cohort": cohort_path, "schema": schema,
             "audit": {"metrics": ["AUROC"], "n_bootstrap": 15, "min_group_size": 20},
             "output_dir": str(tmp_path / "report"), "formats": ["json", "markdown", "csv"]},
        )
        assert main(["compare", config]) == EXIT_OK
        doc = json.load(open(tmp_path / "report" / "report.json"))
        assert doc["comparison"] is not None
        assert doc["comparison"]["model_a"] == "m1"
        assert doc["comparison"]["model_b"] == "m2"
        assert set(doc["comparison"]["overall"]) == {"m1", "m2"}
        assert doc["comparison"]["deltas"]
        md = (tmp_path / "report" / "report.md").read_text()
        assert "## Model comparison: m2 minus m1" in md
        assert (tmp_path / "report" / "comparison.csv").exists()

    def test_models_flag_selects_and_orders(self, tmp_path):
        cohort_path, schema = self.two_model_cohort(tmp_path)
        config = write_json(
            tmp_path / "run.json",
            {"cohort": cohort_path, "schema": schema,
             "audit": {"metrics": ["AUROC"], "n_bootstrap": 10, "min_group_size": 20},
             "output_dir": str(tmp_path / "report"), "formats": ["json"]},
        )
        assert main(["compare", config, "--models", "m2", "m1"]) == EXIT_OK
        doc = json.load(open(tmp_path / "report" / "report.json"))
        assert doc["comparison"]["model_a"] == "m2"
        assert doc["comparison"]["model_b"] == "m1"

    def test_single_model_cohort_exits_2(self, tmp_path, capsys):
        cohort = make_cohort(tmp_path)
        config = make_run_config(tmp_path, cohort)
        assert main(["compare", config]) == EXIT_CONFIG
        assert "exactly two models" in capsys.readouterr().err

    def test_same_model_twice_exits_2(self, tmp_path, capsys):
        cohort_path, schema = self.two_model_cohort(tmp_path)
        config = write_json(
            tmp_path / "run.json",
            {"cohort": cohort_path, "schema": schema,
             "audit": {"metrics": ["AUROC"], "n_bootstrap": 10, "min_group_size": 20},
             "output_dir": str(tmp_path / "report"), "formats": ["json"]},
        )
        assert main(["compare", config, "--models", "m1", "m1"]) == EXIT_CONFIG
        assert "distinct" in capsys.readouterr().err

    def test_audit_on_two_model_cohort_also_compares(self, tmp_path):
        # audit with exactly two score columns includes the comparison block
        cohort_path, schema = self.two_model_cohort(tmp_path)
        config = write_json(
            tmp_path / "run.json",
            {"cohort": cohort_path, "schema": schema,
             "audit": {"metrics": ["AUROC"], "n_bootstrap": 10, "min_group_size": 20},
             "output_dir": str(tmp_path / "report"), "formats": ["json"]},
        )
        assert main(["audit", config]) == EXIT_OK
        doc = json.load(open(tmp_path / "report" / "report.json"))
        assert doc["comparison"] is not None


class TestMatchCommand:
    def test_writes_pairs_and_summary(self, tmp_path, capsys):
        cohort = make_cohort(tmp_path)
        config = make_run_config(tmp_path, cohort)
        capsys.readouterr()  # discard the synth command's path printout
        assert main(["match", config]) == EXIT_OK
        printed = capsys.readouterr().out.splitlines()
        names = {os.path.basename(p) for p in printed}
        # race has 3 levels (3 contrasts) and sex has 2 (1 contrast)
        pair_files = {n for n in names if n.startswith("pairs_")}
        assert len(pair_files) == 4
        assert "matching.json" in names
        doc = json.load(open(tmp_path / "report" / "matching.json"))
        assert doc["schema_version"] == 1
        assert len(doc["contrasts"]) == 4
        for row in doc["contrasts"]:
            assert row["status"] in ("ok", "skipped", "failed")
            if row["status"] == "ok":
                assert row["covariates"]
                assert row["pairs_file"] in pair_files
        one_pair_file = tmp_path / "report" / sorted(pair_files)[0]
        header = open(one_pair_file).readline().strip()
        assert header == "treated_id,control_id,distance"

    def test_match_needs_covariates(self, tmp_path, capsys):
        cohort = make_cohort(tmp_path)
        audit = {k: v for k, v in RUN_AUDIT.items() if k != "propensity_covariates"}
        config = make_run_config(tmp_path, cohort, audit=audit)
        assert main(["match", config]) == EXIT_CONFIG
        assert "propensity_covariates" in capsys.readouterr().err

    def test_small_contrasts_marked_skipped(self, tmp_path):
        cohort = make_cohort(tmp_path, synth_overrides={"n": 120})
        audit = dict(RUN_AUDIT)
        audit["min_group_size"] = 10
        audit["min_matched_n"] = 500
        config = make_run_config(tmp_path, cohort, audit=audit)
        assert main(["match", config]) == EXIT_OK
        doc = json.load(open(tmp_path / "report" / "matching.json"))
        assert doc["contrasts"]
        for row in doc["contrasts"]:
            assert row["status"] == "skipped"
            assert "below min_matched_n=500" in row["detail"]


class TestParser:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "biasaudit" in capsys.readouterr().out

    def test_missing_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
