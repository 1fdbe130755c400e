import json

import pytest

from ruleforge import (DeterministicGenerator, build_evidence, make_oracle, parse_rule,
                       refine_loop)
from ruleforge.semantics import PolarizedRule, Polarity
from ruleforge import storage


@pytest.fixture(scope="module")
def evidence27(fixture42):
    return build_evidence(fixture42.baseline_rule, fixture42.dataset,
                          make_oracle(fixture42.config), fixture42.config.odd,
                          dataset_ref="dataset.csv")


@pytest.fixture(scope="module")
def outcome42(fixture42):
    gen = DeterministicGenerator(fixture42.dataset, fixture42.config.odd)
    return refine_loop(fixture42.baseline_rule, [fixture42.baseline_rule],
                       fixture42.dataset, make_oracle(fixture42.config),
                       fixture42.config.odd, gen)


class TestDatasetCsv:
    def test_round_trip_bytes(self, fixture42, tmp_path):
        path = tmp_path / "dataset.csv"
        storage.store_dataset(path, fixture42.dataset)
        first = path.read_bytes()
        reloaded = storage.load_dataset(path)
        assert reloaded == fixture42.dataset
        storage.store_dataset(path, reloaded)
        assert path.read_bytes() == first

    def test_header_and_labels(self, fixture42, tmp_path):
        path = tmp_path / "dataset.csv"
        storage.store_dataset(path, fixture42.dataset)
        lines = path.read_text().splitlines()
        assert lines[0] == "ego_speed,dist_front,lane_offset,outcome"
        assert len(lines) == 199

    def test_bad_outcome_value(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,outcome\n1.0,Maybe\n")
        with pytest.raises(storage.FormatError, match="outcome"):
            storage.load_dataset(path)

    def test_missing_outcome_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1.0,2.0\n")
        with pytest.raises(storage.FormatError, match="outcome"):
            storage.load_dataset(path)

    def test_non_numeric_feature(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,outcome\nx,Pass\n")
        with pytest.raises(storage.FormatError, match="line 2"):
            storage.load_dataset(path)


class TestRulesJson:
    def test_round_trip(self, fixture42, tmp_path):
        path = tmp_path / "rules.json"
        rules = [fixture42.baseline_rule,
                 PolarizedRule("f1", Polarity.FAIL_RULE, parse_rule("(dist_front > 40)"))]
        storage.store_rules(path, rules)
        assert storage.load_rules(path) == rules
        data = json.loads(path.read_text())
        assert data[0]["polarity"] == "pass" and data[1]["polarity"] == "fail"

    def test_unknown_polarity_names_field(self, tmp_path):
        path = tmp_path / "rules.json"
        path.write_text(json.dumps([{"id": "r", "polarity": "warn", "text": "(x > 0)"}]))
        with pytest.raises(storage.FormatError, match="polarity"):
            storage.load_rules(path)

    def test_unparseable_rule_text(self, tmp_path):
        path = tmp_path / "rules.json"
        path.write_text(json.dumps([{"id": "r", "polarity": "pass", "text": "x >"}]))
        with pytest.raises(storage.FormatError):
            storage.load_rules(path)

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "rules.json"
        entry = {"id": "r", "polarity": "pass", "text": "(x > 0)"}
        path.write_text(json.dumps([entry, entry]))
        with pytest.raises(storage.FormatError, match="duplicate"):
            storage.load_rules(path)

    def test_store_load_store_byte_identical(self, fixture42, tmp_path):
        path = tmp_path / "rules.json"
        storage.store_rules(path, [fixture42.baseline_rule])
        first = path.read_bytes()
        storage.store_rules(path, storage.load_rules(path))
        assert path.read_bytes() == first


class TestEvidenceJson:
    def test_reload_structural_equality(self, evidence27, tmp_path):
        path = tmp_path / "evidence.json"
        storage.store_evidence(path, evidence27)
        assert storage.load_evidence(path) == evidence27

    def test_schema_version_and_shape(self, evidence27, tmp_path):
        path = tmp_path / "evidence.json"
        storage.store_evidence(path, evidence27)
        data = json.loads(path.read_text())
        assert data["schema_version"] == 1
        assert data["rule_id"] == "baseline-pass"
        assert len(data["pairs"]) == 27
        pair = data["pairs"][0]
        assert set(pair) == {"x", "y", "x_cf", "y_cf", "delta", "l1", "l1_steps"}
        assert data["unresolved"] == []

    def test_store_is_deterministic(self, evidence27, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        storage.store_evidence(a, evidence27)
        storage.store_evidence(b, evidence27)
        assert a.read_bytes() == b.read_bytes()

    def test_independent_builds_byte_identical(self, fixture42, evidence27, tmp_path):
        rebuilt = build_evidence(fixture42.baseline_rule, fixture42.dataset,
                                 make_oracle(fixture42.config), fixture42.config.odd,
                                 dataset_ref="dataset.csv")
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        storage.store_evidence(a, evidence27)
        storage.store_evidence(b, rebuilt)
        assert a.read_bytes() == b.read_bytes()


class TestOracleConfigJson:
    def test_round_trip(self, fixture42, tmp_path):
        path = tmp_path / "config.json"
        storage.store_oracle_config(path, fixture42.config)
        loaded = storage.load_oracle_config(path)
        assert loaded == fixture42.config
        data = json.loads(path.read_text())
        assert data["schema_version"] == 1

    def test_load_odd_accepts_bare_and_config_forms(self, fixture42, tmp_path):
        config_path = tmp_path / "config.json"
        storage.store_oracle_config(config_path, fixture42.config)
        assert storage.load_odd(config_path) == fixture42.config.odd
        bare_path = tmp_path / "odd.json"
        bare_path.write_text(json.dumps(storage.odd_to_json(fixture42.config.odd)))
        assert storage.load_odd(bare_path) == fixture42.config.odd

    def test_odd_store_load_round_trip(self, fixture42, tmp_path):
        path = tmp_path / "odd.json"
        storage.store_odd(path, fixture42.config.odd)
        assert storage.load_odd(path) == fixture42.config.odd
        assert json.loads(path.read_text())["schema_version"] == 1

    def test_missing_field(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"odd": {"variables": []}}))
        with pytest.raises(storage.FormatError, match="safe_region"):
            storage.load_oracle_config(path)


class TestOutcomeJson:
    def test_round_trip(self, outcome42, tmp_path):
        path = tmp_path / "outcome.json"
        storage.store_outcome(path, outcome42, "baseline-pass", dg_before=0.8636,
                              dg_after=1.0)
        loaded = storage.load_outcome(path)
        assert loaded.refined == outcome42.refined
        assert loaded.change_log == outcome42.change_log
        assert loaded.attempts == outcome42.attempts
        assert loaded.reports == outcome42.reports
        data = json.loads(path.read_text())
        assert data["schema_version"] == 1
        assert data["dg_after"] == 1.0
        assert data["reports"][0]["accepted"] is True
