"""Feature learning: presence thresholds, variance filter, config emission."""

from __future__ import annotations

import numpy as np
import pytest

from loglens.errors import ConfigError, DataError
from loglens.learning import (
    ChunkLearning,
    CandidateFeature,
    LearningParams,
    emit_config,
    learn_chunk,
    learn_corpus,
    merge_learned,
)
from loglens.parsecfg import ParserConfig, VariableDef

from conftest import entry

SSID_VAR = VariableDef("ssid", r"ssid=(\S+)")


def ssid_entries(values: list[str]) -> list:
    return [entry(f"rec ssid={v}", offset=i * 40) for i, v in enumerate(values)]


class TestLearnChunk:
    def test_presence_is_per_entry_membership(self):
        # 6 of 10 entries carry "eduroam"; occurrences inside an entry count once
        values = ["eduroam"] * 5 + ["guest"] * 4 + ["other"]
        entries = ssid_entries(values)
        entries[0] = entry("rec ssid=eduroam ssid=eduroam", offset=0)
        candidates = learn_chunk(entries, [SSID_VAR], presence_threshold=0.05)
        eduroam = next(c for c in candidates if c.value == "eduroam")
        assert eduroam.presence == pytest.approx(0.5)
        assert eduroam.occurrences == 6  # occurrences still count every match

    def test_threshold_excludes_rare_values(self):
        values = ["common"] * 99 + ["rare"]
        candidates = learn_chunk(ssid_entries(values), [SSID_VAR], presence_threshold=0.05)
        assert [c.value for c in candidates] == ["common"]

    def test_sorted_descending_by_presence(self):
        values = ["a"] * 5 + ["b"] * 3 + ["c"] * 2
        candidates = learn_chunk(ssid_entries(values), [SSID_VAR], presence_threshold=0.1)
        assert [c.value for c in candidates] == ["a", "b", "c"]

    def test_empty_chunk_gives_empty_list(self):
        assert learn_chunk([], [SSID_VAR]) == []

    def test_needs_variables(self):
        with pytest.raises(ConfigError):
            learn_chunk(ssid_entries(["a"]), [])

    def test_threshold_monotonicity(self):
        values = ["a"] * 50 + ["b"] * 30 + ["c"] * 20
        entries = ssid_entries(values)
        lower = {c.value for c in learn_chunk(entries, [SSID_VAR], 0.1)}
        higher = {c.value for c in learn_chunk(entries, [SSID_VAR], 0.3)}
        assert higher <= lower


def make_learning(bin_label: str, n_entries: int, counts: dict[str, int]) -> ChunkLearning:
    return ChunkLearning(
        bin_label=bin_label,
        n_entries=n_entries,
        candidates=[
            CandidateFeature("ssid", value, min(1.0, occ / n_entries), occ)
            for value, occ in counts.items()
        ],
    )


class TestMerge:
    def test_constant_candidate_discarded(self):
        chunks = [make_learning(f"d{i}", 1000 + 100 * i, {"flat": 80}) for i in range(5)]
        with pytest.warns(UserWarning):
            config = merge_learned(chunks, [SSID_VAR])
        assert [f.name for f in config.features] == ["ssid_default"]

    def test_variance_oracle_keeps_tracker_drops_noise(self):
        # oracle: explicit sample variances against the entry-total reference
        totals = [1000, 1400, 800, 1300, 900]
        tracker = {f"d{i}": int(0.3 * t) for i, t in enumerate(totals)}
        flat = {f"d{i}": 50 for i in range(5)}
        chunks = [
            make_learning(f"d{i}", totals[i], {"tracker": tracker[f"d{i}"], "flat": flat[f"d{i}"]})
            for i in range(5)
        ]
        params = LearningParams(variance_ratio_threshold=1e-4)
        ref_var = np.var(totals, ddof=1)
        assert np.var(list(tracker.values()), ddof=1) >= 1e-4 * ref_var
        assert np.var(list(flat.values()), ddof=1) < 1e-4 * ref_var
        config = merge_learned(chunks, [SSID_VAR], params)
        names = [f.name for f in config.features]
        assert "ssid_tracker" in names
        assert "ssid_flat" not in names

    def test_candidate_missing_from_a_chunk_counts_zero(self):
        chunks = [
            make_learning("d0", 1000, {"spiky": 600}),
            make_learning("d1", 1000, {}),
            make_learning("d2", 1000, {}),
        ]
        config = merge_learned(chunks, [SSID_VAR])
        assert any(f.name == "ssid_spiky" for f in config.features)

    def test_needs_two_chunks(self):
        with pytest.raises(DataError):
            merge_learned([make_learning("d0", 10, {"a": 5})], [SSID_VAR])

    def test_all_filtered_warns_and_emits_defaults(self):
        chunks = [make_learning(f"d{i}", 1000, {"flat": 10}) for i in range(4)]
        with pytest.warns(UserWarning, match="variance filter"):
            config = merge_learned(chunks, [SSID_VAR])
        assert [f.name for f in config.features] == ["ssid_default"]
        assert config.feature_names == ["ssid_default", "entry_count", "triplet_count"]

    def test_one_default_per_variable(self):
        chunks = [make_learning(f"d{i}", 1000, {"a": 100 * (i + 1)}) for i in range(3)]
        other = VariableDef("port", r"port=(\d+)")
        config = merge_learned(chunks, [SSID_VAR, other])
        defaults = [f for f in config.features if f.is_default]
        assert sorted(f.variable for f in defaults) == ["port", "ssid"]

    def test_params_validate(self):
        with pytest.raises(ConfigError):
            LearningParams(presence_threshold=0.0)
        with pytest.raises(ConfigError):
            LearningParams(variance_ratio_threshold=1.5)


class TestEmit:
    def test_emit_then_load_gives_equal_config(self, tmp_path):
        chunks = [make_learning(f"d{i}", 500, {"a": 40 * (i + 1), "b": 25 * (3 - i)}) for i in range(3)]
        config = merge_learned(chunks, [SSID_VAR])
        emit_config(config, tmp_path / "c.yaml")
        again = ParserConfig.load(tmp_path / "c.yaml")
        assert again.to_dict() == config.to_dict()

    def test_regex_special_characters_stay_literal(self, tmp_path):
        chunks = [
            make_learning("d0", 100, {"a.b*c": 30, "x[1]+": 20}),
            make_learning("d1", 100, {"a.b*c": 60, "x[1]+": 45}),
        ]
        config = merge_learned(chunks, [SSID_VAR])
        emit_config(config, tmp_path / "c.yaml")
        again = ParserConfig.load(tmp_path / "c.yaml")
        literals = {f.matcher for f in again.features if f.kind == "literal"}
        assert literals == {"a.b*c", "x[1]+"}
        # literal matchers compare exactly: "axbzc" must not match "a.b*c"
        feat = next(f for f in again.features if f.matcher == "a.b*c")
        assert feat.accepts("a.b*c") and not feat.accepts("axbbc")

    def test_empty_feature_list_is_valid(self, tmp_path):
        config = merge_learned(
            [make_learning("d0", 10, {}), make_learning("d1", 12, {})], [SSID_VAR]
        )
        emit_config(config, tmp_path / "c.yaml")
        assert ParserConfig.load(tmp_path / "c.yaml").feature_names == [
            "ssid_default",
            "entry_count",
            "triplet_count",
        ]


class TestDumps:
    def test_candidate_dumps_round_trip(self, tmp_path):
        from loglens.learning import load_learnings, save_learnings

        learnings = [
            make_learning("d0", 100, {"a": 30, "b": 12}),
            make_learning("d1", 140, {"a": 55}),
        ]
        save_learnings(learnings, tmp_path / "dumps.json")
        again = load_learnings(tmp_path / "dumps.json")
        assert [cl.to_dict() for cl in again] == [cl.to_dict() for cl in learnings]


class TestLearnCorpus:
    def test_end_to_end_on_synthetic_corpus(self, tmp_path):
        from loglens.synth import SyntheticSpec, generate_synthetic_corpus

        spec = SyntheticSpec(
            n_days=8,
            entries_per_day=600,
            vocabulary=[("alpha", 0.5), ("beta", 0.3), ("gamma", 0.17), ("rare", 0.03)],
            rng_seed=4,
        )
        manifest, _ = generate_synthetic_corpus(spec, tmp_path / "c")
        var = VariableDef("trap_type", r"tt = OID: (\w+)")
        learnings, failures = learn_corpus(manifest, [var], 0.05, n_workers=2)
        assert failures == []
        config = merge_learned(learnings, [var])
        names = {f.matcher for f in config.features if f.kind == "literal"}
        # every token with >=5% presence and activity-following variance is kept
        assert {"alpha", "beta", "gamma"} <= names
        assert "rare" not in names
        # learned configs always pass the validator (constructor validates)
        assert isinstance(config, ParserConfig)
