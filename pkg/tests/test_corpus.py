"""Corpus scanning, chunk streaming and synthetic generation."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from loglens.corpus import (
    DAY_SECONDS,
    ISO_TIMESTAMP,
    Chunk,
    CorpusManifest,
    TimestampSpec,
    read_entries,
    scan_corpus,
)
from loglens.errors import ConfigError, DataError
from loglens.synth import AnomalySpec, SyntheticSpec, generate_synthetic_corpus


def _write(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _line(day: str, sec: int, body: str = "x") -> str:
    hh, rem = divmod(sec, 3600)
    mm, ss = divmod(rem, 60)
    return f"{day}T{hh:02d}:{mm:02d}:{ss:02d}Z {body}"


class TestScan:
    def test_empty_directory_gives_zero_chunks(self, tmp_path):
        manifest = scan_corpus([tmp_path])
        assert manifest.chunks == []
        assert manifest.total_entries() == 0

    def test_three_single_day_files(self, tmp_path):
        # oracle: naive line counts per file
        counts = {}
        for i, day in enumerate(["2026-03-01", "2026-03-02", "2026-03-03"]):
            lines = [_line(day, s) for s in range(10 + i)]
            _write(tmp_path / f"f{i}.log", lines)
            counts[day] = len(lines)
        manifest = scan_corpus([tmp_path])
        assert len(manifest.chunks) == 3
        assert {c.bin_label: c.entry_count for c in manifest.chunks} == counts

    def test_file_spanning_two_days_splits_into_two_chunks(self, tmp_path):
        # oracle: per-record timestamp binning
        lines = [_line("2026-03-01", s) for s in range(7)] + [_line("2026-03-02", s) for s in range(5)]
        _write(tmp_path / "span.log", lines)
        manifest = scan_corpus([tmp_path])
        by_bin = {c.bin_label: c.entry_count for c in manifest.chunks}
        assert by_bin == {"2026-03-01": 7, "2026-03-02": 5}
        assert sum(by_bin.values()) == len(lines)

    def test_unparsable_timestamps_are_quarantined(self, tmp_path):
        _write(tmp_path / "f.log", [_line("2026-03-01", 1), "no timestamp here", _line("2026-03-01", 2)])
        manifest = scan_corpus([tmp_path])
        by_bin = {c.bin_label: c.entry_count for c in manifest.chunks}
        assert by_bin == {"2026-03-01": 2, "unbinned": 1}
        assert manifest.total_entries() == 3

    def test_partition_property(self, tmp_path):
        # chunk counts partition the record total, whatever the layout
        _write(tmp_path / "a.log", [_line("2026-03-01", s) for s in range(4)] + ["junk"])
        _write(tmp_path / "b.log", [_line("2026-03-01", s) for s in range(3)] + [_line("2026-03-05", 1)])
        manifest = scan_corpus([tmp_path])
        assert sum(c.entry_count for c in manifest.chunks) == 9

    def test_hourly_bins(self, tmp_path):
        _write(tmp_path / "f.log", [_line("2026-03-01", 10), _line("2026-03-01", 3700)])
        manifest = scan_corpus([tmp_path], bin_seconds=3600)
        assert sorted(c.bin_label for c in manifest.chunks) == [
            "2026-03-01T00:00:00",
            "2026-03-01T01:00:00",
        ]

    def test_missing_path_raises(self, tmp_path):
        with pytest.raises(DataError):
            scan_corpus([tmp_path / "nope"])

    def test_manifest_round_trip(self, tmp_path):
        _write(tmp_path / "f.log", [_line("2026-03-01", 1)])
        manifest = scan_corpus([tmp_path])
        manifest.save(tmp_path / "m.json")
        again = CorpusManifest.load(tmp_path / "m.json")
        assert again.to_dict() == manifest.to_dict()

    def test_timestamp_regex_needs_one_group(self):
        with pytest.raises(DataError):
            TimestampSpec(r"\d+", "%s").compile()


class TestRead:
    def test_empty_chunk_streams_nothing(self, tmp_path):
        (tmp_path / "g.log").write_text("", encoding="utf-8")
        manifest = scan_corpus([tmp_path])
        manifest.chunks.append(Chunk("2026-03-01#g.log", "2026-03-01", "g.log", 0))
        assert list(read_entries(manifest, "2026-03-01#g.log")) == []

    def test_hundred_records_offsets_strictly_increasing(self, tmp_path):
        lines = [_line("2026-03-01", s, body=f"rec{s}") for s in range(100)]
        _write(tmp_path / "f.log", lines)
        manifest = scan_corpus([tmp_path])
        entries = list(read_entries(manifest, manifest.chunks[0].chunk_id))
        assert len(entries) == 100
        offsets = [e.offset for e in entries]
        assert offsets == sorted(offsets) and len(set(offsets)) == 100
        # oracle: offsets from a manual delimiter scan
        manual = []
        pos = 0
        for ln in lines:
            manual.append(pos)
            pos += len(ln) + 1
        assert offsets == manual

    def test_rereading_is_byte_identical(self, tmp_path):
        _write(tmp_path / "f.log", [_line("2026-03-01", s) for s in range(10)])
        manifest = scan_corpus([tmp_path])
        cid = manifest.chunks[0].chunk_id
        first = [(e.offset, e.raw_text) for e in read_entries(manifest, cid)]
        second = [(e.offset, e.raw_text) for e in read_entries(manifest, cid)]
        assert first == second

    def test_unknown_chunk_id(self, tmp_path):
        _write(tmp_path / "f.log", [_line("2026-03-01", 1)])
        manifest = scan_corpus([tmp_path])
        with pytest.raises(DataError):
            list(read_entries(manifest, "2099-01-01#f.log"))

    def test_missing_file_identifies_chunk(self, tmp_path):
        _write(tmp_path / "f.log", [_line("2026-03-01", 1)])
        manifest = scan_corpus([tmp_path])
        (tmp_path / "f.log").unlink()
        with pytest.raises(DataError, match="f.log"):
            list(read_entries(manifest, manifest.chunks[0].chunk_id))

    def test_multi_bin_file_filters_records(self, tmp_path):
        lines = [_line("2026-03-01", 1), _line("2026-03-02", 1), _line("2026-03-01", 2)]
        _write(tmp_path / "f.log", lines)
        manifest = scan_corpus([tmp_path])
        first_day = next(c for c in manifest.chunks if c.bin_label == "2026-03-01")
        entries = list(read_entries(manifest, first_day.chunk_id))
        assert [e.raw_text for e in entries] == [lines[0], lines[2]]


class TestSynthetic:
    def small_spec(self, **kw) -> SyntheticSpec:
        base = dict(
            n_days=6,
            entries_per_day=300,
            vocabulary=[("alpha", 0.5), ("beta", 0.4), ("gamma", 0.1)],
            rng_seed=5,
        )
        base.update(kw)
        return SyntheticSpec(**base)

    def test_no_anomalies_means_empty_ground_truth(self, tmp_path):
        manifest, truth = generate_synthetic_corpus(self.small_spec(), tmp_path / "c")
        assert truth.anomalies == []
        assert len(manifest.bins()) == 6

    def test_zero_vocabulary_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            generate_synthetic_corpus(self.small_spec(vocabulary=[]), tmp_path / "c")

    def test_bad_multiplier_rejected(self, tmp_path):
        spec = self.small_spec(anomalies=[AnomalySpec(0, 1, ("alpha",), 0.5)])
        with pytest.raises(ConfigError):
            generate_synthetic_corpus(spec, tmp_path / "c")

    def test_anomaly_days_out_of_range_rejected(self, tmp_path):
        spec = self.small_spec(anomalies=[AnomalySpec(4, 9, ("alpha",), 2.0)])
        with pytest.raises(ConfigError):
            generate_synthetic_corpus(spec, tmp_path / "c")

    def test_injection_multiplies_token_count(self, tmp_path):
        # oracle: count token occurrences in the generated files, normalized
        # by each day's own non-injected activity (days carry a weekly cycle)
        spec = self.small_spec(
            n_days=8,
            entries_per_day=2000,
            anomalies=[AnomalySpec(3, 5, ("gamma",), 10.0)],
            rng_seed=9,
        )
        manifest, truth = generate_synthetic_corpus(spec, tmp_path / "c")
        share = 0.1  # gamma's normalized vocabulary weight
        injected_per_day = {
            d["day"]: len(d["offsets"]) for d in truth.anomalies[0]["injected"]
        }
        for chunk in manifest.chunks:
            text = (tmp_path / "c" / chunk.path).read_text()
            count = text.count("OID: gamma")
            baseline = share * (chunk.entry_count - injected_per_day.get(chunk.bin_label, 0))
            expected = 10.0 if chunk.bin_label in truth.anomalies[0]["days"] else 1.0
            assert count / baseline == pytest.approx(expected, rel=0.2)

    def test_ground_truth_offsets_point_at_injected_tokens(self, tmp_path):
        spec = self.small_spec(anomalies=[AnomalySpec(1, 2, ("gamma",), 8.0)], rng_seed=3)
        manifest, truth = generate_synthetic_corpus(spec, tmp_path / "c")
        for per_day in truth.anomalies[0]["injected"]:
            data = (tmp_path / "c" / per_day["path"]).read_bytes()
            for off in per_day["offsets"][:50]:
                end = data.find(b"\n", off)
                assert b"OID: gamma" in data[off:end]

    def test_seeded_determinism_is_byte_identical(self, tmp_path):
        spec = self.small_spec(anomalies=[AnomalySpec(2, 3, ("beta",), 4.0)])
        m1, t1 = generate_synthetic_corpus(spec, tmp_path / "c1")
        m2, t2 = generate_synthetic_corpus(spec, tmp_path / "c2")
        assert [c.entry_count for c in m1.chunks] == [c.entry_count for c in m2.chunks]
        assert t1.to_dict()["anomalies"] == t2.to_dict()["anomalies"]
        for c1, c2 in zip(m1.chunks, m2.chunks):
            assert (tmp_path / "c1" / c1.path).read_bytes() == (tmp_path / "c2" / c2.path).read_bytes()

    def test_round_trip_reproduces_raw_text(self, tmp_path):
        manifest, _ = generate_synthetic_corpus(self.small_spec(), tmp_path / "c")
        chunk = manifest.chunks[0]
        raw = (tmp_path / "c" / chunk.path).read_text(encoding="utf-8")
        texts = [e.raw_text for e in read_entries(manifest, chunk.chunk_id)]
        assert "\n".join(texts) + "\n" == raw

    def test_gzip_chunks_scan_and_read(self, tmp_path):
        import gzip

        lines = [_line("2026-03-01", s, body=f"z{s}") for s in range(20)]
        with gzip.open(tmp_path / "day.log.gz", "wt", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        manifest = scan_corpus([tmp_path])
        assert manifest.total_entries() == 20
        entries = list(read_entries(manifest, manifest.chunks[0].chunk_id))
        assert [e.raw_text for e in entries] == lines

    def test_generate_matches_scan(self, tmp_path):
        # the constructed manifest must agree with a fresh scan of the files
        manifest, _ = generate_synthetic_corpus(self.small_spec(), tmp_path / "c")
        scanned = scan_corpus([tmp_path / "c"], ISO_TIMESTAMP, "\n", DAY_SECONDS)
        gen = {(c.bin_label, c.path): c.entry_count for c in manifest.chunks}
        scn = {(c.bin_label, c.path): c.entry_count for c in scanned.chunks if not c.path.endswith(".json")}
        assert gen == scn
