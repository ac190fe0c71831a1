"""Recovering the raw log entries behind an anomaly.

A case names the suspicious bins and the features implicating them; the
de-parse scans only those bins and reports every entry matching at least
one case feature, ordered by how many distinct case features it matches
(ties by timestamp, then location). Reports reference entries by
(file, byte offset) so multi-million-entry results stay small; raw text is
re-read on demand.
"""

from __future__ import annotations

import json
import multiprocessing as mp
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from . import _kernels, corpus as corpus_mod
from .corpus import CorpusManifest
from .errors import ConfigError, DataError
from .parsecfg import ParserConfig

_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


@dataclass(frozen=True)
class AnomalyCase:
    """A detected anomaly: when it happened and which features explain it."""

    case_id: str
    bins: frozenset[str]
    features: tuple[str, ...]
    created_at: str = ""
    notes: str = ""

    def __post_init__(self) -> None:
        if not self.bins:
            raise ConfigError("a case needs at least one bin")
        if not self.features:
            raise ConfigError("a case needs at least one feature")

    def validate(self, config: ParserConfig, manifest: CorpusManifest) -> None:
        known = {f.name for f in config.features}
        bad = [f for f in self.features if f not in known]
        if bad:
            raise ConfigError(f"case {self.case_id!r}: unknown features {bad}")
        missing = self.bins - set(manifest.bins())
        if missing:
            raise ConfigError(f"case {self.case_id!r}: bins not in corpus: {sorted(missing)}")

    def to_dict(self) -> dict:
        return {
            "id": self.case_id,
            "bins": sorted(self.bins),
            "features": list(self.features),
            "created_at": self.created_at,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalyCase":
        return cls(
            case_id=d["id"],
            bins=frozenset(d["bins"]),
            features=tuple(d["features"]),
            created_at=d.get("created_at", ""),
            notes=d.get("notes", ""),
        )


@dataclass(frozen=True)
class MatchedEntry:
    path: str
    offset: int
    timestamp: str
    features: tuple[str, ...]

    @property
    def match_count(self) -> int:
        return len(self.features)


@dataclass
class DeparseReport:
    case_id: str
    entries: list[MatchedEntry]
    matched: int
    window_total: int
    actors: dict[str, int] = field(default_factory=dict)
    gaps: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "case": self.case_id,
            "totals": {"matched": self.matched, "window": self.window_total},
            "actors": self.actors,
            "gaps": self.gaps,
            "entries": [
                {
                    "path": e.path,
                    "offset": e.offset,
                    "timestamp": e.timestamp,
                    "features": list(e.features),
                    "match_count": e.match_count,
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeparseReport":
        return cls(
            case_id=d["case"],
            entries=[
                MatchedEntry(e["path"], int(e["offset"]), e["timestamp"], tuple(e["features"]))
                for e in d["entries"]
            ],
            matched=int(d["totals"]["matched"]),
            window_total=int(d["totals"]["window"]),
            actors={k: int(v) for k, v in d.get("actors", {}).items()},
            gaps=list(d.get("gaps", [])),
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "DeparseReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def offsets(self) -> set[tuple[str, int]]:
        return {(e.path, e.offset) for e in self.entries}


# -- matching core -----------------------------------------------------------


class _CaseMatcher:
    """Per-variable value->bitmask tables for the case's features, lazily filled.

    A default feature matches a value only when no specific feature of its
    variable accepts it, mirroring parse-time counting.
    """

    def __init__(self, config: ParserConfig, case_features: tuple[str, ...]):
        self.feature_names = list(case_features)
        by_var: dict[str, list] = {}
        for bit, name in enumerate(case_features):
            fdef = next(f for f in config.features if f.name == name)
            siblings = [f for f in config.features_of(fdef.variable) if not f.is_default]
            by_var.setdefault(fdef.variable, []).append((bit, fdef, siblings))
        self.variables = [
            (config.variable(var).compile(), feats, {}) for var, feats in sorted(by_var.items())
        ]

    def match(self, text: str) -> int:
        mask = 0
        for pattern, feats, table in self.variables:
            found = pattern.findall(text)
            if not found:
                continue
            for value in found:
                if value not in table:
                    m = 0
                    for bit, fdef, siblings in feats:
                        if fdef.is_default:
                            if not any(s.accepts(value) for s in siblings):
                                m |= 1 << bit
                        elif fdef.accepts(value):
                            m |= 1 << bit
                    table[value] = m
            mask |= _kernels.match_bits(found, table)
        return mask

    def names(self, mask: int) -> tuple[str, ...]:
        return tuple(n for i, n in enumerate(self.feature_names) if mask >> i & 1)


_DEPARSE_WORKER: dict = {}


def _init_deparse_worker(manifest_dict: dict, config_dict: dict, features: tuple[str, ...], actors: tuple[str, ...]) -> None:
    manifest = CorpusManifest.from_dict(manifest_dict)
    config = ParserConfig.from_dict(config_dict)
    _DEPARSE_WORKER.update(
        manifest=manifest,
        config=config,
        matcher_args=(config, features),
        actors={a: config.variable(a).compile() for a in actors},
    )


def _deparse_chunk_task(chunk_id: str) -> dict:
    manifest: CorpusManifest = _DEPARSE_WORKER["manifest"]
    chunk = manifest.chunk(chunk_id)
    matcher = _CaseMatcher(*_DEPARSE_WORKER["matcher_args"])
    actor_patterns: dict = _DEPARSE_WORKER["actors"]
    ts_pattern = manifest.timestamp_spec.compile()
    matched: list[tuple[int, str, int]] = []  # (offset, timestamp, mask)
    actor_values: dict[str, set[str]] = {a: set() for a in actor_patterns}
    total = 0
    try:
        for offset, rec in corpus_mod.iter_chunk_records(manifest, chunk):
            total += 1
            text = rec.decode("utf-8", errors="replace")
            mask = matcher.match(text)
            if mask:
                ts = manifest.timestamp_spec.parse(text, ts_pattern)
                ts_str = ts.strftime(_TS_FORMAT) if ts else ""
                matched.append((offset, ts_str, mask))
                for actor, pat in actor_patterns.items():
                    actor_values[actor].update(pat.findall(text))
        return {
            "id": chunk_id,
            "status": "ok",
            "path": chunk.path,
            "total": total,
            "matched": matched,
            "actor_values": {a: sorted(v) for a, v in actor_values.items()},
        }
    except Exception as exc:
        return {"id": chunk_id, "status": "failed", "path": chunk.path, "error": str(exc)}


def deparse(
    manifest: CorpusManifest,
    case: AnomalyCase,
    config: ParserConfig,
    n_workers: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> DeparseReport:
    """Scan the case's bins and report every entry matching a case feature.

    Output is a pure function of (manifest, case, config); chunk failures
    produce a partial report with the gap noted rather than aborting.
    """
    case.validate(config, manifest)
    actors = tuple(a for a in config.actors)
    matcher = _CaseMatcher(config, case.features)
    chunk_ids = [c.chunk_id for c in manifest.chunks if c.bin_label in case.bins]

    results: dict[str, dict] = {}
    total_chunks = len(chunk_ids)
    if n_workers <= 1 or total_chunks <= 1:
        _init_deparse_worker(manifest.to_dict(), config.to_dict(), case.features, actors)
        for i, cid in enumerate(chunk_ids):
            results[cid] = _deparse_chunk_task(cid)
            if progress:
                progress(i + 1, total_chunks)
    else:
        with mp.Pool(
            processes=min(n_workers, total_chunks),
            initializer=_init_deparse_worker,
            initargs=(manifest.to_dict(), config.to_dict(), case.features, actors),
        ) as pool:
            for i, res in enumerate(pool.imap_unordered(_deparse_chunk_task, chunk_ids)):
                results[res["id"]] = res
                if progress:
                    progress(i + 1, total_chunks)

    entries: list[MatchedEntry] = []
    actor_values: dict[str, set[str]] = {a: set() for a in actors}
    window_total = 0
    gaps: list[dict] = []
    for cid in chunk_ids:
        res = results[cid]
        if res["status"] != "ok":
            gaps.append({"chunk": cid, "error": res.get("error", "")})
            continue
        window_total += res["total"]
        for offset, ts_str, mask in res["matched"]:
            entries.append(MatchedEntry(res["path"], offset, ts_str, matcher.names(mask)))
        for actor, values in res["actor_values"].items():
            actor_values[actor].update(values)

    entries.sort(key=lambda e: (-e.match_count, e.timestamp, e.path, e.offset))
    return DeparseReport(
        case_id=case.case_id,
        entries=entries,
        matched=len(entries),
        window_total=window_total,
        actors={a: len(v) for a, v in actor_values.items()},
        gaps=sorted(gaps, key=lambda g: g["chunk"]),
    )


def summarize(report: DeparseReport) -> dict:
    """Actor table of a report: matched/total plus distinct actor counts."""
    return {
        "case": report.case_id,
        "matched": report.matched,
        "window": report.window_total,
        "share": report.matched / report.window_total if report.window_total else 0.0,
        "actors": dict(report.actors),
    }


class RecordReader:
    """Random access to raw entries by (file, byte offset), caching file bytes
    so reports with many entries per file stay O(files), not O(entries)."""

    def __init__(self, manifest: CorpusManifest, max_files: int = 16):
        self.manifest = manifest
        self.delim = manifest.record_delimiter.encode("utf-8")
        self.max_files = max_files
        self._cache: dict[str, bytes] = {}

    def _data(self, path: str) -> bytes:
        data = self._cache.get(path)
        if data is None:
            full = Path(self.manifest.root) / path if self.manifest.root else Path(path)
            data = corpus_mod._read_file_bytes(full)
            if len(self._cache) >= self.max_files:
                self._cache.pop(next(iter(self._cache)))
            self._cache[path] = data
        return data

    def text(self, path: str, offset: int) -> str:
        data = self._data(path)
        if offset < 0 or offset >= len(data):
            raise DataError(f"offset {offset} out of range for {path}")
        end = data.find(self.delim, offset)
        rec = data[offset:] if end < 0 else data[offset:end]
        return rec.decode("utf-8", errors="replace")

    def report_texts(self, report: DeparseReport):
        """Raw texts of a report's entries, in report order."""
        for e in report.entries:
            yield self.text(e.path, e.offset)


def entry_text(manifest: CorpusManifest, path: str, offset: int) -> str:
    """Materialize one entry's raw text from its (file, byte offset) reference."""
    return RecordReader(manifest).text(path, offset)


def materialize(manifest: CorpusManifest, report: DeparseReport, out_path: Path | str) -> int:
    """Write the matched entries' raw text to a file; returns the line count."""
    reader = RecordReader(manifest)
    written = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for text in reader.report_texts(report):
            fh.write(text + "\n")
            written += 1
    return written


def verify_report(manifest: CorpusManifest, report: DeparseReport, case: AnomalyCase, config: ParserConfig) -> bool:
    """Soundness re-check: every reported entry matches >= 1 case feature
    when re-evaluated against the raw bytes."""
    matcher = _CaseMatcher(config, case.features)
    reader = RecordReader(manifest)
    for text in reader.report_texts(report):
        if not matcher.match(text):
            return False
    return True
