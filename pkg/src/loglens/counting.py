"""Turning raw entries into count-feature vectors, sequentially or in parallel.

Counting is per occurrence: every regex match of a variable inside an entry
contributes one count, to the non-default features accepting its captured
value, or to the variable's default feature when none does. The output of a
corpus parse is a pure function of (manifest, config), whatever the worker
count.
"""

from __future__ import annotations

import multiprocessing as mp
import re
import time
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import _kernels, corpus as corpus_mod
from .corpus import Chunk, CorpusManifest, LogEntry, UNBINNED
from .errors import DataError
from .matrix import FeatureMatrix, FeatureVector
from .parsecfg import ENTRY_COUNT, TRIPLET_COUNT, ParserConfig


@dataclass
class _CompiledVariable:
    pattern: re.Pattern[str]
    literal_map: dict[str, tuple[int, ...]]
    regex_matchers: list[tuple[int, re.Pattern[str]]]
    default_idx: int


class CompiledConfig:
    """A ParserConfig resolved to column indexes and compiled regexes."""

    def __init__(self, config: ParserConfig):
        self.config = config
        self.columns = config.feature_names
        col_idx = {name: i for i, name in enumerate(self.columns)}
        self.entry_idx = col_idx[ENTRY_COUNT]
        self.triplet_idx = col_idx[TRIPLET_COUNT]
        self.variables: list[_CompiledVariable] = []
        for var in config.variables:
            literal_map: dict[str, list[int]] = {}
            regex_matchers: list[tuple[int, object]] = []
            default_idx = -1
            for f in config.features_of(var.name):
                if f.is_default:
                    default_idx = col_idx[f.name]
                elif f.kind == "literal":
                    literal_map.setdefault(f.matcher, []).append(col_idx[f.name])
                else:
                    regex_matchers.append((col_idx[f.name], re.compile(f.matcher)))
            self.variables.append(
                _CompiledVariable(
                    pattern=var.compile(),
                    literal_map={k: tuple(v) for k, v in literal_map.items()},
                    regex_matchers=regex_matchers,
                    default_idx=default_idx,
                )
            )

    def resolve(self, var: _CompiledVariable, value: str) -> tuple[int, ...]:
        """Column indexes a captured value feeds; empty means the default."""
        idxs = var.literal_map.get(value, ())
        if var.regex_matchers:
            idxs = idxs + tuple(i for i, rp in var.regex_matchers if rp.search(value))
        return idxs


def _count_records(records: list[tuple[int, bytes]], cc: CompiledConfig) -> np.ndarray:
    counts = np.zeros(len(cc.columns), dtype=np.int64)
    occurrences: list[dict[str, int]] = [{} for _ in cc.variables]
    n_entries = 0
    for _, rec in records:
        n_entries += 1
        text = rec.decode("utf-8", errors="replace")
        for vi, var in enumerate(cc.variables):
            found = var.pattern.findall(text)
            if found:
                occ = occurrences[vi]
                for value in found:
                    occ[value] = occ.get(value, 0) + 1
    for vi, var in enumerate(cc.variables):
        resolved: dict[str, tuple[int, ...]] = {}
        for value, n in occurrences[vi].items():
            idxs = resolved.get(value)
            if idxs is None:
                idxs = resolved[value] = cc.resolve(var, value)
            if idxs:
                for i in idxs:
                    counts[i] += n
            else:
                counts[var.default_idx] += n
    counts[cc.entry_idx] = n_entries
    counts[cc.triplet_idx] = _kernels.total_triplets([rec for _, rec in records])
    return counts


def parse_chunk(entries: Iterable[LogEntry], config: ParserConfig, bin_label: str) -> FeatureVector:
    """Count one bin's entries into a feature vector.

    Unmatched text contributes nothing; values matched by no specific
    feature land in their variable's default.
    """
    cc = CompiledConfig(config)
    records = [(e.offset, e.raw_text.encode("utf-8", errors="replace")) for e in entries]
    counts = _count_records(records, cc)
    return FeatureVector(bin_label, {name: int(c) for name, c in zip(cc.columns, counts)})


# ---------------------------------------------------------------------------
# Parallel corpus parse. Workers are initialized once per pool with the
# manifest/config dicts; tasks and results stay small and picklable.

_WORKER: dict = {}


def _init_worker(manifest_dict: dict, config_dict: dict, exclude: frozenset[tuple[str, int]]) -> None:
    _WORKER["manifest"] = CorpusManifest.from_dict(manifest_dict)
    _WORKER["cc"] = CompiledConfig(ParserConfig.from_dict(config_dict))
    _WORKER["exclude"] = exclude


def _parse_chunk_task(chunk_id: str) -> dict:
    manifest: CorpusManifest = _WORKER["manifest"]
    cc: CompiledConfig = _WORKER["cc"]
    exclude: frozenset[tuple[str, int]] = _WORKER["exclude"]
    t0 = time.monotonic()
    chunk = manifest.chunk(chunk_id)
    try:
        records = list(corpus_mod.iter_chunk_records(manifest, chunk))
        if exclude:
            records = [(off, rec) for off, rec in records if (chunk.path, off) not in exclude]
        counts = _count_records(records, cc)
        return {
            "id": chunk_id,
            "bin": chunk.bin_label,
            "status": "ok",
            "entries": len(records),
            "seconds": round(time.monotonic() - t0, 3),
            "counts": counts.tolist(),
        }
    except Exception as exc:
        return {
            "id": chunk_id,
            "bin": chunk.bin_label,
            "status": "failed",
            "entries": 0,
            "seconds": round(time.monotonic() - t0, 3),
            "counts": None,
            "error": str(exc),
        }


def _run_chunk_tasks(
    manifest: CorpusManifest,
    config: ParserConfig,
    chunk_ids: list[str],
    n_workers: int,
    exclude: frozenset[tuple[str, int]] = frozenset(),
    progress: Callable[[int, int], None] | None = None,
) -> dict[str, dict]:
    results: dict[str, dict] = {}
    total = len(chunk_ids)
    if n_workers <= 1 or total <= 1:
        _init_worker(manifest.to_dict(), config.to_dict(), exclude)
        for i, cid in enumerate(chunk_ids):
            results[cid] = _parse_chunk_task(cid)
            if progress:
                progress(i + 1, total)
        return results
    with mp.Pool(
        processes=min(n_workers, total),
        initializer=_init_worker,
        initargs=(manifest.to_dict(), config.to_dict(), exclude),
    ) as pool:
        for i, res in enumerate(pool.imap_unordered(_parse_chunk_task, chunk_ids)):
            results[res["id"]] = res
            if progress:
                progress(i + 1, total)
    return results


def parse_corpus(
    manifest: CorpusManifest,
    config: ParserConfig,
    n_workers: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> tuple[FeatureMatrix, dict]:
    """Parse every binned chunk into a matrix row per bin.

    Chunks sharing a bin are counted independently and summed. Bins with a
    failed chunk are excluded from the matrix (never zero-filled) and listed
    in the run report.
    """
    t0 = time.monotonic()
    chunk_ids = [c.chunk_id for c in manifest.chunks if c.bin_label != UNBINNED]
    results = _run_chunk_tasks(manifest, config, chunk_ids, n_workers, progress=progress)

    columns = config.feature_names
    per_bin: dict[str, np.ndarray] = {}
    failed_bins: set[str] = set()
    for cid in chunk_ids:
        res = results[cid]
        if res["status"] != "ok":
            failed_bins.add(res["bin"])
            continue
        counts = np.array(res["counts"], dtype=np.int64)
        if res["bin"] in per_bin:
            per_bin[res["bin"]] = per_bin[res["bin"]] + counts
        else:
            per_bin[res["bin"]] = counts
    labels = [b for b in sorted(per_bin) if b not in failed_bins]
    values = (
        np.vstack([per_bin[b] for b in labels]) if labels else np.zeros((0, len(columns)), dtype=np.int64)
    )
    report = {
        "chunks": [results[cid] | {"counts": None} for cid in chunk_ids],
        "failed_bins": sorted(failed_bins),
        "n_rows": len(labels),
        "n_columns": len(columns),
        "wall_seconds": round(time.monotonic() - t0, 3),
    }
    for c in report["chunks"]:
        c.pop("counts", None)
    return FeatureMatrix(labels, columns, values), report


def parse_bins(
    manifest: CorpusManifest,
    config: ParserConfig,
    bins: set[str],
    exclude: frozenset[tuple[str, int]] = frozenset(),
    n_workers: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> dict[str, np.ndarray]:
    """Re-count selected bins, optionally excluding (path, offset) entries.

    Used by log-wise model updates; raises if any chunk of a requested bin
    fails, since a partial row would silently corrupt the matrix.
    """
    chunk_ids = [c.chunk_id for c in manifest.chunks if c.bin_label in bins]
    missing = bins - {c.bin_label for c in manifest.chunks}
    if missing:
        raise DataError(f"bins not in manifest: {sorted(missing)}")
    results = _run_chunk_tasks(manifest, config, chunk_ids, n_workers, exclude=exclude, progress=progress)
    per_bin: dict[str, np.ndarray] = {}
    for res in results.values():
        if res["status"] != "ok":
            raise DataError(f"chunk {res['id']!r} failed during re-parse: {res.get('error')}")
        counts = np.array(res["counts"], dtype=np.int64)
        per_bin[res["bin"]] = per_bin.get(res["bin"], np.zeros(len(counts), dtype=np.int64)) + counts
    return per_bin
