"""Automatic derivation of count features from the data itself.

Runs in two phases mirroring the parallel parse: each chunk reports the
(variable, value) pairs present in at least a threshold fraction of its
entries, then a single merge keeps the candidates whose per-chunk occurrence
counts vary enough, relative to the variance of the per-chunk entry totals,
to be informative. The merged result is a full parser config with one
default feature per variable.
"""

from __future__ import annotations

import json
import multiprocessing as mp
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import corpus as corpus_mod
from .corpus import CorpusManifest, LogEntry, UNBINNED
from .errors import ConfigError, DataError
from .parsecfg import (
    KIND_DEFAULT,
    KIND_LITERAL,
    FeatureDef,
    ParserConfig,
    VariableDef,
    default_feature_name,
    feature_name_for,
)


@dataclass(frozen=True)
class CandidateFeature:
    """A (variable, value) pair frequent enough in one chunk to be a feature."""

    variable: str
    value: str
    presence: float  # fraction of the chunk's entries containing the value
    occurrences: int  # total occurrences in the chunk, all entries

    def __post_init__(self) -> None:
        if not (0.0 <= self.presence <= 1.0):
            raise DataError(f"presence out of [0, 1]: {self.presence}")


@dataclass(frozen=True)
class LearningParams:
    presence_threshold: float = 0.05
    variance_ratio_threshold: float = 1e-4

    def __post_init__(self) -> None:
        for name in ("presence_threshold", "variance_ratio_threshold"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ConfigError(f"{name} must be in (0, 1), got {v}")


@dataclass
class ChunkLearning:
    """One chunk's candidate dump."""

    bin_label: str
    n_entries: int
    candidates: list[CandidateFeature] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "bin": self.bin_label,
            "n_entries": self.n_entries,
            "candidates": [
                {"variable": c.variable, "value": c.value, "presence": c.presence, "occurrences": c.occurrences}
                for c in self.candidates
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChunkLearning":
        return cls(
            bin_label=d["bin"],
            n_entries=int(d["n_entries"]),
            candidates=[
                CandidateFeature(c["variable"], c["value"], float(c["presence"]), int(c["occurrences"]))
                for c in d["candidates"]
            ],
        )


def _learn_records(
    texts: Iterable[str], variables: list[VariableDef], presence_threshold: float
) -> tuple[list[CandidateFeature], int]:
    compiled = [(v.name, v.compile()) for v in variables]
    presence: dict[tuple[str, str], int] = {}
    occurrences: dict[tuple[str, str], int] = {}
    n_entries = 0
    for text in texts:
        n_entries += 1
        for vname, pat in compiled:
            found = pat.findall(text)
            if not found:
                continue
            for value in found:
                occurrences[(vname, value)] = occurrences.get((vname, value), 0) + 1
            for value in set(found):
                presence[(vname, value)] = presence.get((vname, value), 0) + 1
    if n_entries == 0:
        return [], 0
    out = [
        CandidateFeature(vname, value, n_present / n_entries, occurrences[(vname, value)])
        for (vname, value), n_present in presence.items()
        if n_present / n_entries >= presence_threshold
    ]
    out.sort(key=lambda c: (-c.presence, c.variable, c.value))
    return out, n_entries


def learn_chunk(
    entries: Iterable[LogEntry], variables: list[VariableDef], presence_threshold: float = 0.05
) -> list[CandidateFeature]:
    """Candidates of one chunk, sorted by descending presence.

    Presence is per-entry membership: an entry counts once however many
    occurrences of the value it holds.
    """
    if not variables:
        raise ConfigError("learn_chunk needs at least one variable")
    candidates, _ = _learn_records((e.raw_text for e in entries), variables, presence_threshold)
    return candidates


# -- parallel per-chunk learning --------------------------------------------

_LEARN_WORKER: dict = {}


def _init_learn_worker(manifest_dict: dict, variables: list[tuple[str, str]], threshold: float) -> None:
    _LEARN_WORKER["manifest"] = CorpusManifest.from_dict(manifest_dict)
    _LEARN_WORKER["variables"] = [VariableDef(n, p) for n, p in variables]
    _LEARN_WORKER["threshold"] = threshold


def _learn_chunk_task(chunk_id: str) -> dict:
    manifest: CorpusManifest = _LEARN_WORKER["manifest"]
    chunk = manifest.chunk(chunk_id)
    try:
        texts = (rec.decode("utf-8", errors="replace") for _, rec in corpus_mod.iter_chunk_records(manifest, chunk))
        candidates, n_entries = _learn_records(texts, _LEARN_WORKER["variables"], _LEARN_WORKER["threshold"])
        return {"id": chunk_id, "status": "ok", "learning": ChunkLearning(chunk.bin_label, n_entries, candidates).to_dict()}
    except Exception as exc:
        return {"id": chunk_id, "status": "failed", "error": str(exc), "learning": None}


def learn_corpus(
    manifest: CorpusManifest,
    variables: list[VariableDef],
    presence_threshold: float = 0.05,
    n_workers: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> tuple[list[ChunkLearning], list[dict]]:
    """Per-chunk candidate dumps for every binned chunk, plus failures."""
    if not variables:
        raise ConfigError("learn_corpus needs at least one variable")
    chunk_ids = [c.chunk_id for c in manifest.chunks if c.bin_label != UNBINNED]
    var_spec = [(v.name, v.pattern) for v in variables]
    results: dict[str, dict] = {}
    total = len(chunk_ids)
    if n_workers <= 1 or total <= 1:
        _init_learn_worker(manifest.to_dict(), var_spec, presence_threshold)
        for i, cid in enumerate(chunk_ids):
            results[cid] = _learn_chunk_task(cid)
            if progress:
                progress(i + 1, total)
    else:
        with mp.Pool(
            processes=min(n_workers, total),
            initializer=_init_learn_worker,
            initargs=(manifest.to_dict(), var_spec, presence_threshold),
        ) as pool:
            for i, res in enumerate(pool.imap_unordered(_learn_chunk_task, chunk_ids)):
                results[res["id"]] = res
                if progress:
                    progress(i + 1, total)
    learnings = [
        ChunkLearning.from_dict(results[cid]["learning"]) for cid in chunk_ids if results[cid]["status"] == "ok"
    ]
    failures = [
        {"id": cid, "error": results[cid].get("error", "")} for cid in chunk_ids if results[cid]["status"] != "ok"
    ]
    return learnings, failures


def merge_learned(
    chunk_learnings: list[ChunkLearning],
    variables: list[VariableDef],
    params: LearningParams = LearningParams(),
    bin_seconds: int = 86400,
    actors: list[str] | None = None,
) -> ParserConfig:
    """Merge per-chunk candidates into one parser config.

    A candidate survives when the sample variance of its per-chunk
    occurrence counts reaches `variance_ratio_threshold` times the sample
    variance of the per-chunk entry totals. Chunks whose dump does not list
    a candidate contribute a zero count for it. Every variable gets exactly
    one default feature; if the filter removes everything, the config
    degrades to defaults plus meta-counters with a warning.
    """
    if len(chunk_learnings) < 2:
        raise DataError("merging needs at least 2 chunks (variance requires 2 samples)")
    if not variables:
        raise ConfigError("merge_learned needs the variable definitions")

    n_chunks = len(chunk_learnings)
    entry_totals = np.array([cl.n_entries for cl in chunk_learnings], dtype=float)
    reference_variance = float(np.var(entry_totals, ddof=1))

    counts: dict[tuple[str, str], np.ndarray] = {}
    for ci, cl in enumerate(chunk_learnings):
        for c in cl.candidates:
            key = (c.variable, c.value)
            if key not in counts:
                counts[key] = np.zeros(n_chunks)
            counts[key][ci] = c.occurrences

    # zero-variance candidates are dead columns whatever the reference
    threshold = params.variance_ratio_threshold * reference_variance
    survivors = sorted(
        key
        for key, vec in counts.items()
        if (v := float(np.var(vec, ddof=1))) > 0.0 and v >= threshold
    )
    if counts and not survivors:
        warnings.warn("variance filter removed every learned candidate; emitting defaults only")

    features: list[FeatureDef] = []
    taken: set[str] = set()
    for variable, value in survivors:
        name = feature_name_for(variable, value, taken)
        taken.add(name)
        features.append(FeatureDef(name=name, variable=variable, kind=KIND_LITERAL, matcher=value))
    for v in variables:
        name = default_feature_name(v.name)
        while name in taken:
            name += "_"
        taken.add(name)
        features.append(FeatureDef(name=name, variable=v.name, kind=KIND_DEFAULT))

    return ParserConfig(variables=list(variables), features=features, bin_seconds=bin_seconds, actors=actors or [])


def emit_config(config: ParserConfig, path: Path | str) -> None:
    """Write a config as YAML; reloading yields an equal config."""
    config.save(path)


def save_learnings(learnings: list[ChunkLearning], path: Path | str) -> None:
    Path(path).write_text(
        json.dumps([cl.to_dict() for cl in learnings], indent=2) + "\n", encoding="utf-8"
    )


def load_learnings(path: Path | str) -> list[ChunkLearning]:
    return [ChunkLearning.from_dict(d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]
