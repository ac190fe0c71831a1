"""Raw log corpora on disk: discovery, time-binned chunking and streaming.

A corpus is a set of plain-text files holding delimiter-separated records.
Scanning assigns every record to a time bin (UTC calendar day by default)
using a configurable timestamp spec, and produces a manifest of chunks. A
chunk is one (file, bin) pair; several chunks may share a bin when a bin's
records span files, and records whose timestamp cannot be parsed are
quarantined in an ``unbinned`` pseudo-bin rather than dropped.
"""

from __future__ import annotations

import gzip
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterator

from . import _kernels
from .errors import DataError

DAY_SECONDS = 86400
UNBINNED = "unbinned"


@dataclass(frozen=True)
class TimestampSpec:
    """How to pull a UTC timestamp out of a raw record.

    `regex` must contain one capture group; the captured text is parsed with
    `fmt` (strptime format). Naive results are taken as UTC.
    """

    regex: str
    fmt: str

    def compile(self) -> re.Pattern[str]:
        pat = re.compile(self.regex)
        if pat.groups != 1:
            raise DataError(f"timestamp regex needs exactly 1 capture group, got {pat.groups}")
        return pat

    def parse(self, raw_text: str, pattern: re.Pattern[str] | None = None) -> datetime | None:
        pat = pattern or self.compile()
        m = pat.search(raw_text)
        if m is None:
            return None
        try:
            ts = datetime.strptime(m.group(1), self.fmt)
        except ValueError:
            return None
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        return ts.astimezone(timezone.utc)


#: Timestamp spec matching the synthetic trap-style corpus header.
ISO_TIMESTAMP = TimestampSpec(regex=r"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2})Z", fmt="%Y-%m-%dT%H:%M:%S")


@dataclass(frozen=True)
class LogEntry:
    """One complete raw log record and where it came from."""

    raw_text: str
    timestamp: datetime | None
    source_id: str
    offset: int


@dataclass(frozen=True)
class Chunk:
    """All records of one file falling into one time bin."""

    chunk_id: str
    bin_label: str
    path: str
    entry_count: int


@dataclass
class CorpusManifest:
    """Index of a scanned corpus: chunks, timestamp spec and scan errors."""

    root: str
    record_delimiter: str
    timestamp_spec: TimestampSpec
    bin_seconds: int
    chunks: list[Chunk]
    errors: list[dict] = field(default_factory=list)

    def chunk(self, chunk_id: str) -> Chunk:
        for c in self.chunks:
            if c.chunk_id == chunk_id:
                return c
        raise DataError(f"unknown chunk id: {chunk_id!r}")

    def bins(self, include_unbinned: bool = False) -> list[str]:
        """Distinct bin labels in ascending time order."""
        labels = sorted({c.bin_label for c in self.chunks if c.bin_label != UNBINNED})
        if include_unbinned and any(c.bin_label == UNBINNED for c in self.chunks):
            labels.append(UNBINNED)
        return labels

    def chunks_for_bin(self, bin_label: str) -> list[Chunk]:
        return [c for c in self.chunks if c.bin_label == bin_label]

    def total_entries(self) -> int:
        return sum(c.entry_count for c in self.chunks)

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "record_delimiter": self.record_delimiter,
            "timestamp_spec": {"regex": self.timestamp_spec.regex, "format": self.timestamp_spec.fmt},
            "bin_seconds": self.bin_seconds,
            "chunks": [
                {"id": c.chunk_id, "bin": c.bin_label, "path": c.path, "entry_count": c.entry_count}
                for c in self.chunks
            ],
            "errors": self.errors,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusManifest":
        return cls(
            root=d["root"],
            record_delimiter=d["record_delimiter"],
            timestamp_spec=TimestampSpec(d["timestamp_spec"]["regex"], d["timestamp_spec"]["format"]),
            bin_seconds=d["bin_seconds"],
            chunks=[Chunk(c["id"], c["bin"], c["path"], c["entry_count"]) for c in d["chunks"]],
            errors=list(d.get("errors", [])),
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "CorpusManifest":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot load manifest {path}: {exc}") from exc


def bin_label_for(ts: datetime, bin_seconds: int) -> str:
    """Label of the UTC time bin containing `ts`."""
    ts = ts.astimezone(timezone.utc)
    if bin_seconds == DAY_SECONDS:
        return ts.date().isoformat()
    epoch = datetime(1970, 1, 1, tzinfo=timezone.utc)
    start = epoch + timedelta(seconds=int((ts - epoch).total_seconds()) // bin_seconds * bin_seconds)
    return start.strftime("%Y-%m-%dT%H:%M:%S")


def _read_file_bytes(path: Path) -> bytes:
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def _iter_corpus_files(root_paths: list[Path | str]) -> Iterator[tuple[Path, Path]]:
    """Yield (base, file) pairs; base is the scan root the file was found under."""
    for rp in root_paths:
        rp = Path(rp)
        if rp.is_file():
            yield rp.parent, rp
        elif rp.is_dir():
            for p in sorted(rp.rglob("*")):
                if p.is_file():
                    yield rp, p
        else:
            raise DataError(f"corpus path does not exist: {rp}")


def scan_corpus(
    root_paths: list[Path | str],
    timestamp_spec: TimestampSpec = ISO_TIMESTAMP,
    record_delimiter: str = "\n",
    bin_seconds: int = DAY_SECONDS,
) -> CorpusManifest:
    """Index a corpus into per-(file, bin) chunks.

    Every record of every readable file lands in exactly one chunk; records
    whose timestamp does not parse go to the ``unbinned`` pseudo-bin. Errors
    opening a file are collected per file, not raised.
    """
    pattern = timestamp_spec.compile()
    delim = record_delimiter.encode("utf-8")
    chunks: list[Chunk] = []
    errors: list[dict] = []
    roots = [Path(p) for p in root_paths]
    common_root = roots[0] if len(roots) == 1 and roots[0].is_dir() else None

    for base, path in _iter_corpus_files(roots):
        try:
            data = _read_file_bytes(path)
        except OSError as exc:
            errors.append({"path": str(path), "error": str(exc)})
            continue
        rel = str(path.relative_to(common_root)) if common_root else str(path)
        counts: dict[str, int] = {}
        label_cache: dict[str, str] = {}  # captured timestamp text -> bin label
        for _, rec in _kernels.scan_records(data, delim):
            m = pattern.search(rec.decode("utf-8", errors="replace"))
            if m is None:
                label = UNBINNED
            else:
                key = m.group(1)
                label = label_cache.get(key, "")
                if not label:
                    try:
                        ts = datetime.strptime(key, timestamp_spec.fmt)
                        if ts.tzinfo is None:
                            ts = ts.replace(tzinfo=timezone.utc)
                        label = bin_label_for(ts, bin_seconds)
                    except ValueError:
                        label = UNBINNED
                    label_cache[key] = label
            counts[label] = counts.get(label, 0) + 1
        for label in sorted(counts):
            chunks.append(Chunk(f"{label}#{rel}", label, rel, counts[label]))

    chunks.sort(key=lambda c: (c.bin_label, c.path))
    root = str(common_root) if common_root else ""
    return CorpusManifest(root, record_delimiter, timestamp_spec, bin_seconds, chunks, errors)


def read_entries(manifest: CorpusManifest, chunk_id: str) -> Iterator[LogEntry]:
    """Stream a chunk's records in file order.

    Yields exactly `entry_count` entries with strictly increasing offsets;
    re-reading a chunk produces a byte-identical sequence.
    """
    chunk = manifest.chunk(chunk_id)
    path = Path(manifest.root) / chunk.path if manifest.root else Path(chunk.path)
    if not path.exists():
        raise DataError(f"chunk {chunk_id!r}: file missing: {path}")
    data = _read_file_bytes(path)
    delim = manifest.record_delimiter.encode("utf-8")
    pattern = manifest.timestamp_spec.compile()
    for offset, rec in _kernels.scan_records(data, delim):
        text = rec.decode("utf-8", errors="replace")
        ts = manifest.timestamp_spec.parse(text, pattern)
        label = bin_label_for(ts, manifest.bin_seconds) if ts is not None else UNBINNED
        if label == chunk.bin_label:
            yield LogEntry(text, ts, chunk.path, offset)


def read_bin_entries(manifest: CorpusManifest, bin_label: str) -> Iterator[LogEntry]:
    """Stream all entries of a bin across its chunks, in (path, offset) order."""
    for chunk in manifest.chunks_for_bin(bin_label):
        yield from read_entries(manifest, chunk.chunk_id)


def iter_chunk_records(manifest: CorpusManifest, chunk: Chunk) -> Iterator[tuple[int, bytes]]:
    """Fast (offset, raw record bytes) stream for a chunk.

    When the chunk's file belongs entirely to one bin the per-record
    timestamp parse is skipped; multi-bin files fall back to filtering.
    """
    path = Path(manifest.root) / chunk.path if manifest.root else Path(chunk.path)
    if not path.exists():
        raise DataError(f"chunk {chunk.chunk_id!r}: file missing: {path}")
    data = _read_file_bytes(path)
    delim = manifest.record_delimiter.encode("utf-8")
    single_bin = sum(1 for c in manifest.chunks if c.path == chunk.path) == 1
    if single_bin and chunk.bin_label != UNBINNED:
        yield from _kernels.scan_records(data, delim)
        return
    pattern = manifest.timestamp_spec.compile()
    for offset, rec in _kernels.scan_records(data, delim):
        text = rec.decode("utf-8", errors="replace")
        ts = manifest.timestamp_spec.parse(text, pattern)
        label = bin_label_for(ts, manifest.bin_seconds) if ts is not None else UNBINNED
        if label == chunk.bin_label:
            yield offset, rec
