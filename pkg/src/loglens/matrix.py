"""Count-feature vectors and matrices, with a lossless CSV representation.

A matrix holds N time-bin observations by M non-negative integer count
features. Row labels are bin labels (ISO dates by default) and must be
strictly increasing; the column order is fixed by the parser config.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class FeatureVector:
    """One observation: a bin label plus one count per feature column."""

    bin_label: str
    counts: dict[str, int]

    def __post_init__(self) -> None:
        for name, c in self.counts.items():
            if c < 0:
                raise DataError(f"negative count for {name!r} in bin {self.bin_label}")

    def __add__(self, other: "FeatureVector") -> "FeatureVector":
        if other.bin_label != self.bin_label:
            raise DataError(f"cannot merge vectors of bins {self.bin_label!r} and {other.bin_label!r}")
        if set(other.counts) != set(self.counts):
            raise DataError("cannot merge vectors with different feature sets")
        return FeatureVector(self.bin_label, {k: v + other.counts[k] for k, v in self.counts.items()})


class FeatureMatrix:
    """Immutable N x M matrix of counts with bin labels and feature names."""

    def __init__(self, labels: list[str], columns: list[str], values: np.ndarray, source: str | None = None):
        values = np.asarray(values, dtype=np.int64)
        if values.shape != (len(labels), len(columns)):
            raise DataError(f"matrix shape {values.shape} != ({len(labels)}, {len(columns)})")
        if (values < 0).any():
            raise DataError("matrix contains negative counts")
        if len(set(columns)) != len(columns):
            raise DataError("duplicate feature columns")
        for a, b in zip(labels, labels[1:]):
            if not a < b:
                raise DataError(f"bin labels not strictly increasing: {a!r} !< {b!r}")
        self.labels = list(labels)
        self.columns = list(columns)
        self.values = values
        self.values.setflags(write=False)
        self.source = source

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FeatureMatrix)
            and self.labels == other.labels
            and self.columns == other.columns
            and np.array_equal(self.values, other.values)
        )

    def row(self, label: str) -> np.ndarray:
        try:
            return self.values[self.labels.index(label)]
        except ValueError:
            raise DataError(f"unknown bin label: {label!r}") from None

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise DataError(f"unknown feature column: {name!r}") from None

    def drop_rows(self, labels: set[str]) -> "FeatureMatrix":
        unknown = labels - set(self.labels)
        if unknown:
            raise DataError(f"unknown bin labels: {sorted(unknown)}")
        keep = [i for i, lab in enumerate(self.labels) if lab not in labels]
        if not keep:
            raise DataError("cannot drop every row")
        return FeatureMatrix([self.labels[i] for i in keep], self.columns, self.values[keep], self.source)

    def replace_rows(self, rows: dict[str, np.ndarray]) -> "FeatureMatrix":
        values = self.values.copy()
        for label, row in rows.items():
            values[self.labels.index(label)] = row
        return FeatureMatrix(self.labels, self.columns, values, self.source)

    @classmethod
    def from_vectors(cls, vectors: list[FeatureVector], columns: list[str], source: str | None = None):
        ordered = sorted(vectors, key=lambda v: v.bin_label)
        vals = np.zeros((len(ordered), len(columns)), dtype=np.int64)
        for i, vec in enumerate(ordered):
            missing = set(columns) ^ set(vec.counts)
            if missing:
                raise DataError(f"bin {vec.bin_label}: feature set mismatch: {sorted(missing)}")
            vals[i] = [vec.counts[c] for c in columns]
        return cls([v.bin_label for v in ordered], columns, vals, source)


def fuse(matrices: list[FeatureMatrix], names: list[str] | None = None) -> FeatureMatrix:
    """Column-wise fusion of per-source matrices sharing identical bins.

    With a single input the matrix is returned unchanged; with several, each
    source's columns are prefixed by its name to keep them unique.
    """
    if not matrices:
        raise DataError("fuse needs at least one matrix")
    if len(matrices) == 1:
        return matrices[0]
    if names is None:
        names = [m.source or f"s{i}" for i, m in enumerate(matrices)]
    if len(names) != len(matrices) or len(set(names)) != len(names):
        raise DataError("fuse needs one unique name per matrix")
    base = matrices[0].labels
    for m, name in zip(matrices[1:], names[1:]):
        if m.labels != base:
            diff = next(
                (f"{a!r} vs {b!r}" for a, b in zip(base, m.labels) if a != b),
                f"{len(base)} vs {len(m.labels)} bins",
            )
            raise DataError(f"bin labels differ between sources (source {name!r}: {diff})")
    columns = [f"{name}.{c}" for m, name in zip(matrices, names) for c in m.columns]
    values = np.hstack([m.values for m in matrices])
    return FeatureMatrix(list(base), columns, values)


def write_matrix(matrix: FeatureMatrix, path: Path | str) -> None:
    """CSV with a header row of feature names and a leading bin-label column."""
    lines = ["bin," + ",".join(matrix.columns)]
    for label, row in zip(matrix.labels, matrix.values):
        lines.append(label + "," + ",".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix(path: Path | str) -> FeatureMatrix:
    """Inverse of `write_matrix`; rejects malformed cells with their location."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines:
        raise DataError(f"{path}: empty matrix file")
    header = lines[0].split(",")
    if header[:1] != ["bin"]:
        raise DataError(f"{path}:1: header must start with 'bin'")
    columns = header[1:]
    labels: list[str] = []
    rows: list[list[int]] = []
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(columns) + 1:
            raise DataError(f"{path}:{lineno}: expected {len(columns) + 1} cells, got {len(cells)}")
        labels.append(cells[0])
        row = []
        for col, cell in enumerate(cells[1:], start=2):
            try:
                row.append(int(cell))
            except ValueError:
                raise DataError(f"{path}:{lineno}: column {col}: non-integer cell {cell!r}") from None
        rows.append(row)
    values = np.array(rows, dtype=np.int64) if rows else np.zeros((0, len(columns)), dtype=np.int64)
    try:
        return FeatureMatrix(labels, columns, values)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc
