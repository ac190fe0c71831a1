"""Pure-Python twins of the compiled kernels.

These are the reference implementations of the byte-scanning and tallying
loops that dominate parsing runtime. `loglens._kernels` picks the compiled
versions when the extension built; either backend must produce identical
results (asserted in the test suite).
"""

from __future__ import annotations


def scan_records(data: bytes, delimiter: bytes) -> list[tuple[int, bytes]]:
    """Split a chunk buffer into (byte offset, record) pairs.

    Empty segments (e.g. a trailing delimiter) are skipped; offsets are the
    position of the record's first byte within `data`.
    """
    if not delimiter:
        raise ValueError("delimiter must be non-empty")
    out: list[tuple[int, bytes]] = []
    step = len(delimiter)
    pos = 0
    for rec in data.split(delimiter):
        if rec:
            out.append((pos, rec))
        pos += len(rec) + step
    return out


def total_triplets(records: list[bytes]) -> int:
    """Total count of `#`-separated assignment segments across records.

    The first segment of a record is its header and never counts; any later
    segment containing ` = ` counts as one triplet.
    """
    total = 0
    for rec in records:
        segs = rec.split(b"#")
        if len(segs) > 1:
            for seg in segs[1:]:
                if b" = " in seg:
                    total += 1
    return total


def match_bits(values: list, table: dict) -> int:
    """OR together the bitmasks that `table` assigns to each value.

    Values absent from the table contribute nothing. Masks are plain ints so
    any number of features can be tracked.
    """
    hits = 0
    for v in values:
        m = table.get(v)
        if m is not None:
            hits |= m
    return hits
