# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twins of the kernels in `pure.py`.

Semantics must match the pure versions exactly; the test suite runs both
backends against the same inputs.
"""

from cpython.bytes cimport PyBytes_FromStringAndSize
from libc.string cimport memchr, memcmp


def scan_records(bytes data, bytes delimiter):
    """Split a chunk buffer into (byte offset, record) pairs."""
    cdef Py_ssize_t dlen = len(delimiter)
    if dlen == 0:
        raise ValueError("delimiter must be non-empty")
    cdef const char* buf = data
    cdef Py_ssize_t n = len(data)
    cdef const char* dp = delimiter
    cdef char d0 = dp[0]
    cdef list out = []
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t hit, i
    cdef const char* found
    while pos < n:
        hit = -1
        if dlen == 1:
            found = <const char*> memchr(buf + pos, d0, n - pos)
            if found != NULL:
                hit = found - buf
        else:
            i = pos
            while i + dlen <= n:
                found = <const char*> memchr(buf + i, d0, n - i - dlen + 1)
                if found == NULL:
                    break
                i = found - buf
                if memcmp(buf + i, dp, dlen) == 0:
                    hit = i
                    break
                i += 1
        if hit < 0:
            out.append((pos, PyBytes_FromStringAndSize(buf + pos, n - pos)))
            break
        if hit > pos:
            out.append((pos, PyBytes_FromStringAndSize(buf + pos, hit - pos)))
        pos = hit + dlen
    return out


cdef Py_ssize_t _triplets_one(const char* s, Py_ssize_t n):
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t i, seg_start, seg_end, j
    cdef const char* h = <const char*> memchr(s, b'#', n)
    if h == NULL:
        return 0
    seg_start = (h - s) + 1
    while seg_start <= n:
        h = <const char*> memchr(s + seg_start, b'#', n - seg_start)
        seg_end = (h - s) if h != NULL else n
        j = seg_start
        while j + 3 <= seg_end:
            if s[j] == b' ' and s[j + 1] == b'=' and s[j + 2] == b' ':
                count += 1
                break
            j += 1
        if h == NULL:
            break
        seg_start = seg_end + 1
    return count


def total_triplets(list records):
    """Total count of `#`-separated assignment segments across records."""
    cdef Py_ssize_t total = 0
    cdef bytes rec
    for rec in records:
        total += _triplets_one(rec, len(rec))
    return total


def match_bits(list values, dict table):
    """OR together the bitmasks that `table` assigns to each value."""
    hits = 0
    cdef object m
    for v in values:
        m = table.get(v)
        if m is not None:
            hits |= m
    return hits
