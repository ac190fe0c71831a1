#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the three hot-loop kernels on a synthetic day of trap-style records and
times one full chunk parse per backend (the parse path toggles backends via
LOGLENS_PURE in a subprocess, since selection happens at import).

Usage: python benchmarks/bench_kernels.py [--entries N] [--repeat K]
"""

from __future__ import annotations

import argparse
import os
import statistics
import subprocess
import sys
import time

from loglens._kernels import available_backends


def make_day(n_entries: int) -> bytes:
    lines = []
    for i in range(n_entries):
        sec = i % 86400
        tok = ("assoc", "deauth", "authfail", "sysup")[i % 4]
        lines.append(
            f"2026-01-01T{sec // 3600:02d}:{sec // 60 % 60:02d}:{sec % 60:02d}Z"
            f" dev=wlc01 ap=ap-{i % 40:03d} st=f0:18:98:00:{i % 200:02x}:aa usr=u{i % 300:04d}"
            f"#tt = OID: {tok}#sig = INTEGER: -{40 + i % 50}"
        )
    return ("\n".join(lines) + "\n").encode()


def bench(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def bench_kernels(n_entries: int, repeat: int) -> None:
    backends = available_backends()
    data = make_day(n_entries)
    records = [r for _, r in backends["pure"].scan_records(data, b"\n")]
    values = [f"v{i % 50}" for i in range(n_entries)]
    table = {f"v{i}": 1 << (i % 60) for i in range(40)}

    cases = {
        "scan_records": lambda k: (lambda: k.scan_records(data, b"\n")),
        "total_triplets": lambda k: (lambda: k.total_triplets(records)),
        "match_bits": lambda k: (lambda: k.match_bits(values, table)),
    }
    print(f"{n_entries} records, {len(data) / 1e6:.1f} MB, median of {repeat} runs")
    print(f"{'kernel':<16} {'pure (ms)':>10} {'compiled (ms)':>14} {'speedup':>8}")
    for name, make in cases.items():
        timings = {bname: bench(make(mod), repeat) * 1e3 for bname, mod in backends.items()}
        if "compiled" in timings:
            speedup = timings["pure"] / timings["compiled"]
            print(f"{name:<16} {timings['pure']:>10.1f} {timings['compiled']:>14.1f} {speedup:>7.1f}x")
        else:
            print(f"{name:<16} {timings['pure']:>10.1f} {'-':>14} {'-':>8}")


PARSE_SNIPPET = r"""
import sys, time
from loglens import _kernels
from loglens.counting import parse_chunk
from loglens.corpus import LogEntry
from loglens.parsecfg import FeatureDef, ParserConfig, VariableDef

data = sys.stdin.buffer.read()
records = _kernels.scan_records(data, b"\n")
entries = [LogEntry(r.decode(), None, "bench", off) for off, r in records]
config = ParserConfig(
    variables=[VariableDef("trap_type", r"tt = OID: (\w+)"), VariableDef("ap", r" ap=([\w\-]+)")],
    features=[
        FeatureDef("tt_assoc", "trap_type", "literal", "assoc"),
        FeatureDef("tt_authfail", "trap_type", "literal", "authfail"),
        FeatureDef("tt_default", "trap_type", "default"),
        FeatureDef("ap_default", "ap", "default"),
    ],
)
t0 = time.perf_counter()
parse_chunk(entries, config, "2026-01-01")
print(f"{_kernels.BACKEND} {time.perf_counter() - t0:.3f}")
"""


def bench_parse(n_entries: int) -> None:
    data = make_day(n_entries)
    print("\nfull chunk parse (records -> feature vector):")
    for pure in ("0", "1"):
        env = dict(os.environ, LOGLENS_PURE=pure)
        out = subprocess.run(
            [sys.executable, "-c", PARSE_SNIPPET], input=data, capture_output=True, env=env
        )
        print(" ", out.stdout.decode().strip() or out.stderr.decode().strip())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--entries", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    bench_kernels(args.entries, args.repeat)
    bench_parse(args.entries)


if __name__ == "__main__":
    main()
