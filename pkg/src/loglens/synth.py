"""Synthetic trap-style log corpora with injected, ground-truthed anomalies.

Generated records mimic an SNMP-trap shape: a header line with timestamp and
device fields, followed by `#`-separated `<name> = <TYPE>: <value>` triplets.
Each record carries one event token drawn from a weighted vocabulary;
anomalies inject extra records for chosen tokens over a day range so that
the token's daily count is multiplied while everything else stays at
baseline. The exact byte offsets of injected records are recorded as ground
truth for recovery tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .corpus import DAY_SECONDS, ISO_TIMESTAMP, Chunk, CorpusManifest
from .errors import ConfigError


@dataclass(frozen=True)
class AnomalySpec:
    """Inject `multiplier`x activity for `tokens` on days [first_day, last_day]."""

    first_day: int
    last_day: int
    tokens: tuple[str, ...]
    multiplier: float

    def days(self) -> range:
        return range(self.first_day, self.last_day + 1)


@dataclass
class SyntheticSpec:
    """Parameters of a generated corpus.

    `vocabulary` maps event tokens to relative per-entry weights (normalized
    to shares internally); `flat_tokens` emit an exact constant number of
    records per day, independent of the day's activity level, and need not
    appear in the vocabulary.
    """

    n_days: int
    entries_per_day: int
    vocabulary: list[tuple[str, float]]
    anomalies: list[AnomalySpec] = field(default_factory=list)
    rng_seed: int = 0
    start_date: date = date(2026, 1, 1)
    seasonal_amplitude: float = 0.25
    n_aps: int = 40
    n_stations: int = 300
    n_users: int = 400
    user_presence: float = 0.7
    heavy_station_share: float = 0.0
    flat_tokens: list[tuple[str, int]] = field(default_factory=list)

    def validate(self) -> None:
        if not self.vocabulary:
            raise ConfigError("synthetic spec needs a non-empty vocabulary")
        for tok, p in self.vocabulary:
            if not (0.0 < p <= 1.0):
                raise ConfigError(f"vocabulary weight for {tok!r} must be in (0, 1], got {p}")
        for tok, k in self.flat_tokens:
            if k < 0:
                raise ConfigError(f"flat token {tok!r} needs a count >= 0, got {k}")
        for a in self.anomalies:
            if a.multiplier < 1.0:
                raise ConfigError(f"anomaly multiplier must be >= 1, got {a.multiplier}")
            if not (0 <= a.first_day <= a.last_day < self.n_days):
                raise ConfigError(f"anomaly days [{a.first_day}, {a.last_day}] outside [0, {self.n_days})")
            known = {t for t, _ in self.vocabulary}
            for tok in a.tokens:
                if tok not in known:
                    raise ConfigError(f"anomaly token {tok!r} not in vocabulary")

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        spec = cls(
            n_days=int(d["n_days"]),
            entries_per_day=int(d["entries_per_day"]),
            vocabulary=[(str(t), float(p)) for t, p in d["vocabulary"]],
            anomalies=[
                AnomalySpec(int(a["days"][0]), int(a["days"][1]), tuple(a["tokens"]), float(a["multiplier"]))
                for a in d.get("anomalies", [])
            ],
            rng_seed=int(d.get("rng_seed", 0)),
        )
        if "start_date" in d:
            spec.start_date = date.fromisoformat(d["start_date"])
        for key in ("seasonal_amplitude", "user_presence", "heavy_station_share"):
            if key in d:
                setattr(spec, key, float(d[key]))
        for key in ("n_aps", "n_stations", "n_users"):
            if key in d:
                setattr(spec, key, int(d[key]))
        if "flat_tokens" in d:
            spec.flat_tokens = [(str(t), int(k)) for t, k in d["flat_tokens"]]
        return spec


@dataclass
class GroundTruth:
    """What was injected where: per-anomaly day labels, tokens and offsets."""

    anomalies: list[dict]
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"anomalies": self.anomalies, "meta": self.meta}

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(anomalies=list(d["anomalies"]), meta=dict(d.get("meta", {})))

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "GroundTruth":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def injected_offsets(self, anomaly_index: int) -> set[tuple[str, int]]:
        """(path, offset) pairs of every record injected by one anomaly."""
        out: set[tuple[str, int]] = set()
        for per_day in self.anomalies[anomaly_index]["injected"]:
            out.update((per_day["path"], off) for off in per_day["offsets"])
        return out


# Station MAC prefixes drawn from the bundled manufacturer table so that
# graph anonymization has something to resolve.
_STATION_PREFIXES = (
    "3c:d9:2b",  # Hewlett Packard
    "f0:18:98",  # Apple
    "a0:88:b4",  # Intel
    "00:a0:f8",  # Zebra Technologies
    "84:3a:4b",  # Intel
    "28:6a:ba",  # Apple
    "00:26:5a",  # D-Link
    "b8:27:eb",  # Raspberry Pi
    "00:16:6f",  # Nokia
    "fc:fb:fb",  # Cisco
)


def _seasonal(spec: SyntheticSpec, day: int) -> float:
    return 1.0 + spec.seasonal_amplitude * math.sin(2.0 * math.pi * day / 7.0)


def _pools(spec: SyntheticSpec) -> tuple[list[str], list[str], list[str]]:
    rng = np.random.default_rng([spec.rng_seed, 61453])
    aps = [f"ap-{i:03d}" for i in range(1, spec.n_aps + 1)]
    stations = []
    for i in range(spec.n_stations):
        prefix = _STATION_PREFIXES[i % len(_STATION_PREFIXES)]
        suffix = ":".join(f"{b:02x}" for b in rng.integers(0, 256, size=3))
        stations.append(f"{prefix}:{suffix}")
    users = [f"u{i:04d}" for i in range(1, spec.n_users + 1)]
    return aps, stations, users


def _skewed_weights(n: int, exponent: float = 1.2) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** exponent
    return w / w.sum()


def generate_synthetic_corpus(spec: SyntheticSpec, out_dir: Path | str) -> tuple[CorpusManifest, GroundTruth]:
    """Write per-day trap-style files and return (manifest, ground truth).

    Generation is a pure function of (spec, rng_seed): re-running with the
    same inputs reproduces every file byte for byte.
    """
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    tokens = [t for t, _ in spec.vocabulary]
    for t, _ in spec.flat_tokens:
        if t not in tokens:
            tokens.append(t)
    weights = np.array([p for _, p in spec.vocabulary], dtype=float)
    shares = weights / weights.sum()
    aps, stations, users = _pools(spec)
    ap_w = _skewed_weights(len(aps))
    st_w = _skewed_weights(len(stations))
    if spec.heavy_station_share > 0 and len(stations) > 1:
        # station 0 takes the requested share; the rest follows a mild skew
        # whose head stays well below it, so the heavy station dominates
        rest = _skewed_weights(len(stations) - 1, exponent=0.5) * (1.0 - spec.heavy_station_share)
        st_w = np.concatenate(([spec.heavy_station_share], rest))
    user_w = _skewed_weights(len(users), exponent=0.8)

    injected_by_anomaly: list[list[dict]] = [[] for _ in spec.anomalies]
    chunks: list[Chunk] = []

    for day in range(spec.n_days):
        day_date = spec.start_date + timedelta(days=day)
        label = day_date.isoformat()
        rng = np.random.default_rng([spec.rng_seed, 1, day])
        n_base = int(rng.poisson(spec.entries_per_day * _seasonal(spec, day)))

        tok_idx = rng.choice(len(spec.vocabulary), size=n_base, p=shares)
        parts = [(tok_idx, -1)]  # (token indexes, anomaly index)

        for flat_tok, flat_n in spec.flat_tokens:
            parts.append((np.full(flat_n, tokens.index(flat_tok)), -1))

        for a_idx, anom in enumerate(spec.anomalies):
            if day in anom.days():
                for tok in anom.tokens:
                    share = shares[tokens.index(tok)]
                    n_inj = int(rng.poisson((anom.multiplier - 1.0) * share * n_base))
                    parts.append((np.full(n_inj, tokens.index(tok)), a_idx))

        all_tok = np.concatenate([p[0] for p in parts])
        origin = np.concatenate([np.full(len(p[0]), p[1]) for p in parts])
        n = len(all_tok)

        secs = rng.integers(0, DAY_SECONDS, size=n)
        order = np.argsort(secs, kind="stable")
        all_tok, origin, secs = all_tok[order], origin[order], secs[order]

        ap_idx = rng.choice(len(aps), size=n, p=ap_w)
        st_idx = rng.choice(len(stations), size=n, p=st_w)
        usr_idx = rng.choice(len(users), size=n, p=user_w)
        has_usr = rng.random(n) < spec.user_presence
        has_sig = rng.random(n) < 0.8
        sig = rng.integers(-90, -30, size=n)
        dev = rng.integers(1, 4, size=n)

        lines: list[str] = []
        offsets = np.empty(n + 1, dtype=np.int64)
        offsets[0] = 0
        prefix = f"{label}T"
        for i in range(n):
            s = int(secs[i])
            hh, rem = divmod(s, 3600)
            mm, ss = divmod(rem, 60)
            head = (
                f"{prefix}{hh:02d}:{mm:02d}:{ss:02d}Z dev=wlc{int(dev[i]):02d}"
                f" ap={aps[ap_idx[i]]} st={stations[st_idx[i]]}"
            )
            if has_usr[i]:
                head += f" usr={users[usr_idx[i]]}"
            line = f"{head}#tt = OID: {tokens[all_tok[i]]}"
            if has_sig[i]:
                line += f"#sig = INTEGER: {int(sig[i])}"
            lines.append(line)
            offsets[i + 1] = offsets[i] + len(line) + 1  # ASCII only

        fname = f"day{day:03d}.log"
        (out / fname).write_bytes(("\n".join(lines) + "\n").encode("ascii"))

        for a_idx in range(len(spec.anomalies)):
            mask = origin == a_idx
            if mask.any():
                injected_by_anomaly[a_idx].append(
                    {"day": label, "path": fname, "offsets": [int(o) for o in offsets[:-1][mask]]}
                )

        chunks.append(Chunk(f"{label}#{fname}", label, fname, n))

    manifest = CorpusManifest(
        root=str(out),
        record_delimiter="\n",
        timestamp_spec=ISO_TIMESTAMP,
        bin_seconds=DAY_SECONDS,
        chunks=sorted(chunks, key=lambda c: (c.bin_label, c.path)),
    )
    truth = GroundTruth(
        anomalies=[
            {
                "days": [(spec.start_date + timedelta(days=d)).isoformat() for d in anom.days()],
                "tokens": list(anom.tokens),
                "multiplier": anom.multiplier,
                "injected": injected_by_anomaly[i],
                "total_injected": sum(len(p["offsets"]) for p in injected_by_anomaly[i]),
            }
            for i, anom in enumerate(spec.anomalies)
        ],
        meta={"heavy_station": stations[0] if spec.heavy_station_share > 0 else None},
    )
    return manifest, truth
