"""Regex-driven parser configuration: variables, features and YAML round trip.

A *variable* is a named regex with one capture group that extracts values
from raw records. A *feature* counts occurrences of a variable whose
captured value is accepted by its matcher: an exact literal, a regex, or
the per-variable default that absorbs every value no specific feature
accepted. Two meta-counters (`entry_count`, `triplet_count`) are always
appended to the feature columns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError

ENTRY_COUNT = "entry_count"
TRIPLET_COUNT = "triplet_count"
META_COUNTERS = (ENTRY_COUNT, TRIPLET_COUNT)

KIND_LITERAL = "literal"
KIND_REGEX = "regex"
KIND_DEFAULT = "default"


@dataclass(frozen=True)
class VariableDef:
    name: str
    pattern: str

    def compile(self) -> re.Pattern[str]:
        try:
            pat = re.compile(self.pattern)
        except re.error as exc:
            raise ConfigError(f"variable {self.name!r}: bad pattern: {exc}") from exc
        if pat.groups != 1:
            raise ConfigError(f"variable {self.name!r}: pattern needs exactly 1 capture group, has {pat.groups}")
        return pat


@dataclass(frozen=True)
class FeatureDef:
    name: str
    variable: str
    kind: str = KIND_LITERAL
    matcher: str = ""

    @property
    def is_default(self) -> bool:
        return self.kind == KIND_DEFAULT

    def accepts(self, value: str) -> bool:
        """Whether this (non-default) feature accepts a captured value."""
        if self.kind == KIND_LITERAL:
            return value == self.matcher
        if self.kind == KIND_REGEX:
            return re.search(self.matcher, value) is not None
        return True


@dataclass
class ParserConfig:
    """Full parsing dictionary for one corpus source."""

    variables: list[VariableDef]
    features: list[FeatureDef]
    bin_seconds: int = 86400
    actors: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.validate()

    # -- structure ---------------------------------------------------------

    def validate(self) -> None:
        var_names = [v.name for v in self.variables]
        if len(set(var_names)) != len(var_names):
            raise ConfigError("duplicate variable names")
        for v in self.variables:
            v.compile()
        feat_names = [f.name for f in self.features]
        if len(set(feat_names)) != len(feat_names):
            raise ConfigError("duplicate feature names")
        for m in META_COUNTERS:
            if m in feat_names:
                raise ConfigError(f"feature name {m!r} collides with a meta-counter")
        declared = set(var_names)
        defaults: dict[str, int] = {v: 0 for v in declared}
        for f in self.features:
            if f.variable not in declared:
                raise ConfigError(f"feature {f.name!r} references undeclared variable {f.variable!r}")
            if f.kind not in (KIND_LITERAL, KIND_REGEX, KIND_DEFAULT):
                raise ConfigError(f"feature {f.name!r}: unknown kind {f.kind!r}")
            if f.kind == KIND_REGEX:
                try:
                    re.compile(f.matcher)
                except re.error as exc:
                    raise ConfigError(f"feature {f.name!r}: bad matcher regex: {exc}") from exc
            if f.is_default:
                defaults[f.variable] += 1
        for var, n in defaults.items():
            if n != 1:
                raise ConfigError(f"variable {var!r} needs exactly one default feature, has {n}")
        for a in self.actors:
            if a not in declared:
                raise ConfigError(f"actor variable {a!r} is not declared")

    @property
    def feature_names(self) -> list[str]:
        """Matrix column order: declared features, then the meta-counters."""
        return [f.name for f in self.features] + list(META_COUNTERS)

    def variable(self, name: str) -> VariableDef:
        for v in self.variables:
            if v.name == name:
                return v
        raise ConfigError(f"unknown variable: {name!r}")

    def features_of(self, variable: str) -> list[FeatureDef]:
        return [f for f in self.features if f.variable == variable]

    # -- YAML --------------------------------------------------------------

    def to_dict(self) -> dict:
        d: dict = {
            "bin_width": f"{self.bin_seconds}s" if self.bin_seconds != 86400 else "1d",
            "variables": [{"name": v.name, "pattern": v.pattern} for v in self.variables],
            "features": [
                {"name": f.name, "variable": f.variable, "kind": f.kind}
                | ({} if f.is_default else {"matcher": f.matcher})
                for f in self.features
            ],
        }
        if self.actors:
            d["actors"] = list(self.actors)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ParserConfig":
        try:
            variables = [VariableDef(v["name"], v["pattern"]) for v in d.get("variables", [])]
            features = [
                FeatureDef(
                    name=f["name"],
                    variable=f["variable"],
                    kind=f.get("kind", KIND_LITERAL),
                    matcher=str(f.get("matcher", "")),
                )
                for f in d.get("features", [])
            ]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed parser config: {exc}") from exc
        return cls(
            variables=variables,
            features=features,
            bin_seconds=parse_bin_width(d.get("bin_width", "1d")),
            actors=[str(a) for a in d.get("actors", [])],
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True), encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "ParserConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot load parser config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"parser config {path} is not a mapping")
        return cls.from_dict(raw)


def parse_bin_width(text: str) -> int:
    """'1d' / '4h' / '900s' / bare seconds -> seconds."""
    text = str(text).strip().lower()
    units = {"d": 86400, "h": 3600, "m": 60, "s": 1}
    try:
        if text and text[-1] in units:
            return int(text[:-1]) * units[text[-1]]
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"bad bin width: {text!r}") from exc


def default_feature_name(variable: str) -> str:
    return f"{variable}_default"


_SLUG_OK = re.compile(r"[A-Za-z0-9_.\-]+")


def feature_name_for(variable: str, value: str, taken: set[str]) -> str:
    """Deterministic, unique, filesystem-safe feature name for a learned value."""
    slug = "".join(ch if _SLUG_OK.fullmatch(ch) else "_" for ch in value) or "_"
    base = f"{variable}_{slug}"
    name = base
    k = 2
    while name in taken or name in META_COUNTERS:
        name = f"{base}_{k}"
        k += 1
    return name
