"""Workspace persistence: matrices and models per iteration, the append-only
anomaly registry, and the two model-update rules.

Layout under the workspace root:

    workspace.json    manifest/config pointers and the iteration counter
    registry.jsonl    append-only event log folded into the case registry
    lock              exclusive-writer lock file
    it000/ it001/ ... one directory per iteration: matrix.csv, model.json,
                      curves.json, detection.json, omeda-*.json,
                      deparse-*.json and, from it001 on, extraction.json
                      describing how the matrix derives from the previous one

Observation-wise extraction drops whole rows; log-wise extraction re-parses
the affected bins with a de-parse report's entries excluded while leaving
every other row byte-identical. Replaying the extraction records from
iteration 0 reproduces every matrix exactly.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from .corpus import CorpusManifest
from .counting import parse_bins, parse_corpus
from .deparse import AnomalyCase, DeparseReport, deparse
from .errors import ConfigError, DataError, WorkspaceLockedError
from .matrix import FeatureMatrix, read_matrix, write_matrix
from .msnm import MsnmResult, monitor
from .omeda import GroupSelection, OmedaResult, build_dummy, omeda, top_features
from .pca import CurveReport, PcaModel, choose_components, fit_pca, preprocess, selection_curves
from .parsecfg import ParserConfig

KIND_OBSERVATION = "observation-wise"
KIND_LOG = "log-wise"

STATUS_ORDER = ["detected", "diagnosed", "deparsed", "extracted"]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class ExtractionRecord:
    """How one iteration's matrix derives from the previous one."""

    kind: str
    case_id: str | None
    bins: tuple[str, ...]
    removed_rows: int | None = None
    removed_entries: int | None = None
    report_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind == KIND_OBSERVATION and self.removed_rows is None:
            raise DataError("observation-wise extraction needs removed_rows")
        if self.kind == KIND_LOG and (self.removed_entries is None or self.report_path is None):
            raise DataError("log-wise extraction needs removed_entries and report_path")
        if self.kind not in (KIND_OBSERVATION, KIND_LOG):
            raise DataError(f"unknown extraction kind: {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "case": self.case_id,
            "bins": list(self.bins),
            "removed_rows": self.removed_rows,
            "removed_entries": self.removed_entries,
            "report": self.report_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractionRecord":
        return cls(
            kind=d["kind"],
            case_id=d.get("case"),
            bins=tuple(d["bins"]),
            removed_rows=d.get("removed_rows"),
            removed_entries=d.get("removed_entries"),
            report_path=d.get("report"),
        )


class Workspace:
    """One analysis workspace bound to a corpus manifest and parser config."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        state_path = self.root / "workspace.json"
        if not state_path.exists():
            raise ConfigError(f"not a workspace (missing workspace.json): {self.root}")
        self.state = json.loads(state_path.read_text(encoding="utf-8"))
        self._manifest: CorpusManifest | None = None
        self._config: ParserConfig | None = None

    # -- creation / state ----------------------------------------------------

    @classmethod
    def create(cls, root: Path | str, manifest_path: Path | str, config_path: Path | str) -> "Workspace":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        if (root / "workspace.json").exists():
            raise ConfigError(f"workspace already exists: {root}")
        state = {
            "manifest": str(manifest_path),
            "config": str(config_path),
            "iteration": 0,
            "created_at": _now(),
        }
        (root / "workspace.json").write_text(json.dumps(state, indent=2) + "\n", encoding="utf-8")
        (root / "it000").mkdir()
        return cls(root)

    def _save_state(self) -> None:
        (self.root / "workspace.json").write_text(json.dumps(self.state, indent=2) + "\n", encoding="utf-8")

    @property
    def iteration(self) -> int:
        return int(self.state["iteration"])

    @property
    def manifest(self) -> CorpusManifest:
        if self._manifest is None:
            self._manifest = CorpusManifest.load(self.state["manifest"])
        return self._manifest

    @property
    def config(self) -> ParserConfig:
        if self._config is None:
            self._config = ParserConfig.load(self.state["config"])
        return self._config

    def it_dir(self, k: int | None = None) -> Path:
        k = self.iteration if k is None else k
        return self.root / f"it{k:03d}"

    @contextmanager
    def lock(self):
        """Exclusive writer lock; raises WorkspaceLockedError when contended."""
        path = self.root / "lock"
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise WorkspaceLockedError(f"workspace locked by pid {path.read_text().strip() or '?'}") from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            path.unlink(missing_ok=True)

    # -- artifacts -------------------------------------------------------------

    def matrix(self, k: int | None = None) -> FeatureMatrix:
        path = self.it_dir(k) / "matrix.csv"
        if not path.exists():
            raise ConfigError(f"no matrix at {path}; run parse first")
        return read_matrix(path)

    def model(self, k: int | None = None) -> PcaModel:
        path = self.it_dir(k) / "model.json"
        if not path.exists():
            raise ConfigError(f"no model at {path}; run detect first")
        return PcaModel.load(path)

    def curves(self, k: int | None = None) -> CurveReport:
        path = self.it_dir(k) / "curves.json"
        if not path.exists():
            raise ConfigError(f"no curves at {path}; run detect first")
        return CurveReport.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def detection(self, k: int | None = None) -> dict:
        path = self.it_dir(k) / "detection.json"
        if not path.exists():
            raise ConfigError(f"no detection at {path}; run detect first")
        return json.loads(path.read_text(encoding="utf-8"))

    def msnm_result(self, k: int | None = None) -> MsnmResult:
        d = self.detection(k)
        obs = d["observations"]
        return MsnmResult(
            labels=[o["bin"] for o in obs],
            d=np.array([o["d"] for o in obs]),
            q=np.array([o["q"] for o in obs]),
            ucl_d=d["ucl_d"],
            ucl_q=d["ucl_q"],
            alpha=d["alpha"],
        )

    def xcs(self, k: int | None = None) -> np.ndarray:
        model = self.model(k)
        if model.preprocess is None:
            raise DataError("model lacks a preprocessing spec")
        return model.preprocess.apply(self.matrix(k).values.astype(float))

    def set_initial_matrix(self, matrix: FeatureMatrix, report: dict | None = None) -> None:
        if self.iteration != 0:
            raise ConfigError("initial matrix can only be written at iteration 0")
        write_matrix(matrix, self.it_dir(0) / "matrix.csv")
        if report is not None:
            (self.it_dir(0) / "parse_report.json").write_text(
                json.dumps(report, indent=2) + "\n", encoding="utf-8"
            )

    def parse_initial(self, n_workers: int = 1, progress: Callable[[int, int], None] | None = None) -> dict:
        matrix, report = parse_corpus(self.manifest, self.config, n_workers, progress=progress)
        with self.lock():
            self.set_initial_matrix(matrix, report)
        return report

    # -- registry ---------------------------------------------------------------

    def _append_event(self, event: dict) -> None:
        event = {"at": _now(), **event}
        with open(self.root / "registry.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")

    def events(self) -> list[dict]:
        path = self.root / "registry.jsonl"
        if not path.exists():
            return []
        return [json.loads(ln) for ln in path.read_text(encoding="utf-8").splitlines() if ln]

    def registry(self) -> dict[str, dict]:
        """Case id -> folded record with forward-only status transitions."""
        cases: dict[str, dict] = {}
        for ev in self.events():
            kind = ev["event"]
            cid = ev["case_id"]
            if kind == "detected":
                cases.setdefault(
                    cid,
                    {
                        "id": cid,
                        "bins": ev["bins"],
                        "stats": ev.get("stats", {}),
                        "features": [],
                        "status": "detected",
                        "iteration": ev["iteration"],
                        "created_at": ev["at"],
                    },
                )
                continue
            rec = cases.get(cid)
            if rec is None or rec["status"] == "extracted":
                continue  # unknown or frozen case: event ignored
            if kind == "diagnosed":
                rec["features"] = ev["features"]
                if STATUS_ORDER.index(rec["status"]) < STATUS_ORDER.index("diagnosed"):
                    rec["status"] = "diagnosed"
            elif kind == "deparsed":
                rec["report"] = ev["report"]
                if STATUS_ORDER.index(rec["status"]) < STATUS_ORDER.index("deparsed"):
                    rec["status"] = "deparsed"
            elif kind == "extracted":
                rec["status"] = "extracted"
                rec["extraction"] = ev["extraction"]
        return cases

    def case(self, case_id: str) -> dict:
        rec = self.registry().get(case_id)
        if rec is None:
            raise ConfigError(f"unknown case id: {case_id!r}")
        return rec

    def anomaly_case(self, case_id: str) -> AnomalyCase:
        rec = self.case(case_id)
        if not rec["features"]:
            raise ConfigError(f"case {case_id!r} has no features yet; diagnose it first")
        return AnomalyCase(
            case_id=case_id,
            bins=frozenset(rec["bins"]),
            features=tuple(rec["features"]),
            created_at=rec["created_at"],
        )

    # -- detection ---------------------------------------------------------------

    def fit(
        self,
        pcs: int | str = "auto",
        scale: str = "center",
        k_folds: int | None = None,
        rel_tolerance: float = 0.01,
    ) -> tuple[PcaModel, CurveReport]:
        """Preprocess and fit the current matrix; 'auto' picks the component
        count where the ckf curve stops improving."""
        matrix = self.matrix()
        xcs, spec = preprocess(matrix, scale)
        curves = selection_curves(xcs, k_folds=k_folds)
        a = choose_components(curves, rel_tolerance) if pcs == "auto" else int(pcs)
        model = fit_pca(xcs, a, spec)
        model.save(self.it_dir() / "model.json")
        (self.it_dir() / "curves.json").write_text(
            json.dumps(curves.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        return model, curves

    def iterate(
        self,
        alpha: float = 0.99,
        pcs: int | str = "auto",
        scale: str = "center",
        k_folds: int | None = None,
        rel_tolerance: float = 0.01,
    ) -> dict:
        """Fit, score and threshold the current iteration's matrix.

        Bins above either control limit are grouped into contiguous runs and
        appended to the registry as detected cases; re-running is idempotent
        because case ids are content-derived.
        """
        k = self.iteration
        matrix = self.matrix(k)
        model, _curves = self.fit(pcs=pcs, scale=scale, k_folds=k_folds, rel_tolerance=rel_tolerance)
        xcs = model.preprocess.apply(matrix.values.astype(float))
        a = model.A
        result = monitor(model, xcs, matrix.labels, alpha)

        flagged = result.flagged()
        runs: list[list[str]] = []
        run: list[str] = []
        for label, is_flagged in zip(matrix.labels, flagged):
            if is_flagged:
                run.append(label)
            elif run:
                runs.append(run)
                run = []
        if run:
            runs.append(run)
        case_dicts = []
        stats_by_label = {lab: {"d": float(d), "q": float(q)} for lab, d, q in zip(result.labels, result.d, result.q)}
        for run_labels in runs:
            cid = f"it{k:03d}-{run_labels[0]}-{run_labels[-1]}"
            case_dicts.append(
                {"id": cid, "bins": run_labels, "stats": {lab: stats_by_label[lab] for lab in run_labels}}
            )

        detection = {
            "iteration": k,
            "A": a,
            "scale": scale,
            **result.to_dict(),
            "cases": case_dicts,
        }
        (self.it_dir(k) / "detection.json").write_text(
            json.dumps(detection, indent=2) + "\n", encoding="utf-8"
        )

        known = set(self.registry())
        for cd in case_dicts:
            if cd["id"] not in known:
                self._append_event(
                    {"event": "detected", "case_id": cd["id"], "bins": cd["bins"], "stats": cd["stats"], "iteration": k}
                )
        return detection

    # -- diagnosis ------------------------------------------------------------------

    def diagnose_groups(self, group1: set[str], group2: set[str] | None = None) -> OmedaResult:
        """Ad-hoc group contrast on the current iteration's model."""
        matrix = self.matrix()
        selection = GroupSelection(frozenset(group1), frozenset(group2) if group2 else None)
        w = build_dummy(selection, matrix.labels)
        return omeda(self.model(), self.xcs(), w)

    def diagnose_case(self, case_id: str, top_k: int = 5) -> tuple[OmedaResult, list[str]]:
        """Contrast a registry case against all other days and record the
        selected features in the registry."""
        rec = self.case(case_id)
        bins = set(rec["bins"]) & set(self.matrix().labels)
        if not bins:
            raise ConfigError(f"case {case_id!r}: none of its bins are in the current matrix")
        result = self.diagnose_groups(bins, None)
        features = top_features(result, k=top_k)
        (self.it_dir() / f"omeda-{case_id}.json").write_text(
            json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        self._append_event({"event": "diagnosed", "case_id": case_id, "features": features})
        return result, features

    # -- de-parse ----------------------------------------------------------------------

    def deparse_case(
        self,
        case_id: str,
        n_workers: int = 1,
        progress: Callable[[int, int], None] | None = None,
    ) -> DeparseReport:
        case = self.anomaly_case(case_id)
        report = deparse(self.manifest, case, self.config, n_workers, progress=progress)
        rel = f"it{self.iteration:03d}/deparse-{case_id}.json"
        report.save(self.root / rel)
        self._append_event({"event": "deparsed", "case_id": case_id, "report": rel})
        return report

    def report_for(self, case_id: str) -> DeparseReport:
        rec = self.case(case_id)
        if "report" not in rec:
            raise ConfigError(f"case {case_id!r} has no de-parse report yet")
        return DeparseReport.load(self.root / rec["report"])

    # -- model update -------------------------------------------------------------------

    def _advance(self, new_matrix: FeatureMatrix, record: ExtractionRecord) -> ExtractionRecord:
        new_k = self.iteration + 1
        new_dir = self.root / f"it{new_k:03d}"
        new_dir.mkdir(exist_ok=True)
        write_matrix(new_matrix, new_dir / "matrix.csv")
        (new_dir / "extraction.json").write_text(
            json.dumps(record.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        self.state["iteration"] = new_k
        self._save_state()
        if record.case_id:
            self._append_event(
                {"event": "extracted", "case_id": record.case_id, "extraction": record.to_dict()}
            )
        return record

    def update_observationwise(self, bins: set[str], case_id: str | None = None) -> ExtractionRecord:
        """Drop whole rows and start the next iteration."""
        matrix = self.matrix()
        missing = bins - set(matrix.labels)
        if missing:
            raise ConfigError(f"bins not in current matrix: {sorted(missing)}")
        new_matrix = matrix.drop_rows(bins)
        record = ExtractionRecord(
            kind=KIND_OBSERVATION,
            case_id=case_id,
            bins=tuple(sorted(bins)),
            removed_rows=len(matrix.labels) - len(new_matrix.labels),
        )
        with self.lock():
            return self._advance(new_matrix, record)

    def update_logwise(
        self,
        case_id: str,
        report: DeparseReport | None = None,
        n_workers: int = 1,
        progress: Callable[[int, int], None] | None = None,
    ) -> ExtractionRecord:
        """Re-parse the case's bins with the report's entries excluded."""
        case = self.anomaly_case(case_id)
        rec = self.case(case_id)
        if report is None:
            report = self.report_for(case_id)
        if report.case_id != case_id:
            raise ConfigError(f"report belongs to case {report.case_id!r}, not {case_id!r}")
        window_now = sum(
            c.entry_count for c in self.manifest.chunks if c.bin_label in case.bins
        )
        if window_now != report.window_total:
            raise DataError(
                f"stale report: window holds {window_now} entries, report saw {report.window_total}"
            )
        matrix = self.matrix()
        bins = set(case.bins) & set(matrix.labels)
        if not bins:
            raise ConfigError(f"case {case_id!r}: none of its bins are in the current matrix")
        new_rows = parse_bins(
            self.manifest, self.config, bins, exclude=frozenset(report.offsets()), n_workers=n_workers,
            progress=progress,
        )
        new_matrix = matrix.replace_rows(new_rows)
        record = ExtractionRecord(
            kind=KIND_LOG,
            case_id=case_id,
            bins=tuple(sorted(bins)),
            removed_entries=report.matched,
            report_path=rec.get("report", ""),
        )
        with self.lock():
            return self._advance(new_matrix, record)

    # -- reproducibility -----------------------------------------------------------------

    def replay(self, n_workers: int = 1) -> list[dict]:
        """Re-derive every iteration's matrix from it000 plus the extraction
        records and compare against what is stored on disk."""
        out = []
        current = self.matrix(0)
        for k in range(1, self.iteration + 1):
            record = ExtractionRecord.from_dict(
                json.loads((self.it_dir(k) / "extraction.json").read_text(encoding="utf-8"))
            )
            if record.kind == KIND_OBSERVATION:
                current = current.drop_rows(set(record.bins))
            else:
                report = DeparseReport.load(self.root / record.report_path)
                rows = parse_bins(
                    self.manifest,
                    self.config,
                    set(record.bins),
                    exclude=frozenset(report.offsets()),
                    n_workers=n_workers,
                )
                current = current.replace_rows(rows)
            stored = self.matrix(k)
            out.append({"iteration": k, "kind": record.kind, "identical": current == stored})
        return out
