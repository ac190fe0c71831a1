"""Count-feature log analytics: parse raw logs into per-bin counters, monitor
them with PCA-based multivariate statistics, diagnose anomalies with
group-contrast bars, and de-parse back to the culpable raw entries."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .corpus import (
    CorpusManifest,
    LogEntry,
    TimestampSpec,
    read_entries,
    scan_corpus,
)
from .counting import parse_chunk, parse_corpus
from .deparse import AnomalyCase, DeparseReport, deparse, summarize
from .errors import ConfigError, DataError, LoglensError, WorkspaceLockedError
from .graph import ConnectionGraph, build_graph, export_graph
from .learning import CandidateFeature, LearningParams, learn_chunk, merge_learned
from .matrix import FeatureMatrix, FeatureVector, fuse, read_matrix, write_matrix
from .msnm import MsnmResult, control_limits, monitor, statistics
from .omeda import GroupSelection, OmedaResult, build_dummy, omeda, top_features
from .pca import CurveReport, PcaModel, choose_components, fit_pca, preprocess, project, selection_curves
from .parsecfg import FeatureDef, ParserConfig, VariableDef
from .synth import GroundTruth, SyntheticSpec, generate_synthetic_corpus
from .workspace import ExtractionRecord, Workspace

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "AnomalyCase",
    "CandidateFeature",
    "ConfigError",
    "ConnectionGraph",
    "CorpusManifest",
    "CurveReport",
    "DataError",
    "DeparseReport",
    "ExtractionRecord",
    "FeatureDef",
    "FeatureMatrix",
    "FeatureVector",
    "GroundTruth",
    "GroupSelection",
    "LogEntry",
    "LoglensError",
    "LearningParams",
    "MsnmResult",
    "OmedaResult",
    "ParserConfig",
    "PcaModel",
    "SyntheticSpec",
    "TimestampSpec",
    "VariableDef",
    "Workspace",
    "WorkspaceLockedError",
    "build_dummy",
    "build_graph",
    "choose_components",
    "control_limits",
    "deparse",
    "export_graph",
    "fit_pca",
    "fuse",
    "generate_synthetic_corpus",
    "learn_chunk",
    "merge_learned",
    "monitor",
    "omeda",
    "parse_chunk",
    "parse_corpus",
    "preprocess",
    "project",
    "read_entries",
    "read_matrix",
    "scan_corpus",
    "selection_curves",
    "statistics",
    "summarize",
    "top_features",
    "write_matrix",
]
