"""Exception hierarchy shared across the package.

ConfigError covers bad user-supplied configuration (parser configs, CLI
arguments, unknown case ids); DataError covers malformed or inconsistent
data encountered at runtime. The CLI maps them to distinct exit codes.
"""

from __future__ import annotations


class LoglensError(Exception):
    """Base class for all package errors."""


class ConfigError(LoglensError):
    """Invalid configuration: parser config, workspace state, bad request."""


class DataError(LoglensError):
    """Malformed or inconsistent data: corpora, matrices, model artifacts."""


class WorkspaceLockedError(LoglensError):
    """Another process holds the workspace write lock."""
