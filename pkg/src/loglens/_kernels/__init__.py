"""Hot-loop kernels: compiled fast path with a pure-Python fallback.

The compiled extension is optional; set LOGLENS_PURE=1 to force the
pure-Python implementation even when the extension is present.
"""

from __future__ import annotations

import os

from . import pure

BACKEND = "pure"
_impl = pure

if os.environ.get("LOGLENS_PURE") != "1":
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass

scan_records = _impl.scan_records
total_triplets = _impl.total_triplets
match_bits = _impl.match_bits


def available_backends() -> dict[str, object]:
    """Importable kernel backends, for equivalence tests and benchmarks."""
    backends: dict[str, object] = {"pure": pure}
    try:
        from . import _speedups

        backends["compiled"] = _speedups
    except ImportError:
        pass
    return backends
