"""HTTP facade over a workspace for the explorer UI.

Read endpoints are pure views of workspace artifacts and stay available
while jobs run; diagnosis is synchronous (milliseconds), de-parse and
log-wise re-parse run as polled jobs on a single worker so at most one
mutation is in flight. All bodies and responses are JSON.
"""

from __future__ import annotations

import json
import queue
import threading
import traceback
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .cli import build_plot_payload
from .corpus import read_bin_entries
from .deparse import RecordReader
from .errors import ConfigError, DataError, WorkspaceLockedError
from .graph import build_graph
from .plots import dump_payload, omeda_payload
from .workspace import Workspace

OPENAPI = {
    "openapi": "3.0.3",
    "info": {"title": "loglens explorer service", "version": "0.1.0"},
    "paths": {
        "/model": {"get": {"summary": "Fitted model of an iteration"}},
        "/curves": {"get": {"summary": "Residual-variance and ckf curves"}},
        "/scores": {"get": {"summary": "Score plot payload", "parameters": [{"name": "pcs", "in": "query"}]}},
        "/loadings": {"get": {"summary": "Loading plot payload", "parameters": [{"name": "pcs", "in": "query"}]}},
        "/biplot": {"get": {"summary": "Biplot payload", "parameters": [{"name": "pcs", "in": "query"}]}},
        "/msnm": {"get": {"summary": "Monitoring plot payload: D/Q points and limits"}},
        "/registry": {"get": {"summary": "Anomaly case registry"}},
        "/report": {
            "get": {
                "summary": "De-parse report of a case",
                "parameters": [{"name": "case", "in": "query"}],
            }
        },
        "/graph": {
            "get": {
                "summary": "Connection graph for a case",
                "parameters": [
                    {"name": "case", "in": "query"},
                    {"name": "node_min", "in": "query"},
                    {"name": "edge_min", "in": "query"},
                ],
            }
        },
        "/diagnose": {"post": {"summary": "Group-contrast bars for {group1, group2?}"}},
        "/deparse": {"post": {"summary": "Launch a de-parse job for {case}"}},
        "/update": {"post": {"summary": "Model update {kind, case|bins}"}},
        "/jobs/{id}": {"get": {"summary": "Job state"}},
        "/openapi": {"get": {"summary": "This schema"}},
    },
}


@dataclass
class JobHandle:
    job_id: str
    kind: str  # "deparse" | "reparse"
    state: str = "queued"  # queued -> running -> done | failed
    progress: float = 0.0
    result: str | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.job_id,
            "kind": self.kind,
            "state": self.state,
            "progress": self.progress,
            "result": self.result,
            "error": self.error,
        }


class JobManager:
    """Single-worker job queue; at most one mutating job runs at a time."""

    def __init__(self) -> None:
        self.jobs: dict[str, JobHandle] = {}
        self._queue: "queue.Queue[tuple[JobHandle, object]]" = queue.Queue()
        self._lock = threading.Lock()
        self._seq = 0
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def submit(self, kind: str, fn) -> JobHandle:
        with self._lock:
            self._seq += 1
            handle = JobHandle(job_id=f"job-{self._seq:04d}", kind=kind)
            self.jobs[handle.job_id] = handle
        self._queue.put((handle, fn))
        return handle

    def get(self, job_id: str) -> JobHandle | None:
        return self.jobs.get(job_id)

    def _run(self) -> None:
        while True:
            handle, fn = self._queue.get()
            handle.state = "running"
            try:
                handle.result = fn(handle)
                handle.progress = 1.0
                handle.state = "done"
            except Exception as exc:  # job errors surface via the handle
                handle.error = f"{type(exc).__name__}: {exc}"
                handle.state = "failed"


@dataclass
class ExplorerService:
    """Route handlers; the workspace is re-opened per request so committed
    updates become visible immediately."""

    root: Path
    cors_origin: str | None = None
    jobs: JobManager = field(default_factory=JobManager)
    workers: int = 4

    def workspace(self) -> Workspace:
        return Workspace(self.root)

    # -- GET ------------------------------------------------------------------

    def get(self, path: str, query: dict[str, str]) -> dict:
        ws = self.workspace()
        iteration = int(query["it"]) if "it" in query else None
        if path == "/model":
            return ws.model(iteration).to_dict()
        if path in ("/curves", "/msnm"):
            return build_plot_payload(ws, path[1:], iteration=iteration)
        if path in ("/scores", "/loadings", "/biplot"):
            return build_plot_payload(ws, path[1:], pcs=query.get("pcs", "1,2"), iteration=iteration)
        if path == "/registry":
            cases = ws.registry()
            return {
                "iteration": ws.iteration,
                "cases": [cases[cid] for cid in sorted(cases)],
            }
        if path == "/report":
            case_id = query.get("case")
            if not case_id:
                raise ConfigError("report needs a case=<id> parameter")
            return ws.report_for(case_id).to_dict()
        if path == "/graph":
            return self._graph(ws, query)
        if path == "/openapi":
            return OPENAPI
        if path.startswith("/jobs/"):
            handle = self.jobs.get(path.removeprefix("/jobs/"))
            if handle is None:
                raise LookupError(path)
            return handle.to_dict()
        raise LookupError(path)

    def _graph(self, ws: Workspace, query: dict[str, str]) -> dict:
        case_id = query.get("case")
        if not case_id:
            raise ConfigError("graph needs a case=<id> parameter")
        rec = ws.case(case_id)
        station_var = query.get("station_var", "station")
        ap_var = query.get("ap_var", "ap")
        if "report" in rec:
            texts = RecordReader(ws.manifest).report_texts(ws.report_for(case_id))
        else:
            texts = (e.raw_text for b in sorted(rec["bins"]) for e in read_bin_entries(ws.manifest, b))
        g = build_graph(texts, ws.config, station_var=station_var, ap_var=ap_var)
        g = g.filtered(int(query.get("node_min", 0)), int(query.get("edge_min", 0)))
        return {"kind": "graph", "case": case_id, **g.to_dict()}

    # -- POST ------------------------------------------------------------------

    def post(self, path: str, body: dict) -> tuple[int, dict]:
        if path == "/diagnose":
            return 200, self._diagnose(body)
        if path == "/deparse":
            return 202, self._deparse(body)
        if path == "/update":
            return self._update(body)
        raise LookupError(path)

    def _diagnose(self, body: dict) -> dict:
        group1 = body.get("group1")
        if not isinstance(group1, list) or not group1:
            raise ConfigError("field 'group1' must be a non-empty list of bin labels")
        group2 = body.get("group2")
        if group2 is not None and not isinstance(group2, list):
            raise ConfigError("field 'group2' must be a list of bin labels or null")
        ws = self.workspace()
        result = ws.diagnose_groups(set(group1), set(group2) if group2 else None)
        return omeda_payload(result, {"group1": sorted(group1), "group2": sorted(group2) if group2 else None})

    def _ensure_case(self, ws: Workspace, case: object) -> str:
        """Accept a case id or a full case body {id?, bins, features}."""
        if isinstance(case, str):
            ws.case(case)
            return case
        if not isinstance(case, dict):
            raise ConfigError("field 'case' must be a case id or an object")
        bins = case.get("bins")
        features = case.get("features")
        if not isinstance(bins, list) or not bins:
            raise ConfigError("field 'case.bins' must be a non-empty list")
        if not isinstance(features, list) or not features:
            raise ConfigError("field 'case.features' must be a non-empty list")
        case_id = case.get("id") or f"case-{sorted(bins)[0]}-{sorted(bins)[-1]}"
        existing = ws.registry().get(case_id)
        if existing is None:
            ws._append_event({"event": "detected", "case_id": case_id, "bins": sorted(bins), "stats": {}, "iteration": ws.iteration})
        ws._append_event({"event": "diagnosed", "case_id": case_id, "features": list(features)})
        return case_id

    def _deparse(self, body: dict) -> dict:
        if "case" not in body:
            raise ConfigError("field 'case' is required")
        ws = self.workspace()
        case_id = self._ensure_case(ws, body["case"])
        ws.anomaly_case(case_id)  # validates features exist before queueing
        workers = int(body.get("workers", self.workers))

        def run(handle: JobHandle) -> str:
            inner = self.workspace()
            report = inner.deparse_case(
                case_id,
                n_workers=workers,
                progress=lambda done, total: setattr(handle, "progress", done / total),
            )
            return inner.case(case_id)["report"]

        handle = self.jobs.submit("deparse", run)
        return {"job": handle.to_dict()}

    def _refit(self, ws: Workspace) -> None:
        """Refit the fresh iteration with the previous detection's settings so
        the UI can switch straight to the new model."""
        try:
            prev = ws.detection(ws.iteration - 1)
        except ConfigError:
            return
        ws.iterate(alpha=prev.get("alpha") or 0.99, pcs="auto", scale=prev.get("scale", "center"))

    def _update(self, body: dict) -> tuple[int, dict]:
        kind = body.get("kind")
        if kind not in ("observation", "log"):
            raise ConfigError("field 'kind' must be 'observation' or 'log'")
        ws = self.workspace()
        if kind == "observation":
            case_id = body.get("case")
            bins = body.get("bins")
            if (case_id is None) == (bins is None):
                raise ConfigError("observation-wise update needs exactly one of 'case' or 'bins'")
            drop = set(ws.case(case_id)["bins"]) if case_id else set(bins)
            record = ws.update_observationwise(drop, case_id=case_id)
            self._refit(ws)
            return 200, {"extraction": record.to_dict(), "iteration": ws.iteration}
        case_id = body.get("case")
        if not isinstance(case_id, str):
            raise ConfigError("log-wise update needs a 'case' id")
        ws.report_for(case_id)  # must already be deparsed
        workers = int(body.get("workers", self.workers))

        def run(handle: JobHandle) -> str:
            inner = self.workspace()
            inner.update_logwise(
                case_id,
                n_workers=workers,
                progress=lambda done, total: setattr(handle, "progress", done / total),
            )
            self._refit(inner)
            return f"it{inner.iteration:03d}"

        handle = self.jobs.submit("reparse", run)
        return 202, {"job": handle.to_dict()}


class _Handler(BaseHTTPRequestHandler):
    service: ExplorerService

    def log_message(self, fmt: str, *args) -> None:  # quiet by default
        pass

    def _send(self, status: int, payload: dict) -> None:
        data = dump_payload(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        if self.service.cors_origin:
            self.send_header("Access-Control-Allow-Origin", self.service.cors_origin)
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(data)

    def do_OPTIONS(self) -> None:  # CORS preflight
        self._send(204, {})

    def do_GET(self) -> None:
        url = urlparse(self.path)
        query = {k: v[0] for k, v in parse_qs(url.query).items()}
        try:
            self._send(200, self.service.get(url.path, query))
        except LookupError:
            self._send(404, {"error": f"not found: {url.path}"})
        except (ConfigError, DataError, ValueError) as exc:
            self._send(400, {"error": str(exc)})
        except Exception as exc:
            traceback.print_exc()
            self._send(500, {"error": f"{type(exc).__name__}: {exc}"})

    def do_POST(self) -> None:
        url = urlparse(self.path)
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length else b"{}"
            try:
                body = json.loads(raw or b"{}")
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed JSON body: {exc}") from exc
            if not isinstance(body, dict):
                raise ConfigError("body must be a JSON object")
            status, payload = self.service.post(url.path, body)
            self._send(status, payload)
        except LookupError:
            self._send(404, {"error": f"not found: {url.path}"})
        except WorkspaceLockedError as exc:
            self._send(409, {"error": str(exc)})
        except (ConfigError, DataError) as exc:
            self._send(400, {"error": str(exc)})
        except Exception as exc:
            traceback.print_exc()
            self._send(500, {"error": f"{type(exc).__name__}: {exc}"})


def make_server(
    root: Path | str, host: str = "127.0.0.1", port: int = 0, cors_origin: str | None = None
) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    Workspace(root)  # validate up front
    service = ExplorerService(root=Path(root), cors_origin=cors_origin)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def run_service(root: Path | str, host: str, port: int, cors_origin: str | None = None) -> None:
    server = make_server(root, host, port, cors_origin)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
