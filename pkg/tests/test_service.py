"""HTTP service: endpoint behavior, CLI parity, jobs and error codes."""

from __future__ import annotations

import json
import threading
import time
import urllib.error
import urllib.request

import pytest

from loglens.cli import build_plot_payload
from loglens.learning import LearningParams, learn_corpus, merge_learned
from loglens.parsecfg import VariableDef
from loglens.plots import dump_payload
from loglens.service import make_server
from loglens.synth import AnomalySpec, SyntheticSpec, generate_synthetic_corpus
from loglens.workspace import Workspace


@pytest.fixture(scope="module")
def served(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc_home")
    spec = SyntheticSpec(
        n_days=30,
        entries_per_day=900,
        vocabulary=[("assoc", 0.55), ("deauth", 0.3), ("authfail", 0.1), ("sysup", 0.05)],
        anomalies=[AnomalySpec(12, 13, ("authfail",), 9.0)],
        rng_seed=41,
        heavy_station_share=0.1,
        n_stations=30,
        n_aps=8,
        n_users=40,
    )
    manifest, _ = generate_synthetic_corpus(spec, root / "corpus")
    manifest.save(root / "corpus" / "manifest.json")
    variables = [
        VariableDef("trap_type", r"tt = OID: (\w+)"),
        VariableDef("ap", r" ap=([\w\-]+)"),
        VariableDef("station", r" st=([0-9a-f:]{17})"),
        VariableDef("user", r" usr=(\w+)"),
    ]
    learnings, _ = learn_corpus(manifest, variables, 0.05, n_workers=2)
    config = merge_learned(
        learnings, variables, LearningParams(), actors=["ap", "station", "user"]
    )
    config.save(root / "config.yaml")
    ws = Workspace.create(root / "ws", root / "corpus" / "manifest.json", root / "config.yaml")
    ws.parse_initial(n_workers=2)
    ws.iterate(alpha=0.99, pcs="auto", scale="autoscale")

    server = make_server(root / "ws", port=0, cors_origin="http://localhost:5173")
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield root / "ws", f"http://127.0.0.1:{port}"
    server.shutdown()


def get(base: str, path: str):
    try:
        with urllib.request.urlopen(base + path) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()


def post(base: str, path: str, body) -> tuple[int, dict]:
    data = body if isinstance(body, bytes) else json.dumps(body).encode()
    req = urllib.request.Request(
        base + path, data=data, method="POST", headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def wait_job(base: str, job_id: str, timeout: float = 30.0) -> dict:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        status, payload = get(base, f"/jobs/{job_id}")
        job = json.loads(payload)
        if job["state"] in ("done", "failed"):
            return job
        time.sleep(0.05)
    raise TimeoutError(job_id)


class TestReads:
    def test_msnm_equals_cli_payload_bytes(self, served):
        ws_root, base = served
        status, body = get(base, "/msnm")
        assert status == 200
        expected = dump_payload(build_plot_payload(Workspace(ws_root), "msnm")).encode()
        assert body == expected

    def test_scores_curves_loadings_parity(self, served):
        ws_root, base = served
        ws = Workspace(ws_root)
        for path, kind, pcs in [
            ("/scores?pcs=1,2", "scores", "1,2"),
            ("/loadings?pcs=1,2", "loadings", "1,2"),
            ("/biplot?pcs=1,2", "biplot", "1,2"),
            ("/curves", "curves", "1,2"),
        ]:
            status, body = get(base, path)
            assert status == 200, path
            assert body == dump_payload(build_plot_payload(ws, kind, pcs)).encode()

    def test_repeated_get_is_identical(self, served):
        _, base = served
        assert get(base, "/msnm") == get(base, "/msnm")

    def test_model_and_registry(self, served):
        _, base = served
        status, body = get(base, "/model")
        model = json.loads(body)
        assert status == 200 and model["A"] >= 1
        status, body = get(base, "/registry")
        registry = json.loads(body)
        assert status == 200 and registry["iteration"] == 0
        assert any("2026-01-13" in c["id"] for c in registry["cases"])

    def test_unknown_route_404(self, served):
        _, base = served
        assert get(base, "/nope")[0] == 404

    def test_openapi_served(self, served):
        _, base = served
        status, body = get(base, "/openapi")
        assert status == 200 and "/diagnose" in json.loads(body)["paths"]

    def test_cors_header_present(self, served):
        _, base = served
        with urllib.request.urlopen(base + "/msnm") as resp:
            assert resp.headers["Access-Control-Allow-Origin"] == "http://localhost:5173"


class TestDiagnose:
    def test_sync_diagnose_matches_workspace(self, served):
        ws_root, base = served
        status, payload = post(base, "/diagnose", {"group1": ["2026-01-13", "2026-01-14"]})
        assert status == 200
        ws = Workspace(ws_root)
        result = ws.diagnose_groups({"2026-01-13", "2026-01-14"})
        top_server = max(payload["bars"], key=lambda b: abs(b["bar"]))
        assert top_server["feature"] == result.ranked()[0][0]
        assert top_server["feature"] == "trap_type_authfail"

    def test_overlapping_groups_400(self, served):
        _, base = served
        status, payload = post(
            base, "/diagnose", {"group1": ["2026-01-05"], "group2": ["2026-01-05"]}
        )
        assert status == 400 and "overlap" in payload["error"]

    def test_malformed_body_400_names_field(self, served):
        _, base = served
        status, payload = post(base, "/diagnose", {"group1": "not-a-list"})
        assert status == 400 and "group1" in payload["error"]
        status, payload = post(base, "/diagnose", b"{broken json")
        assert status == 400 and "JSON" in payload["error"]


class TestJobsAndUpdate:
    def test_deparse_job_lifecycle_and_cli_equivalence(self, served):
        ws_root, base = served
        status, payload = post(
            base,
            "/deparse",
            {"case": {"id": "svc-case", "bins": ["2026-01-13", "2026-01-14"], "features": ["trap_type_authfail"]}},
        )
        assert status == 202
        job = wait_job(base, payload["job"]["id"])
        assert job["state"] == "done"
        assert job["progress"] == 1.0
        # job result equals a direct library de-parse of the same case
        from loglens.deparse import AnomalyCase, DeparseReport, deparse

        ws = Workspace(ws_root)
        stored = DeparseReport.load(ws_root / job["result"])
        direct = deparse(
            ws.manifest,
            AnomalyCase("svc-case", frozenset({"2026-01-13", "2026-01-14"}), ("trap_type_authfail",)),
            ws.config,
            n_workers=2,
        )
        assert stored.to_dict() == direct.to_dict()

    def test_deparse_without_features_400(self, served):
        _, base = served
        status, payload = post(base, "/deparse", {"case": {"bins": ["2026-01-13"], "features": []}})
        assert status == 400

    def test_graph_for_deparsed_case(self, served):
        _, base = served
        status, body = get(base, "/graph?case=svc-case&node_min=2&edge_min=1")
        graph = json.loads(body)
        assert status == 200
        assert graph["nodes"] and graph["edges"]
        assert all(n["weight"] >= 2 for n in graph["nodes"])

    def test_update_locked_409(self, served):
        ws_root, base = served
        lock = ws_root / "lock"
        lock.write_text("12345")
        try:
            status, payload = post(base, "/update", {"kind": "observation", "bins": ["2026-01-02"]})
            assert status == 409
        finally:
            lock.unlink()

    def test_update_bad_kind_400(self, served):
        _, base = served
        status, payload = post(base, "/update", {"kind": "zap"})
        assert status == 400 and "kind" in payload["error"]

    def test_report_endpoint_serves_deparse_output(self, served):
        ws_root, base = served
        status, body = get(base, "/report?case=svc-case")
        report = json.loads(body)
        assert status == 200
        assert report["case"] == "svc-case" and report["totals"]["matched"] > 0
        assert get(base, "/report?case=never-deparsed")[0] == 400

    def test_observation_update_advances_iteration_and_refits(self, served):
        ws_root, base = served
        status, payload = post(base, "/update", {"kind": "observation", "bins": ["2026-01-02"]})
        assert status == 200
        assert payload["iteration"] == 1
        # the new iteration was refitted with the previous settings
        status, body = get(base, "/model")
        assert status == 200
        status, body = get(base, "/msnm")
        assert status == 200 and "2026-01-02" not in {p["label"] for p in json.loads(body)["points"]}
        # older iteration stays reachable
        assert get(base, "/model?it=0")[0] == 200
