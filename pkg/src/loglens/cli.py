"""Command-line interface driving the whole workflow.

Subcommands: generate, scan, learn, parse, fuse, fit, detect, diagnose,
deparse, graph, update, serve, plot. Workspace-bound commands read the
workspace root from --workspace or the LOGLENS_WORKSPACE environment
variable. Exit codes: 0 success, 2 usage, 3 configuration error, 4 data
error, 5 workspace locked.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import synth
from .corpus import ISO_TIMESTAMP, CorpusManifest, TimestampSpec, scan_corpus
from .deparse import materialize as materialize_report
from .errors import ConfigError, DataError, WorkspaceLockedError
from .graph import build_graph, export_graph
from .learning import LearningParams, learn_corpus, merge_learned, save_learnings
from .matrix import fuse as fuse_matrices, read_matrix, write_matrix
from .parsecfg import VariableDef, parse_bin_width
from .plots import (
    biplot_payload,
    curves_payload,
    dump_payload,
    loadings_payload,
    msnm_payload,
    omeda_payload,
    scores_payload,
)
from .workspace import Workspace

EXIT_CONFIG = 3
EXIT_DATA = 4
EXIT_LOCKED = 5


def _progress(label: str):
    def cb(done: int, total: int) -> None:
        click.echo(f"\r{label}: {done}/{total}", err=True, nl=(done == total))

    return cb


def _workspace(ctx: click.Context, must_exist: bool = True) -> Workspace:
    root = ctx.obj.get("workspace")
    if root is None:
        raise ConfigError("no workspace given (use --workspace or LOGLENS_WORKSPACE)")
    if must_exist:
        return Workspace(root)
    return root


@click.group()
@click.option(
    "--workspace",
    "-w",
    envvar="LOGLENS_WORKSPACE",
    type=click.Path(path_type=Path),
    help="Workspace root directory (env: LOGLENS_WORKSPACE).",
)
@click.pass_context
def cli(ctx: click.Context, workspace: Path | None) -> None:
    """Count-feature log monitoring: parse, detect, diagnose, de-parse."""
    ctx.ensure_object(dict)
    ctx.obj["workspace"] = workspace


@cli.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def generate(spec_path: Path, out_dir: Path) -> None:
    """Generate a synthetic trap-style corpus with ground-truthed anomalies."""
    spec = synth.SyntheticSpec.from_dict(json.loads(spec_path.read_text(encoding="utf-8")))
    manifest, truth = synth.generate_synthetic_corpus(spec, out_dir)
    manifest.save(out_dir / "manifest.json")
    truth.save(out_dir / "ground_truth.json")
    click.echo(f"{manifest.total_entries()} entries over {len(manifest.bins())} bins in {out_dir}")


@cli.command()
@click.argument("roots", nargs=-1, required=True, type=click.Path(path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--ts-regex", default=ISO_TIMESTAMP.regex, show_default=True)
@click.option("--ts-format", default=ISO_TIMESTAMP.fmt, show_default=True)
@click.option("--delimiter", default="\n")
@click.option("--bin-width", default="1d", show_default=True)
def scan(roots: tuple[Path, ...], out: Path, ts_regex: str, ts_format: str, delimiter: str, bin_width: str) -> None:
    """Index a raw corpus into a time-binned chunk manifest."""
    manifest = scan_corpus(
        list(roots),
        TimestampSpec(ts_regex, ts_format),
        record_delimiter=delimiter,
        bin_seconds=parse_bin_width(bin_width),
    )
    manifest.save(out)
    unbinned = sum(c.entry_count for c in manifest.chunks if c.bin_label == "unbinned")
    click.echo(
        f"{manifest.total_entries()} entries, {len(manifest.bins())} bins, "
        f"{unbinned} unbinned, {len(manifest.errors)} file errors -> {out}"
    )


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--variables", "variables_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--dumps", type=click.Path(path_type=Path), help="Also write per-chunk candidate dumps.")
@click.option("--presence", default=0.05, show_default=True)
@click.option("--variance-ratio", default=1e-4, show_default=True)
@click.option("--workers", default=1, show_default=True)
def learn(
    manifest_path: Path,
    variables_path: Path,
    out: Path,
    dumps: Path | None,
    presence: float,
    variance_ratio: float,
    workers: int,
) -> None:
    """Learn a parser config from the corpus: per-chunk candidates, merge,
    variance filter, defaults."""
    manifest = CorpusManifest.load(manifest_path)
    variables, actors = _load_variables(variables_path)
    params = LearningParams(presence_threshold=presence, variance_ratio_threshold=variance_ratio)
    learnings, failures = learn_corpus(
        manifest, variables, presence, n_workers=workers, progress=_progress("learn")
    )
    if failures:
        click.echo(f"warning: {len(failures)} chunks failed during learning", err=True)
    config = merge_learned(
        learnings, variables, params, bin_seconds=manifest.bin_seconds, actors=actors
    )
    config.save(out)
    if dumps:
        save_learnings(learnings, dumps)
    n_specific = sum(1 for f in config.features if not f.is_default)
    click.echo(f"learned {n_specific} features (+{len(config.variables)} defaults) -> {out}")


def _load_variables(path: Path) -> tuple[list[VariableDef], list[str]]:
    """Variables seed file: YAML with `variables:` and optional `actors:`."""
    import yaml

    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict) or "variables" not in raw:
        raise ConfigError(f"{path} needs a 'variables' section")
    variables = [VariableDef(v["name"], v["pattern"]) for v in raw["variables"]]
    if not variables:
        raise ConfigError(f"{path}: no variables declared")
    for v in variables:
        v.compile()
    return variables, [str(a) for a in raw.get("actors", [])]


@cli.command()
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path))
@click.option("--workers", default=1, show_default=True)
@click.option("--matrix-out", type=click.Path(path_type=Path), help="Also export the matrix CSV here.")
@click.pass_context
def parse(ctx: click.Context, manifest_path: Path | None, config_path: Path | None, workers: int, matrix_out: Path | None) -> None:
    """Parse the corpus into the workspace's iteration-0 matrix (creating the
    workspace when given --manifest and --config)."""
    root = ctx.obj.get("workspace")
    if root is None:
        raise ConfigError("parse needs --workspace")
    if not (Path(root) / "workspace.json").exists():
        if manifest_path is None or config_path is None:
            raise ConfigError("new workspace needs --manifest and --config")
        ws = Workspace.create(root, manifest_path, config_path)
    else:
        ws = Workspace(root)
    report = ws.parse_initial(n_workers=workers, progress=_progress("parse"))
    if matrix_out:
        write_matrix(ws.matrix(0), matrix_out)
    click.echo(
        f"matrix {report['n_rows']}x{report['n_columns']} in {report['wall_seconds']}s; "
        f"{len(report['failed_bins'])} failed bins"
    )


@cli.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--names", help="Comma-separated source names (default: s0,s1,...).")
def fuse(inputs: tuple[Path, ...], out: Path, names: str | None) -> None:
    """Column-wise fusion of per-source matrices sharing the same bins."""
    matrices = [read_matrix(p) for p in inputs]
    name_list = names.split(",") if names else None
    write_matrix(fuse_matrices(matrices, name_list), out)
    click.echo(f"fused {len(matrices)} matrices -> {out}")


@cli.command()
@click.option("--pcs", default="auto", show_default=True, help="Component count or 'auto' (ckf policy).")
@click.option("--scale", type=click.Choice(["center", "autoscale"]), default="center", show_default=True)
@click.option("--k-folds", default=None, type=int)
@click.option("--tol", default=0.01, show_default=True, help="Relative ckf improvement tolerance for 'auto'.")
@click.pass_context
def fit(ctx: click.Context, pcs: str, scale: str, k_folds: int | None, tol: float) -> None:
    """Fit the current iteration's model (and curves) without detecting."""
    ws = _workspace(ctx)
    model, _curves = ws.fit(pcs=pcs if pcs == "auto" else int(pcs), scale=scale, k_folds=k_folds, rel_tolerance=tol)
    click.echo(f"fitted A={model.A} ({scale}) on iteration {ws.iteration}")


@cli.command()
@click.option("--alpha", default=0.99, show_default=True)
@click.option("--pcs", default="auto", show_default=True)
@click.option("--scale", type=click.Choice(["center", "autoscale"]), default="center", show_default=True)
@click.option("--k-folds", default=None, type=int)
@click.option("--tol", default=0.01, show_default=True)
@click.pass_context
def detect(ctx: click.Context, alpha: float, pcs: str, scale: str, k_folds: int | None, tol: float) -> None:
    """Fit, score and threshold the current matrix; register flagged runs."""
    ws = _workspace(ctx)
    detection = ws.iterate(
        alpha=alpha, pcs=pcs if pcs == "auto" else int(pcs), scale=scale, k_folds=k_folds, rel_tolerance=tol
    )
    flagged = [o["bin"] for o in detection["observations"] if o["flagged"]]
    click.echo(
        f"iteration {detection['iteration']}: A={detection['A']}, "
        f"{len(flagged)} bins flagged, {len(detection['cases'])} cases"
    )
    for case in detection["cases"]:
        click.echo(f"  {case['id']}: {case['bins'][0]} .. {case['bins'][-1]} ({len(case['bins'])} bins)")


@cli.command()
@click.option("--case", "case_id")
@click.option("--bins", help="Ad-hoc group 1: comma-separated bin labels.")
@click.option("--bins2", help="Ad-hoc group 2 (default: all other bins).")
@click.option("--top", default=5, show_default=True)
@click.option("--out", type=click.Path(path_type=Path))
@click.pass_context
def diagnose(ctx: click.Context, case_id: str | None, bins: str | None, bins2: str | None, top: int, out: Path | None) -> None:
    """Group-contrast bars for a case (recorded) or an ad-hoc selection."""
    ws = _workspace(ctx)
    if (case_id is None) == (bins is None):
        raise ConfigError("pass exactly one of --case or --bins")
    if case_id is not None:
        result, features = ws.diagnose_case(case_id, top_k=top)
        click.echo(f"case {case_id}: top features {', '.join(features)}")
        payload = omeda_payload(result, {"case": case_id})
    else:
        group1 = set(bins.split(","))
        group2 = set(bins2.split(",")) if bins2 else None
        result = ws.diagnose_groups(group1, group2)
        payload = omeda_payload(result, {"group1": sorted(group1), "group2": sorted(group2) if group2 else None})
    text = dump_payload(payload)
    if out:
        out.write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option("--case", "case_id", required=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--extract", type=click.Path(path_type=Path), help="Also write matched raw entries here.")
@click.pass_context
def deparse(ctx: click.Context, case_id: str, workers: int, extract: Path | None) -> None:
    """Recover and rank the raw entries behind a diagnosed case."""
    ws = _workspace(ctx)
    report = ws.deparse_case(case_id, n_workers=workers, progress=_progress("deparse"))
    share = report.matched / report.window_total if report.window_total else 0.0
    click.echo(
        f"case {case_id}: {report.matched}/{report.window_total} entries ({share:.1%}), "
        f"actors {report.actors}"
    )
    if extract:
        n = materialize_report(ws.manifest, report, extract)
        click.echo(f"extracted {n} raw entries -> {extract}")


@cli.command()
@click.option("--case", "case_id")
@click.option("--bins", help="Build over these bins instead of a case's report.")
@click.option("--station-var", default="station", show_default=True)
@click.option("--ap-var", default="ap", show_default=True)
@click.option("--node-min", default=0, show_default=True)
@click.option("--edge-min", default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["gexf", "csv", "json"]), default="gexf", show_default=True)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.pass_context
def graph(
    ctx: click.Context,
    case_id: str | None,
    bins: str | None,
    station_var: str,
    ap_var: str,
    node_min: int,
    edge_min: int,
    fmt: str,
    out: Path,
) -> None:
    """Export the station/AP connection graph for a case or a bin window."""
    ws = _workspace(ctx)
    g = _case_graph(ws, case_id, set(bins.split(",")) if bins else None, station_var, ap_var)
    exported = export_graph(g, out, node_min=node_min, edge_min=edge_min, fmt=fmt)
    click.echo(f"{len(exported.nodes)} nodes, {len(exported.edges)} edges -> {out}")


def _case_graph(ws: Workspace, case_id: str | None, bins: set[str] | None, station_var: str, ap_var: str):
    """Graph over a case's matched entries when deparsed, else over raw bins."""
    from .corpus import read_bin_entries
    from .deparse import RecordReader

    if (case_id is None) == (bins is None):
        raise ConfigError("pass exactly one of --case or --bins")
    if case_id is not None:
        rec = ws.case(case_id)
        if "report" in rec:
            texts = RecordReader(ws.manifest).report_texts(ws.report_for(case_id))
        else:
            texts = (e.raw_text for b in sorted(rec["bins"]) for e in read_bin_entries(ws.manifest, b))
    else:
        unknown = bins - set(ws.manifest.bins())
        if unknown:
            raise ConfigError(f"bins not in corpus: {sorted(unknown)}")
        texts = (e.raw_text for b in sorted(bins) for e in read_bin_entries(ws.manifest, b))
    return build_graph(texts, ws.config, station_var=station_var, ap_var=ap_var)


@cli.command()
@click.option("--kind", type=click.Choice(["observation", "log"]), required=True)
@click.option("--case", "case_id")
@click.option("--bins", help="Observation-wise only: explicit bins to drop.")
@click.option("--workers", default=1, show_default=True)
@click.pass_context
def update(ctx: click.Context, kind: str, case_id: str | None, bins: str | None, workers: int) -> None:
    """Extract an analyzed anomaly and advance to the next iteration."""
    ws = _workspace(ctx)
    if kind == "observation":
        if (case_id is None) == (bins is None):
            raise ConfigError("observation-wise update needs exactly one of --case or --bins")
        drop = set(ws.case(case_id)["bins"]) if case_id else set(bins.split(","))
        record = ws.update_observationwise(drop, case_id=case_id)
    else:
        if case_id is None:
            raise ConfigError("log-wise update needs --case")
        record = ws.update_logwise(case_id, n_workers=workers, progress=_progress("reparse"))
    click.echo(f"{record.kind} extraction -> iteration {ws.iteration}")


@cli.command()
@click.option("--kind", type=click.Choice(["scores", "loadings", "biplot", "msnm", "curves"]), required=True)
@click.option("--pcs", default="1,2", show_default=True)
@click.option("--iteration", "-k", default=None, type=int, help="Iteration (default: current).")
@click.option("--out", type=click.Path(path_type=Path))
@click.pass_context
def plot(ctx: click.Context, kind: str, pcs: str, iteration: int | None, out: Path | None) -> None:
    """Emit a plot payload as JSON (stdout or --out)."""
    ws = _workspace(ctx)
    payload = build_plot_payload(ws, kind, pcs, iteration)
    text = dump_payload(payload)
    if out:
        out.write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def build_plot_payload(ws: Workspace, kind: str, pcs: str = "1,2", iteration: int | None = None) -> dict:
    """Single source of truth for plot payloads (shared with the service)."""
    if kind == "curves":
        return curves_payload(ws.curves(iteration))
    if kind == "msnm":
        return msnm_payload(ws.msnm_result(iteration))
    try:
        i, j = (int(p) for p in pcs.split(","))
    except ValueError:
        raise ConfigError(f"bad pcs {pcs!r}; expected like '1,2'") from None
    model = ws.model(iteration)
    if kind == "loadings":
        return loadings_payload(model, (i, j))
    xcs = ws.xcs(iteration)
    labels = ws.matrix(iteration).labels
    if kind == "scores":
        return scores_payload(model, xcs, labels, (i, j))
    if kind == "biplot":
        return biplot_payload(model, xcs, labels, (i, j))
    raise ConfigError(f"unknown plot kind: {kind!r}")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
@click.option("--cors", default=None, help="Allowed origin for CORS (e.g. the UI dev server).")
@click.pass_context
def serve(ctx: click.Context, host: str, port: int, cors: str | None) -> None:
    """Serve the workspace over HTTP for the explorer UI."""
    from .service import run_service

    ws = _workspace(ctx)
    click.echo(f"serving workspace {ws.root} on http://{host}:{port}", err=True)
    run_service(ws.root, host, port, cors_origin=cors)


def main() -> int:
    try:
        cli(standalone_mode=False, obj={})
        return 0
    except click.exceptions.Abort:
        return 130
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except WorkspaceLockedError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_LOCKED
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_CONFIG
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
