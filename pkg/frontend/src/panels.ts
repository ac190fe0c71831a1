/** DOM panels: diagnosis bars, de-parse review table, actor summary, curves
 * and graph. Every displayed number carries a data-value attribute holding
 * the exact payload value, so tests can assert the no-client-math rule. */

import { groupColor } from "./scatter";
import type {
  CurvesPayload,
  GraphPayload,
  OmedaPayload,
  ReportPayload,
} from "./types";

function el(tag: string, attrs: Record<string, string> = {}, text?: string): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function num(value: number | null, attrs: Record<string, string> = {}): HTMLElement {
  const node = el("span", { ...attrs, "data-value": value === null ? "null" : String(value) });
  node.textContent = value === null ? "n/a" : String(value);
  return node;
}

/** Diagnosis bars sorted by |bar| with the top group highlighted. */
export function renderBars(
  container: HTMLElement,
  payload: OmedaPayload,
  highlightTop = 3,
  onCreateCase?: () => void,
): void {
  container.textContent = "";
  const sorted = [...payload.bars].sort((a, b) => a.rank - b.rank);
  const peak = sorted.length ? Math.abs(sorted[0]!.bar) : 0;
  const panel = el("div", { class: "bars-panel" });
  for (const bar of sorted) {
    const row = el("div", {
      class: `bar-row${bar.rank <= highlightTop ? " highlight" : ""}`,
      "data-feature": bar.feature,
      "data-rank": String(bar.rank),
    });
    row.appendChild(el("span", { class: "bar-name" }, bar.feature));
    const track = el("div", { class: "bar-track" });
    const fill = el("div", { class: `bar-fill ${bar.bar >= 0 ? "pos" : "neg"}` });
    const share = peak > 0 ? (Math.abs(bar.bar) / peak) * 100 : 0;
    fill.style.width = `${share}%`;
    track.appendChild(fill);
    row.appendChild(track);
    row.appendChild(num(bar.bar, { class: "bar-value" }));
    panel.appendChild(row);
  }
  container.appendChild(panel);
  if (onCreateCase) {
    const btn = el("button", { class: "create-case" }, "create case from top features");
    btn.addEventListener("click", onCreateCase);
    container.appendChild(btn);
  }
}

/** Ranked entry table (already ordered by the service) with paging. */
export function renderReport(
  container: HTMLElement,
  report: ReportPayload,
  page = 0,
  pageSize = 25,
  onPage?: (page: number) => void,
): void {
  container.textContent = "";
  const summary = el("div", { class: "report-summary" });
  summary.appendChild(el("span", {}, "matched "));
  summary.appendChild(num(report.totals.matched, { "data-field": "matched" }));
  summary.appendChild(el("span", {}, " of "));
  summary.appendChild(num(report.totals.window, { "data-field": "window" }));
  summary.appendChild(el("span", {}, " entries in window"));
  for (const [actor, count] of Object.entries(report.actors)) {
    const cell = el("span", { class: "actor", "data-actor": actor });
    cell.appendChild(el("span", {}, `${actor}: `));
    cell.appendChild(num(count, { "data-field": `actor-${actor}` }));
    summary.appendChild(cell);
  }
  container.appendChild(summary);

  if (report.gaps.length) {
    container.appendChild(el("div", { class: "gaps" }, `${report.gaps.length} chunk(s) unavailable`));
  }

  const table = el("table", { class: "entries" });
  const head = el("tr");
  for (const h of ["timestamp", "file", "offset", "matched features", "count"]) {
    head.appendChild(el("th", {}, h));
  }
  table.appendChild(head);
  const start = page * pageSize;
  for (const entry of report.entries.slice(start, start + pageSize)) {
    const row = el("tr", { "data-offset": String(entry.offset) });
    row.appendChild(el("td", {}, entry.timestamp));
    row.appendChild(el("td", {}, entry.path));
    const offsetCell = el("td");
    offsetCell.appendChild(num(entry.offset));
    row.appendChild(offsetCell);
    row.appendChild(el("td", {}, entry.features.join(", ")));
    const countCell = el("td");
    countCell.appendChild(num(entry.match_count, { "data-field": "match_count" }));
    row.appendChild(countCell);
    table.appendChild(row);
  }
  container.appendChild(table);

  const pages = Math.max(1, Math.ceil(report.entries.length / pageSize));
  const nav = el("div", { class: "pager" }, `page ${page + 1} / ${pages}`);
  if (onPage) {
    const prev = el("button", {}, "prev");
    prev.addEventListener("click", () => onPage(Math.max(0, page - 1)));
    const next = el("button", {}, "next");
    next.addEventListener("click", () => onPage(Math.min(pages - 1, page + 1)));
    nav.prepend(prev);
    nav.appendChild(next);
  }
  container.appendChild(nav);
}

/** Residual-variance + ckf curves as a simple dual line chart. */
export function renderCurves(container: HTMLElement, payload: CurvesPayload): void {
  container.textContent = "";
  const table = el("table", { class: "curves" });
  const head = el("tr");
  for (const h of ["components", "residual variance", "ckf"]) head.appendChild(el("th", {}, h));
  table.appendChild(head);
  payload.a_values.forEach((a, i) => {
    const row = el("tr", { "data-a": String(a) });
    row.appendChild(el("td", {}, String(a)));
    const rv = el("td");
    rv.appendChild(num(payload.residual_variance[i]!, { "data-field": `resvar-${a}` }));
    row.appendChild(rv);
    const ck = el("td");
    ck.appendChild(num(payload.ckf[i]!, { "data-field": `ckf-${a}` }));
    row.appendChild(ck);
    table.appendChild(row);
  });
  container.appendChild(table);
}

/** Bipartite station/AP graph; weight filters are applied client-side by
 * simple comparisons against the fetched payload. */
export function renderGraph(
  container: HTMLElement,
  payload: GraphPayload,
  nodeMin = 0,
  edgeMin = 0,
): void {
  container.textContent = "";
  const nodes = payload.nodes.filter((n) => n.weight >= nodeMin);
  const keep = new Set(nodes.map((n) => n.id));
  const edges = payload.edges.filter(
    (e) => e.weight >= edgeMin && keep.has(e.source) && keep.has(e.target),
  );

  const stations = nodes.filter((n) => n.kind === "station").sort((a, b) => b.weight - a.weight);
  const aps = nodes.filter((n) => n.kind === "ap").sort((a, b) => b.weight - a.weight);
  const rows = Math.max(stations.length, aps.length, 1);
  const height = Math.max(320, rows * 22 + 40);
  const width = 720;

  const SVG_NS = "http://www.w3.org/2000/svg";
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "graph");
  svg.setAttribute("data-nodes", String(nodes.length));
  svg.setAttribute("data-edges", String(edges.length));

  const posOf = new Map<string, { x: number; y: number }>();
  stations.forEach((n, i) => posOf.set(n.id, { x: 180, y: 30 + i * 22 }));
  aps.forEach((n, i) => posOf.set(n.id, { x: width - 180, y: 30 + i * 22 }));

  for (const e of edges) {
    const a = posOf.get(e.source)!;
    const b = posOf.get(e.target)!;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(a.x));
    line.setAttribute("y1", String(a.y));
    line.setAttribute("x2", String(b.x));
    line.setAttribute("y2", String(b.y));
    line.setAttribute("class", "graph-edge");
    line.setAttribute("data-weight", String(e.weight));
    svg.appendChild(line);
  }
  for (const n of nodes) {
    const pos = posOf.get(n.id)!;
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(pos.x));
    circle.setAttribute("cy", String(pos.y));
    circle.setAttribute("r", "6");
    circle.setAttribute("fill", n.kind === "ap" ? "#888" : groupColor(n.label));
    circle.setAttribute("data-id", n.id);
    circle.setAttribute("data-weight", String(n.weight));
    svg.appendChild(circle);
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(n.kind === "station" ? pos.x - 12 : pos.x + 12));
    text.setAttribute("y", String(pos.y + 4));
    text.setAttribute("class", `graph-label ${n.kind}`);
    text.setAttribute("text-anchor", n.kind === "station" ? "end" : "start");
    text.textContent = `${n.label} (${n.weight})`;
    svg.appendChild(text);
  }
  container.appendChild(svg);
}
