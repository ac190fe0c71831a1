/** SVG scatter views (scores, biplot, D-Q monitoring) with lasso selection.
 * Coordinates come straight from service payloads; the view only scales
 * them to screen space. */

import { lassoSelect, makeScale, type Pt } from "./geometry";

export interface ScatterPoint {
  label: string;
  x: number;
  y: number;
  group: string;
  flagged?: boolean;
}

export interface ScatterOptions {
  width?: number;
  height?: number;
  xLabel: string;
  yLabel: string;
  /** Threshold guide lines in data coordinates (e.g. control limits). */
  xLine?: number | null;
  yLine?: number | null;
  /** Loading overlay for biplots. */
  overlay?: { label: string; x: number; y: number }[];
  selected?: Set<string>;
  onLasso?: (labels: string[]) => void;
}

const PALETTE = ["#3366cc", "#dc3912", "#ff9900", "#109618", "#990099", "#0099c6", "#dd4477", "#66aa00"];

export function groupColor(group: string): string {
  let h = 0;
  for (const ch of group) h = (h * 31 + ch.charCodeAt(0)) >>> 0;
  return PALETTE[h % PALETTE.length]!;
}

const SVG_NS = "http://www.w3.org/2000/svg";

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

export function renderScatter(
  container: HTMLElement,
  points: ScatterPoint[],
  opts: ScatterOptions,
): SVGSVGElement {
  const width = opts.width ?? 640;
  const height = opts.height ?? 440;
  const margin = 40;
  container.textContent = "";

  const svg = svgEl("svg", { width, height, class: "scatter" });
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);

  const xs = points.map((p) => p.x).concat(opts.xLine != null ? [opts.xLine] : []);
  const ys = points.map((p) => p.y).concat(opts.yLine != null ? [opts.yLine] : []);
  if (opts.overlay) {
    xs.push(...opts.overlay.map((o) => o.x));
    ys.push(...opts.overlay.map((o) => o.y));
  }
  const sx = makeScale(xs.length ? xs : [0, 1], margin, width - margin);
  const sy = makeScale(ys.length ? ys : [0, 1], height - margin, margin);

  svg.appendChild(
    svgEl("line", { x1: margin, y1: height - margin, x2: width - margin, y2: height - margin, class: "axis" }),
  );
  svg.appendChild(svgEl("line", { x1: margin, y1: margin, x2: margin, y2: height - margin, class: "axis" }));
  const xText = svgEl("text", { x: width / 2, y: height - 8, class: "axis-label" });
  xText.textContent = opts.xLabel;
  svg.appendChild(xText);
  const yText = svgEl("text", { x: 12, y: height / 2, class: "axis-label", transform: `rotate(-90 12 ${height / 2})` });
  yText.textContent = opts.yLabel;
  svg.appendChild(yText);

  if (opts.xLine != null) {
    const x = sx(opts.xLine);
    svg.appendChild(svgEl("line", { x1: x, y1: margin, x2: x, y2: height - margin, class: "ucl-line", "data-limit": "x" }));
  }
  if (opts.yLine != null) {
    const y = sy(opts.yLine);
    svg.appendChild(svgEl("line", { x1: margin, y1: y, x2: width - margin, y2: y, class: "ucl-line", "data-limit": "y" }));
  }

  const screenPoints: ({ label: string } & Pt)[] = [];
  for (const p of points) {
    const cx = sx(p.x);
    const cy = sy(p.y);
    screenPoints.push({ label: p.label, x: cx, y: cy });
    const selected = opts.selected?.has(p.label) ?? false;
    const circle = svgEl("circle", {
      cx,
      cy,
      r: selected ? 5 : 3.2,
      fill: p.flagged ? "#d62728" : groupColor(p.group),
      class: `point${selected ? " selected" : ""}${p.flagged ? " flagged" : ""}`,
      "data-label": p.label,
      "data-x": p.x,
      "data-y": p.y,
    });
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${p.label} (${p.x}, ${p.y})`;
    circle.appendChild(title);
    svg.appendChild(circle);
  }

  if (opts.overlay) {
    for (const o of opts.overlay) {
      const node = svgEl("circle", {
        cx: sx(o.x),
        cy: sy(o.y),
        r: 3,
        class: "overlay-point",
        "data-feature": o.label,
      });
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = o.label;
      node.appendChild(title);
      svg.appendChild(node);
    }
  }

  if (opts.onLasso) attachLasso(svg, screenPoints, opts.onLasso);
  container.appendChild(svg);
  return svg;
}

/** Freehand lasso: pointerdown starts the path, pointerup closes it and
 * reports exactly the enclosed labels. */
export function attachLasso(
  svg: SVGSVGElement,
  screenPoints: ({ label: string } & Pt)[],
  onSelect: (labels: string[]) => void,
): void {
  let path: Pt[] = [];
  let tracer: SVGPolylineElement | null = null;

  const toLocal = (ev: PointerEvent): Pt => {
    const rect = svg.getBoundingClientRect();
    return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  };

  svg.addEventListener("pointerdown", (ev) => {
    path = [toLocal(ev)];
    tracer = svgEl("polyline", { class: "lasso", fill: "none" });
    svg.appendChild(tracer);
    svg.setPointerCapture(ev.pointerId);
  });
  svg.addEventListener("pointermove", (ev) => {
    if (!tracer) return;
    path.push(toLocal(ev));
    tracer.setAttribute("points", path.map((p) => `${p.x},${p.y}`).join(" "));
  });
  svg.addEventListener("pointerup", () => {
    if (!tracer) return;
    tracer.remove();
    tracer = null;
    onSelect(path.length >= 3 ? lassoSelect(screenPoints, path) : []);
    path = [];
  });
}
