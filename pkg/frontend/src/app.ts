/** Shell wiring: tabs, selectors, actions and view rendering around the
 * store. All rendering is re-entrant; the store is the single source of
 * truth. */

import { ApiClient } from "./api";
import { renderBars, renderCurves, renderGraph, renderReport } from "./panels";
import { renderScatter } from "./scatter";
import { Store, type ViewKind } from "./state";

const PC_PAIRS: [number, number][] = [
  [1, 2],
  [3, 4],
  [5, 6],
];

const VIEWS: { id: ViewKind; title: string }[] = [
  { id: "scores", title: "Scores" },
  { id: "biplot", title: "Biplot" },
  { id: "msnm", title: "D vs Q" },
  { id: "curves", title: "Curves" },
  { id: "diagnosis", title: "Diagnosis" },
  { id: "case", title: "Case" },
  { id: "graph", title: "Graph" },
];

export class App {
  readonly store: Store;
  private reportPage = 0;

  constructor(
    readonly root: HTMLElement,
    api: ApiClient = new ApiClient(""),
  ) {
    this.store = new Store(api);
    this.store.subscribe(() => this.render());
  }

  async start(): Promise<void> {
    await this.store.loadIteration();
  }

  render(): void {
    const s = this.store.state;
    this.root.textContent = "";

    const header = document.createElement("header");
    header.appendChild(this.iterationSelector());
    header.appendChild(this.pcSelector());
    header.appendChild(this.tabs());
    header.appendChild(this.actions());
    this.root.appendChild(header);

    if (s.error) {
      const banner = document.createElement("div");
      banner.className = "error-banner";
      banner.textContent = s.error;
      this.root.appendChild(banner);
    }
    if (s.job && s.job.state !== "done") {
      const job = document.createElement("div");
      job.className = "job-banner";
      job.setAttribute("data-progress", String(s.job.progress));
      job.textContent = `${s.job.kind} job ${s.job.state}: ${(s.job.progress * 100).toFixed(0)}%`;
      this.root.appendChild(job);
    }

    const main = document.createElement("main");
    main.id = "view";
    this.root.appendChild(main);
    this.renderView(main);
  }

  private renderView(main: HTMLElement): void {
    const s = this.store.state;
    switch (s.view) {
      case "scores": {
        if (!s.scores) return this.placeholder(main, "no model on this iteration yet");
        renderScatter(
          main,
          s.scores.points,
          {
            xLabel: `PC${s.scores.pcs[0]}`,
            yLabel: `PC${s.scores.pcs[1]}`,
            selected: s.selection.labels,
            onLasso: (labels) => this.store.setSelection(labels),
          },
        );
        break;
      }
      case "biplot": {
        if (!s.biplot) return this.placeholder(main, "biplot unavailable");
        renderScatter(main, s.biplot.points, {
          xLabel: `PC${s.biplot.pcs[0]}`,
          yLabel: `PC${s.biplot.pcs[1]}`,
          overlay: s.biplot.features.map((f) => ({ label: f.feature, x: f.x, y: f.y })),
          selected: s.selection.labels,
          onLasso: (labels) => this.store.setSelection(labels),
        });
        break;
      }
      case "msnm": {
        if (!s.msnm) return this.placeholder(main, "no detection on this iteration yet");
        renderScatter(
          main,
          s.msnm.points.map((p) => ({ label: p.label, x: p.d, y: p.q, group: p.group, flagged: p.flagged })),
          {
            xLabel: "D statistic",
            yLabel: "Q statistic",
            xLine: s.msnm.ucl_d,
            yLine: s.msnm.ucl_q,
            selected: s.selection.labels,
            onLasso: (labels) => this.store.setSelection(labels),
          },
        );
        break;
      }
      case "curves": {
        if (!s.curves) return this.placeholder(main, "curves unavailable");
        renderCurves(main, s.curves);
        break;
      }
      case "diagnosis": {
        if (!s.diagnosis) return this.placeholder(main, "lasso a group of days, then diagnose");
        renderBars(main, s.diagnosis, 3, () => {
          this.store.createCaseDraft(3);
        });
        break;
      }
      case "case": {
        if (s.report) {
          renderReport(main, s.report, this.reportPage, 25, (page) => {
            this.reportPage = page;
            this.render();
          });
        } else if (s.caseDraft) {
          const box = document.createElement("div");
          box.className = "case-draft";
          box.textContent = `case ${s.caseDraft.id}: days [${s.caseDraft.bins.join(", ")}], features [${s.caseDraft.features.join(", ")}]`;
          const run = document.createElement("button");
          run.textContent = "run de-parse";
          run.addEventListener("click", () => void this.store.runDeparse());
          box.appendChild(run);
          main.appendChild(box);
        } else {
          this.placeholder(main, "create a case from the diagnosis view first");
        }
        break;
      }
      case "graph": {
        if (!s.graph) return this.placeholder(main, "de-parse a case, then load its graph");
        const controls = document.createElement("div");
        controls.className = "graph-controls";
        const nodeMin = document.createElement("input");
        nodeMin.type = "number";
        nodeMin.value = "0";
        nodeMin.id = "node-min";
        const edgeMin = document.createElement("input");
        edgeMin.type = "number";
        edgeMin.value = "0";
        edgeMin.id = "edge-min";
        const apply = document.createElement("button");
        apply.textContent = "apply weight filters";
        const panel = document.createElement("div");
        apply.addEventListener("click", () => {
          renderGraph(panel, s.graph!, Number(nodeMin.value), Number(edgeMin.value));
        });
        controls.append("node min ", nodeMin, " edge min ", edgeMin, apply);
        main.appendChild(controls);
        main.appendChild(panel);
        renderGraph(panel, s.graph);
        break;
      }
    }
  }

  private placeholder(main: HTMLElement, text: string): void {
    const p = document.createElement("p");
    p.className = "placeholder";
    p.textContent = text;
    main.appendChild(p);
  }

  private iterationSelector(): HTMLElement {
    const s = this.store.state;
    const wrap = document.createElement("label");
    wrap.className = "iteration-select";
    wrap.textContent = "iteration ";
    const select = document.createElement("select");
    select.id = "iteration";
    for (const k of this.store.iterations) {
      const opt = document.createElement("option");
      opt.value = String(k);
      opt.textContent = `it${String(k).padStart(3, "0")}`;
      opt.selected = k === s.viewedIteration;
      select.appendChild(opt);
    }
    select.addEventListener("change", () => void this.store.loadIteration(Number(select.value)));
    wrap.appendChild(select);
    return wrap;
  }

  private pcSelector(): HTMLElement {
    const s = this.store.state;
    const wrap = document.createElement("span");
    wrap.className = "pc-select";
    for (const pair of PC_PAIRS) {
      const btn = document.createElement("button");
      btn.textContent = `${pair[0]}-${pair[1]}`;
      btn.disabled = s.pcs[0] === pair[0] && s.pcs[1] === pair[1];
      btn.addEventListener("click", () => void this.store.setPcs(pair));
      wrap.appendChild(btn);
    }
    const custom = document.createElement("input");
    custom.placeholder = "i,j";
    custom.size = 4;
    custom.addEventListener("change", () => {
      const parts = custom.value.split(",").map((v) => Number(v.trim()));
      if (parts.length === 2 && parts.every((v) => Number.isInteger(v) && v >= 1)) {
        void this.store.setPcs([parts[0]!, parts[1]!]);
      }
    });
    wrap.appendChild(custom);
    return wrap;
  }

  private tabs(): HTMLElement {
    const s = this.store.state;
    const nav = document.createElement("nav");
    for (const view of VIEWS) {
      const btn = document.createElement("button");
      btn.textContent = view.title;
      btn.className = s.view === view.id ? "tab active" : "tab";
      btn.dataset.view = view.id;
      btn.addEventListener("click", () => this.store.setView(view.id));
      nav.appendChild(btn);
    }
    return nav;
  }

  private actions(): HTMLElement {
    const s = this.store.state;
    const bar = document.createElement("span");
    bar.className = "actions";

    const selection = document.createElement("span");
    selection.id = "selection-size";
    selection.setAttribute("data-count", String(s.selection.labels.size));
    selection.textContent = `${s.selection.labels.size} day(s) selected`;
    bar.appendChild(selection);

    const diagnose = document.createElement("button");
    diagnose.id = "diagnose";
    diagnose.textContent = "diagnose";
    diagnose.disabled = !this.store.canDiagnose;
    diagnose.addEventListener("click", () => void this.store.diagnose());
    bar.appendChild(diagnose);

    const updateObs = document.createElement("button");
    updateObs.id = "update-observation";
    updateObs.textContent = "extract days (observation-wise)";
    updateObs.disabled = s.selection.labels.size === 0 && !s.activeCaseId;
    updateObs.addEventListener("click", () => void this.store.applyUpdate("observation"));
    bar.appendChild(updateObs);

    const updateLog = document.createElement("button");
    updateLog.id = "update-log";
    updateLog.textContent = "extract entries (log-wise)";
    updateLog.disabled = !s.report;
    updateLog.addEventListener("click", () => void this.store.applyUpdate("log"));
    bar.appendChild(updateLog);

    const graphBtn = document.createElement("button");
    graphBtn.id = "load-graph";
    graphBtn.textContent = "graph";
    graphBtn.disabled = !s.activeCaseId;
    graphBtn.addEventListener("click", () => void this.store.loadGraph());
    bar.appendChild(graphBtn);

    return bar;
  }
}
