/** Application store: all state derives from service payloads; the UI adds
 * only selection bookkeeping and job/polling status on top. */

import { ApiClient, ServiceError } from "./api";
import { pollJob, type JobProgress } from "./jobs";
import type {
  BiplotPayload,
  CaseDraft,
  CurvesPayload,
  GraphPayload,
  MsnmPayload,
  OmedaPayload,
  RegistryPayload,
  ReportPayload,
  ScoresPayload,
} from "./types";

export type ViewKind = "scores" | "biplot" | "msnm" | "curves" | "diagnosis" | "case" | "graph";

export interface SelectionState {
  labels: Set<string>;
  referenceMode: "all-others" | "explicit";
  reference: Set<string>;
  activeIteration: number;
}

export interface AppState {
  iteration: number; // workspace's latest iteration
  viewedIteration: number; // iteration currently displayed
  view: ViewKind;
  pcs: [number, number];
  scores: ScoresPayload | null;
  biplot: BiplotPayload | null;
  msnm: MsnmPayload | null;
  curves: CurvesPayload | null;
  registry: RegistryPayload | null;
  selection: SelectionState;
  diagnosis: OmedaPayload | null;
  caseDraft: CaseDraft | null;
  activeCaseId: string | null;
  report: ReportPayload | null;
  graph: GraphPayload | null;
  job: (JobProgress & { kind: string }) | null;
  error: string | null;
  busy: boolean;
}

type Listener = (state: AppState) => void;

function emptySelection(iteration: number): SelectionState {
  return { labels: new Set(), referenceMode: "all-others", reference: new Set(), activeIteration: iteration };
}

export class Store {
  state: AppState;
  private listeners: Listener[] = [];

  constructor(readonly api: ApiClient) {
    this.state = {
      iteration: 0,
      viewedIteration: 0,
      view: "scores",
      pcs: [1, 2],
      scores: null,
      biplot: null,
      msnm: null,
      curves: null,
      registry: null,
      selection: emptySelection(0),
      diagnosis: null,
      caseDraft: null,
      activeCaseId: null,
      report: null,
      graph: null,
      job: null,
      error: null,
      busy: false,
    };
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(partial: Partial<AppState>): void {
    this.state = { ...this.state, ...partial };
    for (const fn of this.listeners) fn(this.state);
  }

  /** Diagnosis needs a non-empty selection. */
  get canDiagnose(): boolean {
    return this.state.selection.labels.size > 0;
  }

  /** A case draft needs highlighted features plus the selected days. */
  get canCreateCase(): boolean {
    return this.state.caseDraft !== null;
  }

  private async guard<T>(work: () => Promise<T>): Promise<T | null> {
    this.emit({ busy: true, error: null });
    try {
      return await work();
    } catch (err) {
      const message = err instanceof ServiceError ? `${err.status}: ${err.message}` : String(err);
      this.emit({ error: message });
      return null;
    } finally {
      this.emit({ busy: false });
    }
  }

  async loadIteration(iteration?: number): Promise<void> {
    await this.guard(async () => {
      const registry = await this.api.registry();
      const k = iteration ?? registry.iteration;
      const [scores, msnm, curves] = await Promise.all([
        this.api.scores(this.state.pcs, k).catch(() => null),
        this.api.msnm(k).catch(() => null),
        this.api.curves(k).catch(() => null),
      ]);
      this.emit({
        registry,
        iteration: registry.iteration,
        viewedIteration: k,
        scores,
        msnm,
        curves,
        selection: emptySelection(k),
        diagnosis: null,
        caseDraft: null,
      });
    });
  }

  async setPcs(pcs: [number, number]): Promise<void> {
    await this.guard(async () => {
      const scores = await this.api.scores(pcs, this.state.viewedIteration);
      this.emit({ pcs, scores });
    });
  }

  setView(view: ViewKind): void {
    this.emit({ view });
  }

  /** Lasso result from a score/msnm view becomes the active selection. */
  setSelection(labels: string[]): void {
    this.emit({
      selection: {
        ...this.state.selection,
        labels: new Set(labels),
        activeIteration: this.state.viewedIteration,
      },
    });
  }

  /** Second lasso (explicit reference group) for group-vs-group contrasts. */
  setReference(labels: string[]): void {
    this.emit({
      selection: {
        ...this.state.selection,
        referenceMode: labels.length ? "explicit" : "all-others",
        reference: new Set(labels),
      },
    });
  }

  /** POST /diagnose with exactly the lassoed labels. */
  async diagnose(): Promise<OmedaPayload | null> {
    if (!this.canDiagnose) {
      this.emit({ error: "select at least one day before diagnosing" });
      return null;
    }
    const group1 = [...this.state.selection.labels].sort();
    const group2 =
      this.state.selection.referenceMode === "explicit"
        ? [...this.state.selection.reference].sort()
        : null;
    return await this.guard(async () => {
      const diagnosis = await this.api.diagnose(group1, group2);
      this.emit({ diagnosis, view: "diagnosis" });
      return diagnosis;
    });
  }

  /** Capture the highlighted features + selected days as a case draft. */
  createCaseDraft(topN = 3): CaseDraft | null {
    const diagnosis = this.state.diagnosis;
    if (!diagnosis || this.state.selection.labels.size === 0) return null;
    const features = [...diagnosis.bars]
      .sort((a, b) => a.rank - b.rank)
      .slice(0, topN)
      .map((b) => b.feature);
    const bins = [...this.state.selection.labels].sort();
    const draft: CaseDraft = {
      id: `ui-${bins[0]}-${bins[bins.length - 1]}`,
      bins,
      features,
    };
    this.emit({ caseDraft: draft });
    return draft;
  }

  /** Launch de-parse for the draft (or an existing case id) and follow it. */
  async runDeparse(caseRef?: string | CaseDraft): Promise<ReportPayload | null> {
    const target = caseRef ?? this.state.caseDraft;
    if (!target) {
      this.emit({ error: "no case selected for de-parsing" });
      return null;
    }
    return await this.guard(async () => {
      const { job } = await this.api.deparse(target);
      const caseId = typeof target === "string" ? target : (target.id ?? "");
      this.emit({ view: "case", activeCaseId: caseId, job: { ...job, kind: job.kind } });
      const finished = await pollJob(this.api, job.id, (p) =>
        this.emit({ job: { ...p, kind: job.kind } }),
      );
      if (finished.state === "failed") {
        this.emit({ error: `de-parse failed: ${finished.error ?? "unknown"}` });
        return null;
      }
      const report = await this.api.report(caseId);
      const registry = await this.api.registry();
      this.emit({ report, registry });
      return report;
    });
  }

  async loadGraph(nodeMin = 0, edgeMin = 0): Promise<GraphPayload | null> {
    const caseId = this.state.activeCaseId;
    if (!caseId) {
      this.emit({ error: "no active case for the graph view" });
      return null;
    }
    return await this.guard(async () => {
      const graph = await this.api.graph(caseId, nodeMin, edgeMin);
      this.emit({ graph, view: "graph" });
      return graph;
    });
  }

  /** Apply a model update and switch to the new iteration's views. */
  async applyUpdate(kind: "observation" | "log"): Promise<boolean> {
    const result = await this.guard(async () => {
      if (kind === "observation") {
        const caseId = this.state.activeCaseId;
        const target = caseId
          ? { case: caseId }
          : { bins: [...this.state.selection.labels].sort() };
        if (!target.case && (!target.bins || target.bins.length === 0)) {
          throw new ServiceError(0, "nothing selected to extract");
        }
        await this.api.updateObservation(target);
      } else {
        const caseId = this.state.activeCaseId;
        if (!caseId) throw new ServiceError(0, "log-wise update needs a de-parsed case");
        const { job } = await this.api.updateLog(caseId);
        const finished = await pollJob(this.api, job.id, (p) =>
          this.emit({ job: { ...p, kind: job.kind } }),
        );
        if (finished.state === "failed") throw new ServiceError(0, finished.error ?? "job failed");
      }
      return true;
    });
    if (result) {
      await this.loadIteration();
      this.emit({ view: "scores" });
    }
    return result ?? false;
  }

  /** Iterations available for browsing: 0..latest. */
  get iterations(): number[] {
    return Array.from({ length: this.state.iteration + 1 }, (_, i) => i);
  }
}
