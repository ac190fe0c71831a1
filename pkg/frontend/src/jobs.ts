/** Polling helper for de-parse / re-parse jobs. */

import type { ApiClient } from "./api";
import type { JobPayload } from "./types";

export interface JobProgress {
  state: JobPayload["state"];
  progress: number; // clamped to be non-decreasing
  result: string | null;
  error: string | null;
}

/** Poll a job until it finishes; reported progress never goes backwards. */
export async function pollJob(
  api: ApiClient,
  jobId: string,
  onProgress: (p: JobProgress) => void,
  intervalMs = 300,
  timeoutMs = 600_000,
): Promise<JobProgress> {
  const deadline = Date.now() + timeoutMs;
  let floor = 0;
  for (;;) {
    const job = await api.job(jobId);
    floor = Math.max(floor, job.progress);
    const view: JobProgress = {
      state: job.state,
      progress: job.state === "done" ? 1 : floor,
      result: job.result,
      error: job.error,
    };
    onProgress(view);
    if (job.state === "done" || job.state === "failed") return view;
    if (Date.now() > deadline) {
      const timedOut: JobProgress = { ...view, state: "failed", error: "client-side timeout" };
      onProgress(timedOut);
      return timedOut;
    }
    await new Promise((r) => setTimeout(r, intervalMs));
  }
}
