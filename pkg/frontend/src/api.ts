/** Typed client for the nlodesign service (docs/api.md).
 *
 * Every call returns the parsed payload together with the raw response
 * body, so views can display the service's exact byte tokens.  The event
 * stream auto-resubscribes from the last seen sequence number after a
 * disconnect, so no event is duplicated or lost.
 */

import { LineBuffer, parseEventLine, type ParsedEvent } from "./ndjson.js";
import type {
  EvolutionConfig,
  Prediction,
  RunRecord,
  Vocabulary,
} from "./types.js";

export interface ApiResponse<T> {
  data: T;
  raw: string;
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail);
  }
}

type FetchLike = typeof fetch;

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async call<T>(
    path: string,
    init?: RequestInit,
  ): Promise<ApiResponse<T>> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const raw = await resp.text();
    if (!resp.ok) {
      let detail = raw;
      try {
        detail = (JSON.parse(raw) as { detail: string }).detail;
      } catch {
        // non-JSON error body: show it verbatim
      }
      throw new ServiceError(resp.status, detail);
    }
    return { data: JSON.parse(raw) as T, raw };
  }

  private post<T>(path: string, body?: unknown): Promise<ApiResponse<T>> {
    return this.call<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  health(): Promise<ApiResponse<{ status: string; model_loaded: boolean }>> {
    return this.call("/health");
  }

  vocab(): Promise<ApiResponse<Vocabulary>> {
    return this.call("/vocab");
  }

  predict(
    spec: unknown,
    f3: number[] | null = null,
  ): Promise<ApiResponse<Prediction>> {
    return this.post("/predict", { spec, f3 });
  }

  createRun(config: EvolutionConfig): Promise<ApiResponse<{ run_id: string }>> {
    return this.post("/runs", config);
  }

  getRun(runId: string): Promise<ApiResponse<RunRecord>> {
    return this.call(`/runs/${runId}`);
  }

  pause(runId: string): Promise<ApiResponse<{ state: string }>> {
    return this.post(`/runs/${runId}/pause`);
  }

  resume(
    runId: string,
    amendment?: { target?: unknown; constants?: unknown },
  ): Promise<ApiResponse<{ state: string }>> {
    return this.post(`/runs/${runId}/resume`, amendment);
  }

  stop(runId: string): Promise<ApiResponse<{ state: string }>> {
    return this.post(`/runs/${runId}/stop`);
  }

  /** Subscribe to a run's event stream.  onEvent is invoked once per event
   * in sequence order; after a dropped connection the subscription resumes
   * from the next unseen sequence number. Resolves when the stream ends
   * cleanly (run done/failed) or the signal aborts. */
  async streamEvents(
    runId: string,
    onEvent: (e: ParsedEvent) => void,
    opts: { start?: number; signal?: AbortSignal; maxRetries?: number } = {},
  ): Promise<void> {
    let next = opts.start ?? 0;
    let retries = 0;
    const maxRetries = opts.maxRetries ?? 5;
    for (;;) {
      try {
        const resp = await this.fetchImpl(
          `${this.baseUrl}/runs/${runId}/events?start=${next}`,
          { signal: opts.signal },
        );
        if (!resp.ok || resp.body === null) {
          throw new ServiceError(resp.status, await resp.text());
        }
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        const buf = new LineBuffer();
        const deliver = (line: string) => {
          const pe = parseEventLine(line);
          if (pe.event.seq >= next) {
            onEvent(pe);
            next = pe.event.seq + 1;
            retries = 0;
          }
        };
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const line of buf.push(decoder.decode(value, { stream: true }))) {
            deliver(line);
          }
        }
        const rest = buf.rest();
        if (rest) deliver(rest);
        return; // clean end of stream
      } catch (err) {
        if (opts.signal?.aborted) return;
        if (err instanceof ServiceError && err.status === 404) throw err;
        retries += 1;
        if (retries > maxRetries) throw err;
        await new Promise((r) => setTimeout(r, 100 * retries));
      }
    }
  }
}
