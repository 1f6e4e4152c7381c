// HTTP/SSE client for the stack API. fetch is injectable so unit tests can
// run against a scripted transport and the integration test against node's
// global fetch.

import type {
  ApprovalInfo,
  CollectionInfo,
  IntentStatus,
  ScheduleAction,
  TelemetryRecord,
  TraceResponse,
  TranscriptEntry,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface SseEvent {
  id: number | null;
  event: string;
  data: string;
}

/** Incremental SSE framing: returns completed events plus the unconsumed tail. */
export function parseSseBuffer(buffer: string): { events: SseEvent[]; rest: string } {
  const events: SseEvent[] = [];
  const frames = buffer.split('\n\n');
  const rest = frames.pop() ?? '';
  for (const frame of frames) {
    if (!frame.trim()) continue;
    let id: number | null = null;
    let event = 'message';
    const data: string[] = [];
    for (const line of frame.split('\n')) {
      if (line.startsWith('id: ')) id = Number(line.slice(4));
      else if (line.startsWith('event: ')) event = line.slice(7).trim();
      else if (line.startsWith('data: ')) data.push(line.slice(6));
    }
    events.push({ id, event, data: data.join('\n') });
  }
  return { events, rest };
}

export interface StreamHandle {
  cancel: () => void;
  done: Promise<void>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ConsoleApi {
  private inflightApprovals = new Map<string, Promise<ApprovalInfo>>();

  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { 'Content-Type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const text = await resp.text();
    if (!resp.ok) {
      let detail = text;
      try {
        detail = (JSON.parse(text) as { error?: string }).error ?? text;
      } catch {
        // non-JSON error body; keep raw text
      }
      throw new ApiError(resp.status, detail);
    }
    return JSON.parse(text) as T;
  }

  submitIntent(text: string): Promise<{ intent_id: string }> {
    return this.request('POST', '/intents', { text });
  }

  getIntent(intentId: string): Promise<IntentStatus> {
    return this.request('GET', `/intents/${intentId}`);
  }

  getTrace(intentId: string): Promise<TraceResponse> {
    return this.request('GET', `/intents/${intentId}/trace`);
  }

  listApprovals(state = 'pending'): Promise<ApprovalInfo[]> {
    return this.request('GET', `/approvals?state=${state}`);
  }

  /** Idempotent per token: concurrent duplicate clicks share one request. */
  resolveApproval(token: string, decision: 'approve' | 'deny'): Promise<ApprovalInfo> {
    const existing = this.inflightApprovals.get(token);
    if (existing) return existing;
    const promise = this.request<ApprovalInfo>('POST', `/approvals/${token}`, { decision }).finally(
      () => this.inflightApprovals.delete(token),
    );
    this.inflightApprovals.set(token, promise);
    return promise;
  }

  listSchedules(): Promise<ScheduleAction[]> {
    return this.request('GET', '/schedules');
  }

  listCollections(): Promise<CollectionInfo[]> {
    return this.request('GET', '/collections');
  }

  getRecords(
    collection: string,
    opts: { slice?: string; limit?: number; order?: string } = {},
  ): Promise<TelemetryRecord[]> {
    const params = new URLSearchParams();
    if (opts.slice) params.set('slice', opts.slice);
    params.set('limit', String(opts.limit ?? 300));
    params.set('order', opts.order ?? 'recent_first');
    return this.request('GET', `/collections/${collection}/records?${params.toString()}`);
  }

  getClock(): Promise<{ now_ms: number; now_iso: string; tick_ms: number }> {
    return this.request('GET', '/clock');
  }

  /**
   * Stream transcript entries from `fromIndex`, reconnecting with the last
   * delivered index on transport drops, until the server signals `end`.
   */
  streamIntent(
    intentId: string,
    fromIndex: number,
    onEntry: (entry: TranscriptEntry) => void,
    onEnd?: () => void,
  ): StreamHandle {
    let cancelled = false;
    let next = fromIndex;

    const done = (async () => {
      while (!cancelled) {
        let resp: Response;
        try {
          resp = await this.fetchImpl(
            `${this.baseUrl}/intents/${intentId}/stream?from=${next}`,
            { headers: { Accept: 'text/event-stream' } },
          );
        } catch {
          await sleep(500);
          continue;
        }
        if (!resp.ok || !resp.body) {
          await sleep(500);
          continue;
        }
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = '';
        let ended = false;
        while (!cancelled) {
          let chunk: ReadableStreamReadResult<Uint8Array>;
          try {
            chunk = await reader.read();
          } catch {
            break; // transport drop: reconnect from the last delivered index
          }
          if (chunk.done) break;
          buffer += decoder.decode(chunk.value, { stream: true });
          const { events, rest } = parseSseBuffer(buffer);
          buffer = rest;
          for (const ev of events) {
            if (ev.event === 'end') {
              ended = true;
              break;
            }
            if (ev.event !== 'entry' || !ev.data) continue;
            const entry = JSON.parse(ev.data) as TranscriptEntry;
            next = entry.index + 1;
            onEntry(entry);
          }
          if (ended) break;
        }
        try {
          await reader.cancel();
        } catch {
          // stream already closed
        }
        if (ended) {
          onEnd?.();
          return;
        }
      }
    })();

    return {
      cancel: () => {
        cancelled = true;
      },
      done,
    };
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
