import { describe, expect, it } from 'vitest';

import { ApiError, ConsoleApi, parseSseBuffer } from '../src/api.js';
import type { TranscriptEntry } from '../src/types.js';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

describe('parseSseBuffer', () => {
  it('splits complete frames and keeps the partial tail', () => {
    const buffer =
      'id: 0\nevent: entry\ndata: {"index":0}\n\nid: 1\nevent: entry\ndata: {"index":1}\n\nid: 2\nevent';
    const { events, rest } = parseSseBuffer(buffer);
    expect(events).toHaveLength(2);
    expect(events[0]).toEqual({ id: 0, event: 'entry', data: '{"index":0}' });
    expect(rest).toBe('id: 2\nevent');
  });

  it('parses end frames without data', () => {
    const { events } = parseSseBuffer('event: end\ndata: {}\n\n');
    expect(events[0]!.event).toBe('end');
  });
});

describe('ConsoleApi', () => {
  it('surfaces server error bodies as ApiError', async () => {
    const api = new ConsoleApi('http://test', async () =>
      jsonResponse({ error: 'unknown intent' }, 404),
    );
    await expect(api.getIntent('intent-404')).rejects.toThrowError(ApiError);
    await expect(api.getIntent('intent-404')).rejects.toThrow('unknown intent');
  });

  it('deduplicates concurrent approval clicks per token', async () => {
    let calls = 0;
    const api = new ConsoleApi('http://test', async (url, init) => {
      if (String(url).includes('/approvals/')) {
        calls += 1;
        expect(init?.method).toBe('POST');
        await new Promise((r) => setTimeout(r, 20));
        return jsonResponse({ token: 'token-1', state: 'approved' });
      }
      throw new Error(`unexpected ${url}`);
    });
    const [a, b] = await Promise.all([
      api.resolveApproval('token-1', 'approve'),
      api.resolveApproval('token-1', 'approve'),
    ]);
    expect(calls).toBe(1); // double-click collapsed into one POST
    expect(a).toEqual(b);
    await api.resolveApproval('token-1', 'approve');
    expect(calls).toBe(2); // later re-click is a fresh (idempotent) POST
  });

  it('streams entries and resumes from the last index after a drop', async () => {
    // pull-based so every frame is delivered before the simulated drop
    const mkStream = (frames: string[], dropAfter: boolean) => {
      let i = 0;
      return new ReadableStream<Uint8Array>({
        pull(controller) {
          if (i < frames.length) {
            controller.enqueue(new TextEncoder().encode(frames[i]!));
            i += 1;
          } else if (dropAfter) {
            controller.error(new Error('connection reset'));
          } else {
            controller.close();
          }
        },
      });
    };

    const requestedFrom: number[] = [];
    let call = 0;
    const api = new ConsoleApi('http://test', async (url) => {
      const from = Number(new URL(String(url)).searchParams.get('from'));
      requestedFrom.push(from);
      call += 1;
      if (call === 1) {
        return new Response(
          mkStream(
            [
              'id: 0\nevent: entry\ndata: {"index":0,"type":"status","ts":0,"status":"running"}\n\n',
              'id: 1\nevent: entry\ndata: {"index":1,"type":"final","ts":0,"text":"ok"}\n\n',
            ],
            true, // drop mid-stream
          ),
          { status: 200 },
        );
      }
      return new Response(
        mkStream(
          [
            'id: 2\nevent: entry\ndata: {"index":2,"type":"status","ts":0,"status":"done"}\n\n',
            'event: end\ndata: {}\n\n',
          ],
          false,
        ),
        { status: 200 },
      );
    });

    const seen: TranscriptEntry[] = [];
    let ended = false;
    const handle = api.streamIntent('intent-1', 0, (e) => seen.push(e), () => (ended = true));
    await handle.done;
    expect(seen.map((e) => e.index)).toEqual([0, 1, 2]);
    expect(requestedFrom).toEqual([0, 2]); // resumed exactly after the last delivered entry
    expect(ended).toBe(true);
  });
});
