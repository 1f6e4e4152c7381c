// Pure trace view model: the rendered view is a fold over transcript entries,
// so GET /trace + streamed tail always reconstructs the same state as a
// fully-streamed run (reload safety).

import type { TranscriptEntry } from './types.js';

export type CardTone = 'thought' | 'tool' | 'observation' | 'error' | 'validator' | 'final' | 'meta';

export interface TraceCard {
  index: number;
  ts: number;
  tone: CardTone;
  title: string;
  body: string;
}

export interface TraceView {
  cards: TraceCard[];
  lastIndex: number;
  status: string;
  pendingToken: string | null;
  finalAnswer: string | null;
}

export function emptyTrace(): TraceView {
  return { cards: [], lastIndex: -1, status: 'running', pendingToken: null, finalAnswer: null };
}

function short(value: unknown, max = 400): string {
  const text = typeof value === 'string' ? value : JSON.stringify(value);
  if (text === undefined) return '';
  return text.length > max ? text.slice(0, max) + '…' : text;
}

function cardFor(entry: TranscriptEntry): TraceCard | null {
  switch (entry.type) {
    case 'turn': {
      const turn = entry.turn!;
      if (turn.kind === 'thought') {
        return card(entry, 'thought', 'thought', turn.text ?? '');
      }
      if (turn.kind === 'tool_call') {
        return card(entry, 'tool', `tool call: ${turn.tool_name}`, short(turn.arguments));
      }
      return card(entry, 'final', 'final answer', turn.text ?? '');
    }
    case 'observation': {
      const result = entry.result!;
      const tone: CardTone = result.isError ? 'error' : 'observation';
      const title = result.isError
        ? `observation: ${entry.tool} failed (${result.errorKind})`
        : `observation: ${entry.tool}`;
      return card(entry, tone, title, short(result.content));
    }
    case 'validator':
      return card(entry, 'validator', `validator: ${entry.verdict}`, short(entry.detail));
    case 'final':
      return card(entry, 'final', 'run finished', entry.text ?? '');
    case 'status':
      return card(entry, 'meta', `status: ${entry.status}`, '');
    case 'catalog':
      return card(entry, 'meta', 'tools discovered', (entry.tools ?? []).join(', '));
    default:
      return null;
  }
}

function card(entry: TranscriptEntry, tone: CardTone, title: string, body: string): TraceCard {
  return { index: entry.index, ts: entry.ts, tone, title, body };
}

/** Apply one entry; duplicates and already-seen indices are no-ops. */
export function applyEntry(view: TraceView, entry: TranscriptEntry): TraceView {
  if (entry.index <= view.lastIndex) return view;
  const next: TraceView = {
    cards: view.cards,
    lastIndex: entry.index,
    status: view.status,
    pendingToken: view.pendingToken,
    finalAnswer: view.finalAnswer,
  };
  const rendered = cardFor(entry);
  if (rendered) next.cards = [...view.cards, rendered];
  if (entry.type === 'status' && entry.status) {
    next.status = entry.status;
    if (entry.status !== 'awaiting_approval') next.pendingToken = null;
  }
  if (entry.type === 'validator' && entry.verdict === 'approval_requested') {
    next.pendingToken = String(entry.detail ?? '');
  }
  if (entry.type === 'final') next.finalAnswer = entry.text ?? '';
  return next;
}

export function applyEntries(view: TraceView, entries: TranscriptEntry[]): TraceView {
  let out = view;
  for (const entry of entries) out = applyEntry(out, entry);
  return out;
}
