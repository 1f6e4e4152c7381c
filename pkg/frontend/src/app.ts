// DOM wiring: composer, live trace, approval queue, schedules, chart.
// All state flows through the pure reducers in trace.ts / chart.ts.

import { ConsoleApi } from './api.js';
import { buildChart, renderSvg } from './chart.js';
import { applyEntries, emptyTrace, TraceView } from './trace.js';
import type { ScheduleAction } from './types.js';

type StreamHandleLike = { cancel: () => void };

const api = new ConsoleApi(window.location.origin);

const el = (id: string): HTMLElement => {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
};

let trace: TraceView = emptyTrace();
let currentIntent: string | null = null;
let stream: StreamHandleLike | null = null;

function renderTrace(): void {
  const container = el('trace');
  container.innerHTML = '';
  for (const card of trace.cards) {
    const div = document.createElement('div');
    div.className = `card ${card.tone}`;
    const title = document.createElement('div');
    title.className = 'card-title';
    title.textContent = `#${card.index} ${card.title}`;
    div.appendChild(title);
    if (card.body) {
      const body = document.createElement('pre');
      body.textContent = card.body;
      div.appendChild(body);
    }
    container.appendChild(div);
  }
  el('run-status').textContent = currentIntent
    ? `${currentIntent} — ${trace.status}${trace.finalAnswer ? ' ✓' : ''}`
    : 'no intent yet';
  container.scrollTop = container.scrollHeight;
}

async function openIntent(intentId: string): Promise<void> {
  stream?.cancel();
  currentIntent = intentId;
  trace = emptyTrace();
  // reload safety: replay the stored trace, then continue from its tail
  const stored = await api.getTrace(intentId);
  trace = applyEntries(trace, stored.entries);
  renderTrace();
  stream = api.streamIntent(
    intentId,
    trace.lastIndex + 1,
    (entry) => {
      trace = applyEntries(trace, [entry]);
      renderTrace();
      void refreshApprovals();
    },
    () => void refreshApprovals(),
  );
}

async function refreshApprovals(): Promise<void> {
  const pending = await api.listApprovals('pending');
  const list = el('approvals');
  list.innerHTML = '';
  if (!pending.length) {
    list.textContent = 'no pending approvals';
    return;
  }
  for (const approval of pending) {
    const row = document.createElement('div');
    row.className = 'approval';
    const summary = document.createElement('span');
    summary.textContent = `${approval.token}: ${approval.action_summary}`;
    row.appendChild(summary);
    for (const decision of ['approve', 'deny'] as const) {
      const button = document.createElement('button');
      button.textContent = decision;
      button.onclick = async () => {
        button.disabled = true;
        try {
          await api.resolveApproval(approval.token, decision);
          el('banner').textContent = '';
        } catch (err) {
          // e.g. the token expired while the card was on screen
          el('banner').textContent = `approval ${approval.token} failed: ${err}`;
        } finally {
          await refreshApprovals();
        }
      };
      row.appendChild(button);
    }
    list.appendChild(row);
  }
}

async function refreshSchedules(): Promise<ScheduleAction[]> {
  const actions = await api.listSchedules();
  const table = el('schedules');
  table.innerHTML =
    '<tr><th>action</th><th>slice</th><th>change</th><th>window</th><th>state</th><th>cycles</th></tr>';
  for (const action of actions) {
    const row = document.createElement('tr');
    row.innerHTML =
      `<td>${action.action_id}</td><td>${action.change.slice_name}</td>` +
      `<td>${action.change.field} ${action.change.mode} ${action.change.amount}</td>` +
      `<td>${action.window.start}-${action.window.end} ${action.window.days.join(',')}</td>` +
      `<td>${action.state}</td><td>${action.cycles}</td>`;
    table.appendChild(row);
  }
  return actions;
}

async function refreshChart(): Promise<void> {
  const collection = (el('chart-collection') as HTMLSelectElement).value;
  if (!collection) return;
  const slice = (el('chart-slice') as HTMLInputElement).value.trim();
  try {
    const [records, actions, clock] = await Promise.all([
      api.getRecords(collection, { slice: slice || undefined, limit: 500, order: 'recent_first' }),
      api.listSchedules(),
      api.getClock(),
    ]);
    const geom = buildChart(records, actions, clock.now_ms);
    el('chart').innerHTML = renderSvg(geom);
    el('chart-caption').textContent = records.length
      ? `${collection} — ${records.length} points, ${geom.bands.length} policy window(s) shaded`
      : `${collection} — no records yet`;
  } catch (err) {
    el('chart').innerHTML = '';
    el('chart-caption').textContent = `no data for ${collection}: ${err}`;
  }
}

async function refreshCollections(): Promise<void> {
  const select = el('chart-collection') as HTMLSelectElement;
  const known = new Set(Array.from(select.options).map((o) => o.value));
  for (const info of await api.listCollections()) {
    if (!known.has(info.name)) {
      const option = document.createElement('option');
      option.value = info.name;
      option.textContent = info.name;
      select.appendChild(option);
    }
  }
}

function wire(): void {
  const form = el('composer') as HTMLFormElement;
  const input = el('intent-text') as HTMLTextAreaElement;
  const submit = el('submit') as HTMLButtonElement;
  input.oninput = () => {
    submit.disabled = !input.value.trim();
  };
  form.onsubmit = async (event) => {
    event.preventDefault();
    if (!input.value.trim()) return;
    try {
      const { intent_id } = await api.submitIntent(input.value.trim());
      el('banner').textContent = '';
      await openIntent(intent_id);
    } catch (err) {
      el('banner').textContent = `server unreachable or rejected the intent: ${err}`;
    }
  };
  el('chart-refresh').onclick = () => void refreshChart();
  setInterval(() => {
    void refreshApprovals();
    void refreshSchedules();
    void refreshCollections();
  }, 2000);
  void refreshApprovals();
  void refreshSchedules();
  void refreshCollections();
  renderTrace();
}

wire();
