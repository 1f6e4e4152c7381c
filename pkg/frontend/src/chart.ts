// Chart geometry as pure data: a time-series polyline plus shaded bands over
// the spans where a scheduled policy action was active. Rendering is a
// deterministic SVG string so tests can assert band edges exactly.

import type { ScheduleAction, TelemetryRecord } from './types.js';

export interface Band {
  actionId: string;
  startMs: number;
  endMs: number;
}

export interface ChartGeometry {
  width: number;
  height: number;
  xDomain: [number, number];
  yDomain: [number, number];
  points: Array<{ x: number; y: number }>;
  bands: Array<{ actionId: string; x0: number; x1: number }>;
  path: string;
}

/**
 * Active spans for shading. A completed cycle spans [applied_at, reverted_at];
 * an action still active at the right edge extends to `nowMs`.
 */
export function activeBands(actions: ScheduleAction[], nowMs: number): Band[] {
  const bands: Band[] = [];
  for (const action of actions) {
    if (action.applied_at === null) continue;
    if (action.state === 'active') {
      bands.push({ actionId: action.action_id, startMs: action.applied_at, endMs: nowMs });
    } else if (action.reverted_at !== null && action.reverted_at >= action.applied_at) {
      bands.push({ actionId: action.action_id, startMs: action.applied_at, endMs: action.reverted_at });
    }
  }
  return bands.sort((a, b) => a.startMs - b.startMs);
}

function scale(value: number, domain: [number, number], range: [number, number]): number {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  if (d1 === d0) return (r0 + r1) / 2;
  return r0 + ((value - d0) / (d1 - d0)) * (r1 - r0);
}

export function buildChart(
  records: TelemetryRecord[],
  actions: ScheduleAction[],
  nowMs: number,
  width = 640,
  height = 180,
): ChartGeometry {
  const ordered = [...records].sort((a, b) => a.timestamp_ms - b.timestamp_ms);
  const xs = ordered.map((r) => r.timestamp_ms);
  const ys = ordered.map((r) => r.value);
  const xDomain: [number, number] = xs.length ? [xs[0]!, xs[xs.length - 1]!] : [0, 1];
  let yMin = ys.length ? Math.min(...ys) : 0;
  let yMax = ys.length ? Math.max(...ys) : 1;
  if (yMin === yMax) {
    yMin -= 1;
    yMax += 1;
  }
  const yDomain: [number, number] = [yMin, yMax];
  const points = ordered.map((r) => ({
    x: scale(r.timestamp_ms, xDomain, [0, width]),
    y: scale(r.value, yDomain, [height, 0]),
  }));
  const path = points
    .map((p, i) => `${i === 0 ? 'M' : 'L'}${p.x.toFixed(2)},${p.y.toFixed(2)}`)
    .join(' ');
  const bands = activeBands(actions, nowMs)
    .filter((b) => b.endMs >= xDomain[0] && b.startMs <= xDomain[1])
    .map((b) => ({
      actionId: b.actionId,
      x0: scale(Math.max(b.startMs, xDomain[0]), xDomain, [0, width]),
      x1: scale(Math.min(b.endMs, xDomain[1]), xDomain, [0, width]),
    }));
  return { width, height, xDomain, yDomain, points, bands, path };
}

export function renderSvg(geom: ChartGeometry): string {
  const bands = geom.bands
    .map(
      (b) =>
        `<rect class="band" data-action="${b.actionId}" x="${b.x0.toFixed(2)}" y="0" ` +
        `width="${(b.x1 - b.x0).toFixed(2)}" height="${geom.height}"></rect>`,
    )
    .join('');
  const line = geom.path ? `<path class="series" d="${geom.path}" fill="none"></path>` : '';
  return (
    `<svg viewBox="0 0 ${geom.width} ${geom.height}" preserveAspectRatio="none">` +
    bands +
    line +
    '</svg>'
  );
}
