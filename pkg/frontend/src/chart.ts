/**
 * Pure chart math shared by the overview and timeline renderers: linear
 * scales, time tick placement and labels, and polyline point lists with
 * null-valued bins left as gaps.
 */

export interface Scale {
  (value: number): number;
  invert(px: number): number;
}

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const k = (r1 - r0) / (d1 - d0);
  const fn = ((value: number) => r0 + (value - d0) * k) as Scale;
  fn.invert = (px: number) => d0 + (px - r0) / k;
  return fn;
}

const UNITS: [number, number, string][] = [
  [1e-6, 1e9, "ns"],
  [1e-3, 1e6, "µs"],
  [1.0, 1e3, "ms"],
  [Infinity, 1, "s"],
];

export function timeLabel(value: number, extent: number): string {
  for (const [limit, scale, unit] of UNITS) {
    if (extent < limit) return `${(value * scale).toFixed(3)}${unit}`;
  }
  return `${value.toFixed(3)}s`;
}

export function niceTicks(t0: number, t1: number, target = 6): number[] {
  const raw = (t1 - t0) / Math.max(1, target);
  if (!(raw > 0)) return [t0];
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = norm < 1.5 ? mag : norm < 3 ? 2 * mag : norm < 7 ? 5 * mag : 10 * mag;
  const ticks: number[] = [];
  for (let v = Math.ceil(t0 / step) * step; v <= t1 + step * 1e-9; v += step) {
    ticks.push(v);
  }
  return ticks;
}

export interface PolylineRun {
  points: [number, number][];
}

/** Split a binned series into polyline runs, breaking at null bins. */
export function seriesRuns(
  values: (number | null)[],
  t0: number,
  t1: number,
  x: Scale,
  y: Scale,
): PolylineRun[] {
  const runs: PolylineRun[] = [];
  let run: [number, number][] = [];
  const width = (t1 - t0) / values.length;
  values.forEach((v, i) => {
    if (v === null) {
      if (run.length) runs.push({ points: run });
      run = [];
    } else {
      run.push([x(t0 + (i + 0.5) * width), y(v)]);
    }
  });
  if (run.length) runs.push({ points: run });
  return runs;
}

export function finiteMax(values: (number | null)[], atLeast = 1e-12): number {
  let best = atLeast;
  for (const v of values) {
    if (v !== null && v > best) best = v;
  }
  return best;
}
