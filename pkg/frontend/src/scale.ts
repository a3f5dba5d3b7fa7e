/** Deterministic linear/log scales and tick generation. */

export interface Scale {
  toPixel(v: number): number;
  ticks(): number[];
  readonly log: boolean;
  readonly domain: [number, number];
}

export function fmt(v: number): string {
  // fixed, locale-free formatting so output bytes never drift
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 1e-3 && a < 1e4) {
    return trimZeros(v.toPrecision(6));
  }
  return trimZeros(v.toExponential(3));
}

function trimZeros(s: string): string {
  if (s.includes('e')) {
    const [m, e] = s.split('e');
    return `${trimZeros(m)}e${e}`;
  }
  if (!s.includes('.')) return s;
  return s.replace(/0+$/, '').replace(/\.$/, '');
}

export function linearScale(lo: number, hi: number, p0: number, p1: number): Scale {
  if (!(hi > lo)) hi = lo + 1;
  const span = hi - lo;
  return {
    log: false,
    domain: [lo, hi],
    toPixel: (v) => p0 + ((v - lo) / span) * (p1 - p0),
    ticks: () => {
      const step = niceStep(span / 5);
      const out: number[] = [];
      for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
        out.push(Math.abs(t) < 1e-12 * span ? 0 : t);
      }
      return out;
    },
  };
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const r = raw / mag;
  if (r <= 1) return mag;
  if (r <= 2) return 2 * mag;
  if (r <= 5) return 5 * mag;
  return 10 * mag;
}

export function logScale(lo: number, hi: number, p0: number, p1: number): Scale {
  if (!(lo > 0) || !(hi > 0)) throw new Error('log scale needs positive bounds');
  if (!(hi > lo)) hi = lo * 10;
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  return {
    log: true,
    domain: [lo, hi],
    toPixel: (v) => p0 + ((Math.log10(v) - llo) / (lhi - llo)) * (p1 - p0),
    ticks: () => {
      const out: number[] = [];
      for (let e = Math.ceil(llo - 1e-9); e <= Math.floor(lhi + 1e-9); e += 1) {
        out.push(Math.pow(10, e));
      }
      if (out.length < 2) return [lo, hi];
      return out;
    },
  };
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) throw new Error('no finite values to scale');
  return [lo, hi];
}

export function padLog([lo, hi]: [number, number]): [number, number] {
  return [lo / 1.5, hi * 1.5];
}

export function padLinear([lo, hi]: [number, number]): [number, number] {
  const pad = (hi - lo || Math.abs(lo) || 1) * 0.05;
  return [lo - pad, hi + pad];
}
