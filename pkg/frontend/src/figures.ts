/**
 * Figure builders: turn one CSV table into a renderable scene.
 *
 * The plot layer only selects, groups, and scales values read from the CSV;
 * it never recomputes any numerics.
 */

import { CsvTable, MissingColumnError, columnIndex, numericCell } from './csv.js';

export type FigureKind =
  | 'local-order'
  | 'global-order'
  | 'dt-eta'
  | 'dt-history'
  | 'profiles'
  | 'space-study';

export interface FigureSpec {
  kind: FigureKind;
  input: string;
  output: string;
  slopes?: number[];
  markerT?: number;
  title?: string;
  format?: 'svg' | 'png';
}

export interface Series {
  label: string;
  points: [number, number][];
  dash?: string;
  marker?: boolean;
  step?: boolean;
  colorIndex: number;
}

export interface Guide {
  slope: number;
  anchor: [number, number];
  label: string;
}

export interface Figure {
  title: string;
  xLabel: string;
  yLabel: string;
  xLog: boolean;
  yLog: boolean;
  series: Series[];
  guides: Guide[];
  vlines: number[];
}

const ORDER_KINDS: Record<string, string> = {
  'local-order': 'converge-local',
  'global-order': 'converge-global',
};

function checkKind(spec: FigureSpec, table: CsvTable, expect: string[]) {
  if (!expect.includes(table.kind)) {
    throw new MissingColumnError(
      `${spec.input}: csv kind ${table.kind} does not fit figure ${spec.kind}`,
    );
  }
}

function schemeSuffix(table: CsvTable): string {
  return table.meta['scheme'] ? ` (${table.meta['scheme']})` : '';
}

function buildOrder(spec: FigureSpec, table: CsvTable): Figure {
  checkKind(spec, table, [ORDER_KINDS[spec.kind]]);
  const iRec = columnIndex(table, 'record', spec.input);
  const iDt = columnIndex(table, 'dt', spec.input);
  const iK = columnIndex(table, 'k', spec.input);
  const iErr = columnIndex(table, 'error', spec.input);
  const byK = new Map<number, [number, number][]>();
  for (const row of table.rows) {
    if (row[iRec] !== 'cell') continue;
    const dt = numericCell(row, iDt);
    const k = numericCell(row, iK);
    const err = numericCell(row, iErr);
    if (dt === null || k === null || err === null || err <= 0) continue;
    if (!byK.has(k)) byK.set(k, []);
    byK.get(k)!.push([dt, err]);
  }
  if (byK.size === 0) {
    throw new MissingColumnError(`${spec.input}: no plottable cells`);
  }
  const ks = [...byK.keys()].sort((a, b) => a - b);
  const series: Series[] = ks.map((k, i) => ({
    label: `k = ${k}${schemeSuffix(table)}`,
    points: byK.get(k)!.slice().sort((a, b) => a[0] - b[0]),
    marker: true,
    colorIndex: i,
  }));
  const slopes = spec.slopes ?? [];
  const guides: Guide[] = slopes.map((s, i) => {
    const pts = series[Math.min(i, series.length - 1)].points;
    const anchor = pts[pts.length - 1]; // rightmost data point of the series
    return { slope: s, anchor, label: `slope ${s}` };
  });
  return {
    title: spec.title ?? `${spec.kind === 'local-order' ? 'Local' : 'Global'} errors`,
    xLabel: 'dt',
    yLabel: 'error',
    xLog: true,
    yLog: true,
    series,
    guides,
    vlines: [],
  };
}

function buildDtEta(spec: FigureSpec, table: CsvTable): Figure {
  checkKind(spec, table, ['dt-eta']);
  const iEta = columnIndex(table, 'eta', spec.input);
  const iRule = columnIndex(table, 'rule', spec.input);
  const iDt = columnIndex(table, 'dt_at_probe', spec.input);
  const byRule = new Map<string, [number, number][]>();
  for (const row of table.rows) {
    const eta = numericCell(row, iEta);
    const dt = numericCell(row, iDt);
    if (eta === null || dt === null) continue;
    const rule = row[iRule];
    if (!byRule.has(rule)) byRule.set(rule, []);
    byRule.get(rule)!.push([eta, dt]);
  }
  if (byRule.size === 0) {
    throw new MissingColumnError(`${spec.input}: no plottable rows`);
  }
  const rules = [...byRule.keys()].sort();
  return {
    title: spec.title ?? 'Accepted step size against tolerance',
    xLabel: 'eta',
    yLabel: 'dt',
    xLog: true,
    yLog: true,
    series: rules.map((rule, i) => ({
      label: `rule ${rule}`,
      points: byRule.get(rule)!.slice().sort((a, b) => a[0] - b[0]),
      marker: true,
      colorIndex: i,
    })),
    guides: [],
    vlines: [],
  };
}

function buildDtHistory(spec: FigureSpec, table: CsvTable): Figure {
  checkKind(spec, table, ['steps']);
  const iT = columnIndex(table, 't', spec.input);
  const iDt = columnIndex(table, 'dt', spec.input);
  const iAcc = columnIndex(table, 'accepted', spec.input);
  const accepted: [number, number][] = [];
  const rejected: [number, number][] = [];
  for (const row of table.rows) {
    const t = numericCell(row, iT);
    const dt = numericCell(row, iDt);
    if (t === null || dt === null) continue;
    (row[iAcc] === '1' ? accepted : rejected).push([t, dt]);
  }
  if (accepted.length === 0) {
    throw new MissingColumnError(`${spec.input}: no accepted steps`);
  }
  const series: Series[] = [
    { label: `accepted${schemeSuffix(table)}`, points: accepted, step: true, colorIndex: 0 },
  ];
  if (rejected.length > 0) {
    series.push({ label: 'rejected', points: rejected, marker: true, colorIndex: 1 });
  }
  return {
    title: spec.title ?? `Step size history${table.meta['eta'] ? `, eta = ${table.meta['eta']}` : ''}`,
    xLabel: 't',
    yLabel: 'dt',
    xLog: false,
    yLog: true,
    series,
    guides: [],
    vlines: spec.markerT === undefined ? [] : [spec.markerT],
  };
}

function buildProfiles(spec: FigureSpec, table: CsvTable): Figure {
  checkKind(spec, table, ['profiles']);
  const iT = columnIndex(table, 't', spec.input);
  const iX = columnIndex(table, 'x', spec.input);
  const species = table.columns.filter((c) => /^u\d+$/.test(c));
  if (species.length === 0) {
    throw new MissingColumnError(`${spec.input}: no species columns`);
  }
  const times = [...new Set(table.rows.map((r) => r[iT]))].sort(
    (a, b) => Number(a) - Number(b),
  );
  const series: Series[] = [];
  species.forEach((sp, si) => {
    const iSp = columnIndex(table, sp, spec.input);
    times.forEach((t, ti) => {
      const pts: [number, number][] = [];
      for (const row of table.rows) {
        if (row[iT] !== t) continue;
        const x = numericCell(row, iX);
        const v = numericCell(row, iSp);
        if (x !== null && v !== null) pts.push([x, v]);
      }
      if (pts.length > 0) {
        series.push({
          label: ti === times.length - 1 ? `${sp} (t = ${t})` : `${sp} t=${t}`,
          points: pts.sort((a, b) => a[0] - b[0]),
          colorIndex: si,
          dash: ti < times.length - 1 ? '2,3' : undefined,
        });
      }
    });
  });
  return {
    title: spec.title ?? 'Wave profiles',
    xLabel: 'x',
    yLabel: 'value',
    xLog: false,
    yLog: false,
    series,
    guides: [],
    vlines: [],
  };
}

function buildSpaceStudy(spec: FigureSpec, table: CsvTable): Figure {
  checkKind(spec, table, ['space-study']);
  const iRec = columnIndex(table, 'record', spec.input);
  const iOrder = columnIndex(table, 'spatial_order', spec.input);
  const iN = columnIndex(table, 'n', spec.input);
  const iErr = columnIndex(table, 'error', spec.input);
  const byOrder = new Map<number, [number, number][]>();
  for (const row of table.rows) {
    if (row[iRec] !== 'cell') continue;
    const order = numericCell(row, iOrder);
    const n = numericCell(row, iN);
    const err = numericCell(row, iErr);
    if (order === null || n === null || err === null || err <= 0) continue;
    const dx = 1.0 / (n - 1);
    if (!byOrder.has(order)) byOrder.set(order, []);
    byOrder.get(order)!.push([dx, err]);
  }
  if (byOrder.size === 0) {
    throw new MissingColumnError(`${spec.input}: no plottable cells`);
  }
  const orders = [...byOrder.keys()].sort((a, b) => a - b);
  const series = orders.map((o, i) => ({
    label: `order ${o}`,
    points: byOrder.get(o)!.slice().sort((a, b) => a[0] - b[0]),
    marker: true,
    colorIndex: i,
  }));
  const guides: Guide[] = (spec.slopes ?? []).map((s, i) => {
    const pts = series[Math.min(i, series.length - 1)].points;
    return { slope: s, anchor: pts[pts.length - 1], label: `slope ${s}` };
  });
  return {
    title: spec.title ?? 'Space discretization errors',
    xLabel: 'dx',
    yLabel: 'error',
    xLog: true,
    yLog: true,
    series,
    guides,
    vlines: [],
  };
}

export function buildFigure(spec: FigureSpec, table: CsvTable): Figure {
  switch (spec.kind) {
    case 'local-order':
    case 'global-order':
      return buildOrder(spec, table);
    case 'dt-eta':
      return buildDtEta(spec, table);
    case 'dt-history':
      return buildDtHistory(spec, table);
    case 'profiles':
      return buildProfiles(spec, table);
    case 'space-study':
      return buildSpaceStudy(spec, table);
    default:
      throw new Error(`unknown figure kind ${(spec as FigureSpec).kind}`);
  }
}
