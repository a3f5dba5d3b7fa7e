import { execFileSync } from 'node:child_process';
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import { EmptyCsvError, SchemaMismatchError, parseCsv } from '../src/csv.js';
import { buildFigure } from '../src/figures.js';
import { renderToString } from '../src/render.js';
import { renderSvg } from '../src/svg.js';

const FIX = join(__dirname, 'fixtures');
const CLI = join(__dirname, '..', 'dist', 'render.js');

function tmp(): string {
  return mkdtempSync(join(tmpdir(), 'dcsplit-plots-'));
}

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

describe('csv parsing', () => {
  it('reads header metadata', () => {
    const table = parseCsv(readFileSync(join(FIX, 'converge_local.csv'), 'utf8'));
    expect(table.kind).toBe('converge-local');
    expect(table.meta.scheme).toBe('lie');
    expect(table.columns).toContain('error');
  });

  it('rejects a missing schema header', () => {
    expect(() => parseCsv('a,b\n1,2\n')).toThrow(SchemaMismatchError);
  });

  it('rejects an unsupported schema version', () => {
    expect(() => parseCsv('# dcsplit-csv v999 kind=x\na\n1\n')).toThrow(SchemaMismatchError);
  });

  it('rejects an empty file', () => {
    expect(() => parseCsv('')).toThrow(EmptyCsvError);
  });
});

describe('order figures', () => {
  it('renders one series per k plus the declared slope guides', () => {
    const svg = renderToString({
      kind: 'local-order',
      input: join(FIX, 'converge_local.csv'),
      output: 'unused.svg',
      slopes: [2, 3, 4, 5],
    });
    expect(count(svg, 'class="series"')).toBe(4); // k = 0..3
    expect(count(svg, 'class="guide"')).toBe(4);
    expect(svg).toContain('k = 0 (lie)');
    expect(svg).toContain('k = 3 (lie)');
    expect(svg).toContain('slope 5');
  });

  it('renders the global-order variant', () => {
    const svg = renderToString({
      kind: 'global-order',
      input: join(FIX, 'converge_global.csv'),
      output: 'unused.svg',
      slopes: [1, 2, 3, 4],
    });
    expect(count(svg, 'class="series"')).toBe(4);
    expect(count(svg, 'class="guide"')).toBe(4);
  });

  it('is byte-identical across two invocations', () => {
    const dir = tmp();
    const a = join(dir, 'a.svg');
    const b = join(dir, 'b.svg');
    for (const out of [a, b]) {
      execFileSync('node', [CLI, 'local-order', join(FIX, 'converge_local.csv'), out,
        '--slopes', '2,3,4,5']);
    }
    expect(readFileSync(a)).toEqual(readFileSync(b));
  });

  it('requires nonempty slope guides', () => {
    const dir = tmp();
    const out = join(dir, 'x.svg');
    const status = runCli(['local-order', join(FIX, 'converge_local.csv'), out]);
    expect(status).not.toBe(0);
    expect(existsSync(out)).toBe(false);
  });
});

describe('controller figures', () => {
  it('renders one series per step rule', () => {
    const svg = renderToString({
      kind: 'dt-eta',
      input: join(FIX, 'dt_eta.csv'),
      output: 'unused.svg',
    });
    expect(svg).toContain('rule k');
    expect(svg).toContain('rule kmax');
    expect(svg).toContain('rule split');
  });

  it('renders a step history with the configured time marker', () => {
    const svg = renderToString({
      kind: 'dt-history',
      input: join(FIX, 'steps.csv'),
      output: 'unused.svg',
      markerT: 0.51,
    });
    expect(count(svg, 'class="marker"')).toBe(1);
    expect(svg).toContain('accepted (lie)');
  });

  it('renders wave profiles per species and snapshot', () => {
    const svg = renderToString({
      kind: 'profiles',
      input: join(FIX, 'profiles.csv'),
      output: 'unused.svg',
    });
    // three species, five snapshots
    expect(count(svg, 'class="series"')).toBe(15);
  });
});

describe('error handling', () => {
  it('fails on an empty csv and writes nothing', () => {
    const dir = tmp();
    const empty = join(dir, 'empty.csv');
    writeFileSync(empty, '');
    const out = join(dir, 'out.svg');
    const status = runCli(['dt-eta', empty, out]);
    expect(status).toBe(1);
    expect(existsSync(out)).toBe(false);
  });

  it('fails when the csv kind does not match the figure', () => {
    const dir = tmp();
    const out = join(dir, 'out.svg');
    const status = runCli(['dt-eta', join(FIX, 'converge_local.csv'), out]);
    expect(status).toBe(1);
    expect(existsSync(out)).toBe(false);
  });

  it('fails on a missing column', () => {
    const dir = tmp();
    const broken = join(dir, 'broken.csv');
    writeFileSync(broken, '# dcsplit-csv v1 kind=dt-eta\neta,rule\n1e-6,k\n');
    const status = runCli(['dt-eta', broken, join(dir, 'out.svg')]);
    expect(status).toBe(1);
  });

  it('rejects png output with a clear message', () => {
    const dir = tmp();
    const status = runCli(['local-order', join(FIX, 'converge_local.csv'),
      join(dir, 'out.png'), '--slopes', '2,3', '--format', 'png']);
    expect(status).toBe(2);
  });
});

describe('spec file driving', () => {
  it('renders from a json figure spec', () => {
    const dir = tmp();
    const out = join(dir, 'spec.svg');
    const specPath = join(dir, 'spec.json');
    writeFileSync(specPath, JSON.stringify({
      kind: 'local-order',
      input: join(FIX, 'converge_local.csv'),
      output: out,
      slopes: [2, 3, 4, 5],
      title: 'Order ladder',
    }));
    const status = runCli(['--spec', specPath]);
    expect(status).toBe(0);
    const svg = readFileSync(out, 'utf8');
    expect(svg).toContain('Order ladder');
  });
});

describe('plot layer purity', () => {
  it('plots exactly the csv values, no recomputation', () => {
    const table = parseCsv(readFileSync(join(FIX, 'converge_local.csv'), 'utf8'));
    const fig = buildFigure({
      kind: 'local-order', input: 'x', output: 'y', slopes: [2],
    }, table);
    const iDt = table.columns.indexOf('dt');
    const iK = table.columns.indexOf('k');
    const iErr = table.columns.indexOf('error');
    const cells = table.rows.filter((r) => r[0] === 'cell' && r[iK] === '0');
    const series0 = fig.series.find((s) => s.label.startsWith('k = 0'))!;
    expect(series0.points.length).toBe(cells.length);
    for (const row of cells) {
      const dt = Number(row[iDt]);
      const err = Number(row[iErr]);
      expect(series0.points.some(([x, y]) => x === dt && y === err)).toBe(true);
    }
  });

  it('same model always serializes to the same bytes', () => {
    const table = parseCsv(readFileSync(join(FIX, 'dt_eta.csv'), 'utf8'));
    const fig = buildFigure({ kind: 'dt-eta', input: 'x', output: 'y' }, table);
    expect(renderSvg(fig)).toBe(renderSvg(fig));
  });
});

function runCli(args: string[]): number {
  try {
    execFileSync('node', [CLI, ...args], { stdio: 'pipe' });
    return 0;
  } catch (err) {
    return (err as { status: number }).status ?? 1;
  }
}
