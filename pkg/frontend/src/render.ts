#!/usr/bin/env node
/**
 * Figure renderer for dcsplit CSV artifacts.
 *
 *   render --spec spec.json
 *   render KIND input.csv output.svg [--slopes 2,3,4,5] [--marker-t 0.5] [--title ...]
 *
 * KIND is one of local-order, global-order, dt-eta, dt-history, profiles,
 * space-study. Nothing is written when the input cannot be rendered.
 */

import { readFileSync, writeFileSync } from 'node:fs';

import { parseCsv } from './csv.js';
import { FigureKind, FigureSpec, buildFigure } from './figures.js';
import { renderSvg } from './svg.js';

const KINDS: FigureKind[] = [
  'local-order',
  'global-order',
  'dt-eta',
  'dt-history',
  'profiles',
  'space-study',
];

function parseArgs(argv: string[]): FigureSpec {
  if (argv[0] === '--spec') {
    if (!argv[1]) throw new Error('--spec needs a JSON file path');
    const raw = JSON.parse(readFileSync(argv[1], 'utf8'));
    const spec: FigureSpec = {
      kind: raw.kind,
      input: raw.input,
      output: raw.output,
      slopes: raw.slopes,
      markerT: raw.marker_t ?? raw.markerT,
      title: raw.title,
      format: raw.format ?? 'svg',
    };
    validate(spec);
    return spec;
  }
  const [kind, input, output, ...rest] = argv;
  const spec: FigureSpec = {
    kind: kind as FigureKind,
    input,
    output,
    format: 'svg',
  };
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (value === undefined) throw new Error(`flag ${flag} needs a value`);
    if (flag === '--slopes') spec.slopes = value.split(',').map(Number);
    else if (flag === '--marker-t') spec.markerT = Number(value);
    else if (flag === '--title') spec.title = value;
    else if (flag === '--format') spec.format = value as 'svg' | 'png';
    else throw new Error(`unknown flag ${flag}`);
  }
  validate(spec);
  return spec;
}

function validate(spec: FigureSpec) {
  if (!KINDS.includes(spec.kind)) {
    throw new Error(`unknown figure kind ${spec.kind}; pick one of ${KINDS.join(', ')}`);
  }
  if (!spec.input || !spec.output) {
    throw new Error('need input CSV and output path');
  }
  if ((spec.kind === 'local-order' || spec.kind === 'global-order') &&
      (!spec.slopes || spec.slopes.length === 0)) {
    throw new Error(`${spec.kind} figures need nonempty slope guides (--slopes)`);
  }
  if (spec.slopes && spec.slopes.some((s) => !Number.isFinite(s))) {
    throw new Error('slopes must be numbers');
  }
  if (spec.format === 'png') {
    throw new Error('png output is not built in; render svg and convert externally');
  }
}

export function renderToString(spec: FigureSpec): string {
  const table = parseCsv(readFileSync(spec.input, 'utf8'), spec.input);
  return renderSvg(buildFigure(spec, table));
}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = parseArgs(argv);
  } catch (err) {
    console.error(`render: ${(err as Error).message}`);
    return 2;
  }
  try {
    const svg = renderToString(spec);
    writeFileSync(spec.output, svg);
  } catch (err) {
    console.error(`render: ${(err as Error).message}`);
    return 1;
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split('/').pop() ?? '');
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
