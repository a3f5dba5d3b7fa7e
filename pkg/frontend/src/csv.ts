/**
 * Reader for dcsplit CSV artifacts.
 *
 * Every file starts with a comment line `# dcsplit-csv v<N> kind=<kind> ...`;
 * the schema version is checked and the remaining header tokens become
 * metadata. Values stay strings; numeric parsing happens at figure-build
 * time so the plot layer never rewrites scientific content.
 */

export const SUPPORTED_SCHEMA = 'v1';

export class SchemaMismatchError extends Error {}
export class MissingColumnError extends Error {}
export class EmptyCsvError extends Error {}

export interface CsvTable {
  kind: string;
  meta: Record<string, string>;
  columns: string[];
  rows: string[][];
}

function splitCsvLine(line: string): string[] {
  // The writers never quote fields; keep the parser strict and simple.
  return line.split(',');
}

export function parseCsv(text: string, path = '<csv>'): CsvTable {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new EmptyCsvError(`${path}: empty file`);
  }
  const header = lines[0];
  if (!header.startsWith('# dcsplit-csv ')) {
    throw new SchemaMismatchError(`${path}: missing dcsplit-csv schema header`);
  }
  const tokens = header.slice(2).trim().split(/\s+/);
  const version = tokens[1];
  if (version !== SUPPORTED_SCHEMA) {
    throw new SchemaMismatchError(`${path}: schema ${version} not supported (want ${SUPPORTED_SCHEMA})`);
  }
  const meta: Record<string, string> = {};
  for (const tok of tokens.slice(2)) {
    const eq = tok.indexOf('=');
    if (eq > 0) meta[tok.slice(0, eq)] = tok.slice(eq + 1);
  }
  const kind = meta['kind'] ?? '';
  delete meta['kind'];
  if (lines.length < 2) {
    throw new EmptyCsvError(`${path}: no column row`);
  }
  const columns = splitCsvLine(lines[1]);
  const rows = lines.slice(2).map(splitCsvLine);
  if (rows.length === 0) {
    throw new EmptyCsvError(`${path}: no data rows`);
  }
  return { kind, meta, columns, rows };
}

export function columnIndex(table: CsvTable, name: string, path = '<csv>'): number {
  const idx = table.columns.indexOf(name);
  if (idx < 0) {
    throw new MissingColumnError(`${path}: column ${name} not found in [${table.columns.join(', ')}]`);
  }
  return idx;
}

export function numericCell(row: string[], idx: number): number | null {
  const raw = row[idx];
  if (raw === undefined || raw === '') return null;
  const v = Number(raw);
  return Number.isFinite(v) ? v : null;
}
