/**
 * Strict parsers for the three CSV formats the solver writes.
 *
 * Field CSV:  header `i,j,x,y,value`, one row per interior node of an
 *             (n+1) x (n+1) grid in row-major order (i fastest).
 * Snake CSV:  header `idx,value`, consecutive indices from 0; the series is
 *             the field flattened row by row with every other row reversed.
 * Report CSV: header `iter,theta,resid_mean,dev_mean,theta_min,theta_max`,
 *             one row per iteration (resid columns may be NaN).
 */

export interface Field {
  /** Grid subdivisions per side; the field has (n-1)^2 interior values. */
  n: number;
  /** Row-major interior values, i fastest. */
  values: number[];
}

export interface Report {
  iter: number[];
  theta: number[];
  residMean: number[];
  devMean: number[];
  thetaMin: number[];
  thetaMax: number[];
}

export const FIELD_HEADER = "i,j,x,y,value";
export const SNAKE_HEADER = "idx,value";
export const REPORT_HEADER = "iter,theta,resid_mean,dev_mean,theta_min,theta_max";

function splitRows(text: string): string[] {
  return text
    .split("\n")
    .map((line) => (line.endsWith("\r") ? line.slice(0, -1) : line))
    .filter((line) => line.length > 0);
}

function parseNumber(text: string, where: string, allowNaN = false): number {
  if (allowNaN && /^-?nan$/i.test(text.trim())) return NaN;
  const value = Number(text);
  if (text.trim() === "" || !Number.isFinite(value)) {
    throw new Error(`${where}: expected a finite number, got ${JSON.stringify(text)}`);
  }
  return value;
}

function parseInteger(text: string, where: string): number {
  const value = parseNumber(text, where);
  if (!Number.isInteger(value)) {
    throw new Error(`${where}: expected an integer, got ${JSON.stringify(text)}`);
  }
  return value;
}

export function parseFieldCsv(text: string, label = "field"): Field {
  const rows = splitRows(text);
  if (rows.length === 0 || rows[0] !== FIELD_HEADER) {
    throw new Error(`${label}: expected header ${FIELD_HEADER}`);
  }
  const count = rows.length - 1;
  const m = Math.round(Math.sqrt(count));
  if (count === 0 || m * m !== count) {
    throw new Error(`${label}: ${count} rows do not form a square interior grid`);
  }
  const values: number[] = new Array(count);
  for (let q = 0; q < count; q++) {
    const where = `${label}:${q + 2}`;
    const cells = rows[q + 1].split(",");
    if (cells.length !== 5) {
      throw new Error(`${where}: expected 5 columns`);
    }
    const i = parseInteger(cells[0], where);
    const j = parseInteger(cells[1], where);
    if (i !== (q % m) + 1 || j !== Math.floor(q / m) + 1) {
      throw new Error(
        `${where}: node (${i},${j}) is out of row-major order or duplicated`
      );
    }
    parseNumber(cells[2], where);
    parseNumber(cells[3], where);
    values[q] = parseNumber(cells[4], where);
  }
  return { n: m + 1, values };
}

/** Row-major values to snake order: every other row walks backwards. */
export function snakeFlatten(field: Field): number[] {
  const m = field.n - 1;
  const out: number[] = new Array(field.values.length);
  let q = 0;
  for (let row = 0; row < m; row++) {
    for (let col = 0; col < m; col++) {
      const i = row % 2 === 0 ? col : m - 1 - col;
      out[q++] = field.values[row * m + i];
    }
  }
  return out;
}

export function parseSnakeCsv(text: string, label = "snake"): number[] {
  const rows = splitRows(text);
  if (rows.length === 0 || rows[0] !== SNAKE_HEADER) {
    throw new Error(`${label}: expected header ${SNAKE_HEADER}`);
  }
  const values: number[] = [];
  for (let q = 1; q < rows.length; q++) {
    const where = `${label}:${q + 1}`;
    const cells = rows[q].split(",");
    if (cells.length !== 2) {
      throw new Error(`${where}: expected 2 columns`);
    }
    if (parseInteger(cells[0], where) !== values.length) {
      throw new Error(`${where}: indices must be consecutive from 0`);
    }
    values.push(parseNumber(cells[1], where));
  }
  if (values.length === 0) {
    throw new Error(`${label}: no data rows`);
  }
  return values;
}

/** A field or snake CSV, as a snake-order series either way. */
export function parseSeriesCsv(text: string, label = "series"): number[] {
  const first = splitRows(text)[0];
  if (first === FIELD_HEADER) return snakeFlatten(parseFieldCsv(text, label));
  if (first === SNAKE_HEADER) return parseSnakeCsv(text, label);
  throw new Error(`${label}: expected a field or snake CSV header`);
}

export function parseReportCsv(text: string, label = "report"): Report {
  const rows = splitRows(text);
  if (rows.length === 0 || rows[0] !== REPORT_HEADER) {
    throw new Error(`${label}: expected header ${REPORT_HEADER}`);
  }
  if (rows.length === 1) {
    throw new Error(`${label}: no data rows`);
  }
  const report: Report = {
    iter: [], theta: [], residMean: [], devMean: [], thetaMin: [], thetaMax: [],
  };
  for (let q = 1; q < rows.length; q++) {
    const where = `${label}:${q + 1}`;
    const cells = rows[q].split(",");
    if (cells.length !== 6) {
      throw new Error(`${where}: expected 6 columns`);
    }
    report.iter.push(parseInteger(cells[0], where));
    report.theta.push(parseNumber(cells[1], where));
    report.residMean.push(parseNumber(cells[2], where, true));
    report.devMean.push(parseNumber(cells[3], where));
    report.thetaMin.push(parseNumber(cells[4], where));
    report.thetaMax.push(parseNumber(cells[5], where));
  }
  return report;
}
