/**
 * Reader for the wishlocal CSV interchange format.
 *
 * Files start with the schema marker line `# schema=1`, then a header row,
 * then numeric data rows.  The reader is strict: a missing marker, a missing
 * required column, or a ragged row is a CsvError naming the problem.
 */

export const SCHEMA_LINE = "# schema=1";

export class CsvError extends Error {
  /** Name of the missing column, when that is the failure. */
  readonly missingColumn?: string;

  constructor(message: string, missingColumn?: string) {
    super(message);
    this.name = "CsvError";
    this.missingColumn = missingColumn;
  }
}

export interface Table {
  columns: string[];
  /** Row-major numeric cells; NaN for unparseable entries like "nan". */
  rows: number[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new CsvError("empty CSV file");
  }
  if (lines[0].trim() !== SCHEMA_LINE) {
    throw new CsvError(`missing schema marker line "${SCHEMA_LINE}"`);
  }
  if (lines.length < 2) {
    throw new CsvError("no header row after the schema marker");
  }
  const columns = lines[1].split(",").map((c) => c.trim());
  const rows: number[][] = [];
  for (let i = 2; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== columns.length) {
      throw new CsvError(
        `row ${i + 1} has ${parts.length} cells, header has ${columns.length}`,
      );
    }
    rows.push(parts.map((p) => Number(p)));
  }
  return { columns, rows };
}

/** Extract named columns, raising a CsvError that names the first absentee. */
export function requireColumns(table: Table, names: string[]): Map<string, number[]> {
  const out = new Map<string, number[]>();
  for (const name of names) {
    const idx = table.columns.indexOf(name);
    if (idx < 0) {
      throw new CsvError(`missing column: ${name}`, name);
    }
    out.set(
      name,
      table.rows.map((r) => r[idx]),
    );
  }
  return out;
}
