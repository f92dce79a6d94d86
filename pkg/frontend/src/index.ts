export { CsvError, parseCsv, requireColumns, SCHEMA_LINE, type Table } from "./csv.js";
export { renderChart, type ChartSpec, type RefLine, type Series } from "./svg.js";
export { isStyle, renderStyle, STYLES, type Style } from "./styles.js";
export { run } from "./cli.js";
