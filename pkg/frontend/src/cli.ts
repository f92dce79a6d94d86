#!/usr/bin/env node
/**
 * figplots <style> <in.csv> <out.svg> [--title ...]
 *
 * Reads one wishlocal CSV table (schema marker `# schema=1` required) and
 * writes one SVG panel.  The input is never modified.  Exit codes: 0 on
 * success, 2 on usage errors, unreadable/malformed CSV, or a missing column
 * (the message names the column).
 */

import { readFileSync, writeFileSync } from "node:fs";

import { CsvError, parseCsv } from "./csv.js";
import { isStyle, renderStyle, STYLES } from "./styles.js";

export interface CliIo {
  error(msg: string): void;
}

const USAGE = `usage: figplots <style> <in.csv> <out.svg> [--title TITLE]
styles: ${STYLES.join(", ")}`;

export function run(argv: string[], io: CliIo = { error: (m) => console.error(m) }): number {
  const positional: string[] = [];
  let title: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--title") {
      if (i + 1 >= argv.length) {
        io.error("error: --title needs a value");
        return 2;
      }
      title = argv[++i];
    } else if (a === "--help" || a === "-h") {
      io.error(USAGE);
      return 0;
    } else if (a.startsWith("--")) {
      io.error(`error: unknown option ${a}\n${USAGE}`);
      return 2;
    } else {
      positional.push(a);
    }
  }
  if (positional.length !== 3) {
    io.error(`error: expected 3 arguments, got ${positional.length}\n${USAGE}`);
    return 2;
  }
  const [style, inPath, outPath] = positional;
  if (!isStyle(style)) {
    io.error(`error: unknown style "${style}"; expected one of ${STYLES.join(", ")}`);
    return 2;
  }
  let text: string;
  try {
    text = readFileSync(inPath, "utf8");
  } catch (e) {
    io.error(`error: cannot read ${inPath}: ${(e as Error).message}`);
    return 2;
  }
  try {
    const table = parseCsv(text);
    const svg = renderStyle(style, table, title ?? style);
    writeFileSync(outPath, svg, "utf8");
  } catch (e) {
    if (e instanceof CsvError) {
      io.error(`error: ${e.message}`);
      return 2;
    }
    io.error(`error: ${(e as Error).message}`);
    return 2;
  }
  return 0;
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("figplots")) {
  process.exit(run(process.argv.slice(2)));
}
