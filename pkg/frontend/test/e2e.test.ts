/**
 * End-to-end over real tables produced by the wishlocal CLI (frozen under
 * fixtures/): every style renders from the genuine interchange files, and the
 * two headline panels carry three series plus the 0.5/1.0/1.5 reference marks.
 */

import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { run } from "../src/cli.js";

const FIX = join(__dirname, "fixtures");

function render(style: string, file: string): string {
  const out = join(mkdtempSync(join(tmpdir(), "figplots-e2e-")), "out.svg");
  const code = run([style, join(FIX, file), out, "--title", `${style} panel`]);
  expect(code).toBe(0);
  return readFileSync(out, "utf8");
}

function countSeries(svg: string): number {
  return (svg.match(/class="series"/g) ?? []).length;
}

describe("end-to-end on wishlocal CSV output", () => {
  it("renders the expansion-error table with three series and order guides", () => {
    const svg = render("loglog-inverse-error", "expansion_error_d2.csv");
    expect(countSeries(svg)).toBe(3);
    for (const ref of ["0.5", "1.0", "1.5"]) {
      expect(svg).toContain(`data-ref="${ref}"`);
    }
  });

  it("renders the exponent table with three series and reference lines", () => {
    const svg = render("exponent", "expansion_error_d2.csv");
    expect(countSeries(svg)).toBe(3);
    for (const ref of ["0.5", "1.0", "1.5"]) {
      expect(svg).toContain(`class="refline" data-ref="${ref}"`);
    }
  });

  it("renders the tv scan", () => {
    const svg = render("tv-scaling", "tv_scan_d1.csv");
    expect(countSeries(svg)).toBe(3);
  });

  it("renders the kde variance law", () => {
    const svg = render("kde-slopes", "kde_variance_d1.csv");
    expect(countSeries(svg)).toBe(2);
    expect(svg).toContain("target -0.5");
  });
});
