/**
 * Minimal deterministic SVG chart builder.
 *
 * No rendering library: the output is a plain SVG string assembled from
 * scales, polyline series, reference lines and text, so identical inputs
 * produce byte-identical files and tests can assert on the markup.
 */

export type AxisKind = "linear" | "log";

export interface Series {
  name: string;
  x: number[];
  y: number[];
}

export interface RefLine {
  /** Label used for the data-ref attribute, e.g. "0.5". */
  label: string;
  /** Horizontal line at this y value... */
  y?: number;
  /** ...or a guide of given log-log slope through a reference point. */
  slope?: { exponent: number; xRef: number; yRef: number };
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xAxis: AxisKind;
  yAxis: AxisKind;
  series: Series[];
  refLines: RefLine[];
}

const WIDTH = 720;
const HEIGHT = 520;
const MARGIN = { left: 72, right: 180, top: 48, bottom: 56 };
const COLORS = ["#1f6feb", "#d1242f", "#1a7f37", "#8250df", "#bf8700"];

function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  const s = v.toPrecision(6);
  return s.includes(".") || s.includes("e")
    ? s.replace(/\.?0+(?=e|$)/, "").replace(/(\.\d*?)0+(?=e|$)/, "$1")
    : s;
}

function tickLabel(v: number): string {
  const a = Math.abs(v);
  if (a !== 0 && (a >= 1e4 || a < 1e-3)) return v.toExponential(1);
  return String(Number(v.toPrecision(4)));
}

class Scale {
  constructor(
    readonly kind: AxisKind,
    readonly lo: number,
    readonly hi: number,
    readonly outLo: number,
    readonly outHi: number,
  ) {}

  map(v: number): number {
    const t =
      this.kind === "log"
        ? (Math.log(v) - Math.log(this.lo)) / (Math.log(this.hi) - Math.log(this.lo))
        : (v - this.lo) / (this.hi - this.lo);
    return this.outLo + t * (this.outHi - this.outLo);
  }

  ticks(n = 5): number[] {
    const out: number[] = [];
    if (this.kind === "log") {
      const la = Math.log10(this.lo);
      const lb = Math.log10(this.hi);
      for (let i = 0; i < n; i++) out.push(10 ** (la + ((lb - la) * i) / (n - 1)));
    } else {
      for (let i = 0; i < n; i++) out.push(this.lo + ((this.hi - this.lo) * i) / (n - 1));
    }
    return out;
  }
}

function finitePositive(kind: AxisKind, v: number): boolean {
  return Number.isFinite(v) && (kind === "linear" || v > 0);
}

function domain(kind: AxisKind, values: number[], padFrac = 0.06): [number, number] {
  const vals = values.filter((v) => finitePositive(kind, v));
  if (vals.length === 0) throw new Error("no plottable values for an axis");
  let lo = Math.min(...vals);
  let hi = Math.max(...vals);
  if (kind === "log") {
    const pad = (Math.log(hi) - Math.log(lo) || 1) * padFrac;
    return [Math.exp(Math.log(lo) - pad), Math.exp(Math.log(hi) + pad)];
  }
  const pad = (hi - lo || Math.abs(hi) || 1) * padFrac;
  return [lo - pad, hi + pad];
}

export function renderChart(spec: ChartSpec): string {
  const xsAll: number[] = [];
  const ysAll: number[] = [];
  for (const s of spec.series) {
    xsAll.push(...s.x);
    ysAll.push(...s.y);
  }
  for (const r of spec.refLines) {
    if (r.y !== undefined) ysAll.push(r.y);
  }
  const [xLo, xHi] = domain(spec.xAxis, xsAll);
  const [yLo, yHi] = domain(spec.yAxis, ysAll);
  const sx = new Scale(spec.xAxis, xLo, xHi, MARGIN.left, WIDTH - MARGIN.right);
  const sy = new Scale(spec.yAxis, yLo, yHi, HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">${escapeXml(spec.title)}</text>`,
  );

  // axes
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<g class="axes" stroke="#444" stroke-width="1">`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}"/>`);
  parts.push(`</g>`);
  parts.push(`<g class="ticks" font-size="11" fill="#222">`);
  for (const t of sx.ticks()) {
    const px = sx.map(t);
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y0 + 4}" stroke="#444"/>`);
    parts.push(
      `<text x="${fmt(px)}" y="${y0 + 18}" text-anchor="middle">${tickLabel(t)}</text>`,
    );
  }
  for (const t of sy.ticks()) {
    const py = sy.map(t);
    parts.push(`<line x1="${x0 - 4}" y1="${fmt(py)}" x2="${x0}" y2="${fmt(py)}" stroke="#444"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${fmt(py + 4)}" text-anchor="end">${tickLabel(t)}</text>`,
    );
  }
  parts.push(`</g>`);
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="13">${escapeXml(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 18 ${(y0 + y1) / 2})">${escapeXml(spec.yLabel)}</text>`,
  );

  // reference lines (liminf targets and slope guides)
  for (const ref of spec.refLines) {
    if (ref.y !== undefined && ref.y > yLo && ref.y < yHi) {
      const py = fmt(sy.map(ref.y));
      parts.push(
        `<line class="refline" data-ref="${ref.label}" x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#888" stroke-dasharray="6 4"/>`,
      );
      parts.push(
        `<text x="${x1 + 6}" y="${fmt(sy.map(ref.y) + 4)}" font-size="11" fill="#666">${ref.label}</text>`,
      );
    } else if (ref.slope) {
      // log-log guide: y = yRef * (x / xRef)^exponent, clipped to the panel
      const { exponent, xRef, yRef } = ref.slope;
      const pts: string[] = [];
      for (const xv of [xLo, xHi]) {
        const yv = yRef * Math.pow(xv / xRef, exponent);
        pts.push(`${fmt(sx.map(xv))},${fmt(sy.map(clamp(yv, yLo, yHi)))}`);
      }
      parts.push(
        `<polyline class="refline" data-ref="${ref.label}" points="${pts.join(" ")}" fill="none" stroke="#888" stroke-dasharray="6 4"/>`,
      );
    }
  }

  // series
  spec.series.forEach((s, i) => {
    const color = COLORS[i % COLORS.length];
    const pts: string[] = [];
    for (let k = 0; k < s.x.length; k++) {
      if (finitePositive(spec.xAxis, s.x[k]) && finitePositive(spec.yAxis, s.y[k])) {
        pts.push(`${fmt(sx.map(s.x[k]))},${fmt(sy.map(s.y[k]))}`);
      }
    }
    parts.push(
      `<polyline class="series" data-name="${escapeXml(s.name)}" points="${pts.join(" ")}" fill="none" stroke="${color}" stroke-width="2"/>`,
    );
    const ly = MARGIN.top + 16 + 18 * i;
    parts.push(
      `<line x1="${x1 + 8}" y1="${ly - 4}" x2="${x1 + 28}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(`<text x="${x1 + 34}" y="${ly}" font-size="12">${escapeXml(s.name)}</text>`);
  });

  parts.push(`</svg>`);
  return parts.join("\n") + "\n";
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

function escapeXml(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
