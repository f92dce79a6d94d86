/**
 * The four panel styles, each mapping one wishlocal CSV schema onto a chart.
 *
 * Every style stays purely presentational: all numbers come from the CSV.
 * The 0.5 / 1.0 / 1.5 reference marks (the expansion-order targets) are drawn
 * here, never stored in the data: horizontal lines on the exponent panel and
 * log-log slope guides on the inverse-error panel.
 */

import { requireColumns, type Table } from "./csv.js";
import { renderChart, type ChartSpec, type RefLine } from "./svg.js";

export const STYLES = [
  "loglog-inverse-error",
  "exponent",
  "kde-slopes",
  "tv-scaling",
] as const;

export type Style = (typeof STYLES)[number];

export function isStyle(s: string): s is Style {
  return (STYLES as readonly string[]).includes(s);
}

const ORDER_TARGETS = ["0.5", "1.0", "1.5"];

function loglogInverseError(table: Table, title: string): ChartSpec {
  const cols = requireColumns(table, ["nu", "E0", "E1", "E2"]);
  const nu = cols.get("nu")!;
  const series = (["E0", "E1", "E2"] as const).map((name, i) => ({
    name: `1/${name}`,
    x: nu,
    y: cols.get(name)!.map((v) => 1 / v),
  }));
  // slope guides anchored at the first finite point of the matching series
  const refLines: RefLine[] = [];
  ORDER_TARGETS.forEach((label, i) => {
    const y = series[i].y.find((v) => Number.isFinite(v) && v > 0);
    const xRef = nu[series[i].y.findIndex((v) => Number.isFinite(v) && v > 0)];
    if (y !== undefined && Number.isFinite(xRef)) {
      refLines.push({ label, slope: { exponent: Number(label), xRef, yRef: y } });
    }
  });
  return {
    title,
    xLabel: "degrees of freedom",
    yLabel: "inverse worst-case error",
    xAxis: "log",
    yAxis: "log",
    series,
    refLines,
  };
}

function exponent(table: Table, title: string): ChartSpec {
  const cols = requireColumns(table, ["nu", "exp0", "exp1", "exp2"]);
  const nu = cols.get("nu")!;
  return {
    title,
    xLabel: "degrees of freedom",
    yLabel: "error exponent",
    xAxis: "linear",
    yAxis: "linear",
    series: (["exp0", "exp1", "exp2"] as const).map((name) => ({
      name,
      x: nu,
      y: cols.get(name)!,
    })),
    refLines: ORDER_TARGETS.map((label) => ({ label, y: Number(label) })),
  };
}

function kdeSlopes(table: Table, title: string): ChartSpec {
  const cols = requireColumns(table, ["b", "mc_var", "pred_var", "slope_fit", "slope_target"]);
  const b = cols.get("b")!;
  const slopeFit = cols.get("slope_fit")![0];
  const slopeTarget = cols.get("slope_target")![0];
  return {
    title: `${title} (slope ${slopeFit.toPrecision(3)} vs target ${slopeTarget})`,
    xLabel: "bandwidth",
    yLabel: "variance of the estimator",
    xAxis: "log",
    yAxis: "log",
    series: [
      { name: "measured", x: b, y: cols.get("mc_var")! },
      { name: "predicted", x: b, y: cols.get("pred_var")! },
    ],
    refLines: [],
  };
}

function tvScaling(table: Table, title: string): ChartSpec {
  const cols = requireColumns(table, ["nu", "tv", "hellinger", "sqrt_nu_tv"]);
  const nu = cols.get("nu")!;
  return {
    title,
    xLabel: "degrees of freedom",
    yLabel: "distance",
    xAxis: "log",
    yAxis: "log",
    series: [
      { name: "total variation", x: nu, y: cols.get("tv")! },
      { name: "hellinger", x: nu, y: cols.get("hellinger")! },
      { name: "sqrt(nu) * tv", x: nu, y: cols.get("sqrt_nu_tv")! },
    ],
    refLines: [],
  };
}

export function renderStyle(style: Style, table: Table, title: string): string {
  switch (style) {
    case "loglog-inverse-error":
      return renderChart(loglogInverseError(table, title));
    case "exponent":
      return renderChart(exponent(table, title));
    case "kde-slopes":
      return renderChart(kdeSlopes(table, title));
    case "tv-scaling":
      return renderChart(tvScaling(table, title));
  }
}
