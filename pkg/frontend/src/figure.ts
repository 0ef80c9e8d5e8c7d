import { writeFileSync } from "fs";

import { readTrace, requireColumns } from "./csv";
import { readIndex, tracePath, StudyIndex } from "./indexFile";
import { linearScale, logScale, tickLabel, Scale } from "./scale";
import * as svg from "./svg";

export const STUDIES = [
  "scaling_factor",
  "quantization_interval",
  "communication_cost",
  "transmitted_bits",
  "constraint_violation",
  "single_run",
] as const;

export type StudyKind = (typeof STUDIES)[number];

export interface FigureJob {
  study: StudyKind;
  indexPath: string; // study index JSON, or the trace CSV itself for single_run
  outPath: string;
  logY?: boolean; // default: log for residual/violation figures
}

export interface Curve {
  label: string;
  /** per-iteration [k, value]; mean across seeds when several traces share the value */
  points: Array<[number, number]>;
  bandLo?: Array<[number, number]>;
  bandHi?: Array<[number, number]>;
}

export interface Bar {
  label: string;
  value: number;
}

export interface Figure {
  study: StudyKind;
  curves: Curve[];
  bars: Bar[];
  logY: boolean;
  title: string;
  xLabel: string;
  yLabel: string;
  svg: string;
}

interface StudyStyle {
  metric: "residual" | "constraint_violation";
  valuePrefix: string;
  title: string;
  yLabel: string;
}

const CURVE_STYLES: Record<string, StudyStyle> = {
  scaling_factor: {
    metric: "residual", valuePrefix: "xi=",
    title: "residual vs iterations under different scale decay ratios",
    yLabel: "residual ||z - z*||",
  },
  quantization_interval: {
    metric: "residual", valuePrefix: "delta_p=",
    title: "residual vs iterations under different grid densities",
    yLabel: "residual ||z - z*||",
  },
  transmitted_bits: {
    metric: "residual", valuePrefix: "b=",
    title: "residual vs iterations under different bit widths",
    yLabel: "residual ||z - z*||",
  },
  constraint_violation: {
    metric: "constraint_violation", valuePrefix: "",
    title: "equality constraint violation under different quantizers",
    yLabel: "constraint violation",
  },
  single_run: {
    metric: "residual", valuePrefix: "",
    title: "residual vs iterations",
    yLabel: "residual ||z - z*||",
  },
};

function sortedValues(index: StudyIndex): Array<number | string> {
  const uniq = [...new Set(index.entries.map((e) => e.value))];
  uniq.sort((a, b) =>
    typeof a === "number" && typeof b === "number"
      ? a - b
      : String(a) < String(b) ? -1 : 1);
  return uniq;
}

/** Mean plus min-max envelope across seed traces sharing one sweep value. */
function aggregate(kCols: number[][], vCols: number[][]): {
  points: Array<[number, number]>;
  lo: Array<[number, number]>;
  hi: Array<[number, number]>;
} {
  const n = kCols[0].length;
  for (const col of [...kCols, ...vCols]) {
    if (col.length !== n) {
      throw new Error("traces in one sweep group have different lengths");
    }
  }
  const points: Array<[number, number]> = [];
  const lo: Array<[number, number]> = [];
  const hi: Array<[number, number]> = [];
  for (let i = 0; i < n; i++) {
    const k = kCols[0][i];
    let sum = 0;
    let mn = Infinity;
    let mx = -Infinity;
    for (const col of vCols) {
      const v = col[i];
      sum += v;
      mn = Math.min(mn, v);
      mx = Math.max(mx, v);
    }
    points.push([k, sum / vCols.length]);
    lo.push([k, mn]);
    hi.push([k, mx]);
  }
  return { points, lo, hi };
}

function buildCurves(job: FigureJob): Figure {
  const style = CURVE_STYLES[job.study];
  const logY = job.logY ?? true;
  const curves: Curve[] = [];

  if (job.study === "single_run") {
    const table = readTrace(job.indexPath);
    const [k, v] = requireColumns(table, ["k", style.metric]);
    curves.push({ label: style.metric, points: k.map((ki, i) => [ki, v[i]]) });
  } else {
    const index = readIndex(job.indexPath);
    if (index.study !== job.study) {
      throw new Error(
        `index ${job.indexPath} is for study '${index.study}', not '${job.study}'`);
    }
    for (const value of sortedValues(index)) {
      const group = index.entries.filter((e) => e.value === value);
      const kCols: number[][] = [];
      const vCols: number[][] = [];
      for (const entry of group) {
        const table = readTrace(tracePath(index, entry.trace));
        const [k, v] = requireColumns(table, ["k", style.metric]);
        kCols.push(k);
        vCols.push(v);
      }
      const { points, lo, hi } = aggregate(kCols, vCols);
      const curve: Curve = { label: `${style.valuePrefix}${value}`, points };
      if (group.length > 1) {
        curve.bandLo = lo;
        curve.bandHi = hi;
      }
      curves.push(curve);
    }
  }
  return {
    study: job.study, curves, bars: [], logY,
    title: style.title, xLabel: "iteration k", yLabel: style.yLabel,
    svg: "",
  };
}

function buildBars(job: FigureJob): Figure {
  const index = readIndex(job.indexPath);
  if (index.study !== "communication_cost") {
    throw new Error(
      `index ${job.indexPath} is for study '${index.study}', not 'communication_cost'`);
  }
  const bars: Bar[] = [];
  if (index.baseline_bits_to_target != null) {
    bars.push({ label: "uncompressed", value: index.baseline_bits_to_target });
  }
  for (const value of sortedValues(index)) {
    const group = index.entries.filter(
      (e) => e.value === value && e.bits_to_target != null);
    if (group.length === 0) continue; // target unreached for every seed
    const mean =
      group.reduce((acc, e) => acc + (e.bits_to_target as number), 0) / group.length;
    bars.push({ label: `delta_p=${value}`, value: mean });
  }
  if (bars.length === 0) {
    throw new Error(
      `index ${job.indexPath}: no run reached the target residual, nothing to plot`);
  }
  return {
    study: job.study, curves: [], bars, logY: job.logY ?? false,
    title: "communication cost to reach the target residual",
    xLabel: "", yLabel: "cumulative bits to target",
    svg: "",
  };
}

function renderCurvesSvg(fig: Figure): string {
  const { left, right, top, bottom } = svg.MARGIN;
  const pxL = left;
  const pxR = svg.WIDTH - right;
  const pxT = top;
  const pxB = svg.HEIGHT - bottom;

  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const curve of fig.curves) {
    const pts = [curve.points, curve.bandLo ?? [], curve.bandHi ?? []];
    for (const series of pts) {
      for (const [x, y] of series) {
        xMin = Math.min(xMin, x);
        xMax = Math.max(xMax, x);
        if (!fig.logY || y > 0) {
          yMin = Math.min(yMin, y);
          yMax = Math.max(yMax, y);
        }
      }
    }
  }
  if (!(yMin <= yMax)) {
    throw new Error("no positive values to place on a log axis");
  }
  const xs = linearScale(xMin, xMax, pxL, pxR);
  const ys: Scale = fig.logY
    ? logScale(yMin, yMax, pxB, pxT)
    : linearScale(yMin, yMax, pxB, pxT);

  const floor = fig.logY ? yMin : -Infinity;
  const clampY = (v: number) => Math.max(v, floor);
  const parts = svg.open();
  svg.title(parts, fig.title);
  for (const t of xs.ticks) svg.xTick(parts, xs.toPx(t), tickLabel(t));
  for (const t of ys.ticks) svg.yTick(parts, ys.toPx(t), tickLabel(t));
  svg.plotFrame(parts);

  fig.curves.forEach((curve, i) => {
    const color = svg.PALETTE[i % svg.PALETTE.length];
    if (curve.bandLo && curve.bandHi) {
      const up = curve.bandHi
        .map(([x, y], j) => `${j ? "L" : "M"}${svg.px(xs.toPx(x))} ${svg.px(ys.toPx(clampY(y)))}`)
        .join(" ");
      const down = [...curve.bandLo].reverse()
        .map(([x, y]) => `L${svg.px(xs.toPx(x))} ${svg.px(ys.toPx(clampY(y)))}`)
        .join(" ");
      svg.band(parts, `${up} ${down} Z`, color);
    }
    const path = curve.points
      .filter(([, y]) => !fig.logY || y > 0)
      .map(([x, y], j) => `${j ? "L" : "M"}${svg.px(xs.toPx(x))} ${svg.px(ys.toPx(y))}`)
      .join(" ");
    svg.polyline(parts, path, color);
  });
  svg.legend(parts, fig.curves.map((c) => c.label),
             fig.curves.map((_, i) => svg.PALETTE[i % svg.PALETTE.length]));
  svg.axisLabels(parts, fig.xLabel, fig.yLabel);
  return svg.close(parts);
}

function renderBarsSvg(fig: Figure): string {
  const { left, right, top, bottom } = svg.MARGIN;
  const pxL = left;
  const pxR = svg.WIDTH - right;
  const pxB = svg.HEIGHT - bottom;
  const ys = linearScale(0, Math.max(...fig.bars.map((b) => b.value)), pxB, top);

  const parts = svg.open();
  svg.title(parts, fig.title);
  for (const t of ys.ticks) svg.yTick(parts, ys.toPx(t), tickLabel(t));
  svg.plotFrame(parts);
  const slot = (pxR - pxL) / fig.bars.length;
  fig.bars.forEach((b, i) => {
    const x = pxL + slot * i + slot * 0.18;
    const w = slot * 0.64;
    const yTopPx = ys.toPx(b.value);
    svg.bar(parts, x, yTopPx, w, pxB - yTopPx,
            svg.PALETTE[i % svg.PALETTE.length]);
    parts.push(
      `<text x="${svg.px(x + w / 2)}" y="${pxB + 18}" text-anchor="middle" font-size="11">${b.label}</text>`,
      `<text x="${svg.px(x + w / 2)}" y="${svg.px(yTopPx - 5)}" text-anchor="middle" font-size="11">${tickLabel(b.value)}</text>`,
    );
  });
  svg.axisLabels(parts, fig.xLabel, fig.yLabel);
  return svg.close(parts);
}

/** Assemble the figure data and its SVG markup without touching the disk. */
export function buildFigure(job: FigureJob): Figure {
  if (!STUDIES.includes(job.study)) {
    throw new Error(`unknown study '${job.study}'; expected one of ${STUDIES.join(", ")}`);
  }
  const fig = job.study === "communication_cost" ? buildBars(job) : buildCurves(job);
  fig.svg = fig.bars.length > 0 ? renderBarsSvg(fig) : renderCurvesSvg(fig);
  return fig;
}

/** Render a job to its output SVG file. */
export function render(job: FigureJob): Figure {
  if (!job.outPath.endsWith(".svg")) {
    throw new Error(
      `output must be an .svg path (got ${job.outPath}); raster formats are not supported`);
  }
  const fig = buildFigure(job);
  writeFileSync(job.outPath, fig.svg);
  return fig;
}
