/** Renderers for the three plot kinds: field heatmaps, snake traces,
 *  residual curves. All output is deterministic SVG text. */

import { Field, Report } from "./csv.js";
import {
  SERIES_COLORS,
  document,
  fmt,
  linearScale,
  polyline,
  ramp,
  tag,
  text,
  ticks,
} from "./svg.js";

export interface Labeled<T> {
  label: string;
  data: T;
}

const PANEL = 220;
const MARGIN = { left: 46, top: 34, bottom: 24, gap: 26 };

/** Side-by-side heatmaps of one or more fields on a shared color scale. */
export function renderField(panels: Array<Labeled<Field>>): string {
  if (panels.length === 0) throw new Error("field plot needs at least one input");
  const m = panels[0].data.n - 1;
  for (const panel of panels) {
    if (panel.data.n - 1 !== m) {
      throw new Error(`grid mismatch: ${panel.label} has n=${panel.data.n}, expected n=${m + 1}`);
    }
  }
  let lo = Infinity;
  let hi = -Infinity;
  for (const panel of panels) {
    for (const v of panel.data.values) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!(hi > lo)) hi = lo + 1;

  const cell = PANEL / m;
  const barWidth = 16;
  const width = MARGIN.left + panels.length * (PANEL + MARGIN.gap) + barWidth + 46;
  const height = MARGIN.top + PANEL + MARGIN.bottom;
  const parts: string[] = [];

  panels.forEach((panel, index) => {
    const x0 = MARGIN.left + index * (PANEL + MARGIN.gap);
    parts.push(text(x0 + PANEL / 2, MARGIN.top - 10, panel.label,
                    { "text-anchor": "middle", "font-size": 13 }));
    for (let q = 0; q < panel.data.values.length; q++) {
      const col = q % m;
      const row = Math.floor(q / m);
      const t = (panel.data.values[q] - lo) / (hi - lo);
      parts.push(tag("rect", {
        x: x0 + col * cell,
        y: MARGIN.top + (m - 1 - row) * cell,
        width: cell,
        height: cell,
        fill: ramp(t),
      }));
    }
    parts.push(tag("rect", {
      x: x0, y: MARGIN.top, width: PANEL, height: PANEL,
      fill: "none", stroke: "#333", "stroke-width": 0.7,
    }));
  });

  // shared colorbar
  const barX = MARGIN.left + panels.length * (PANEL + MARGIN.gap);
  const strips = 48;
  for (let s = 0; s < strips; s++) {
    parts.push(tag("rect", {
      x: barX,
      y: MARGIN.top + PANEL - ((s + 1) * PANEL) / strips,
      width: barWidth,
      height: PANEL / strips + 0.5,
      fill: ramp((s + 0.5) / strips),
    }));
  }
  parts.push(tag("rect", {
    x: barX, y: MARGIN.top, width: barWidth, height: PANEL,
    fill: "none", stroke: "#333", "stroke-width": 0.7,
  }));
  parts.push(text(barX + barWidth + 4, MARGIN.top + 10, fmt(hi), { "font-size": 11 }));
  parts.push(text(barX + barWidth + 4, MARGIN.top + PANEL, fmt(lo), { "font-size": 11 }));

  return document(width, height, parts.join("\n"));
}

interface Frame {
  x: ReturnType<typeof linearScale>;
  y: ReturnType<typeof linearScale>;
  parts: string[];
}

function frame(width: number, height: number, xDomain: [number, number],
               yDomain: [number, number], xLabel: string,
               yTickText: (v: number) => string): Frame {
  const box = { left: 56, right: 16, top: 30, bottom: 40 };
  const x = linearScale(xDomain, [box.left, width - box.right]);
  const y = linearScale(yDomain, [height - box.bottom, box.top]);
  const parts: string[] = [];
  parts.push(tag("line", {
    x1: box.left, y1: height - box.bottom,
    x2: width - box.right, y2: height - box.bottom,
    stroke: "#333", "stroke-width": 1,
  }));
  parts.push(tag("line", {
    x1: box.left, y1: box.top, x2: box.left, y2: height - box.bottom,
    stroke: "#333", "stroke-width": 1,
  }));
  for (const v of ticks(xDomain)) {
    parts.push(tag("line", {
      x1: x(v), y1: height - box.bottom, x2: x(v), y2: height - box.bottom + 4,
      stroke: "#333", "stroke-width": 1,
    }));
    parts.push(text(x(v), height - box.bottom + 16, fmt(v),
                    { "text-anchor": "middle", "font-size": 10 }));
  }
  for (const v of ticks(yDomain)) {
    parts.push(tag("line", {
      x1: box.left - 4, y1: y(v), x2: box.left, y2: y(v),
      stroke: "#333", "stroke-width": 1,
    }));
    parts.push(text(box.left - 6, y(v) + 3, yTickText(v),
                    { "text-anchor": "end", "font-size": 10 }));
  }
  parts.push(text(width / 2, height - 8, xLabel,
                  { "text-anchor": "middle", "font-size": 11 }));
  return { x, y, parts };
}

function pad(lo: number, hi: number): [number, number] {
  if (!(hi > lo)) return [lo - 0.5, lo + 0.5];
  const slack = 0.05 * (hi - lo);
  return [lo - slack, hi + slack];
}

/** Snake-order traces overlaid for 1-D comparison of fields. */
export function renderSnake(series: Array<Labeled<number[]>>): string {
  if (series.length === 0) throw new Error("snake plot needs at least one input");
  const length = series[0].data.length;
  for (const entry of series) {
    if (entry.data.length !== length) {
      throw new Error(
        `series length mismatch: ${entry.label} has ${entry.data.length} values, expected ${length}`
      );
    }
  }
  const width = 640;
  const height = 360;
  let lo = Infinity;
  let hi = -Infinity;
  for (const entry of series) {
    for (const v of entry.data) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  const f = frame(width, height, [0, length - 1], pad(lo, hi),
                  "snake index", fmt);
  series.forEach((entry, index) => {
    const color = SERIES_COLORS[index % SERIES_COLORS.length];
    f.parts.push(text(width - 150, 18 + 14 * index, entry.label,
                      { "font-size": 11, fill: color }));
  });
  series.forEach((entry, index) => {
    const color = SERIES_COLORS[index % SERIES_COLORS.length];
    f.parts.push(polyline(
      entry.data.map((v, q) => [f.x(q), f.y(v)] as [number, number]),
      { class: "series", stroke: color, "stroke-width": 1.4 },
    ));
  });
  return document(width, height, f.parts.join("\n"));
}

/** Misfit and mean-residual traces against iteration, log-10 vertical axis. */
export function renderResidual(report: Report): string {
  const curves: Array<Labeled<Array<[number, number]>>> = [];
  const collect = (label: string, values: number[]) => {
    const points: Array<[number, number]> = [];
    for (let q = 0; q < report.iter.length; q++) {
      if (Number.isFinite(values[q]) && values[q] > 0) {
        points.push([report.iter[q], Math.log10(values[q])]);
      }
    }
    if (points.length > 0) curves.push({ label, data: points });
  };
  collect("theta", report.theta);
  collect("resid_mean", report.residMean);
  collect("dev_mean", report.devMean);
  if (curves.length === 0) {
    throw new Error("report has no positive values to plot");
  }

  const width = 640;
  const height = 360;
  let lo = Infinity;
  let hi = -Infinity;
  for (const curve of curves) {
    for (const [, v] of curve.data) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  const last = report.iter[report.iter.length - 1];
  const f = frame(width, height, [report.iter[0], last > 0 ? last : 1],
                  pad(lo, hi), "iteration",
                  (v) => `1e${fmt(v)}`);
  curves.forEach((curve, index) => {
    const color = SERIES_COLORS[index % SERIES_COLORS.length];
    f.parts.push(text(width - 150, 18 + 14 * index, curve.label,
                      { "font-size": 11, fill: color }));
  });
  curves.forEach((curve, index) => {
    const color = SERIES_COLORS[index % SERIES_COLORS.length];
    f.parts.push(polyline(
      curve.data.map(([it, v]) => [f.x(it), f.y(v)] as [number, number]),
      { class: "series", stroke: color, "stroke-width": 1.4 },
    ));
  });
  return document(width, height, f.parts.join("\n"));
}
