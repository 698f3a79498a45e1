/**
 * SVG figure rendering. Output is a pure function of the input CSV: no
 * timestamps, no randomness. The root element carries data attributes
 * (series count, axis domains) so tests can assert on structure instead of
 * pixels.
 */

import { readFileSync, writeFileSync } from "fs";
import {
  EpisodeSeries,
  SchemaError,
  SweepSeries,
  episodeSeries,
  parseResultsCsv,
  parseSeriesCsv,
  sweepSeries,
} from "./schema.js";

export type PlotKind = "loglog-sweep" | "episode-series";

export interface FigureRecipe {
  input: string;
  output: string;
  kind: PlotKind;
  xLabel?: string;
  yLabel?: string;
  title?: string;
  /** loglog-sweep: keep only statistics whose name starts with this prefix */
  stat?: string;
  /** episode-series: which column to plot */
  field?: "multiplier" | "cum_saved";
}

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { top: 40, right: 150, bottom: 55, left: 70 };
const PALETTE = ["#1f6feb", "#d1242f", "#1a7f37", "#9a6700", "#8250df", "#bf3989", "#57606a"];

const fmt = (x: number) => (Number.isInteger(x) ? String(x) : x.toPrecision(6));

interface Scale {
  (x: number): number;
  ticks: number[];
  domain: [number, number];
}

function linearScale(lo: number, hi: number, rangeLo: number, rangeHi: number): Scale {
  const span = hi - lo || 1;
  const fn = ((x: number) => rangeLo + ((x - lo) / span) * (rangeHi - rangeLo)) as Scale;
  const step = Math.pow(10, Math.floor(Math.log10(span / 4)));
  const nice = [1, 2, 5, 10].map((m) => m * step).find((s) => span / s <= 8) ?? step * 10;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / nice) * nice; v <= hi + 1e-12 * span; v += nice) ticks.push(v);
  fn.ticks = ticks;
  fn.domain = [lo, hi];
  return fn;
}

function logScale(lo: number, hi: number, rangeLo: number, rangeHi: number): Scale {
  if (lo <= 0) throw new SchemaError("log scale needs positive values");
  const [llo, lhi] = [Math.log10(lo), Math.log10(hi)];
  const span = lhi - llo || 1;
  const fn = ((x: number) => rangeLo + ((Math.log10(x) - llo) / span) * (rangeHi - rangeLo)) as Scale;
  const ticks: number[] = [];
  for (let p = Math.ceil(llo); p <= Math.floor(lhi + 1e-12); p++) ticks.push(Math.pow(10, p));
  if (ticks.length === 0) ticks.push(lo, hi);
  fn.ticks = ticks;
  fn.domain = [lo, hi];
  return fn;
}

function polyline(points: [number, number][]): string {
  return points.map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)},${y.toFixed(2)}`).join("");
}

function bandPath(upper: [number, number][], lower: [number, number][]): string {
  const back = [...lower].reverse();
  return polyline(upper) + back.map(([x, y]) => `L${x.toFixed(2)},${y.toFixed(2)}`).join("") + "Z";
}

function axisLayer(xs: Scale, ys: Scale, xLabel: string, yLabel: string, xLog: boolean, yLog: boolean): string {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  const parts: string[] = [];
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`);
  const fmtTick = (v: number, log: boolean) => {
    if (!log) return fmt(Number(v.toPrecision(4)));
    const p = Math.log10(v);
    return Number.isInteger(p) ? `1e${p}` : v.toExponential(1);
  };
  for (const t of xs.ticks) {
    const px = xs(t);
    parts.push(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${px.toFixed(2)}" y="${y0 + 20}" text-anchor="middle" font-size="11">${fmtTick(t, xLog)}</text>`
    );
  }
  for (const t of ys.ticks) {
    const py = ys(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="#333"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${(py + 4).toFixed(2)}" text-anchor="end" font-size="11">${fmtTick(t, yLog)}</text>`
    );
    parts.push(
      `<line x1="${x0}" y1="${py.toFixed(2)}" x2="${x1}" y2="${py.toFixed(2)}" stroke="#ddd" stroke-dasharray="3,3"/>`
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="13">${xLabel}</text>`
  );
  parts.push(
    `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 18 ${(y0 + y1) / 2})">${yLabel}</text>`
  );
  return parts.join("\n");
}

function legend(names: string[]): string {
  const x = WIDTH - MARGIN.right + 12;
  return names
    .map((name, i) => {
      const y = MARGIN.top + 18 * i;
      const color = PALETTE[i % PALETTE.length];
      return (
        `<line x1="${x}" y1="${y}" x2="${x + 18}" y2="${y}" stroke="${color}" stroke-width="2"/>` +
        `<text x="${x + 24}" y="${y + 4}" font-size="11">${name}</text>`
      );
    })
    .join("\n");
}

function svgDocument(body: string, meta: Record<string, string | number>, title?: string): string {
  const attrs = Object.entries(meta)
    .map(([k, v]) => `data-${k}="${v}"`)
    .join(" ");
  const heading = title
    ? `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="15">${title}</text>`
    : "";
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" ${attrs}>\n` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>\n${heading}\n${body}\n</svg>\n`
  );
}

export function renderSweepSvg(series: SweepSeries[], recipe: FigureRecipe): string {
  if (series.length === 0) {
    throw new SchemaError(`${recipe.input}: no series matched${recipe.stat ? ` statistic '${recipe.stat}'` : ""}`);
  }
  const all = series.flatMap((s) => s.points);
  const xs = logScale(
    Math.min(...all.map((p) => p.T)),
    Math.max(...all.map((p) => p.T)),
    MARGIN.left,
    WIDTH - MARGIN.right
  );
  const positives = all.flatMap((p) => [p.mean, p.ciLo, p.ciHi]).filter((v) => v > 0);
  if (positives.length === 0) throw new SchemaError(`${recipe.input}: no positive values for a log-log plot`);
  const ys = logScale(Math.min(...positives), Math.max(...positives), HEIGHT - MARGIN.bottom, MARGIN.top);

  const layers: string[] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts = s.points.filter((p) => p.mean > 0);
    const line: [number, number][] = pts.map((p) => [xs(p.T), ys(p.mean)]);
    const bandPts = pts.filter((p) => p.ciLo > 0 && p.ciHi > 0);
    if (bandPts.length >= 2) {
      const upper: [number, number][] = bandPts.map((p) => [xs(p.T), ys(p.ciHi)]);
      const lower: [number, number][] = bandPts.map((p) => [xs(p.T), ys(p.ciLo)]);
      layers.push(
        `<path class="series-band" d="${bandPath(upper, lower)}" fill="${color}" opacity="0.15" stroke="none"/>`
      );
    }
    if (line.length >= 2) {
      layers.push(
        `<path class="series-line" d="${polyline(line)}" fill="none" stroke="${color}" stroke-width="2"/>`
      );
    } else if (line.length === 1) {
      layers.push(`<circle class="series-line" cx="${line[0][0]}" cy="${line[0][1]}" r="4" fill="${color}"/>`);
    }
    for (const [px, py] of line) {
      layers.push(`<circle cx="${px.toFixed(2)}" cy="${py.toFixed(2)}" r="2.5" fill="${color}"/>`);
    }
  });

  const body = [
    axisLayer(xs, ys, recipe.xLabel ?? "T", recipe.yLabel ?? "mean", true, true),
    ...layers,
    legend(series.map((s) => s.name)),
  ].join("\n");
  return svgDocument(
    body,
    {
      kind: "loglog-sweep",
      "series-count": series.length,
      "x-domain": `${fmt(xs.domain[0])},${fmt(xs.domain[1])}`,
      "y-domain": `${fmt(ys.domain[0])},${fmt(ys.domain[1])}`,
    },
    recipe.title
  );
}

export function renderEpisodeSvg(series: EpisodeSeries[], recipe: FigureRecipe): string {
  if (series.length === 0) throw new SchemaError(`${recipe.input}: no series in the episode file`);
  const all = series.flatMap((s) => s.points);
  const xs = linearScale(
    Math.min(...all.map((p) => p.t)),
    Math.max(...all.map((p) => p.t)),
    MARGIN.left,
    WIDTH - MARGIN.right
  );
  const values = all.map((p) => p.value);
  const ys = linearScale(Math.min(0, ...values), Math.max(...values), HEIGHT - MARGIN.bottom, MARGIN.top);

  const layers = series.map((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const line: [number, number][] = s.points.map((p) => [xs(p.t), ys(p.value)]);
    return `<path class="series-line" d="${polyline(line)}" fill="none" stroke="${color}" stroke-width="1.6"/>`;
  });

  const body = [
    axisLayer(xs, ys, recipe.xLabel ?? "round", recipe.yLabel ?? recipe.field ?? "value", false, false),
    ...layers,
    legend(series.map((s) => s.name)),
  ].join("\n");
  return svgDocument(
    body,
    {
      kind: "episode-series",
      "series-count": series.length,
      "x-domain": `${fmt(xs.domain[0])},${fmt(xs.domain[1])}`,
      "y-domain": `${fmt(ys.domain[0])},${fmt(ys.domain[1])}`,
    },
    recipe.title
  );
}

/** Render a recipe to its SVG string (exposed for tests). */
export function renderToString(recipe: FigureRecipe): string {
  const source = readFileSync(recipe.input, "utf8");
  if (recipe.kind === "loglog-sweep") {
    return renderSweepSvg(sweepSeries(parseResultsCsv(source, recipe.input), recipe.stat), recipe);
  }
  if (recipe.kind === "episode-series") {
    return renderEpisodeSvg(episodeSeries(parseSeriesCsv(source, recipe.input), recipe.field ?? "multiplier"), recipe);
  }
  throw new SchemaError(`unknown plot kind '${recipe.kind}'`);
}

/** Render a recipe and write the image file. */
export function render(recipe: FigureRecipe): void {
  writeFileSync(recipe.output, renderToString(recipe));
}
