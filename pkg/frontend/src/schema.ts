/**
 * CSV contracts of the simulation harness. Every reader validates rows with
 * zod and fails with a message naming the file, row, and offending column.
 */

import Papa from "papaparse";
import { z } from "zod";

export class SchemaError extends Error {}

const numeric = z.coerce.number().refine(Number.isFinite, "not a finite number");

export const resultsRowSchema = z.object({
  grid_id: z.coerce.number().int().nonnegative(),
  T: z.coerce.number().int().positive(),
  param_hash: z.string().min(1),
  stat_name: z.string().min(1),
  mean: numeric,
  ci_lo: numeric,
  ci_hi: numeric,
  n_reps: z.coerce.number().int().positive(),
});

export const seriesRowSchema = z.object({
  strategy: z.string().min(1),
  t: z.coerce.number().int().positive(),
  multiplier: numeric,
  cum_saved: numeric,
});

export type ResultsRow = z.infer<typeof resultsRowSchema>;
export type SeriesRow = z.infer<typeof seriesRowSchema>;

function parseCsv<T>(source: string, label: string, schema: z.ZodType<T>): T[] {
  const parsed = Papa.parse<Record<string, string>>(source.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${label}: CSV parse error at row ${first.row}: ${first.message}`);
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(`${label}: no data rows`);
  }
  const expected = schema instanceof z.ZodObject ? Object.keys(schema.shape) : [];
  const got = parsed.meta.fields ?? [];
  const missing = expected.filter((c) => !got.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(`${label}: missing columns [${missing.join(", ")}]; found [${got.join(", ")}]`);
  }
  return parsed.data.map((row, i) => {
    const out = schema.safeParse(row);
    if (!out.success) {
      const issue = out.error.issues[0];
      throw new SchemaError(`${label}: row ${i + 2}: column ${issue.path.join(".")}: ${issue.message}`);
    }
    return out.data;
  });
}

export function parseResultsCsv(source: string, label = "results.csv"): ResultsRow[] {
  return parseCsv(source, label, resultsRowSchema);
}

export function parseSeriesCsv(source: string, label = "series.csv"): SeriesRow[] {
  return parseCsv(source, label, seriesRowSchema);
}

export interface SweepSeries {
  name: string;
  points: { T: number; mean: number; ciLo: number; ciHi: number }[];
}

/** Group result rows into per-statistic sweep series ordered by horizon. */
export function sweepSeries(rows: ResultsRow[], statFilter?: string): SweepSeries[] {
  const by = new Map<string, SweepSeries>();
  for (const row of rows) {
    if (statFilter && !row.stat_name.startsWith(statFilter)) continue;
    let series = by.get(row.stat_name);
    if (!series) {
      series = { name: row.stat_name, points: [] };
      by.set(row.stat_name, series);
    }
    series.points.push({ T: row.T, mean: row.mean, ciLo: row.ci_lo, ciHi: row.ci_hi });
  }
  const out = [...by.values()];
  for (const series of out) series.points.sort((a, b) => a.T - b.T);
  return out.sort((a, b) => a.name.localeCompare(b.name));
}

export interface EpisodeSeries {
  name: string;
  points: { t: number; value: number }[];
}

/** Group episode rows into one series per strategy for the chosen field. */
export function episodeSeries(rows: SeriesRow[], field: "multiplier" | "cum_saved"): EpisodeSeries[] {
  const by = new Map<string, EpisodeSeries>();
  for (const row of rows) {
    let series = by.get(row.strategy);
    if (!series) {
      series = { name: row.strategy, points: [] };
      by.set(row.strategy, series);
    }
    series.points.push({ t: row.t, value: row[field] });
  }
  const out = [...by.values()];
  for (const series of out) series.points.sort((a, b) => a.t - b.t);
  return out.sort((a, b) => a.name.localeCompare(b.name));
}
