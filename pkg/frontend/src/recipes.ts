/**
 * Bundled figure recipes, one per experiment protocol. Each expects the
 * CSV files that `karmapace run <spec> -o <dir>` leaves in its output
 * directory and never recomputes statistics.
 */

import { FigureRecipe } from "./render.js";

interface RecipeTemplate {
  file: "results.csv" | "series.csv";
  kind: FigureRecipe["kind"];
  xLabel: string;
  yLabel: string;
  title: string;
  stat?: string;
  field?: "multiplier" | "cum_saved";
}

export const BUNDLED_RECIPES: Record<string, RecipeTemplate> = {
  "rate-pacing-regret": {
    file: "results.csv",
    kind: "loglog-sweep",
    stat: "regret_per_round",
    xLabel: "T",
    yLabel: "mean regret per round",
    title: "Rate pacing vs hindsight benchmark",
  },
  "karma-pacing-regret": {
    file: "results.csv",
    kind: "loglog-sweep",
    stat: "regret_per_round",
    xLabel: "T",
    yLabel: "mean regret per round",
    title: "Karma pacing vs hindsight benchmark",
  },
  "convergence-distance": {
    file: "results.csv",
    kind: "loglog-sweep",
    stat: "avg_sq_distance",
    xLabel: "T",
    yLabel: "avg squared distance to stationary profile",
    title: "Simultaneous learning convergence",
  },
  "hitting-time": {
    file: "results.csv",
    kind: "loglog-sweep",
    stat: "hit_fraction",
    xLabel: "T",
    yLabel: "mean hitting time / T",
    title: "Hitting-time study",
  },
  "episode-multiplier": {
    file: "series.csv",
    kind: "episode-series",
    field: "multiplier",
    xLabel: "round",
    yLabel: "multiplier",
    title: "Strategy comparison: multiplier evolution",
  },
  "episode-saved-value": {
    file: "series.csv",
    kind: "episode-series",
    field: "cum_saved",
    xLabel: "round",
    yLabel: "cumulative saved value",
    title: "Strategy comparison: cumulative value of winning",
  },
};

export function recipeFor(name: string, resultsDir: string, output: string): FigureRecipe {
  const template = BUNDLED_RECIPES[name];
  if (!template) {
    throw new Error(`unknown recipe '${name}'; known: ${Object.keys(BUNDLED_RECIPES).join(", ")}`);
  }
  return {
    input: `${resultsDir}/${template.file}`,
    output,
    kind: template.kind,
    xLabel: template.xLabel,
    yLabel: template.yLabel,
    title: template.title,
    stat: template.stat,
    field: template.field,
  };
}
