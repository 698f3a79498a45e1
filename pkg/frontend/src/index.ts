export { render, renderToString, renderSweepSvg, renderEpisodeSvg } from "./render.js";
export type { FigureRecipe, PlotKind } from "./render.js";
export { BUNDLED_RECIPES, recipeFor } from "./recipes.js";
export {
  SchemaError,
  parseResultsCsv,
  parseSeriesCsv,
  sweepSeries,
  episodeSeries,
} from "./schema.js";
export type { ResultsRow, SeriesRow, SweepSeries, EpisodeSeries } from "./schema.js";
