#!/usr/bin/env node
/** Figure rendering CLI; consumes only the documented CSV schemas. */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { BUNDLED_RECIPES, recipeFor } from "./recipes.js";
import { FigureRecipe, render } from "./render.js";
import { SchemaError } from "./schema.js";

function fail(message: string): never {
  console.error(`error: ${message}`);
  process.exit(1);
}

await yargs(hideBin(process.argv))
  .command(
    "render",
    "Render a figure from a CSV file",
    (y) =>
      y
        .option("input", { type: "string", demandOption: true, describe: "results.csv or series.csv" })
        .option("output", { type: "string", demandOption: true, describe: "output SVG path" })
        .option("kind", {
          choices: ["loglog-sweep", "episode-series"] as const,
          demandOption: true,
        })
        .option("stat", { type: "string", describe: "statistic-name prefix filter (loglog-sweep)" })
        .option("field", {
          choices: ["multiplier", "cum_saved"] as const,
          describe: "column to plot (episode-series)",
        })
        .option("x-label", { type: "string" })
        .option("y-label", { type: "string" })
        .option("title", { type: "string" }),
    (argv) => {
      const recipe: FigureRecipe = {
        input: argv.input,
        output: argv.output,
        kind: argv.kind,
        stat: argv.stat,
        field: argv.field,
        xLabel: argv["x-label"],
        yLabel: argv["y-label"],
        title: argv.title,
      };
      try {
        render(recipe);
        console.log(`wrote ${argv.output}`);
      } catch (err) {
        if (err instanceof SchemaError || err instanceof Error) fail(err.message);
        throw err;
      }
    }
  )
  .command(
    "render-recipe <name>",
    "Render a bundled recipe against an experiment output directory",
    (y) =>
      y
        .positional("name", { type: "string", demandOption: true })
        .option("results-dir", { type: "string", demandOption: true })
        .option("output", { type: "string", demandOption: true }),
    (argv) => {
      try {
        render(recipeFor(argv.name as string, argv["results-dir"], argv.output));
        console.log(`wrote ${argv.output}`);
      } catch (err) {
        if (err instanceof Error) fail(err.message);
        throw err;
      }
    }
  )
  .command("list-recipes", "List bundled recipe names", {}, () => {
    for (const name of Object.keys(BUNDLED_RECIPES)) console.log(name);
  })
  .demandCommand(1)
  .strict()
  .help()
  .parse();
