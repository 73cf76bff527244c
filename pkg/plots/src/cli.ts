#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { render } from "./render.js";
import { PLOT_KINDS, PlotKind } from "./types.js";

const argv = yargs(hideBin(process.argv))
    .scriptName("plot")
    .command("$0 <kind>", "render a figure from a solver CSV", (y) =>
        y
            .positional("kind", {
                describe: "figure type",
                choices: PLOT_KINDS,
                demandOption: true,
            })
            .option("in", {
                type: "string",
                describe: "input CSV path",
                demandOption: true,
            })
            .option("out", {
                type: "string",
                describe: "output SVG path (a .data.json sidecar is written next to it)",
                demandOption: true,
            })
    )
    .strict()
    .fail((msg, err) => {
        // usage problems exit 2; data problems are handled below and exit 1
        console.error(msg ?? err?.message ?? "usage error");
        process.exit(2);
    })
    .parseSync();

try {
    const result = render({
        kind: argv.kind as PlotKind,
        input: argv.in as string,
        output: argv.out as string,
    });
    console.log(`wrote ${result.svgPath}`);
    console.log(`wrote ${result.sidecarPath}`);
} catch (e) {
    console.error(`error: ${(e as Error).message}`);
    process.exit(1);
}
