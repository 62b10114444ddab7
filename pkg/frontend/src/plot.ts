#!/usr/bin/env node
/**
 * Render a figure preset from one or two run directories.
 *
 * Usage:
 *   evcosim-plot --preset NAME --run DIR [--baseline DIR] --out FILE.svg
 *                [--station ID] [--groups a,b:c,d] [--smoothing SECONDS]
 *
 * Writes the SVG plus a '<out without .svg>.csv' with the plotted series.
 */
import { writeFileSync } from "fs";
import { writeCsvText } from "./csv.js";
import { PRESETS, PresetOptions, resolvePreset } from "./presets.js";
import { lineChart } from "./svg.js";

interface Args {
  preset?: string;
  run?: string;
  baseline?: string;
  out?: string;
  station?: string;
  groups?: string;
  smoothing?: string;
}

function parseArgs(argv: string[]): Args {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) {
      throw new Error(`unexpected argument '${arg}'`);
    }
    const key = arg.slice(2);
    const value = argv[i + 1];
    if (value === undefined) {
      throw new Error(`--${key} expects a value`);
    }
    out[key] = value;
    i++;
  }
  return out as Args;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  if (!args.preset || !args.run || !args.out) {
    console.error(
      "usage: evcosim-plot --preset NAME --run DIR [--baseline DIR] " +
        "--out FILE.svg",
    );
    console.error("presets:");
    for (const p of PRESETS) {
      console.error(`  ${p.name.padEnd(18)} ${p.describe}`);
    }
    return 2;
  }
  const opts: PresetOptions = {
    run: args.run,
    baseline: args.baseline,
    station: args.station,
    groups: args.groups,
    smoothingS: args.smoothing === undefined ? undefined : Number(args.smoothing),
  };
  try {
    const result = resolvePreset(args.preset, opts);
    const svg = lineChart(result.series, {
      title: result.title,
      yLabel: result.yLabel,
    });
    writeFileSync(args.out, svg);
    writeFileSync(dataPath(args.out), seriesCsv(result));
    for (const line of result.printed) {
      console.log(line);
    }
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

export function dataPath(out: string): string {
  return out.replace(/\.svg$/, "") + ".csv";
}

export function seriesCsv(result: {
  series: { label: string; t: number[]; values: number[] }[];
}): string {
  const header = ["t", ...result.series.map((s) => s.label)];
  const t = result.series[0]?.t ?? [];
  const rows = t.map((tv, i) => [
    tv,
    ...result.series.map((s) => s.values[i]),
  ]);
  return writeCsvText(header, rows);
}

if (process.argv[1] && process.argv[1].endsWith("plot.js")) {
  process.exit(main(process.argv.slice(2)));
}
