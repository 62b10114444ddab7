/**
 * Figure presets over run-record directories.
 *
 * Every preset resolves to a set of labelled time series plus optional
 * printed summary lines; rendering and the plotted-series CSV both come
 * from that same resolved data, so re-runs are byte-identical.
 */
import { existsSync } from "fs";
import { join } from "path";
import { Table, column, filterRows, readCsv } from "./csv.js";
import { Series, diff, mean, movingAverage, rowMean } from "./series.js";

export interface PresetResult {
  title: string;
  yLabel: string;
  series: Series[];
  printed: string[];
}

export interface PresetSpec {
  name: string;
  stream: string;
  needsBaseline: boolean;
  describe: string;
}

export interface PresetOptions {
  run: string;
  baseline?: string;
  station?: string;
  /** "CS1,CS3:CS2,CS4" style group override for price comparison */
  groups?: string;
  smoothingS?: number;
}

export const PRESETS: PresetSpec[] = [
  { name: "fcs-load", stream: "fcs_load.csv", needsBaseline: false,
    describe: "per-station and total fast-charging load" },
  { name: "scs-load", stream: "scs_load.csv", needsBaseline: false,
    describe: "aggregate slow-charging load, V2G export and net" },
  { name: "scs-v2g-compare", stream: "scs_load.csv", needsBaseline: true,
    describe: "net slow-charging load with V2G vs the baseline run" },
  { name: "station-trace", stream: "v2g.csv", needsBaseline: false,
    describe: "V2G capacity / dispatch / delivery of one station" },
  { name: "fcs-diff", stream: "fcs_load.csv", needsBaseline: true,
    describe: "per-station fast-charging load difference vs baseline" },
  { name: "price-groups", stream: "fcs_load.csv", needsBaseline: false,
    describe: "mean load of the two price groups, averages printed" },
];

const DEFAULT_SMOOTHING_S = 900;

function loadStream(runDir: string, stream: string): Table {
  const path = join(runDir, stream);
  if (!existsSync(path)) {
    throw new Error(`${runDir}: missing stream '${stream}'`);
  }
  return readCsv(path);
}

function smoothWindow(t: number[], smoothingS: number): number {
  if (t.length < 2) return 1;
  const dt = t[1] - t[0];
  return Math.max(1, Math.round(smoothingS / dt));
}

function stationColumns(table: Table): string[] {
  return table.header.filter((h) => h !== "t" && !h.startsWith("total"));
}

export function resolvePreset(name: string, opts: PresetOptions): PresetResult {
  const spec = PRESETS.find((p) => p.name === name);
  if (!spec) {
    const known = PRESETS.map((p) => p.name).join(", ");
    throw new Error(`unknown preset '${name}' (known: ${known})`);
  }
  if (spec.needsBaseline && !opts.baseline) {
    throw new Error(`preset '${name}' requires --baseline (exactly two runs)`);
  }
  const smoothing = opts.smoothingS ?? DEFAULT_SMOOTHING_S;
  switch (name) {
    case "fcs-load":
      return fcsLoad(opts, smoothing);
    case "scs-load":
      return scsLoad(opts, smoothing);
    case "scs-v2g-compare":
      return scsCompare(opts, smoothing);
    case "station-trace":
      return stationTrace(opts);
    case "fcs-diff":
      return fcsDiff(opts, smoothing);
    case "price-groups":
      return priceGroups(opts, smoothing);
    default:
      throw new Error(`preset '${name}' not implemented`);
  }
}

function fcsLoad(opts: PresetOptions, smoothing: number): PresetResult {
  const table = loadStream(opts.run, "fcs_load.csv");
  const t = column(table, "t", "fcs_load.csv");
  const w = smoothWindow(t, smoothing);
  const series = stationColumns(table).map((name) => ({
    label: name,
    t,
    values: movingAverage(column(table, name, "fcs_load.csv"), w),
  }));
  series.push({
    label: "total",
    t,
    values: movingAverage(column(table, "total", "fcs_load.csv"), w),
  });
  return { title: "Fast-charging station load", yLabel: "kW", series,
           printed: [] };
}

function scsLoad(opts: PresetOptions, smoothing: number): PresetResult {
  const table = loadStream(opts.run, "scs_load.csv");
  const t = column(table, "t", "scs_load.csv");
  const w = smoothWindow(t, smoothing);
  const series = ["total_charge_kw", "total_v2g_kw", "total_net_kw"].map(
    (name) => ({
      label: name,
      t,
      values: movingAverage(column(table, name, "scs_load.csv"), w),
    }),
  );
  return { title: "Slow-charging station load", yLabel: "kW", series,
           printed: [] };
}

function scsCompare(opts: PresetOptions, smoothing: number): PresetResult {
  const run = loadStream(opts.run, "scs_load.csv");
  const base = loadStream(opts.baseline!, "scs_load.csv");
  const t = column(run, "t", "scs_load.csv");
  const w = smoothWindow(t, smoothing);
  const a = movingAverage(column(run, "total_net_kw", "scs_load.csv"), w);
  const b = movingAverage(column(base, "total_net_kw", "scs_load.csv"), w);
  diff(a, b); // length guard
  return {
    title: "Net slow-charging load: V2G vs baseline",
    yLabel: "kW",
    series: [
      { label: "with V2G", t, values: a },
      { label: "baseline", t, values: b },
    ],
    printed: [],
  };
}

function stationTrace(opts: PresetOptions): PresetResult {
  const table = loadStream(opts.run, "v2g.csv");
  const stations = [...new Set(table.cells.map(
    (row) => row[table.index.get("station") ?? 1]))].sort();
  if (stations.length === 0) {
    throw new Error("v2g.csv: no station rows recorded");
  }
  let station = opts.station;
  if (station === undefined) {
    let best = stations[0];
    let bestCap = -1;
    for (const s of stations) {
      const rows = filterRows(table, "station", s, "v2g.csv");
      const cap = mean(column(rows, "capacity_kw", "v2g.csv"));
      if (cap > bestCap) {
        bestCap = cap;
        best = s;
      }
    }
    station = best;
  } else if (!stations.includes(station)) {
    throw new Error(`v2g.csv: no rows for station '${station}'`);
  }
  const rows = filterRows(table, "station", station, "v2g.csv");
  const t = column(rows, "t", "v2g.csv");
  const series = ["capacity_kw", "dispatched_kw", "delivered_prev_kw"].map(
    (name) => ({ label: name, t, values: column(rows, name, "v2g.csv") }),
  );
  return { title: `V2G trace of station ${station}`, yLabel: "kW", series,
           printed: [] };
}

function fcsDiff(opts: PresetOptions, smoothing: number): PresetResult {
  const run = loadStream(opts.run, "fcs_load.csv");
  const base = loadStream(opts.baseline!, "fcs_load.csv");
  const t = column(run, "t", "fcs_load.csv");
  const w = smoothWindow(t, smoothing);
  const series = stationColumns(run).map((name) => ({
    label: name,
    t,
    values: movingAverage(
      diff(column(run, name, "fcs_load.csv"),
           column(base, name, "fcs_load.csv")),
      w,
    ),
  }));
  return { title: "Fast-charging load difference vs baseline", yLabel: "kW",
           series, printed: [] };
}

function parseGroups(stations: string[], spec?: string): [string[], string[]] {
  if (spec) {
    const halves = spec.split(":");
    if (halves.length !== 2) {
      throw new Error("--groups expects 'a,b,...:c,d,...'");
    }
    const [a, b] = halves.map((h) => h.split(",").filter((s) => s.length));
    for (const s of [...a, ...b]) {
      if (!stations.includes(s)) {
        throw new Error(`fcs_load.csv: missing column '${s}'`);
      }
    }
    return [a, b];
  }
  const a: string[] = [];
  const b: string[] = [];
  stations.forEach((s, i) => (i % 2 === 0 ? a : b).push(s));
  return [a, b];
}

function priceGroups(opts: PresetOptions, smoothing: number): PresetResult {
  const table = loadStream(opts.run, "fcs_load.csv");
  const t = column(table, "t", "fcs_load.csv");
  const w = smoothWindow(t, smoothing);
  const stations = stationColumns(table);
  const [groupA, groupB] = parseGroups(stations, opts.groups);
  const colsA = groupA.map((s) => column(table, s, "fcs_load.csv"));
  const colsB = groupB.map((s) => column(table, s, "fcs_load.csv"));
  const meanA = rowMean(colsA);
  const meanB = rowMean(colsB);
  const printed = [
    `group A (${groupA.join(" ")}) mean load kW: ${fullPrec(mean(meanA))}`,
    `group B (${groupB.join(" ")}) mean load kW: ${fullPrec(mean(meanB))}`,
  ];
  return {
    title: "Mean station load per price group",
    yLabel: "kW",
    series: [
      { label: "group A", t, values: movingAverage(meanA, w) },
      { label: "group B", t, values: movingAverage(meanB, w) },
    ],
    printed,
  };
}

/** Mean of the unsmoothed group series, exposed for tests. */
export function groupAverages(
  runDir: string,
  groups?: string,
): { a: number; b: number } {
  const table = loadStream(runDir, "fcs_load.csv");
  const stations = stationColumns(table);
  const [groupA, groupB] = parseGroups(stations, groups);
  const a = mean(rowMean(groupA.map((s) => column(table, s))));
  const b = mean(rowMean(groupB.map((s) => column(table, s))));
  return { a, b };
}

function fullPrec(v: number): string {
  return String(v);
}
