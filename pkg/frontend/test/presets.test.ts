import assert from "node:assert/strict";
import { test } from "node:test";
import { readFileSync } from "fs";
import { join } from "path";
import { mkdtempSync } from "fs";
import { tmpdir } from "os";

import { groupAverages, resolvePreset, PRESETS } from "../src/presets.js";
import { movingAverage, rowMean, mean } from "../src/series.js";
import { main, dataPath } from "../src/plot.js";
import { readCsv, column } from "../src/csv.js";
import { makeRunDir } from "./fixtures.js";

test("moving average window of one is identity", () => {
  const xs = [3, 1, 4, 1, 5];
  assert.deepEqual(movingAverage(xs, 1), xs);
});

test("moving average is exact on a known window", () => {
  const xs = [0, 3, 6, 9, 12];
  // centered window of 3, clipped at the ends
  assert.deepEqual(movingAverage(xs, 3), [1.5, 3, 6, 9, 10.5]);
});

test("every preset renders series from a run dir", () => {
  const run = makeRunDir();
  const base = makeRunDir();
  for (const spec of PRESETS) {
    const result = resolvePreset(spec.name, {
      run,
      baseline: spec.needsBaseline ? base : undefined,
    });
    assert.ok(result.series.length > 0, spec.name);
    for (const s of result.series) {
      assert.equal(s.t.length, s.values.length, spec.name);
      assert.ok(s.t.length > 0, spec.name);
    }
  }
});

test("diff preset on identical runs is identically zero", () => {
  const run = makeRunDir({ rows: 90 });
  const result = resolvePreset("fcs-diff", { run, baseline: run });
  for (const s of result.series) {
    for (const v of s.values) {
      assert.equal(v, 0, s.label);
    }
  }
});

test("diff preset demands two runs", () => {
  const run = makeRunDir();
  assert.throws(() => resolvePreset("fcs-diff", { run }), /baseline/);
});

test("missing stream is named in the error", () => {
  const empty = mkdtempSync(join(tmpdir(), "plotkit-empty-"));
  assert.throws(
    () => resolvePreset("fcs-load", { run: empty }),
    /fcs_load\.csv/,
  );
});

test("missing column is named in the error", () => {
  const run = makeRunDir();
  assert.throws(
    () => resolvePreset("price-groups", { run, groups: "CS1:CS9" }),
    /CS9/,
  );
});

test("unknown preset lists the known ones", () => {
  const run = makeRunDir();
  assert.throws(() => resolvePreset("nope", { run }), /fcs-load/);
});

test("printed group averages equal independent column means to 1e-9", () => {
  const run = makeRunDir({ stations: ["CS1", "CS2", "CS3", "CS4"] });
  const { a, b } = groupAverages(run);
  // independent recomputation straight from the CSV
  const table = readCsv(join(run, "fcs_load.csv"));
  const meanOf = (cols: string[]) =>
    mean(rowMean(cols.map((c) => column(table, c))));
  assert.ok(Math.abs(a - meanOf(["CS1", "CS3"])) <= 1e-9);
  assert.ok(Math.abs(b - meanOf(["CS2", "CS4"])) <= 1e-9);
  const result = resolvePreset("price-groups", { run });
  assert.match(result.printed[0], new RegExp(String(a).slice(0, 12)));
});

test("station trace picks the largest-capacity station by default", () => {
  const run = makeRunDir();
  const result = resolvePreset("station-trace", { run });
  assert.match(result.title, /S_b/); // fixture gives S_b the larger capacity
});

test("station trace rejects unknown station", () => {
  const run = makeRunDir();
  assert.throws(
    () => resolvePreset("station-trace", { run, station: "S_zzz" }),
    /S_zzz/,
  );
});

test("run length mismatch is reported", () => {
  const run = makeRunDir({ rows: 60 });
  const base = makeRunDir({ rows: 90 });
  assert.throws(
    () => resolvePreset("fcs-diff", { run, baseline: base }),
    /length mismatch/,
  );
});

test("cli writes svg and plotted-series csv deterministically", () => {
  const run = makeRunDir();
  const outDir = mkdtempSync(join(tmpdir(), "plotkit-out-"));
  const out = join(outDir, "fig.svg");
  assert.equal(main(["--preset", "fcs-load", "--run", run, "--out", out]), 0);
  const svg1 = readFileSync(out, "utf8");
  const csv1 = readFileSync(dataPath(out), "utf8");
  assert.match(svg1, /^<svg /);
  assert.match(csv1, /^t,CS1,CS2,CS3,CS4,total\n/);
  assert.equal(main(["--preset", "fcs-load", "--run", run, "--out", out]), 0);
  assert.equal(readFileSync(out, "utf8"), svg1);
  assert.equal(readFileSync(dataPath(out), "utf8"), csv1);
});

test("cli exit codes: missing args 2, bad input 1", () => {
  assert.equal(main(["--preset", "fcs-load"]), 2);
  const empty = mkdtempSync(join(tmpdir(), "plotkit-e2-"));
  assert.equal(
    main(["--preset", "fcs-load", "--run", empty, "--out",
          join(empty, "x.svg")]),
    1,
  );
});
