/** Synthetic run-record directories matching the simulator's CSV schema. */
import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";

export interface FixtureSpec {
  rows?: number;
  dt?: number;
  stations?: string[];
  loadFn?: (station: number, row: number) => number;
}

export function makeRunDir(spec: FixtureSpec = {}): string {
  const dir = mkdtempSync(join(tmpdir(), "plotkit-"));
  const rows = spec.rows ?? 120;
  const dt = spec.dt ?? 60;
  const stations = spec.stations ?? ["CS1", "CS2", "CS3", "CS4"];
  const loadFn =
    spec.loadFn ??
    ((s: number, r: number) => 50 + 10 * s + 5 * Math.sin(r / 7 + s));

  const fcsLines = [["t", ...stations, "total"].join(",")];
  for (let r = 0; r < rows; r++) {
    const loads = stations.map((_, s) => loadFn(s, r));
    const total = loads.reduce((a, b) => a + b, 0);
    fcsLines.push(
      [r * dt, ...loads.map((v) => v.toFixed(6)), total.toFixed(6)].join(","),
    );
  }
  writeFileSync(join(dir, "fcs_load.csv"), fcsLines.join("\n") + "\n");

  const scsIds = ["S_a", "S_b"];
  const scsLines = [
    ["t", ...scsIds, "total_charge_kw", "total_v2g_kw", "total_net_kw"].join(","),
  ];
  for (let r = 0; r < rows; r++) {
    const charge = 30 + 4 * Math.cos(r / 9);
    const v2g = r % 20 < 5 ? 12 : 0;
    const net = charge - v2g;
    scsLines.push(
      [r * dt, (net / 2).toFixed(6), (net / 2).toFixed(6), charge.toFixed(6),
       v2g.toFixed(6), net.toFixed(6)].join(","),
    );
  }
  writeFileSync(join(dir, "scs_load.csv"), scsLines.join("\n") + "\n");

  const v2gLines = [
    ["t", "station", "capacity_kw", "dispatched_kw", "allocated_kw",
     "delivered_prev_kw", "participants"].join(","),
  ];
  for (let r = 0; r < Math.floor((rows * dt) / 300); r++) {
    for (const [i, st] of ["S_a", "S_b"].entries()) {
      const cap = 40 + 10 * i;
      const disp = r % 4 === 0 ? cap / 2 : 0;
      v2gLines.push(
        [(r + 1) * 300, st, cap.toFixed(9), disp.toFixed(9), disp.toFixed(9),
         (disp * 0.98).toFixed(6), 2 + i].join(","),
      );
    }
  }
  writeFileSync(join(dir, "v2g.csv"), v2gLines.join("\n") + "\n");
  return dir;
}
