/**
 * Deterministic single-panel SVG line chart.  No timestamps or random
 * ids anywhere, so the same data always yields the same bytes.
 */
import { Series } from "./series.js";

const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

export interface ChartOptions {
  title: string;
  yLabel: string;
  width?: number;
  height?: number;
}

const MARGIN = { top: 34, right: 150, bottom: 40, left: 64 };

export function lineChart(series: Series[], opts: ChartOptions): string {
  const width = opts.width ?? 960;
  const height = opts.height ?? 420;
  const iw = width - MARGIN.left - MARGIN.right;
  const ih = height - MARGIN.top - MARGIN.bottom;

  let tMin = Infinity;
  let tMax = -Infinity;
  let vMin = 0;
  let vMax = -Infinity;
  for (const s of series) {
    for (const t of s.t) {
      if (t < tMin) tMin = t;
      if (t > tMax) tMax = t;
    }
    for (const v of s.values) {
      if (v < vMin) vMin = v;
      if (v > vMax) vMax = v;
    }
  }
  if (!isFinite(tMin)) {
    tMin = 0;
    tMax = 1;
  }
  if (vMax <= vMin) vMax = vMin + 1;

  const x = (t: number) => MARGIN.left + ((t - tMin) / (tMax - tMin)) * iw;
  const y = (v: number) => MARGIN.top + ih - ((v - vMin) / (vMax - vMin)) * ih;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${MARGIN.left}" y="20" font-family="sans-serif" ` +
      `font-size="15" font-weight="bold">${escapeXml(opts.title)}</text>`,
  );

  // axes with hour ticks on x
  const axisY = MARGIN.top + ih;
  parts.push(
    `<line x1="${MARGIN.left}" y1="${axisY}" x2="${MARGIN.left + iw}" ` +
      `y2="${axisY}" stroke="black"/>`,
  );
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" ` +
      `y2="${axisY}" stroke="black"/>`,
  );
  const hours = (tMax - tMin) / 3600;
  const stepH = hours > 72 ? 24 : hours > 24 ? 6 : 2;
  for (let h = 0; h <= hours + 1e-9; h += stepH) {
    const tx = x(tMin + h * 3600);
    parts.push(
      `<line x1="${fmt(tx)}" y1="${axisY}" x2="${fmt(tx)}" ` +
        `y2="${axisY + 5}" stroke="black"/>`,
    );
    parts.push(
      `<text x="${fmt(tx)}" y="${axisY + 18}" font-family="sans-serif" ` +
        `font-size="11" text-anchor="middle">${h}h</text>`,
    );
  }
  for (let i = 0; i <= 4; i++) {
    const v = vMin + ((vMax - vMin) * i) / 4;
    const ty = y(v);
    parts.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(ty)}" x2="${MARGIN.left}" ` +
        `y2="${fmt(ty)}" stroke="black"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${fmt(ty + 4)}" ` +
        `font-family="sans-serif" font-size="11" text-anchor="end">` +
        `${fmt(v)}</text>`,
    );
  }
  parts.push(
    `<text x="16" y="${MARGIN.top - 10}" font-family="sans-serif" ` +
      `font-size="12">${escapeXml(opts.yLabel)}</text>`,
  );

  series.forEach((s, si) => {
    const color = PALETTE[si % PALETTE.length];
    const pts = s.t
      .map((t, i) => `${fmt(x(t))},${fmt(y(s.values[i]))}`)
      .join(" ");
    const dash = si >= PALETTE.length ? ' stroke-dasharray="4 3"' : "";
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${color}" ` +
        `stroke-width="1.3"${dash}/>`,
    );
    const ly = MARGIN.top + 14 * si;
    const lx = MARGIN.left + iw + 10;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 18}" y2="${ly}" ` +
        `stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(
      `<text x="${lx + 22}" y="${ly + 4}" font-family="sans-serif" ` +
        `font-size="11">${escapeXml(s.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function fmt(v: number): string {
  return v.toFixed(2);
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}
