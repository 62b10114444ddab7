/** Time-series helpers shared by the presets. */

export interface Series {
  label: string;
  t: number[];
  values: number[];
}

/** Centered moving average over a window of `n` samples (clipped at the
 * ends); n <= 1 returns the input unchanged. */
export function movingAverage(values: number[], n: number): number[] {
  if (n <= 1) return values.slice();
  const half = Math.floor(n / 2);
  const out = new Array<number>(values.length);
  for (let i = 0; i < values.length; i++) {
    const lo = Math.max(0, i - half);
    const hi = Math.min(values.length - 1, i + half);
    let acc = 0;
    for (let j = lo; j <= hi; j++) acc += values[j];
    out[i] = acc / (hi - lo + 1);
  }
  return out;
}

export function mean(values: number[]): number {
  if (values.length === 0) return 0;
  let acc = 0;
  for (const v of values) acc += v;
  return acc / values.length;
}

/** Element-wise mean across several equally long columns. */
export function rowMean(columns: number[][]): number[] {
  const n = columns[0].length;
  const out = new Array<number>(n).fill(0);
  for (const col of columns) {
    if (col.length !== n) throw new Error("column length mismatch");
    for (let i = 0; i < n; i++) out[i] += col[i];
  }
  for (let i = 0; i < n; i++) out[i] /= columns.length;
  return out;
}

export function diff(a: number[], b: number[]): number[] {
  if (a.length !== b.length) {
    throw new Error(
      `series length mismatch: ${a.length} vs ${b.length} rows ` +
        "(runs must share duration and recording interval)",
    );
  }
  return a.map((v, i) => v - b[i]);
}
