/** Heatmap view model for the learned reward surface.
 *
 * Numbers pass through from the surface payload untouched; the model only
 * adds a color per cell (mean), an overlay opacity per cell (std), and
 * legend/axis annotations in raw units. Cell [i][j] sits at normalized
 * coordinates (i/(grid-1), j/(grid-1)) on the (first, second) feature
 * axes.
 */

import type { Axis, SurfacePayload } from "./api.js";

export class GridShapeError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "GridShapeError";
  }
}

export interface HeatmapModel {
  grid: number;
  /** exactly the payload's numbers, no renormalization */
  mean: number[][];
  std: number[][];
  /** css fill per cell, linear in mean between legend lo..hi */
  fill: string[][];
  /** uncertainty overlay opacity per cell in [0,1], linear in std */
  shade: number[][];
  legend: { lo: number; hi: number };
  axes: Axis[];
}

const LOW_RGB = [23, 49, 106] as const; // deep blue = lowest reward
const HIGH_RGB = [250, 204, 86] as const; // warm yellow = highest reward

function rampColor(t: number): string {
  const r = Math.round(LOW_RGB[0] + t * (HIGH_RGB[0] - LOW_RGB[0]));
  const g = Math.round(LOW_RGB[1] + t * (HIGH_RGB[1] - LOW_RGB[1]));
  const b = Math.round(LOW_RGB[2] + t * (HIGH_RGB[2] - LOW_RGB[2]));
  return `rgb(${r},${g},${b})`;
}

/** Exported so tests can name the exact mid-scale color. */
export function meanColor(value: number, lo: number, hi: number): string {
  const t = hi > lo ? (value - lo) / (hi - lo) : 0.5;
  return rampColor(Math.min(1, Math.max(0, t)));
}

function checkMatrix(m: unknown, grid: number, label: string): number[][] {
  if (!Array.isArray(m) || m.length !== grid) {
    throw new GridShapeError(`${label} must have ${grid} rows`);
  }
  for (const row of m) {
    if (!Array.isArray(row) || row.length !== grid) {
      throw new GridShapeError(`${label} rows must all have ${grid} entries`);
    }
    for (const v of row) {
      if (typeof v !== "number" || !Number.isFinite(v)) {
        throw new GridShapeError(`${label} entries must be finite numbers`);
      }
    }
  }
  return m as number[][];
}

export function buildHeatmap(payload: SurfacePayload): HeatmapModel {
  const grid = payload.grid;
  if (!Number.isInteger(grid) || grid < 2) {
    throw new GridShapeError("grid must be an integer >= 2");
  }
  const mean = checkMatrix(payload.mean, grid, "mean");
  const std = checkMatrix(payload.std, grid, "std");
  if (!Array.isArray(payload.axes) || payload.axes.length !== 2) {
    throw new GridShapeError("surface needs exactly two axes");
  }

  let lo = Infinity;
  let hi = -Infinity;
  let maxStd = 0;
  for (let i = 0; i < grid; i++) {
    for (let j = 0; j < grid; j++) {
      const v = mean[i]![j]!;
      if (v < lo) lo = v;
      if (v > hi) hi = v;
      const s = std[i]![j]!;
      if (s > maxStd) maxStd = s;
    }
  }

  const fill: string[][] = [];
  const shade: number[][] = [];
  for (let i = 0; i < grid; i++) {
    const frow: string[] = [];
    const srow: number[] = [];
    for (let j = 0; j < grid; j++) {
      frow.push(meanColor(mean[i]![j]!, lo, hi));
      srow.push(maxStd > 0 ? std[i]![j]! / maxStd : 0);
    }
    fill.push(frow);
    shade.push(srow);
  }

  return {
    grid,
    mean,
    std,
    fill,
    shade,
    legend: { lo, hi },
    axes: payload.axes,
  };
}

/** Raw-unit coordinates of cell [i][j] for axis labels and hover text. */
export function cellToRaw(
  model: HeatmapModel,
  i: number,
  j: number,
): [number, number] {
  const a0 = model.axes[0]!;
  const a1 = model.axes[1]!;
  const n = model.grid - 1;
  return [a0.lo + (i / n) * (a0.hi - a0.lo), a1.lo + (j / n) * (a1.hi - a1.lo)];
}
