/** Canvas painting for the course view and the reward heatmap.
 *
 * Painters draw through Painter2D, the narrow slice of
 * CanvasRenderingContext2D they actually use. Rendering is deterministic:
 * the same model produces the same call sequence, so tests can assert on
 * recorded command streams instead of rasterized pixels.
 */

import { HeatmapModel, meanColor } from "./heatmap.js";
import { Point, QueryScene, SHOT_COLORS, ShotRendering } from "./shots.js";

export interface Painter2D {
  fillStyle: string | CanvasGradient;
  strokeStyle: string | CanvasGradient;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface ViewSize {
  width: number;
  height: number;
}

const COURSE_FELT = "#0f6b38";
const COURSE_EDGE = "#083d20";
const TEE_COLOR = "#f5f2e8";

/** Table coordinates -> pixels: tee at bottom center, +y up-course. */
function courseTransform(size: ViewSize, extent: number) {
  const margin = 18;
  const usable = Math.min(size.width, size.height) - 2 * margin;
  const scale = usable / (2 * extent);
  const teeX = size.width / 2;
  const teeY = size.height - margin;
  return (p: Point): [number, number] => [
    teeX + p[0] * scale,
    teeY - p[1] * scale,
  ];
}

function paintShot(
  ctx: Painter2D,
  shot: ShotRendering,
  color: string,
  toPixels: (p: Point) => [number, number],
): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = 3;
  ctx.beginPath();
  const start = toPixels(shot.path[0]!);
  ctx.moveTo(start[0], start[1]);
  for (const p of shot.path.slice(1)) {
    const q = toPixels(p);
    ctx.lineTo(q[0], q[1]);
  }
  ctx.stroke();

  // landing cross: where the ball comes to rest
  const [lx, ly] = toPixels(shot.landing);
  const arm = 6;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(lx - arm, ly - arm);
  ctx.lineTo(lx + arm, ly + arm);
  ctx.moveTo(lx - arm, ly + arm);
  ctx.lineTo(lx + arm, ly - arm);
  ctx.stroke();
}

export function paintScene(
  ctx: Painter2D,
  scene: QueryScene,
  size: ViewSize,
): void {
  ctx.clearRect(0, 0, size.width, size.height);
  ctx.fillStyle = COURSE_FELT;
  ctx.fillRect(0, 0, size.width, size.height);
  ctx.strokeStyle = COURSE_EDGE;
  ctx.lineWidth = 4;
  ctx.strokeRect(2, 2, size.width - 4, size.height - 4);

  const toPixels = courseTransform(size, scene.extent);

  const [teeX, teeY] = toPixels([0, 0]);
  ctx.fillStyle = TEE_COLOR;
  ctx.beginPath();
  ctx.arc(teeX, teeY, 5, 0, 2 * Math.PI);
  ctx.fill();

  paintShot(ctx, scene.first, SHOT_COLORS.first, toPixels);
  paintShot(ctx, scene.second, SHOT_COLORS.second, toPixels);
}

export function paintHeatmap(
  ctx: Painter2D,
  model: HeatmapModel,
  size: ViewSize,
): void {
  const labelBand = 22;
  const plot = Math.min(size.width, size.height) - labelBand;
  const cell = plot / model.grid;

  ctx.clearRect(0, 0, size.width, size.height);

  // grid cell [i][j]: axis 0 (i) runs left->right, axis 1 (j) bottom->top
  for (let i = 0; i < model.grid; i++) {
    for (let j = 0; j < model.grid; j++) {
      const x = i * cell;
      const y = plot - (j + 1) * cell;
      ctx.fillStyle = model.fill[i]![j]!;
      ctx.fillRect(x, y, cell + 0.5, cell + 0.5);
      const shade = model.shade[i]![j]!;
      if (shade > 0) {
        ctx.globalAlpha = 0.55 * shade;
        ctx.fillStyle = "#000000";
        ctx.fillRect(x, y, cell + 0.5, cell + 0.5);
        ctx.globalAlpha = 1;
      }
    }
  }

  ctx.strokeStyle = "#333333";
  ctx.lineWidth = 1;
  ctx.strokeRect(0, 0, plot, plot);

  // raw-unit axis labels
  const a0 = model.axes[0]!;
  const a1 = model.axes[1]!;
  ctx.fillStyle = "#222222";
  ctx.font = "11px sans-serif";
  ctx.textBaseline = "alphabetic";
  ctx.textAlign = "left";
  ctx.fillText(`${a0.name} ${fmt(a0.lo)}`, 0, plot + 14);
  ctx.textAlign = "right";
  ctx.fillText(fmt(a0.hi), plot, plot + 14);
  ctx.textAlign = "center";
  ctx.fillText(a0.name, plot / 2, plot + 14);
  ctx.textAlign = "left";
  ctx.fillText(`${a1.name} ${fmt(a1.lo)} to ${fmt(a1.hi)}`, 0, plot + 14 + 11);
}

function fmt(v: number): string {
  return Math.abs(v) >= 100 ? v.toFixed(0) : v.toPrecision(3);
}

export interface LegendModel {
  lo: number;
  hi: number;
  stops: Array<{ t: number; color: string }>;
}

/** Legend stops sample the same ramp the cells use, lo..hi. */
export function legendFor(model: HeatmapModel, stops = 16): LegendModel {
  const out: LegendModel = { lo: model.legend.lo, hi: model.legend.hi, stops: [] };
  for (let k = 0; k < stops; k++) {
    const t = stops === 1 ? 0.5 : k / (stops - 1);
    const v = model.legend.lo + t * (model.legend.hi - model.legend.lo);
    out.stops.push({ t, color: meanColor(v, model.legend.lo, model.legend.hi) });
  }
  return out;
}
