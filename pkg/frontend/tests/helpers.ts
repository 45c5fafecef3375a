import type { Painter2D } from "../src/draw.js";

/** Records every draw command so identical scenes can be compared. */
export function recordingPainter(): { ctx: Painter2D; log: string[] } {
  const log: string[] = [];
  const push =
    (name: string) =>
    (...args: unknown[]) =>
      void log.push(`${name}(${args.map((a) => String(a)).join(",")})`);
  const state = {
    fillStyle: "" as string | CanvasGradient,
    strokeStyle: "" as string | CanvasGradient,
    lineWidth: 0,
    font: "",
    textAlign: "start" as CanvasTextAlign,
    textBaseline: "alphabetic" as CanvasTextBaseline,
    globalAlpha: 1,
  };
  const ctx: Record<string, unknown> = {
    clearRect: push("clearRect"),
    fillRect: push("fillRect"),
    strokeRect: push("strokeRect"),
    beginPath: push("beginPath"),
    moveTo: push("moveTo"),
    lineTo: push("lineTo"),
    arc: push("arc"),
    stroke: push("stroke"),
    fill: push("fill"),
    fillText: push("fillText"),
  };
  for (const key of Object.keys(state) as Array<keyof typeof state>) {
    Object.defineProperty(ctx, key, {
      get: () => state[key],
      set: (v) => {
        (state as Record<string, unknown>)[key] = v;
        log.push(`${key}=${String(v)}`);
      },
    });
  }
  return { ctx: ctx as unknown as Painter2D, log };
}
