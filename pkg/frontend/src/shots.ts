/** Straight-line shot geometry for the top-view course.
 *
 * A shot is fully described by its launch angle and speed; the drawn path
 * is the straight segment from the tee in that direction with length
 * proportional to speed (factor 1 in table units), ending at a cross
 * marker where the ball comes to rest. Angle 0 points straight up-course
 * (+y); positive angles swing toward +x.
 */

import type { Candidate, PendingQuery } from "./api.js";

export class MalformedPayloadError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MalformedPayloadError";
  }
}

export type Point = readonly [number, number];

export interface ShotRendering {
  angle: number;
  speed: number;
  path: readonly Point[];
  landing: Point;
}

export function renderShot(params: Record<string, number>): ShotRendering {
  const angle = params["angle"];
  const speed = params["speed"];
  if (typeof angle !== "number" || !Number.isFinite(angle)) {
    throw new MalformedPayloadError("shot payload needs a finite angle");
  }
  if (typeof speed !== "number" || !Number.isFinite(speed) || speed < 0) {
    throw new MalformedPayloadError("shot payload needs a speed >= 0");
  }
  const landing: Point = [speed * Math.sin(angle), speed * Math.cos(angle)];
  return { angle, speed, path: [[0, 0], landing], landing };
}

export interface QueryScene {
  first: ShotRendering;
  second: ShotRendering;
  /** table half-width/height the painter should fit in view */
  extent: number;
}

const FIRST_COLOR = "#2563c7"; // blue = first candidate
const SECOND_COLOR = "#1e8a4c"; // green = second candidate

export const SHOT_COLORS = { first: FIRST_COLOR, second: SECOND_COLOR } as const;

function candidateShot(c: Candidate | undefined, which: string): ShotRendering {
  if (!c || typeof c !== "object" || typeof c.params !== "object" || c.params === null) {
    throw new MalformedPayloadError(`${which} candidate is missing its params`);
  }
  return renderShot(c.params);
}

export function renderQuery(q: PendingQuery): QueryScene {
  const first = candidateShot(q.first, "first");
  const second = candidateShot(q.second, "second");
  const reach = Math.max(
    Math.abs(first.landing[0]),
    Math.abs(first.landing[1]),
    Math.abs(second.landing[0]),
    Math.abs(second.landing[1]),
    1.0,
  );
  return { first, second, extent: reach * 1.15 };
}
