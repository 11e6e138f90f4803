/** Stroke rasterization: freehand paths to deduplicated in-bounds pixel sets. */

import { displayToImage } from "./coords.js";
import type { PixelCoord, UiStroke } from "./types.js";

export interface ImageDims {
  readonly width: number;
  readonly height: number;
}

/** Integer offsets of the Euclidean disk dx^2 + dy^2 <= radius^2. */
export function diskOffsets(radius: number): PixelCoord[] {
  if (!Number.isInteger(radius) || radius < 0) {
    throw new RangeError("radius must be a nonnegative integer");
  }
  const offsets: PixelCoord[] = [];
  const r2 = radius * radius;
  for (let dy = -radius; dy <= radius; dy += 1) {
    for (let dx = -radius; dx <= radius; dx += 1) {
      if (dx * dx + dy * dy <= r2) {
        // + 0 folds negative zero so offsets compare as plain integers
        offsets.push([dx + 0, dy + 0]);
      }
    }
  }
  return offsets;
}

/** Bresenham segment from a to b, inclusive of both endpoints. */
export function linePixels(a: PixelCoord, b: PixelCoord): PixelCoord[] {
  let [x0, y0] = a;
  const [x1, y1] = b;
  const dx = Math.abs(x1 - x0);
  const dy = -Math.abs(y1 - y0);
  const sx = x0 < x1 ? 1 : -1;
  const sy = y0 < y1 ? 1 : -1;
  let err = dx + dy;
  const out: PixelCoord[] = [];
  for (;;) {
    out.push([x0, y0]);
    if (x0 === x1 && y0 === y1) {
      break;
    }
    const e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return out;
}

/**
 * Rasterize a stroke into the working frame: map each path point from
 * display to image coordinates, walk Bresenham segments between consecutive
 * points, stamp the brush disk at every segment pixel, then deduplicate and
 * clip to bounds. Returns [] when every stamped pixel falls outside the
 * frame; the caller discards such strokes and tells the user.
 */
export function rasterizeStroke(
  stroke: UiStroke,
  dims: ImageDims,
  scale = 1,
): PixelCoord[] {
  if (stroke.path.length === 0) {
    throw new RangeError("stroke path must be nonempty");
  }
  const points = stroke.path.map((p) => displayToImage(p, scale));
  const offsets = diskOffsets(stroke.radius);
  const seen = new Set<number>();
  const out: PixelCoord[] = [];
  const stamp = (px: number, py: number): void => {
    for (const [dx, dy] of offsets) {
      const x = px + dx;
      const y = py + dy;
      if (x < 0 || y < 0 || x >= dims.width || y >= dims.height) {
        continue;
      }
      const key = y * dims.width + x;
      if (!seen.has(key)) {
        seen.add(key);
        out.push([x, y]);
      }
    }
  };
  let prev = points[0];
  stamp(prev[0], prev[1]);
  for (const point of points.slice(1)) {
    for (const [x, y] of linePixels(prev, point)) {
      stamp(x, y);
    }
    prev = point;
  }
  return out;
}
