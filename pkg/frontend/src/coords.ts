/** Display-to-image coordinate mapping.
 *
 * The service only ever sees working-frame pixel coordinates; all scaling
 * happens here. `scale` is display pixels per image pixel.
 */

import type { CanvasPoint, PixelCoord } from "./types.js";

/** Map a display point to the image pixel whose cell contains it. */
export function displayToImage(p: CanvasPoint, scale: number): PixelCoord {
  if (!(scale > 0)) {
    throw new RangeError("scale must be positive");
  }
  return [Math.floor(p.x / scale), Math.floor(p.y / scale)];
}

/** Map an image pixel to the display position of its center. */
export function imageToDisplay(q: PixelCoord, scale: number): CanvasPoint {
  if (!(scale > 0)) {
    throw new RangeError("scale must be positive");
  }
  return { x: (q[0] + 0.5) * scale, y: (q[1] + 0.5) * scale };
}

/**
 * Pick a display scale that fits the image inside maxW x maxH without
 * exceeding `maxScale`. Capping at 2 keeps the round trip
 * display -> pixel -> display within one display pixel.
 */
export function fitScale(
  imageW: number,
  imageH: number,
  maxW: number,
  maxH: number,
  maxScale = 2,
): number {
  if (imageW <= 0 || imageH <= 0) {
    throw new RangeError("image dimensions must be positive");
  }
  return Math.min(maxW / imageW, maxH / imageH, maxScale);
}
