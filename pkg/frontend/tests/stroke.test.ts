import { describe, expect, it } from "vitest";

import { diskOffsets, linePixels, rasterizeStroke } from "../src/stroke.js";
import type { PixelCoord, UiStroke } from "../src/types.js";

const DIMS = { width: 64, height: 48 };

function keyOf([x, y]: PixelCoord): string {
  return `${x},${y}`;
}

function keys(pixels: PixelCoord[]): Set<string> {
  return new Set(pixels.map(keyOf));
}

/** Independent reference: sample the polyline densely and floor to pixels. */
function denseLineOracle(a: PixelCoord, b: PixelCoord): Set<string> {
  const steps = 16 * Math.max(Math.abs(b[0] - a[0]), Math.abs(b[1] - a[1]), 1);
  const out = new Set<string>();
  for (let i = 0; i <= steps; i += 1) {
    const s = i / steps;
    out.add(`${Math.round(a[0] + s * (b[0] - a[0]))},${Math.round(a[1] + s * (b[1] - a[1]))}`);
  }
  return out;
}

function stroke(partial: Partial<UiStroke> & Pick<UiStroke, "path">): UiStroke {
  return { kind: "blue", radius: 0, ...partial };
}

describe("diskOffsets", () => {
  it("radius 0 is the single center pixel", () => {
    expect(diskOffsets(0)).toEqual([[0, 0]]);
  });

  it("radius 1 is the 5-pixel plus", () => {
    expect(keys(diskOffsets(1))).toEqual(
      new Set(["0,0", "1,0", "-1,0", "0,1", "0,-1"]),
    );
  });

  it("radius 2 has 13 pixels, all within Euclidean distance 2", () => {
    const offsets = diskOffsets(2);
    expect(offsets).toHaveLength(13);
    for (const [dx, dy] of offsets) {
      expect(dx * dx + dy * dy).toBeLessThanOrEqual(4);
    }
  });

  it("rejects fractional and negative radii", () => {
    expect(() => diskOffsets(-1)).toThrow(RangeError);
    expect(() => diskOffsets(1.5)).toThrow(RangeError);
  });
});

describe("linePixels", () => {
  it("covers a horizontal segment inclusively", () => {
    expect(linePixels([2, 4], [6, 4])).toEqual([
      [2, 4], [3, 4], [4, 4], [5, 4], [6, 4],
    ]);
  });

  it("handles single-point segments", () => {
    expect(linePixels([3, 3], [3, 3])).toEqual([[3, 3]]);
  });

  it("walks an 8-connected path with the expected pixel count", () => {
    const cases: Array<[PixelCoord, PixelCoord]> = [
      [[0, 0], [10, 3]],
      [[5, 9], [0, 0]],
      [[7, 2], [7, 12]],
      [[0, 0], [6, 6]],
      [[11, 4], [1, 9]],
    ];
    for (const [a, b] of cases) {
      const pixels = linePixels(a, b);
      expect(pixels).toHaveLength(
        Math.max(Math.abs(b[0] - a[0]), Math.abs(b[1] - a[1])) + 1,
      );
      expect(pixels[0]).toEqual(a);
      expect(pixels[pixels.length - 1]).toEqual(b);
      for (let i = 1; i < pixels.length; i += 1) {
        expect(Math.abs(pixels[i][0] - pixels[i - 1][0])).toBeLessThanOrEqual(1);
        expect(Math.abs(pixels[i][1] - pixels[i - 1][1])).toBeLessThanOrEqual(1);
      }
      // every Bresenham pixel must lie on the densely sampled segment
      const oracle = denseLineOracle(a, b);
      for (const p of pixels) {
        expect(oracle.has(keyOf(p))).toBe(true);
      }
    }
  });
});

describe("rasterizeStroke", () => {
  it("single click at radius 1 stamps the 5-pixel plus", () => {
    const pixels = rasterizeStroke(
      stroke({ path: [{ x: 10.5, y: 8.5 }], radius: 1 }),
      DIMS,
    );
    expect(keys(pixels)).toEqual(
      new Set(["10,8", "11,8", "9,8", "10,9", "10,7"]),
    );
  });

  it("horizontal 10-pixel drag at radius 0 yields 10 or 11 distinct pixels", () => {
    const pixels = rasterizeStroke(
      stroke({ path: [{ x: 2.2, y: 4.5 }, { x: 12.2, y: 4.5 }] }),
      DIMS,
    );
    expect(pixels.length).toBeGreaterThanOrEqual(10);
    expect(pixels.length).toBeLessThanOrEqual(11);
    expect(keys(pixels).size).toBe(pixels.length);
    for (const [, y] of pixels) {
      expect(y).toBe(4);
    }
  });

  it("discards a path that never touches the canvas", () => {
    const pixels = rasterizeStroke(
      stroke({ path: [{ x: -30, y: -5 }, { x: -3, y: -40 }], radius: 2 }),
      DIMS,
    );
    expect(pixels).toEqual([]);
  });

  it("deduplicates overlapping stamps on a back-and-forth path", () => {
    const path = [
      { x: 5.5, y: 5.5 },
      { x: 9.5, y: 5.5 },
      { x: 5.5, y: 5.5 },
    ];
    const pixels = rasterizeStroke(stroke({ path, radius: 1 }), DIMS);
    expect(keys(pixels).size).toBe(pixels.length);
    // 5 pixels of track, each stamped with the plus: 3 rows x 5..7 columns
    expect(pixels.length).toBe(5 * 3 + 2);
  });

  it("clips brush stamps at the border instead of wrapping", () => {
    const pixels = rasterizeStroke(
      stroke({ path: [{ x: 0.2, y: 0.2 }], radius: 2 }),
      DIMS,
    );
    expect(pixels.length).toBeLessThan(13);
    for (const [x, y] of pixels) {
      expect(x).toBeGreaterThanOrEqual(0);
      expect(y).toBeGreaterThanOrEqual(0);
    }
    expect(keys(pixels).has("0,0")).toBe(true);
  });

  it("maps display coordinates through the view scale", () => {
    const pixels = rasterizeStroke(
      stroke({ path: [{ x: 10.9, y: 7.1 }] }),
      DIMS,
      2,
    );
    expect(pixels).toEqual([[5, 3]]);
  });

  it("rejects an empty path", () => {
    expect(() => rasterizeStroke(stroke({ path: [] }), DIMS)).toThrow(RangeError);
  });
});
