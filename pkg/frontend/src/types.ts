/** Shared types for the scribble UI and its service client. */

/** Brush colors: blue marks the constraint region, red picks the target value. */
export type StrokeKind = "blue" | "red";

/** A point in display (canvas) coordinates. */
export interface CanvasPoint {
  readonly x: number;
  readonly y: number;
}

/** A freehand stroke as drawn, before rasterization. Radius is in image pixels. */
export interface UiStroke {
  readonly kind: StrokeKind;
  readonly path: readonly CanvasPoint[];
  readonly radius: number;
}

/** An integer pixel in the working (resized-image) frame, as [x, y]. */
export type PixelCoord = readonly [number, number];

export type PreviewName = "input" | "j" | "t" | "b" | "weights";

export type PreviewUrls = Record<PreviewName, string>;

/** Stroke payload in the shape the service expects. */
export interface ServiceStroke {
  kind: "constraint" | "picker";
  pixels: PixelCoord[];
}

export interface MessageDoc {
  pixels: PixelCoord[];
  target: number;
}

export interface SessionDoc {
  id: string;
  width: number;
  height: number;
  revision: number;
  airlight: number[];
  config: Record<string, unknown>;
  previews: PreviewUrls;
  messages?: MessageDoc[];
}

export interface RevisionDoc {
  revision: number;
  t_s: number;
  previews: PreviewUrls;
}

export function serviceKind(kind: StrokeKind): ServiceStroke["kind"] {
  return kind === "blue" ? "constraint" : "picker";
}
