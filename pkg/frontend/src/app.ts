/** Page wiring for the scribble loop.
 *
 * Panes are verbatim service previews; this module never edits image data.
 * One submission is in flight at a time, and the local stroke buffer is only
 * cleared after the service accepts it.
 */

import { ApiError, ScribbleApi } from "./api.js";
import { fitScale } from "./coords.js";
import { rasterizeStroke } from "./stroke.js";
import type {
  CanvasPoint,
  PreviewName,
  PreviewUrls,
  ServiceStroke,
  SessionDoc,
  StrokeKind,
  UiStroke,
} from "./types.js";
import { serviceKind } from "./types.js";

const PANES: readonly PreviewName[] = ["input", "j", "t", "weights"];
const MAX_DISPLAY = 480;

const STROKE_COLORS: Record<StrokeKind, string> = {
  blue: "rgba(40, 90, 255, 0.8)",
  red: "rgba(230, 40, 40, 0.8)",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

class App {
  private readonly api = new ScribbleApi();
  private session: SessionDoc | null = null;
  private scale = 1;
  private buffer: UiStroke[] = [];
  private drawing: CanvasPoint[] | null = null;
  private busy = false;

  private readonly fileInput = el<HTMLInputElement>("file");
  private readonly configInput = el<HTMLTextAreaElement>("config");
  private readonly uploadBtn = el<HTMLButtonElement>("upload");
  private readonly submitBtn = el<HTMLButtonElement>("submit");
  private readonly undoBtn = el<HTMLButtonElement>("undo");
  private readonly clearBtn = el<HTMLButtonElement>("clear");
  private readonly radiusInput = el<HTMLInputElement>("radius");
  private readonly status = el<HTMLElement>("status");
  private readonly tsReadout = el<HTMLElement>("ts");
  private readonly history = el<HTMLOListElement>("history");
  private readonly overlay = el<HTMLCanvasElement>("overlay");

  start(): void {
    this.uploadBtn.addEventListener("click", () => void this.upload());
    this.submitBtn.addEventListener("click", () => void this.submit());
    this.undoBtn.addEventListener("click", () => void this.undoTo(null));
    this.clearBtn.addEventListener("click", () => {
      this.buffer = [];
      this.drawOverlay();
      this.note("stroke buffer cleared");
    });
    this.overlay.addEventListener("pointerdown", (e) => this.penDown(e));
    this.overlay.addEventListener("pointermove", (e) => this.penMove(e));
    this.overlay.addEventListener("pointerup", (e) => this.penUp(e));
    this.overlay.addEventListener("pointerleave", (e) => this.penUp(e));
    this.setBusy(false);
  }

  private brushKind(): StrokeKind {
    const checked = document.querySelector<HTMLInputElement>(
      'input[name="kind"]:checked',
    );
    return checked?.value === "red" ? "red" : "blue";
  }

  private note(text: string, isError = false): void {
    this.status.textContent = text;
    this.status.classList.toggle("error", isError);
  }

  private setBusy(busy: boolean): void {
    this.busy = busy;
    const ready = this.session !== null && !busy;
    this.uploadBtn.disabled = busy;
    this.submitBtn.disabled = !ready;
    this.undoBtn.disabled = !ready;
    this.clearBtn.disabled = !ready;
  }

  private async run(label: string, work: () => Promise<void>): Promise<void> {
    if (this.busy) {
      return;
    }
    this.setBusy(true);
    try {
      await work();
    } catch (err) {
      if (err instanceof ApiError) {
        this.note(`${label} failed (${err.status}): ${err.message}`, true);
      } else {
        this.note(`${label} failed: ${String(err)}`, true);
      }
    } finally {
      this.setBusy(false);
    }
  }

  private async upload(): Promise<void> {
    const file = this.fileInput.files?.[0];
    if (!file) {
      this.note("choose an image first", true);
      return;
    }
    let config: Record<string, unknown> | undefined;
    const raw = this.configInput.value.trim();
    if (raw) {
      try {
        config = JSON.parse(raw) as Record<string, unknown>;
      } catch {
        this.note("config is not valid JSON", true);
        return;
      }
    }
    await this.run("upload", async () => {
      const doc = await this.api.createSession(file, file.name, config);
      this.session = doc;
      this.scale = fitScale(doc.width, doc.height, MAX_DISPLAY, MAX_DISPLAY);
      this.buffer = [];
      this.overlay.width = Math.round(doc.width * this.scale);
      this.overlay.height = Math.round(doc.height * this.scale);
      this.setPanes(doc.previews);
      this.tsReadout.textContent = "-";
      await this.refreshHistory();
      this.note(`session ${doc.id.slice(0, 8)}: ${doc.width}x${doc.height}`);
    });
  }

  private setPanes(previews: PreviewUrls): void {
    for (const name of PANES) {
      el<HTMLImageElement>(`pane-${name}`).src = previews[name];
    }
    const bg = el<HTMLImageElement>("canvas-bg");
    bg.src = previews.input;
    bg.width = this.overlay.width;
    bg.height = this.overlay.height;
  }

  private async submit(): Promise<void> {
    const session = this.session;
    if (!session || this.buffer.length === 0) {
      this.note("draw at least one stroke first", true);
      return;
    }
    const strokes: ServiceStroke[] = [];
    let discarded = 0;
    for (const stroke of this.buffer) {
      const pixels = rasterizeStroke(stroke, session, this.scale);
      if (pixels.length === 0) {
        discarded += 1;
        continue;
      }
      strokes.push({ kind: serviceKind(stroke.kind), pixels });
    }
    if (discarded > 0) {
      this.note(`${discarded} stroke(s) fell outside the image and were discarded`);
    }
    if (!strokes.some((s) => s.kind === "constraint")) {
      this.note("draw at least one blue stroke", true);
      return;
    }
    if (strokes.filter((s) => s.kind === "picker").length > 1) {
      this.note("only one red stroke per submission", true);
      return;
    }
    await this.run("submit", async () => {
      const rev = await this.api.submitStrokes(session.id, strokes);
      this.buffer = [];
      this.drawOverlay();
      this.setPanes(rev.previews);
      this.tsReadout.textContent = rev.t_s.toFixed(4);
      await this.refreshHistory();
      this.note(`revision ${rev.revision}, t_s = ${rev.t_s.toFixed(4)}`);
    });
  }

  /** Undo the last message, or keep undoing until `keep` messages remain. */
  private async undoTo(keep: number | null): Promise<void> {
    const session = this.session;
    if (!session) {
      return;
    }
    await this.run("undo", async () => {
      let rev = await this.api.undo(session.id);
      if (keep !== null) {
        while (rev.revision > keep) {
          rev = await this.api.undo(session.id);
        }
      }
      this.setPanes(rev.previews);
      this.tsReadout.textContent = rev.revision > 0 ? rev.t_s.toFixed(4) : "-";
      await this.refreshHistory();
      this.note(`undid to revision ${rev.revision}`);
    });
  }

  private async refreshHistory(): Promise<void> {
    const session = this.session;
    if (!session) {
      return;
    }
    const doc = await this.api.getSession(session.id);
    this.history.replaceChildren();
    (doc.messages ?? []).forEach((msg, index) => {
      const item = document.createElement("li");
      const label = document.createElement("span");
      label.textContent = `${msg.pixels.length} px, target ${msg.target.toFixed(4)}`;
      const btn = document.createElement("button");
      btn.textContent = "undo to before this";
      btn.addEventListener("click", () => void this.undoTo(index));
      item.append(label, btn);
      this.history.append(item);
    });
  }

  private penDown(e: PointerEvent): void {
    if (!this.session || this.busy) {
      return;
    }
    this.overlay.setPointerCapture(e.pointerId);
    this.drawing = [{ x: e.offsetX, y: e.offsetY }];
  }

  private penMove(e: PointerEvent): void {
    if (!this.drawing) {
      return;
    }
    this.drawing.push({ x: e.offsetX, y: e.offsetY });
    this.drawOverlay();
  }

  private penUp(e: PointerEvent): void {
    if (!this.drawing) {
      return;
    }
    this.drawing.push({ x: e.offsetX, y: e.offsetY });
    this.buffer.push({
      kind: this.brushKind(),
      path: this.drawing,
      radius: Math.max(0, Math.round(Number(this.radiusInput.value))),
    });
    this.drawing = null;
    this.drawOverlay();
  }

  private drawOverlay(): void {
    const ctx = this.overlay.getContext("2d");
    if (!ctx) {
      return;
    }
    ctx.clearRect(0, 0, this.overlay.width, this.overlay.height);
    ctx.lineCap = "round";
    ctx.lineJoin = "round";
    const paths: Array<{ kind: StrokeKind; path: readonly CanvasPoint[]; radius: number }> =
      [...this.buffer];
    if (this.drawing) {
      paths.push({
        kind: this.brushKind(),
        path: this.drawing,
        radius: Math.max(0, Math.round(Number(this.radiusInput.value))),
      });
    }
    for (const { kind, path, radius } of paths) {
      ctx.strokeStyle = STROKE_COLORS[kind];
      ctx.fillStyle = STROKE_COLORS[kind];
      ctx.lineWidth = Math.max(1, (2 * radius + 1) * this.scale);
      if (path.length === 1) {
        ctx.beginPath();
        ctx.arc(path[0].x, path[0].y, ctx.lineWidth / 2, 0, 2 * Math.PI);
        ctx.fill();
        continue;
      }
      ctx.beginPath();
      ctx.moveTo(path[0].x, path[0].y);
      for (const p of path.slice(1)) {
        ctx.lineTo(p.x, p.y);
      }
      ctx.stroke();
    }
  }
}

new App().start();
