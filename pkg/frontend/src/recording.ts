// Recording view: plays the lesson timeline, pauses at each exercise, and
// runs the capture lifecycle (Record / Stop / Re-record / rate / Submit).
//
// Capture state mirrors the server's session semantics: at most one open
// session at a time, and a re-record replaces (discards) the previous take.

import { ApiClient } from "./api.js";
import { serializeInk, type Rgba } from "./ink.js";
import { InkRecorder } from "./recorder.js";
import { rasterizeAt, toRgba } from "./replay.js";
import { TimelinePlayer } from "./timeline.js";
import type { PreviewJson, SubmitResultJson, TimelineJson } from "./wire.js";

export const PALETTE: Array<{ name: string; rgba: Rgba }> = [
  { name: "black", rgba: [0, 0, 0, 255] },
  { name: "red", rgba: [220, 38, 38, 255] },
  { name: "blue", rgba: [37, 99, 235, 255] },
  { name: "green", rgba: [22, 163, 74, 255] },
];
export const PEN_WIDTHS = [0.005, 0.01, 0.02];

export interface MediaCapture {
  /** Resolves to the captured artifact bytes at stop time, or null if the
   * device was unavailable / permission was denied (graceful degradation). */
  start(): Promise<void>;
  stop(): Promise<{ audio?: Uint8Array; video?: Uint8Array; poster?: Uint8Array } | null>;
}

const CANVAS_W = 480;
const CANVAS_H = 360;

export class RecordingView {
  readonly root: HTMLElement;
  timelinePlayer: TimelinePlayer | null = null;
  recorder: InkRecorder | null = null;
  /** Open (not yet submitted) server session for the active exercise. */
  openSession: string | null = null;
  /** A stopped take waiting to be replaced on the next start. */
  private discardOnNextStart: string | null = null;
  private activePreview: PreviewJson | null = null;
  private timeline: TimelineJson | null = null;
  private media: MediaCapture | null = null;
  private mediaParts: { audio?: Uint8Array; video?: Uint8Array; poster?: Uint8Array } = {};

  constructor(
    private readonly doc: Document,
    private readonly api: ApiClient,
    private readonly lessonId: string,
    private readonly mediaFactory?: (preview: PreviewJson) => MediaCapture | null,
  ) {
    this.root = doc.createElement("section");
    this.root.className = "recording-view";
    this.root.innerHTML = `
      <h2 data-role="title"></h2>
      <div class="stage">
        <video data-role="lesson-video"></video>
        <div class="exercise-overlay" data-role="exercise" hidden>
          <p data-role="instructions"></p>
          <p data-role="limit"></p>
          <canvas data-role="sketchpad" width="${CANVAS_W}" height="${CANVAS_H}"></canvas>
          <div data-role="palette"></div>
          <div class="controls">
            <button data-role="record">Record</button>
            <button data-role="stop" disabled>Stop</button>
            <button data-role="rerecord" disabled>Re-record</button>
            <button data-role="submit" disabled>Submit</button>
          </div>
          <form data-role="ratings" hidden>
            <label>How confident are you in your response?
              <select name="confidence">${ratingOptions()}</select>
            </label>
            <label>How helpful was this exercise?
              <select name="helpfulness">${ratingOptions()}</select>
            </label>
          </form>
          <p data-role="error" class="inline-error" hidden></p>
        </div>
      </div>
    `;
    this.wireControls();
  }

  private part(role: string): HTMLElement {
    return this.root.querySelector(`[data-role="${role}"]`) as HTMLElement;
  }

  private button(role: string): HTMLButtonElement {
    return this.part(role) as HTMLButtonElement;
  }

  async load(): Promise<TimelineJson> {
    this.timeline = await this.api.timeline(this.lessonId);
    this.timelinePlayer = new TimelinePlayer(this.timeline);
    this.part("title").textContent = this.timeline.title;
    this.syncStage();
    return this.timeline;
  }

  /** Move playback forward; stops at the next unanswered exercise. */
  advance(deltaMs: number): void {
    if (this.timelinePlayer === null) return;
    this.timelinePlayer.tick(deltaMs);
    this.syncStage();
  }

  private syncStage(): void {
    if (this.timelinePlayer === null || this.timeline === null) return;
    const position = this.timelinePlayer.position();
    const overlay = this.part("exercise");
    if (position.blockedOn === null) {
      overlay.hidden = true;
      this.activePreview = null;
      return;
    }
    const preview = this.timeline.previews.find((p) => p.exercise_id === position.blockedOn);
    if (preview === undefined) return;
    if (this.activePreview?.exercise_id === preview.exercise_id) return;
    this.activePreview = preview;
    overlay.hidden = false;
    this.part("instructions").textContent = preview.instructions;
    this.part("limit").textContent = `Time limit: ${preview.time_limit_s} s`;
    (this.part("sketchpad") as HTMLElement).hidden = !preview.canvas;
    this.renderPalette();
    this.setButtons({ record: true, stop: false, rerecord: false, submit: false });
  }

  private renderPalette(): void {
    const box = this.part("palette");
    box.innerHTML =
      PALETTE.map(
        (p) => `<button class="pen-color" data-color="${p.name}" title="${p.name}"></button>`,
      ).join("") +
      PEN_WIDTHS.map(
        (w) => `<button class="pen-width" data-width="${w}">${w * 100}</button>`,
      ).join("");
    for (const el of Array.from(box.querySelectorAll(".pen-color"))) {
      el.addEventListener("click", () => {
        const chosen = PALETTE.find((p) => p.name === (el as HTMLElement).dataset.color);
        if (chosen && this.recorder) {
          this.recorder.setStyle(chosen.rgba, this.recorder.currentStyle().w);
        }
      });
    }
    for (const el of Array.from(box.querySelectorAll(".pen-width"))) {
      el.addEventListener("click", () => {
        const w = Number((el as HTMLElement).dataset.width);
        if (this.recorder) this.recorder.setStyle(this.recorder.currentStyle().rgba, w);
      });
    }
  }

  private wireControls(): void {
    this.button("record").addEventListener("click", () => void this.startTake());
    this.button("stop").addEventListener("click", () => this.stopTake());
    this.button("rerecord").addEventListener("click", () => this.reRecord());
    this.button("submit").addEventListener("click", () => void this.submit());

    const pad = this.part("sketchpad") as HTMLCanvasElement;
    const toUnit = (event: PointerEvent | MouseEvent): [number, number] => {
      const rect = pad.getBoundingClientRect();
      const w = rect.width > 0 ? rect.width : CANVAS_W;
      const h = rect.height > 0 ? rect.height : CANVAS_H;
      return [(event.clientX - rect.left) / w, (event.clientY - rect.top) / h];
    };
    // stylus, touch, and mouse all arrive as pointer events
    pad.addEventListener("pointerdown", (event) => {
      const [x, y] = toUnit(event as PointerEvent);
      this.recorder?.penDown(x, y);
      this.repaint();
    });
    pad.addEventListener("pointermove", (event) => {
      const [x, y] = toUnit(event as PointerEvent);
      this.recorder?.penMove(x, y);
      this.repaint();
    });
    pad.addEventListener("pointerup", () => {
      this.recorder?.penUp();
      this.repaint();
    });
  }

  /** Start (or restart) a take: acquires the server session lazily. */
  async startTake(): Promise<void> {
    if (this.activePreview === null) return;
    const exerciseId = this.activePreview.exercise_id;
    if (this.openSession === null) {
      const started = await this.api.startSession(exerciseId, this.discardOnNextStart ?? undefined);
      this.discardOnNextStart = null;
      this.openSession = started.session.session_id;
    }
    this.recorder = new InkRecorder({
      limitMs: this.activePreview.time_limit_s * 1000,
      onAutoStop: () => this.onStopped(),
    });
    this.mediaParts = {};
    this.media = this.mediaFactory?.(this.activePreview) ?? null;
    if (this.media !== null) {
      try {
        await this.media.start();
      } catch {
        this.media = null; // no device / permission denied: degrade to ink only
      }
    }
    this.recorder.start();
    this.setButtons({ record: false, stop: true, rerecord: false, submit: false });
  }

  stopTake(): void {
    if (this.recorder === null || this.recorder.state !== "recording") return;
    this.recorder.stop();
    this.onStopped();
  }

  private onStopped(): void {
    void this.media?.stop().then((parts) => {
      if (parts !== null && parts !== undefined) this.mediaParts = parts;
    });
    this.setButtons({ record: false, stop: false, rerecord: true, submit: true });
    (this.part("ratings") as HTMLElement).hidden = false;
  }

  /** Discard the stopped take; the replacement session starts on next Record. */
  reRecord(): void {
    if (this.openSession !== null) {
      this.discardOnNextStart = this.openSession;
      this.openSession = null;
    }
    this.recorder?.reset();
    this.mediaParts = {};
    (this.part("ratings") as HTMLElement).hidden = true;
    this.setButtons({ record: true, stop: false, rerecord: false, submit: false });
  }

  async submit(): Promise<SubmitResultJson | null> {
    if (this.recorder === null || this.openSession === null || this.activePreview === null) {
      return null;
    }
    const exerciseId = this.activePreview.exercise_id;
    const form = this.part("ratings") as HTMLFormElement;
    const ratings = {
      confidence: Number((form.querySelector('[name="confidence"]') as HTMLSelectElement).value),
      helpfulness: Number((form.querySelector('[name="helpfulness"]') as HTMLSelectElement).value),
    };
    const stream = this.recorder.stream();
    const upload = {
      session: this.openSession,
      ratings,
      ...(this.activePreview.canvas ? { ink: serializeInk(stream) } : {}),
      ...this.mediaParts,
      ...(this.mediaParts.video !== undefined
        ? { declared_duration_ms: stream.duration_ms }
        : {}),
    };
    const errorBox = this.part("error");
    try {
      const result = await this.api.submitResponse(exerciseId, upload);
      this.openSession = null;
      this.recorder = null;
      (this.part("ratings") as HTMLElement).hidden = true;
      errorBox.hidden = true;
      // submitting answers the exercise: the timeline may now move on
      this.timelinePlayer?.markAnswered(exerciseId);
      this.activePreview = null;
      this.syncStage();
      return result;
    } catch (exc) {
      errorBox.hidden = false;
      errorBox.textContent = String(exc);
      return null;
    }
  }

  private repaint(): void {
    if (this.recorder === null) return;
    const pad = this.part("sketchpad") as HTMLCanvasElement;
    const ctx = pad.getContext?.("2d");
    if (!ctx) return; // headless test DOM: state is inspected, not painted
    const snapshot = {
      version: 1 as const,
      duration_ms: this.recorder.elapsedMs(),
      events: this.recorder.stream().events,
    };
    const rgb = rasterizeAt(snapshot, snapshot.duration_ms, CANVAS_W, CANVAS_H);
    const image = ctx.createImageData(CANVAS_W, CANVAS_H);
    image.data.set(toRgba(rgb));
    ctx.putImageData(image, 0, 0);
  }

  private setButtons(enabled: { record: boolean; stop: boolean; rerecord: boolean; submit: boolean }): void {
    this.button("record").disabled = !enabled.record;
    this.button("stop").disabled = !enabled.stop;
    this.button("rerecord").disabled = !enabled.rerecord;
    this.button("submit").disabled = !enabled.submit;
  }

  /** Leaving the view abandons any open take (the next start replaces it). */
  teardown(): void {
    if (this.recorder !== null && this.recorder.state === "recording") {
      this.recorder.stop();
    }
    if (this.openSession !== null) {
      this.discardOnNextStart = this.openSession;
      this.openSession = null;
    }
    this.recorder = null;
  }

  /** Exposed for the router: true while a server session is open. */
  hasOpenSession(): boolean {
    return this.openSession !== null;
  }
}

function ratingOptions(): string {
  return [1, 2, 3, 4, 5]
    .map((v) => `<option value="${v}"${v === 3 ? " selected" : ""}>${v}</option>`)
    .join("");
}
