// Ink capture: turns pointer input into a validated event stream.
//
// Timestamps are milliseconds relative to the moment Record was pressed.
// The recorder owns the auto-stop timer: once the exercise time limit is
// reached it stops itself, so an over-limit upload is impossible from a
// well-behaved client.

import { DEFAULT_RGBA, DEFAULT_WIDTH, type InkEvent, type InkStream, type PenStyle, type Rgba, validateStream } from "./ink.js";

export type RecorderState = "idle" | "recording" | "stopped";

export interface RecorderOptions {
  /** Exercise time limit in milliseconds; capture hard-stops here. */
  limitMs: number;
  /** Called exactly once when the limit fires the stop. */
  onAutoStop?: (stream: InkStream) => void;
  /** Injectable clock for tests; defaults to performance.now. */
  now?: () => number;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
}

const clamp01 = (v: number) => Math.min(1, Math.max(0, v));

export class InkRecorder {
  private events: InkEvent[] = [];
  private startedAt = 0;
  private stoppedAt = 0;
  private strokeOpen = false;
  private timer: unknown = null;
  private stateValue: RecorderState = "idle";
  private style: PenStyle = { rgba: DEFAULT_RGBA, w: DEFAULT_WIDTH };
  private readonly now: () => number;
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;

  constructor(private readonly options: RecorderOptions) {
    this.now = options.now ?? (() => performance.now());
    this.setTimer = options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = options.clearTimer ?? ((h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]));
  }

  get state(): RecorderState {
    return this.stateValue;
  }

  /** Elapsed capture time in ms (live while recording, frozen after stop). */
  elapsedMs(): number {
    if (this.stateValue === "idle") return 0;
    const end = this.stateValue === "stopped" ? this.stoppedAt : this.now();
    return Math.max(0, Math.round(end - this.startedAt));
  }

  start(): void {
    if (this.stateValue === "recording") return;
    this.events = [];
    this.strokeOpen = false;
    this.style = { rgba: DEFAULT_RGBA, w: DEFAULT_WIDTH };
    this.startedAt = this.now();
    this.stateValue = "recording";
    this.timer = this.setTimer(() => this.autoStop(), this.options.limitMs);
  }

  /** Stop pressed (or fired by the limit timer). Idempotent. */
  stop(): void {
    if (this.stateValue !== "recording") return;
    this.stoppedAt = this.now();
    if (this.strokeOpen) {
      // the pen was still down; close the stroke at the stop instant
      this.pushEvent({ t: this.timestamp(), k: "u" });
      this.strokeOpen = false;
    }
    if (this.timer !== null) {
      this.clearTimer(this.timer);
      this.timer = null;
    }
    this.stateValue = "stopped";
  }

  /** Re-record: discard the take and return to idle, ready to start again. */
  reset(): void {
    if (this.timer !== null) {
      this.clearTimer(this.timer);
      this.timer = null;
    }
    this.events = [];
    this.strokeOpen = false;
    this.stateValue = "idle";
  }

  penDown(x: number, y: number): void {
    if (this.stateValue !== "recording" || this.strokeOpen) return;
    this.pushEvent({ t: this.timestamp(), k: "d", x: clamp01(x), y: clamp01(y) });
    this.strokeOpen = true;
  }

  penMove(x: number, y: number): void {
    if (this.stateValue !== "recording" || !this.strokeOpen) return;
    this.pushEvent({ t: this.timestamp(), k: "m", x: clamp01(x), y: clamp01(y) });
  }

  penUp(): void {
    if (this.stateValue !== "recording" || !this.strokeOpen) return;
    this.pushEvent({ t: this.timestamp(), k: "u" });
    this.strokeOpen = false;
  }

  /** Palette change. Closes any open stroke first: a style switch starts a new stroke. */
  setStyle(rgba: Rgba, w: number): void {
    this.style = { rgba, w };
    if (this.stateValue !== "recording") return;
    if (this.strokeOpen) this.penUp();
    this.pushEvent({ t: this.timestamp(), k: "s", style: { rgba, w } });
  }

  currentStyle(): PenStyle {
    return this.style;
  }

  /** The validated stream for upload; only meaningful once stopped. */
  stream(): InkStream {
    // a backwards clock glitch can leave elapsed time behind the (kept
    // monotonic) event times; the declared duration must cover them
    const last = this.events[this.events.length - 1];
    const duration = Math.max(this.elapsedMs(), last?.t ?? 0);
    const stream: InkStream = { version: 1, duration_ms: duration, events: [...this.events] };
    validateStream(stream);
    return stream;
  }

  private autoStop(): void {
    if (this.stateValue !== "recording") return;
    this.stop();
    this.options.onAutoStop?.(this.stream());
  }

  private timestamp(): number {
    // never exceed the limit even if the timer fires late
    return Math.min(Math.round(this.now() - this.startedAt), this.options.limitMs);
  }

  private pushEvent(event: InkEvent): void {
    const prev = this.events[this.events.length - 1];
    if (prev !== undefined && event.t < prev.t) {
      event = { ...event, t: prev.t }; // clock went backwards; keep times monotonic
    }
    this.events.push(event);
  }
}
