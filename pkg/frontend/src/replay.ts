// Stroke replay. The contract: the raster shown while paused at time t is
// exactly the raster of all events with t_ms <= t, drawn as hard-edged
// capsules (segments with round caps) over the background.
//
// The rasterizer here is a deterministic software renderer so a paused frame
// is reproducible pixel-for-pixel; the DOM player blits its output to a
// canvas rather than re-deriving geometry with canvas paths.

import { DEFAULT_RGBA, DEFAULT_WIDTH, type InkStream, type PenStyle } from "./ink.js";

export interface Capsule {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  style: PenStyle;
}

/** The capsules visible at time t, in paint order. */
export function drawnSegmentsAt(stream: InkStream, t: number): Capsule[] {
  const out: Capsule[] = [];
  let style: PenStyle = { rgba: DEFAULT_RGBA, w: DEFAULT_WIDTH };
  let last: { x: number; y: number } | null = null;
  for (const e of stream.events) {
    if (e.t > t) break;
    switch (e.k) {
      case "s":
        style = e.style;
        break;
      case "u":
        last = null;
        break;
      case "d":
        out.push({ x0: e.x, y0: e.y, x1: e.x, y1: e.y, style });
        last = { x: e.x, y: e.y };
        break;
      case "m":
        if (last !== null) {
          out.push({ x0: last.x, y0: last.y, x1: e.x, y1: e.y, style });
          last = { x: e.x, y: e.y };
        }
        break;
    }
  }
  return out;
}

// round-half-to-even, matching the server's blend arithmetic exactly
function rint(v: number): number {
  const floor = Math.floor(v);
  const diff = v - floor;
  if (diff > 0.5) return floor + 1;
  if (diff < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

function paintCapsule(
  rgb: Uint8ClampedArray,
  width: number,
  height: number,
  capsule: Capsule,
  scale: number,
): void {
  const [r, g, b, a] = capsule.style.rgba;
  const radius = (capsule.style.w * scale) / 2;
  const x0 = capsule.x0 * width;
  const y0 = capsule.y0 * height;
  const x1 = capsule.x1 * width;
  const y1 = capsule.y1 * height;
  const xmin = Math.max(Math.floor(Math.min(x0, x1) - radius), 0);
  const xmax = Math.min(Math.ceil(Math.max(x0, x1) + radius), width - 1);
  const ymin = Math.max(Math.floor(Math.min(y0, y1) - radius), 0);
  const ymax = Math.min(Math.ceil(Math.max(y0, y1) + radius), height - 1);
  const dx = x1 - x0;
  const dy = y1 - y0;
  const segLen2 = dx * dx + dy * dy;
  const r2 = radius * radius;
  const alpha = a / 255;
  for (let py = ymin; py <= ymax; py++) {
    for (let px = xmin; px <= xmax; px++) {
      const cx = px + 0.5; // sample at the pixel center
      const cy = py + 0.5;
      let d2: number;
      if (segLen2 === 0) {
        d2 = (cx - x0) ** 2 + (cy - y0) ** 2;
      } else {
        let tt = ((cx - x0) * dx + (cy - y0) * dy) / segLen2;
        tt = Math.min(1, Math.max(0, tt));
        d2 = (cx - x0 - tt * dx) ** 2 + (cy - y0 - tt * dy) ** 2;
      }
      if (d2 > r2) continue;
      const i = (py * width + px) * 3;
      if (a === 255) {
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
      } else {
        rgb[i] = rint(rgb[i]! * (1 - alpha) + r * alpha);
        rgb[i + 1] = rint(rgb[i + 1]! * (1 - alpha) + g * alpha);
        rgb[i + 2] = rint(rgb[i + 2]! * (1 - alpha) + b * alpha);
      }
    }
  }
}

/**
 * Raster of the stream at time t as packed RGB bytes (row-major, 3 per
 * pixel). `background` must be the same shape when given; defaults to white.
 */
export function rasterizeAt(
  stream: InkStream,
  t: number,
  width: number,
  height: number,
  background?: Uint8ClampedArray,
): Uint8ClampedArray {
  const rgb = new Uint8ClampedArray(width * height * 3);
  if (background !== undefined) {
    if (background.length !== rgb.length) {
      throw new Error(`background has ${background.length} bytes, want ${rgb.length}`);
    }
    rgb.set(background);
  } else {
    rgb.fill(255);
  }
  const scale = Math.min(width, height);
  for (const capsule of drawnSegmentsAt(stream, t)) {
    paintCapsule(rgb, width, height, capsule, scale);
  }
  return rgb;
}

/** 1-bit ink mask: 1 where the raster differs from the background. */
export function inkMask(
  rgb: Uint8ClampedArray,
  background?: Uint8ClampedArray,
): Uint8Array {
  const pixels = rgb.length / 3;
  const mask = new Uint8Array(pixels);
  for (let p = 0; p < pixels; p++) {
    const i = p * 3;
    const br = background !== undefined ? background[i]! : 255;
    const bg = background !== undefined ? background[i + 1]! : 255;
    const bb = background !== undefined ? background[i + 2]! : 255;
    mask[p] = rgb[i] !== br || rgb[i + 1] !== bg || rgb[i + 2] !== bb ? 1 : 0;
  }
  return mask;
}

/** Fraction of pixels on which two 1-bit masks agree. */
export function maskAgreement(a: Uint8Array, b: Uint8Array): number {
  if (a.length !== b.length) throw new Error("mask shapes differ");
  if (a.length === 0) return 1;
  let same = 0;
  for (let i = 0; i < a.length; i++) if (a[i] === b[i]) same++;
  return same / a.length;
}

/** RGB bytes -> RGBA ImageData-compatible buffer for canvas blitting. */
export function toRgba(rgb: Uint8ClampedArray): Uint8ClampedArray {
  const pixels = rgb.length / 3;
  const rgba = new Uint8ClampedArray(pixels * 4);
  for (let p = 0; p < pixels; p++) {
    rgba[p * 4] = rgb[p * 3]!;
    rgba[p * 4 + 1] = rgb[p * 3 + 1]!;
    rgba[p * 4 + 2] = rgb[p * 3 + 2]!;
    rgba[p * 4 + 3] = 255;
  }
  return rgba;
}

/**
 * Frame-scheduled ink animation. Seeking lands on exactly the paused-frame
 * contract above; playing just reschedules seeks along the recorded clock.
 */
export class ReplayPlayer {
  private position = 0;
  private playing = false;
  private lastFrame: Uint8ClampedArray | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly stream: InkStream,
    private readonly width: number,
    private readonly height: number,
    private readonly canvas?: HTMLCanvasElement,
    private readonly background?: Uint8ClampedArray,
  ) {}

  get positionMs(): number {
    return this.position;
  }

  get isPlaying(): boolean {
    return this.playing;
  }

  seek(t: number): Uint8ClampedArray {
    this.position = Math.min(Math.max(0, t), this.stream.duration_ms);
    this.lastFrame = rasterizeAt(this.stream, this.position, this.width, this.height, this.background);
    this.blit(this.lastFrame);
    return this.lastFrame;
  }

  /** The most recently rendered frame (RGB bytes). */
  frame(): Uint8ClampedArray {
    return this.lastFrame ?? this.seek(this.position);
  }

  play(frameIntervalMs = 40): void {
    if (this.playing) return;
    this.playing = true;
    const startedAt = Date.now() - this.position;
    this.timer = setInterval(() => {
      const t = Date.now() - startedAt;
      if (t >= this.stream.duration_ms) {
        this.seek(this.stream.duration_ms);
        this.pause();
        return;
      }
      this.seek(t);
    }, frameIntervalMs);
  }

  pause(): void {
    this.playing = false;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private blit(rgb: Uint8ClampedArray): void {
    const ctx = this.canvas?.getContext("2d");
    if (!ctx) return; // headless: callers read frame() instead
    const image = ctx.createImageData(this.width, this.height);
    image.data.set(toRgba(rgb));
    ctx.putImageData(image, 0, 0);
  }
}
