// ---------------------------------------------------------------------------
// Replay rasters. The paused frame at time t must match the server's
// render-at-t reference: we compare the 1-bit ink masks and require at least
// 99% pixel agreement (the acceptance bar), and track full agreement as the
// renderers implement the same capsule geometry.
// ---------------------------------------------------------------------------

import { describe, expect, it } from "vitest";
import { type InkStream, serializeInk } from "../src/ink.js";
import { ReplayPlayer, drawnSegmentsAt, inkMask, maskAgreement, rasterizeAt } from "../src/replay.js";
import { renderAtReference } from "./helpers/pyref.js";

const W = 96;
const H = 72;

const ZIGZAG: InkStream = {
  version: 1,
  duration_ms: 4_000,
  events: [
    { t: 0, k: "d", x: 0.1, y: 0.2 },
    { t: 400, k: "m", x: 0.45, y: 0.8 },
    { t: 900, k: "m", x: 0.7, y: 0.15 },
    { t: 1_400, k: "m", x: 0.92, y: 0.6 },
    { t: 1_500, k: "u" },
  ],
};

const MULTI_STYLE: InkStream = {
  version: 1,
  duration_ms: 8_000,
  events: [
    { t: 0, k: "s", style: { rgba: [200, 30, 30, 255], w: 0.03 } },
    { t: 100, k: "d", x: 0.2, y: 0.3 },
    { t: 600, k: "m", x: 0.8, y: 0.35 },
    { t: 1_000, k: "u" },
    { t: 1_200, k: "s", style: { rgba: [30, 30, 200, 128], w: 0.06 } },
    { t: 1_500, k: "d", x: 0.5, y: 0.1 },
    { t: 2_200, k: "m", x: 0.55, y: 0.9 },
    { t: 3_000, k: "m", x: 0.15, y: 0.75 },
    { t: 3_100, k: "u" },
    { t: 4_000, k: "s", style: { rgba: [0, 120, 0, 64], w: 0.05 } },
    { t: 4_500, k: "d", x: 0.35, y: 0.5 },
    { t: 5_200, k: "m", x: 0.75, y: 0.55 },
    { t: 5_300, k: "u" },
  ],
};

const DOT: InkStream = {
  version: 1,
  duration_ms: 1_000,
  events: [
    { t: 500, k: "d", x: 0.503, y: 0.497 },
    { t: 500, k: "u" },
  ],
};

function compareWithReference(stream: InkStream, t: number): number {
  const ours = rasterizeAt(stream, t, W, H);
  const ref = renderAtReference(serializeInk(stream), t, W, H);
  return maskAgreement(inkMask(ours), inkMask(new Uint8ClampedArray(ref)));
}

describe("raster vs. server reference", () => {
  const cases: Array<[string, InkStream, number[]]> = [
    ["zigzag stroke", ZIGZAG, [0, 200, 400, 650, 900, 1_200, 1_500, 4_000]],
    ["styles and translucency", MULTI_STYLE, [0, 100, 800, 1_500, 2_600, 3_100, 4_700, 5_300, 8_000]],
    ["single dot", DOT, [0, 499, 500, 1_000]],
  ];

  for (const [name, stream, times] of cases) {
    it(`agrees within the 99% mask bar at every sampled time (${name})`, () => {
      for (const t of times) {
        const agreement = compareWithReference(stream, t);
        expect(agreement, `t=${t}`).toBeGreaterThanOrEqual(0.99);
      }
    });
  }

  it("matches the reference bytes exactly, including alpha blending", () => {
    // Same geometry, same pixel-center sampling, same round-half-to-even
    // blend; nothing should differ at all.
    for (const t of [900, 2_600, 5_300]) {
      const ours = rasterizeAt(MULTI_STYLE, t, W, H);
      const ref = renderAtReference(serializeInk(MULTI_STYLE), t, W, H);
      expect(Buffer.from(ours.buffer, ours.byteOffset, ours.length).equals(Buffer.from(ref.buffer, ref.byteOffset, ref.length))).toBe(true);
    }
  });

  it("actually draws ink (the masks are not trivially empty)", () => {
    const mask = inkMask(rasterizeAt(ZIGZAG, 1_500, W, H));
    let on = 0;
    for (const bit of mask) on += bit;
    expect(on).toBeGreaterThan(50);
  });
});

describe("paused-frame contract", () => {
  it("the frame at t equals the raster of the events with t_ms <= t", () => {
    for (const t of [0, 250, 650, 1_000, 1_499, 1_500]) {
      const events = ZIGZAG.events.filter((e) => e.t <= t);
      // a stream physically cut at t must paint the identical frame, even
      // if the cut leaves the stroke open (rendering ignores stroke state)
      const truncated: InkStream = { version: 1, duration_ms: t, events };
      const full = rasterizeAt(ZIGZAG, t, W, H);
      const cut = rasterizeAt(truncated, t, W, H);
      expect(Buffer.from(full).equals(Buffer.from(cut)), `t=${t}`).toBe(true);

      const drawable = events.filter((e) => e.k === "d" || e.k === "m").length;
      expect(drawnSegmentsAt(ZIGZAG, t)).toHaveLength(drawable);
    }
  });

  it("respects a supplied background and masks against it", () => {
    const bg = new Uint8ClampedArray(W * H * 3);
    for (let i = 0; i < bg.length; i += 3) {
      bg[i] = 12;
      bg[i + 1] = 200;
      bg[i + 2] = 90;
    }
    const rgb = rasterizeAt(ZIGZAG, 1_500, W, H, bg);
    const mask = inkMask(rgb, bg);
    const white = inkMask(rasterizeAt(ZIGZAG, 1_500, W, H));
    expect(maskAgreement(mask, white)).toBe(1);
  });
});

describe("ReplayPlayer", () => {
  it("seek clamps to the stream duration and renders that frame", () => {
    const player = new ReplayPlayer(ZIGZAG, W, H);
    const atEnd = player.seek(99_999);
    expect(player.positionMs).toBe(4_000);
    expect(Buffer.from(atEnd).equals(Buffer.from(rasterizeAt(ZIGZAG, 4_000, W, H)))).toBe(true);
    player.seek(-5);
    expect(player.positionMs).toBe(0);
  });

  it("frame() lazily renders the current position", () => {
    const player = new ReplayPlayer(DOT, W, H);
    const frame = player.frame();
    expect(Buffer.from(frame).equals(Buffer.from(rasterizeAt(DOT, 0, W, H)))).toBe(true);
  });

  it("play advances along the recorded clock and pauses at the end", async () => {
    const player = new ReplayPlayer(
      { version: 1, duration_ms: 300, events: ZIGZAG.events.map((e) => ({ ...e, t: Math.min(e.t, 300) })) },
      W,
      H,
    );
    player.play(20);
    expect(player.isPlaying).toBe(true);
    await new Promise((r) => setTimeout(r, 600));
    expect(player.isPlaying).toBe(false);
    expect(player.positionMs).toBe(300);
    player.pause(); // idempotent
  });
});
