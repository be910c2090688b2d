// ---------------------------------------------------------------------------
// InkRecorder: pen state machine, timestamping, and the auto-stop timer.
// Most tests drive an injected clock; one runs against real timers to pin
// the auto-stop latency contract.
// ---------------------------------------------------------------------------

import { describe, expect, it, vi } from "vitest";
import { DEFAULT_RGBA, DEFAULT_WIDTH, type InkStream } from "../src/ink.js";
import { InkRecorder } from "../src/recorder.js";

interface FakeTimer {
  at: number;
  fn: () => void;
  dead: boolean;
}

function harness(limitMs: number, onAutoStop?: (s: InkStream) => void) {
  let clock = 0;
  const timers: FakeTimer[] = [];
  const rec = new InkRecorder({
    limitMs,
    onAutoStop,
    now: () => clock,
    setTimer: (fn, ms) => {
      const t: FakeTimer = { at: clock + ms, fn, dead: false };
      timers.push(t);
      return t;
    },
    clearTimer: (h) => {
      (h as FakeTimer).dead = true;
    },
  });
  const advance = (ms: number) => {
    clock += ms;
    for (const t of timers) {
      if (!t.dead && t.at <= clock) {
        t.dead = true;
        t.fn();
      }
    }
  };
  return { rec, advance, jumpTo: (v: number) => (clock = v) };
}

describe("timestamps", () => {
  it("are relative to the moment recording started", () => {
    const { rec, advance } = harness(60_000);
    advance(5_000); // wall clock ticks before Record is pressed
    rec.start();
    advance(250);
    rec.penDown(0.5, 0.5);
    advance(30);
    rec.penMove(0.6, 0.5);
    rec.penUp();
    rec.stop();
    const s = rec.stream();
    expect(s.events.map((e) => e.t)).toEqual([250, 280, 280]);
    expect(s.duration_ms).toBe(280);
  });

  it("never go backwards even if the clock does", () => {
    const { rec, advance, jumpTo } = harness(60_000);
    rec.start();
    advance(100);
    rec.penDown(0.1, 0.1);
    jumpTo(40); // clock glitch
    rec.penMove(0.2, 0.2);
    rec.penUp();
    rec.stop();
    const s = rec.stream();
    expect(s.events.map((e) => e.t)).toEqual([100, 100, 100]);
    // the declared duration covers the events even though the clock ended low
    expect(s.duration_ms).toBe(100);
  });
});

describe("pen state machine", () => {
  it("captures a full take and closes a dangling stroke on stop", () => {
    const { rec, advance } = harness(60_000);
    rec.start();
    advance(10);
    rec.penDown(0.2, 0.2);
    advance(10);
    rec.penMove(0.3, 0.25);
    advance(10);
    rec.penUp();
    advance(10);
    rec.setStyle([255, 0, 0, 255], 0.02);
    advance(10);
    rec.penDown(0.5, 0.5);
    advance(10); // pen still down when Stop is pressed
    rec.stop();
    const s = rec.stream();
    expect(s.events.map((e) => e.k)).toEqual(["d", "m", "u", "s", "d", "u"]);
    expect(s.events[s.events.length - 1]!.t).toBe(60);
    expect(s.duration_ms).toBe(60);
  });

  it("a style change during a stroke ends the stroke first", () => {
    const { rec, advance } = harness(60_000);
    rec.start();
    rec.penDown(0.2, 0.2);
    advance(5);
    rec.setStyle([0, 0, 255, 255], 0.005);
    advance(5);
    rec.penDown(0.4, 0.4);
    rec.penUp();
    rec.stop();
    expect(rec.stream().events.map((e) => e.k)).toEqual(["d", "u", "s", "d", "u"]);
  });

  it("ignores out-of-order input instead of recording garbage", () => {
    const { rec } = harness(60_000);
    rec.penDown(0.5, 0.5); // before start
    rec.start();
    rec.penMove(0.5, 0.5); // no stroke open
    rec.penUp();
    rec.penDown(0.1, 0.1);
    rec.penDown(0.9, 0.9); // nested pen-down
    rec.penUp();
    rec.stop();
    rec.penDown(0.3, 0.3); // after stop
    const s = rec.stream();
    expect(s.events.map((e) => e.k)).toEqual(["d", "u"]);
    expect((s.events[0] as { x: number }).x).toBe(0.1);
  });

  it("clamps coordinates into the unit square", () => {
    const { rec } = harness(60_000);
    rec.start();
    rec.penDown(-0.5, 1.5);
    rec.penMove(2, -2);
    rec.penUp();
    rec.stop();
    const [down, move] = rec.stream().events as Array<{ x: number; y: number }>;
    expect([down!.x, down!.y]).toEqual([0, 1]);
    expect([move!.x, move!.y]).toEqual([1, 0]);
  });

  it("tracks the palette even while idle, without emitting events", () => {
    const { rec } = harness(60_000);
    rec.setStyle([0, 128, 0, 255], 0.02);
    expect(rec.currentStyle()).toEqual({ rgba: [0, 128, 0, 255], w: 0.02 });
    rec.start();
    rec.stop();
    expect(rec.stream().events).toEqual([]);
  });
});

describe("auto-stop", () => {
  it("fires exactly at the limit and reports the finished stream", () => {
    const got: InkStream[] = [];
    const { rec, advance } = harness(45_000, (s) => got.push(s));
    rec.start();
    advance(100);
    rec.penDown(0.5, 0.5);
    advance(44_899);
    expect(rec.state).toBe("recording");
    advance(1);
    expect(rec.state).toBe("stopped");
    expect(got).toHaveLength(1);
    expect(got[0]!.duration_ms).toBe(45_000);
    expect(got[0]!.events.map((e) => e.k)).toEqual(["d", "u"]);
    rec.penDown(0.2, 0.2); // late input is dropped
    expect(rec.stream().events).toHaveLength(2);
  });

  it("clamps event times to the limit when the timer runs late", () => {
    const { rec, advance } = harness(45_000);
    rec.start();
    advance(44_990);
    rec.penDown(0.5, 0.5);
    advance(300); // timer fires 290 ms late, stroke still open
    expect(rec.state).toBe("stopped");
    const s = rec.stream();
    for (const e of s.events) expect(e.t).toBeLessThanOrEqual(45_000);
    expect(s.duration_ms).toBeGreaterThanOrEqual(45_000);
  });

  it("does not fire after a manual stop or a reset", () => {
    const spy = vi.fn();
    const { rec, advance } = harness(1_000, spy);
    rec.start();
    advance(500);
    rec.stop();
    advance(10_000);
    expect(spy).not.toHaveBeenCalled();

    rec.start();
    advance(500);
    rec.reset();
    advance(10_000);
    expect(spy).not.toHaveBeenCalled();
  });

  it("stops within 100 ms of the limit on real timers", async () => {
    const got: InkStream[] = [];
    const rec = new InkRecorder({ limitMs: 1_000, onAutoStop: (s) => got.push(s) });
    rec.start();
    rec.penDown(0.5, 0.5);
    await new Promise((r) => setTimeout(r, 1_300));
    expect(rec.state).toBe("stopped");
    expect(got).toHaveLength(1);
    expect(Math.abs(got[0]!.duration_ms - 1_000)).toBeLessThanOrEqual(100);
    const last = got[0]!.events[got[0]!.events.length - 1]!;
    expect(last.k).toBe("u");
    expect(last.t).toBeLessThanOrEqual(1_000);
  });
});

describe("re-record", () => {
  it("reset discards the take and the next start is a clean slate", () => {
    const { rec, advance } = harness(60_000);
    rec.start();
    advance(10);
    rec.penDown(0.5, 0.5);
    rec.penUp();
    rec.stop();
    expect(rec.stream().events).toHaveLength(2);

    rec.reset();
    expect(rec.state).toBe("idle");
    expect(rec.elapsedMs()).toBe(0);

    advance(1_000);
    rec.start();
    advance(20);
    rec.penDown(0.1, 0.9);
    rec.penUp();
    rec.stop();
    const s = rec.stream();
    expect(s.events.map((e) => e.t)).toEqual([20, 20]);
    expect(s.duration_ms).toBe(20);
  });

  it("restart resets the style to the defaults", () => {
    const { rec } = harness(60_000);
    rec.start();
    rec.setStyle([255, 0, 0, 255], 0.02);
    rec.stop();
    rec.reset();
    rec.start();
    expect(rec.currentStyle()).toEqual({ rgba: DEFAULT_RGBA, w: DEFAULT_WIDTH });
    rec.stop();
  });
});
