// Lesson playback position logic. The plan comes verbatim from the server;
// the player's only job is to honor it: play video entries in order and
// refuse to pass an exercise pause until that exercise has been answered.

import type { PlanEntryJson, TimelineJson } from "./wire.js";

export interface PlayerPosition {
  /** Global lesson clock in ms of video time. */
  offsetMs: number;
  /** The exercise currently blocking playback, if any. */
  blockedOn: string | null;
}

export class TimelinePlayer {
  private readonly entries: PlanEntryJson[];
  private readonly answered = new Set<string>();
  private offset = 0;

  constructor(timeline: TimelineJson) {
    this.entries = timeline.plan.entries;
  }

  get totalVideoMs(): number {
    let total = 0;
    for (const e of this.entries) {
      if (e.kind === "play") total += e.duration_ms;
    }
    return total;
  }

  pauseOffsets(): Array<{ exercise_id: string; offset_ms: number }> {
    return this.entries
      .filter((e): e is Extract<PlanEntryJson, { kind: "pause" }> => e.kind === "pause")
      .map((e) => ({ exercise_id: e.exercise_id, offset_ms: e.offset_ms }));
  }

  /** First pause at or before `t` whose exercise is still unanswered. */
  private firstBlockerUpTo(t: number): Extract<PlanEntryJson, { kind: "pause" }> | null {
    for (const e of this.entries) {
      if (e.kind !== "pause") continue;
      if (e.offset_ms > t) break;
      if (!this.answered.has(e.exercise_id)) return e;
    }
    return null;
  }

  /**
   * Try to move the playhead to `t`. The result clamps at the first
   * unanswered pause; skipping past mandatory exercises is impossible.
   */
  seek(t: number): PlayerPosition {
    const target = Math.min(Math.max(0, t), this.totalVideoMs);
    const blocker = this.firstBlockerUpTo(target);
    if (blocker !== null) {
      this.offset = blocker.offset_ms;
      return { offsetMs: this.offset, blockedOn: blocker.exercise_id };
    }
    this.offset = target;
    return { offsetMs: this.offset, blockedOn: null };
  }

  /** Advance by `deltaMs` of wall-clock playback. */
  tick(deltaMs: number): PlayerPosition {
    return this.seek(this.offset + deltaMs);
  }

  position(): PlayerPosition {
    const blocker = this.firstBlockerUpTo(this.offset);
    return { offsetMs: this.offset, blockedOn: blocker ? blocker.exercise_id : null };
  }

  /** Record a submitted exercise; playback may pass its pause afterwards. */
  markAnswered(exerciseId: string): void {
    this.answered.add(exerciseId);
  }

  isAnswered(exerciseId: string): boolean {
    return this.answered.has(exerciseId);
  }
}
