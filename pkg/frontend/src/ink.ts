// Digital-ink event streams: the exact document format the server parses.
//
// The client validates every stream against the same pen state machine the
// server enforces, so a malformed capture is caught before upload, and
// serializes to the same canonical compact byte form the server stores.

export const WIDTH_MAX = 0.1;
export const DEFAULT_RGBA: Rgba = [0, 0, 0, 255];
export const DEFAULT_WIDTH = 0.01;

export type Rgba = [number, number, number, number];

export interface PenStyle {
  rgba: Rgba;
  w: number;
}

export type InkEvent =
  | { t: number; k: "d" | "m"; x: number; y: number }
  | { t: number; k: "u" }
  | { t: number; k: "s"; style: PenStyle };

export interface InkStream {
  version: 1;
  duration_ms: number;
  events: InkEvent[];
}

export class InkError extends Error {
  constructor(
    public readonly code: "malformed-document" | "out-of-range" | "non-monotonic-time" | "malformed-sequence",
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

const isInt = (v: unknown): v is number =>
  typeof v === "number" && Number.isInteger(v);
const isNum = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

/** Enforce the pen state machine and value ranges; throws InkError. */
export function validateStream(stream: InkStream): void {
  if (!isInt(stream.duration_ms) || stream.duration_ms < 0) {
    throw new InkError("out-of-range", "duration_ms must be a non-negative int");
  }
  let prevT = 0;
  let strokeOpen = false;
  stream.events.forEach((e, i) => {
    if (!isInt(e.t) || e.t < 0) {
      throw new InkError("out-of-range", `event ${i}: t must be a non-negative int`);
    }
    if (e.t < prevT) {
      throw new InkError("non-monotonic-time", `event ${i}: t ${e.t} < ${prevT}`);
    }
    prevT = e.t;
    switch (e.k) {
      case "d":
      case "m": {
        if (!isNum(e.x) || e.x < 0 || e.x > 1 || !isNum(e.y) || e.y < 0 || e.y > 1) {
          throw new InkError("out-of-range", `event ${i}: coordinates outside [0,1]`);
        }
        if (e.k === "d") {
          if (strokeOpen) throw new InkError("malformed-sequence", `event ${i}: pen-down inside an open stroke`);
          strokeOpen = true;
        } else if (!strokeOpen) {
          throw new InkError("malformed-sequence", `event ${i}: pen-move with no open stroke`);
        }
        break;
      }
      case "u":
        if (!strokeOpen) throw new InkError("malformed-sequence", `event ${i}: pen-up with no open stroke`);
        strokeOpen = false;
        break;
      case "s": {
        if (strokeOpen) throw new InkError("malformed-sequence", `event ${i}: set-style inside an open stroke`);
        const { rgba, w } = e.style;
        if (rgba.length !== 4 || !rgba.every((c) => isInt(c) && c >= 0 && c <= 255)) {
          throw new InkError("out-of-range", `event ${i}: rgba channels must be ints in 0..255`);
        }
        if (!isNum(w) || w <= 0 || w > WIDTH_MAX) {
          throw new InkError("out-of-range", `event ${i}: width must be in (0, ${WIDTH_MAX}]`);
        }
        break;
      }
      default:
        throw new InkError("malformed-document", `event ${i}: unknown kind`);
    }
  });
  const last = stream.events[stream.events.length - 1];
  if (last !== undefined && last.t > stream.duration_ms) {
    throw new InkError(
      "out-of-range",
      `last event at ${last.t} ms exceeds declared duration ${stream.duration_ms} ms`,
    );
  }
}

/** Canonical compact serialization with fixed key order. */
export function serializeInk(stream: InkStream): string {
  validateStream(stream);
  const events = stream.events.map((e) => {
    switch (e.k) {
      case "d":
      case "m":
        return { t: e.t, k: e.k, x: e.x, y: e.y };
      case "s":
        return { t: e.t, k: e.k, style: { rgba: e.style.rgba, w: e.style.w } };
      default:
        return { t: e.t, k: e.k };
    }
  });
  return JSON.stringify({ version: 1, duration_ms: stream.duration_ms, events });
}

/** Parse a document from text, re-validating everything. */
export function parseInk(text: string): InkStream {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (exc) {
    throw new InkError("malformed-document", `not JSON: ${exc}`);
  }
  if (typeof doc !== "object" || doc === null) {
    throw new InkError("malformed-document", "expected an object");
  }
  const keys = Object.keys(doc).sort();
  if (keys.join(",") !== "duration_ms,events,version") {
    throw new InkError("malformed-document", "expected keys version, duration_ms, events");
  }
  const raw = doc as { version: unknown; duration_ms: unknown; events: unknown };
  if (raw.version !== 1) {
    throw new InkError("malformed-document", `unsupported version ${raw.version}`);
  }
  if (!Array.isArray(raw.events)) {
    throw new InkError("malformed-document", "events must be a list");
  }
  const events = raw.events.map((re, i) => {
    if (typeof re !== "object" || re === null || Array.isArray(re)) {
      throw new InkError("malformed-document", `event ${i} is not an object`);
    }
    const obj = re as Record<string, unknown>;
    const k = obj.k;
    const present = Object.keys(obj).sort().join(",");
    if (k === "d" || k === "m") {
      if (present !== "k,t,x,y") throw new InkError("malformed-document", `event ${i}: bad keys for ${k}`);
      return { t: obj.t as number, k, x: obj.x as number, y: obj.y as number };
    }
    if (k === "u") {
      if (present !== "k,t") throw new InkError("malformed-document", `event ${i}: bad keys for u`);
      return { t: obj.t as number, k };
    }
    if (k === "s") {
      if (present !== "k,style,t") throw new InkError("malformed-document", `event ${i}: bad keys for s`);
      const style = obj.style as Record<string, unknown>;
      if (
        typeof style !== "object" ||
        style === null ||
        Object.keys(style).sort().join(",") !== "rgba,w" ||
        !Array.isArray(style.rgba) ||
        style.rgba.length !== 4
      ) {
        throw new InkError("malformed-document", `event ${i}: style needs rgba[4] and w`);
      }
      return {
        t: obj.t as number,
        k,
        style: { rgba: style.rgba as Rgba, w: style.w as number },
      };
    }
    throw new InkError("malformed-document", `event ${i}: unknown kind ${JSON.stringify(k)}`);
  });
  const stream: InkStream = {
    version: 1,
    duration_ms: raw.duration_ms as number,
    events: events as InkEvent[],
  };
  validateStream(stream);
  return stream;
}

/** Structural equality of two streams, with numeric (not textual) comparison. */
export function streamsEqual(a: InkStream, b: InkStream): boolean {
  if (a.duration_ms !== b.duration_ms || a.events.length !== b.events.length) return false;
  return a.events.every((ea, i) => {
    const eb = b.events[i]!;
    if (ea.t !== eb.t || ea.k !== eb.k) return false;
    if (ea.k === "d" || ea.k === "m") {
      const mb = eb as { x: number; y: number };
      return ea.x === mb.x && ea.y === mb.y;
    }
    if (ea.k === "s") {
      const sb = (eb as { style: PenStyle }).style;
      return ea.style.w === sb.w && ea.style.rgba.every((c, j) => c === sb.rgba[j]);
    }
    return true;
  });
}
