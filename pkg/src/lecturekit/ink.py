"""Digital-ink event streams: the wire format, its validator, and stroke queries.

A stream is an ordered list of timestamped pen events (down / move / up /
set-style). The serialized form is compact UTF-8 JSON::

    {"version":1,"duration_ms":<int>,"events":[
        {"t":<int>,"k":"d"|"m"|"u"|"s","x":<float>?,"y":<float>?,
         "style":{"rgba":[r,g,b,a],"w":<float>}?}, ...]}

Keys are emitted exactly in that order and events in time order, so equal
streams serialize to equal bytes. Coordinates are normalized to [0,1] against
the recording canvas; width is a fraction of the canvas's short side in
(0, 0.1]. Style changes are only legal between strokes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError
from .util import canon_json

WIDTH_MAX = 0.1

#: style in effect before any set-style event: opaque black, 1% of the short side
DEFAULT_STYLE_RGBA = (0, 0, 0, 255)
DEFAULT_STYLE_WIDTH = 0.01


class EventKind(str, Enum):
    PEN_DOWN = "d"
    PEN_MOVE = "m"
    PEN_UP = "u"
    SET_STYLE = "s"


@dataclass(frozen=True)
class PenStyle:
    rgba: tuple[int, int, int, int]
    width: float


@dataclass(frozen=True)
class InkEvent:
    t_ms: int
    kind: EventKind
    x: float | None = None
    y: float | None = None
    style: PenStyle | None = None


def pen_down(t_ms: int, x: float, y: float) -> InkEvent:
    return InkEvent(t_ms, EventKind.PEN_DOWN, x, y)


def pen_move(t_ms: int, x: float, y: float) -> InkEvent:
    return InkEvent(t_ms, EventKind.PEN_MOVE, x, y)


def pen_up(t_ms: int) -> InkEvent:
    return InkEvent(t_ms, EventKind.PEN_UP)


def set_style(t_ms: int, rgba: tuple[int, int, int, int], width: float) -> InkEvent:
    return InkEvent(t_ms, EventKind.SET_STYLE, style=PenStyle(tuple(rgba), width))


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _validate(events: tuple[InkEvent, ...], duration_ms: int) -> None:
    """Single validation pass enforcing every stream invariant.

    Checks run per event in order (shape, bounds, time, pen state machine) so
    the reported index is deterministic, then the duration bound at the end.
    """
    if not _is_int(duration_ms) or duration_ms < 0:
        raise ValidationError("out-of-range", f"duration_ms must be a non-negative int, got {duration_ms!r}")
    prev_t = 0
    stroke_open = False
    for i, e in enumerate(events):
        has_xy = e.x is not None or e.y is not None
        if e.kind in (EventKind.PEN_DOWN, EventKind.PEN_MOVE):
            if e.x is None or e.y is None or e.style is not None:
                raise ValidationError("malformed-document", f"event {i}: {e.kind.name} needs x,y only")
        elif e.kind is EventKind.PEN_UP:
            if has_xy or e.style is not None:
                raise ValidationError("malformed-document", f"event {i}: PEN_UP carries no fields")
        elif e.kind is EventKind.SET_STYLE:
            if has_xy or e.style is None:
                raise ValidationError("malformed-document", f"event {i}: SET_STYLE needs style only")
        else:
            raise ValidationError("malformed-document", f"event {i}: unknown kind {e.kind!r}")

        if not _is_int(e.t_ms) or e.t_ms < 0:
            raise ValidationError("out-of-range", f"event {i}: t must be a non-negative int")
        if e.x is not None and not (_is_num(e.x) and 0.0 <= e.x <= 1.0 and _is_num(e.y) and 0.0 <= e.y <= 1.0):
            raise ValidationError("out-of-range", f"event {i}: coordinates outside [0,1]")
        if e.style is not None:
            rgba, width = e.style.rgba, e.style.width
            if (
                not isinstance(rgba, tuple)
                or len(rgba) != 4
                or not all(_is_int(c) and 0 <= c <= 255 for c in rgba)
            ):
                raise ValidationError("out-of-range", f"event {i}: rgba channels must be ints in 0..255")
            if not (_is_num(width) and 0.0 < width <= WIDTH_MAX):
                raise ValidationError("out-of-range", f"event {i}: width must be in (0, {WIDTH_MAX}]")

        if e.t_ms < prev_t:
            raise ValidationError("non-monotonic-time", f"event {i}: t {e.t_ms} < {prev_t}")
        prev_t = e.t_ms

        if e.kind is EventKind.PEN_DOWN:
            if stroke_open:
                raise ValidationError("malformed-sequence", f"event {i}: pen-down inside an open stroke")
            stroke_open = True
        elif e.kind in (EventKind.PEN_MOVE, EventKind.PEN_UP):
            if not stroke_open:
                raise ValidationError("malformed-sequence", f"event {i}: {e.kind.name} with no open stroke")
            if e.kind is EventKind.PEN_UP:
                stroke_open = False
        else:  # SET_STYLE
            if stroke_open:
                raise ValidationError("malformed-sequence", f"event {i}: set-style inside an open stroke")
    if events and events[-1].t_ms > duration_ms:
        raise ValidationError(
            "out-of-range",
            f"last event at {events[-1].t_ms} ms exceeds declared duration {duration_ms} ms",
        )


@dataclass(frozen=True)
class InkStream:
    """An immutable, validated pen-event record. Invalid sequences are unrepresentable."""

    events: tuple[InkEvent, ...]
    duration_ms: int

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        _validate(self.events, self.duration_ms)


EMPTY_STREAM = InkStream((), 0)


def parse_ink_stream(document: bytes) -> InkStream:
    """Decode and validate an ink document; never raises anything but ValidationError."""
    try:
        text = document.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValidationError("malformed-document", f"not UTF-8: {exc}") from None

    def _no_const(name):
        raise ValueError(f"constant {name} not allowed")

    try:
        doc = json.loads(text, parse_constant=_no_const)
    except (ValueError, RecursionError) as exc:
        raise ValidationError("malformed-document", f"not JSON: {exc}") from None

    if not isinstance(doc, dict) or set(doc) != {"version", "duration_ms", "events"}:
        raise ValidationError("malformed-document", "expected keys version, duration_ms, events")
    if doc["version"] != 1:
        raise ValidationError("malformed-document", f"unsupported version {doc['version']!r}")
    if not isinstance(doc["events"], list):
        raise ValidationError("malformed-document", "events must be a list")

    events = []
    for i, raw in enumerate(doc["events"]):
        if not isinstance(raw, dict):
            raise ValidationError("malformed-document", f"event {i} is not an object")
        kind_code = raw.get("k")
        try:
            kind = EventKind(kind_code)
        except ValueError:
            raise ValidationError("malformed-document", f"event {i}: unknown kind {kind_code!r}") from None
        allowed = {"t", "k"}
        if kind in (EventKind.PEN_DOWN, EventKind.PEN_MOVE):
            allowed |= {"x", "y"}
        elif kind is EventKind.SET_STYLE:
            allowed |= {"style"}
        if set(raw) != allowed:
            raise ValidationError(
                "malformed-document", f"event {i}: keys {sorted(raw)} do not match kind {kind_code!r}"
            )
        style = None
        if kind is EventKind.SET_STYLE:
            s = raw["style"]
            if (
                not isinstance(s, dict)
                or set(s) != {"rgba", "w"}
                or not isinstance(s["rgba"], list)
                or len(s["rgba"]) != 4
            ):
                raise ValidationError("malformed-document", f"event {i}: style needs rgba[4] and w")
            if not all(_is_int(c) for c in s["rgba"]) or not _is_num(s["w"]):
                raise ValidationError("out-of-range", f"event {i}: bad style value types")
            style = PenStyle(tuple(s["rgba"]), float(s["w"]))
        x = y = None
        if kind in (EventKind.PEN_DOWN, EventKind.PEN_MOVE):
            if not _is_num(raw["x"]) or not _is_num(raw["y"]):
                raise ValidationError("out-of-range", f"event {i}: coordinates must be numbers")
            x, y = float(raw["x"]), float(raw["y"])
        t = raw["t"]
        if not _is_int(t):
            raise ValidationError("out-of-range", f"event {i}: t must be an int")
        events.append(InkEvent(t, kind, x, y, style))
    return InkStream(tuple(events), doc["duration_ms"])


def serialize_ink_stream(stream: InkStream) -> bytes:
    """Canonical byte form; parse(serialize(s)) == s field-exactly."""
    out_events = []
    for e in stream.events:
        obj: dict = {"t": e.t_ms, "k": e.kind.value}
        if e.x is not None:
            obj["x"] = e.x
            obj["y"] = e.y
        if e.style is not None:
            obj["style"] = {"rgba": list(e.style.rgba), "w": e.style.width}
        out_events.append(obj)
    return canon_json({"version": 1, "duration_ms": stream.duration_ms, "events": out_events})


@dataclass(frozen=True)
class Stroke:
    """One pen-down..pen-up run: timed points plus the style in effect."""

    points: tuple[tuple[int, float, float], ...]  # (t_ms, x, y)
    style: PenStyle
    complete: bool


def iter_strokes(stream: InkStream) -> list[Stroke]:
    strokes: list[Stroke] = []
    style = PenStyle(DEFAULT_STYLE_RGBA, DEFAULT_STYLE_WIDTH)
    points: list[tuple[int, float, float]] = []
    open_ = False
    for e in stream.events:
        if e.kind is EventKind.SET_STYLE:
            style = e.style
        elif e.kind is EventKind.PEN_DOWN:
            points = [(e.t_ms, e.x, e.y)]
            open_ = True
        elif e.kind is EventKind.PEN_MOVE:
            points.append((e.t_ms, e.x, e.y))
        else:
            strokes.append(Stroke(tuple(points), style, True))
            open_ = False
    if open_:
        strokes.append(Stroke(tuple(points), style, False))
    return strokes


def has_ink(stream: InkStream) -> bool:
    """True iff at least one complete stroke has two or more distinct points.

    Degenerate taps (a single point) still render as a dot but do not count
    as ink for labeling.
    """
    for stroke in iter_strokes(stream):
        if stroke.complete and len({(x, y) for _, x, y in stroke.points}) >= 2:
            return True
    return False
