"""Deterministic rasterization of ink streams.

Rasterization rule: each recorded point or segment is painted as a
hard-edged capsule (round caps, and therefore round joins where segments
meet) of radius ``style.width * min(w, h) / 2`` pixels, composited
source-over in event order onto a white canvas or a supplied background.
No inter-event interpolation: an event is either drawn or not at the query
time, so identical inputs always yield bit-identical rasters.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .errors import ValidationError
from .ink import DEFAULT_STYLE_RGBA, DEFAULT_STYLE_WIDTH, EventKind, InkStream, PenStyle


def blank_canvas(width: int, height: int, background: np.ndarray | None = None) -> np.ndarray:
    if width < 1 or height < 1:
        raise ValidationError("invalid-size", f"canvas must be at least 1x1, got {width}x{height}")
    if background is not None:
        if background.shape != (height, width, 3):
            raise ValidationError(
                "invalid-size",
                f"background shape {background.shape} does not match {height}x{width}x3",
            )
        return background.copy()
    return np.full((height, width, 3), 255, dtype=np.uint8)


def paint_capsule(
    canvas: np.ndarray,
    x0: float,
    y0: float,
    x1: float,
    y1: float,
    radius: float,
    rgba: tuple[int, int, int, int],
) -> None:
    """Paint one capsule (segment with round caps) source-over, in place."""
    h, w, _ = canvas.shape
    xmin = max(int(np.floor(min(x0, x1) - radius)), 0)
    xmax = min(int(np.ceil(max(x0, x1) + radius)), w - 1)
    ymin = max(int(np.floor(min(y0, y1) - radius)), 0)
    ymax = min(int(np.ceil(max(y0, y1) + radius)), h - 1)
    if xmin > xmax or ymin > ymax:
        return
    ys, xs = np.mgrid[ymin : ymax + 1, xmin : xmax + 1]
    px = xs + 0.5  # pixel centers
    py = ys + 0.5
    dx = x1 - x0
    dy = y1 - y0
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0.0:
        d2 = (px - x0) ** 2 + (py - y0) ** 2
    else:
        tt = np.clip(((px - x0) * dx + (py - y0) * dy) / seg_len2, 0.0, 1.0)
        d2 = (px - x0 - tt * dx) ** 2 + (py - y0 - tt * dy) ** 2
    mask = d2 <= radius * radius
    if not mask.any():
        return
    region = canvas[ymin : ymax + 1, xmin : xmax + 1]
    r, g, b, a = rgba
    color = np.array([r, g, b], dtype=np.float64)
    if a == 255:
        region[mask] = color.astype(np.uint8)
    else:
        alpha = a / 255.0
        blended = np.rint(region[mask] * (1.0 - alpha) + color * alpha)
        region[mask] = blended.astype(np.uint8)


def render_events(
    canvas: np.ndarray,
    events,
    style: PenStyle,
    last_point: tuple[float, float] | None,
) -> tuple[PenStyle, tuple[float, float] | None]:
    """Paint a run of events onto an existing canvas, returning the pen state.

    Shared by the one-shot renderer and callers that feed events
    incrementally; both paths paint the exact same capsules in the exact
    same order.
    """
    h, w, _ = canvas.shape
    scale = min(w, h)
    for e in events:
        if e.kind is EventKind.SET_STYLE:
            style = e.style
        elif e.kind is EventKind.PEN_DOWN:
            px, py = e.x * w, e.y * h
            paint_capsule(canvas, px, py, px, py, style.width * scale / 2.0, style.rgba)
            last_point = (px, py)
        elif e.kind is EventKind.PEN_MOVE:
            px, py = e.x * w, e.y * h
            paint_capsule(canvas, last_point[0], last_point[1], px, py, style.width * scale / 2.0, style.rgba)
            last_point = (px, py)
        else:  # PEN_UP
            last_point = None
    return style, last_point


def render_at(
    stream: InkStream,
    t_ms: int,
    width: int,
    height: int,
    background: np.ndarray | None = None,
) -> np.ndarray:
    """Raster of exactly the events with t <= t_ms, as an (h, w, 3) uint8 array."""
    canvas = blank_canvas(width, height, background)
    visible = [e for e in stream.events if e.t_ms <= t_ms]
    render_events(canvas, visible, PenStyle(DEFAULT_STYLE_RGBA, DEFAULT_STYLE_WIDTH), None)
    return canvas


def final_frame(
    stream: InkStream, width: int, height: int, background: np.ndarray | None = None
) -> np.ndarray:
    return render_at(stream, stream.duration_ms, width, height, background)


def drawn_segments(stream: InkStream, t_ms: int) -> list[tuple]:
    """The segment list render_at(t_ms) paints, for subset/monotonicity checks."""
    segs = []
    style = PenStyle(DEFAULT_STYLE_RGBA, DEFAULT_STYLE_WIDTH)
    last = None
    for e in stream.events:
        if e.t_ms > t_ms:
            break
        if e.kind is EventKind.SET_STYLE:
            style = e.style
        elif e.kind is EventKind.PEN_DOWN:
            segs.append((e.x, e.y, e.x, e.y, style))
            last = (e.x, e.y)
        elif e.kind is EventKind.PEN_MOVE:
            segs.append((last[0], last[1], e.x, e.y, style))
            last = (e.x, e.y)
        else:
            last = None
    return segs


# -- image plumbing (Pillow used purely as a codec) -----------------------------


def encode_png(canvas: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(canvas, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_image(data: bytes, width: int, height: int) -> np.ndarray:
    """Decode PNG/JPEG bytes and resize to (h, w, 3) with nearest-neighbor."""
    try:
        img = Image.open(io.BytesIO(data))
        img = img.convert("RGB").resize((width, height), Image.NEAREST)
    except Exception as exc:
        raise ValidationError("malformed-artifact", f"not a decodable image: {exc}") from None
    return np.asarray(img, dtype=np.uint8)


def audio_placeholder(width: int, height: int) -> np.ndarray:
    """Deterministic glyph for audio-only thumbnails: level bars on light gray."""
    canvas = blank_canvas(width, height)
    canvas[:, :] = (232, 232, 236)
    bar_color = np.array((90, 90, 110), dtype=np.uint8)
    n_bars = 5
    for i in range(n_bars):
        frac = (i + 1) / (n_bars + 1)
        bar_h = int(height * (0.25 + 0.5 * abs(np.sin(np.pi * frac))))
        x0 = int(width * frac) - max(width // 40, 1)
        x1 = int(width * frac) + max(width // 40, 1)
        y0 = (height - bar_h) // 2
        canvas[y0 : y0 + bar_h, max(x0, 0) : min(x1, width)] = bar_color
    return canvas
