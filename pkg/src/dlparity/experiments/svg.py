"""Minimal line-chart writer producing standalone SVG (no plotting library)."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from ..errors import DomainError

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=78, right=150, top=36, bottom=56)
PALETTE = ("#1f3b73", "#c0392b", "#27864a", "#8e44ad", "#d68910", "#17a2b8", "#555555")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    out, t = [], start
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out


def _label(v: float) -> str:
    if v != 0 and (abs(v) >= 1e5 or abs(v) < 1e-3):
        return f"{v:.1e}"
    return f"{v:g}"


def render_svg(
    series,
    x_label: str,
    y_label: str,
    path: str | Path | None = None,
    labels=None,
    title: str = "",
    log_x: bool = False,
    log_y: bool = False,
) -> str:
    """Draw each ``[(x, y), ...]`` in ``series`` as a polyline; optionally write to ``path``.

    Log axes plot ``log10`` of the coordinate and label ticks with powers of
    ten. Returns the SVG text.
    """
    series = [list(s) for s in series]
    if not series or any(not s for s in series):
        raise DomainError("render_svg needs at least one non-empty series")
    labels = list(labels) if labels is not None else [f"series {i}" for i in range(len(series))]

    def tx(v):
        if log_x:
            if v <= 0:
                raise DomainError("log x-axis needs positive values")
            return math.log10(v)
        return float(v)

    def ty(v):
        if log_y:
            if v <= 0:
                raise DomainError("log y-axis needs positive values")
            return math.log10(v)
        return float(v)

    pts = [[(tx(x), ty(y)) for x, y in s] for s in series]
    xs = [x for s in pts for x, _ in s]
    ys = [y for s in pts for _, y in s]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x0 == x1:
        x0, x1 = x0 - 1, x1 + 1
    if y0 == y1:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    if title:
        out.append(
            f'<text x="{left + pw / 2:.1f}" y="20" text-anchor="middle" '
            f'font-size="14">{escape(title)}</text>'
        )
    for t in _ticks(x0, x1):
        X = sx(t)
        text = f"1e{t:g}" if log_x else _label(t)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" stroke="#333"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle">{text}</text>')
    for t in _ticks(y0, y1):
        Y = sy(t)
        text = f"1e{t:g}" if log_y else _label(t)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="#333"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">{text}</text>')
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 14}" text-anchor="middle">{escape(x_label)}</text>'
    )
    out.append(
        f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + ph / 2:.1f})">{escape(y_label)}</text>'
    )
    for i, (s, name) in enumerate(zip(pts, labels)):
        colour = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}"/>')
        ly = top + 14 + 18 * i
        out.append(
            f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
            f'stroke="{colour}" stroke-width="2"/>'
        )
        out.append(f'<text x="{left + pw + 35}" y="{ly + 4}">{escape(str(name))}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return text
