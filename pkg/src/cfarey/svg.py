"""Tiny dependency-free SVG plots: scatter, histogram, line overlay, log-log lines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d68910")


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


@dataclass
class Figure:
    """A single-axes plot accumulated as SVG elements."""

    width: int = 640
    height: int = 480
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    metadata: dict = field(default_factory=dict)
    _items: list = field(default_factory=list, repr=False)
    _legend: list = field(default_factory=list, repr=False)

    margin = (60, 20, 40, 50)  # left, right, top, bottom

    def _bounds(self):
        xs = [x for kind, data, _ in self._items for x in data[0]]
        ys = [y for kind, data, _ in self._items for y in data[1]]
        x0, x1 = self.xlim or (min(xs, default=0.0), max(xs, default=1.0))
        y0, y1 = self.ylim or (min(ys, default=0.0), max(ys, default=1.0))
        if x1 <= x0:
            x1 = x0 + 1
        if y1 <= y0:
            y1 = y0 + 1
        return x0, x1, y0, y1

    def scatter(self, x, y, colors=None, radius: float = 1.0, label: str | None = None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if colors is None:
            colors = [PALETTE[len(self._legend) % len(PALETTE)]] * len(x)
        self._items.append(("scatter", (x, y), {"colors": list(colors), "r": radius}))
        if label:
            self._legend.append((label, colors[0] if len(colors) else PALETTE[0]))
        return self

    def bars(self, edges, heights, label: str | None = None, color: str = "#7f9cc9"):
        edges = np.asarray(edges, dtype=float)
        heights = np.asarray(heights, dtype=float)
        xs = np.concatenate([edges, edges])
        ys = np.concatenate([np.zeros(1), heights])
        self._items.append(("bars", (xs, ys), {"edges": edges, "heights": heights, "color": color}))
        if label:
            self._legend.append((label, color))
        return self

    def line(self, x, y, label: str | None = None, color: str | None = None, dashed: bool = False):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        color = color or PALETTE[len(self._legend) % len(PALETTE)]
        self._items.append(("line", (x[ok], y[ok]), {"color": color, "dashed": dashed}))
        if label:
            self._legend.append((label, color))
        return self

    def render(self) -> str:
        L, R, T, B = self.margin
        pw, ph = self.width - L - R, self.height - T - B
        x0, x1, y0, y1 = self._bounds()

        def X(v):
            return L + (np.asarray(v) - x0) / (x1 - x0) * pw

        def Y(v):
            return T + ph - (np.asarray(v) - y0) / (y1 - y0) * ph

        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="11">',
        ]
        if self.metadata:
            meta = "; ".join(f"{k}={v}" for k, v in self.metadata.items())
            out.append(f"<metadata>{escape(meta)}</metadata>")
        out.append('<rect width="100%" height="100%" fill="white"/>')
        out.append(f'<defs><clipPath id="plot"><rect x="{L}" y="{T}" width="{pw}" height="{ph}"/></clipPath></defs>')
        out.append('<g clip-path="url(#plot)">')
        for kind, (xs, ys), opt in self._items:
            if kind == "scatter":
                for cx, cy, c in zip(X(xs), Y(ys), opt["colors"]):
                    out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{opt["r"]}" fill="{c}"/>')
            elif kind == "bars":
                e, h = opt["edges"], opt["heights"]
                for a, b, v in zip(X(e[:-1]), X(e[1:]), h):
                    top = float(Y(v))
                    base = float(Y(max(y0, 0.0)))
                    out.append(
                        f'<rect x="{_fmt(a)}" y="{_fmt(min(top, base))}" width="{_fmt(max(b - a, 0.0))}" '
                        f'height="{_fmt(abs(base - top))}" fill="{opt["color"]}" stroke="white" stroke-width="0.3"/>'
                    )
            else:
                pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(X(xs), Y(ys)))
                dash = ' stroke-dasharray="5,3"' if opt["dashed"] else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{opt["color"]}" stroke-width="1.5"{dash}/>')
        out.append("</g>")
        out.append(f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for tx in _nice_ticks(x0, x1):
            px = float(X(tx))
            out.append(f'<line x1="{_fmt(px)}" y1="{T + ph}" x2="{_fmt(px)}" y2="{T + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{_fmt(px)}" y="{T + ph + 16}" text-anchor="middle">{_fmt(tx)}</text>')
        for ty in _nice_ticks(y0, y1):
            py = float(Y(ty))
            out.append(f'<line x1="{L - 4}" y1="{_fmt(py)}" x2="{L}" y2="{_fmt(py)}" stroke="black"/>')
            out.append(f'<text x="{L - 6}" y="{_fmt(py + 4)}" text-anchor="end">{_fmt(ty)}</text>')
        if self.title:
            out.append(f'<text x="{self.width / 2}" y="{T - 14}" text-anchor="middle" font-size="13">{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{L + pw / 2}" y="{self.height - 10}" text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            out.append(
                f'<text x="14" y="{T + ph / 2}" text-anchor="middle" transform="rotate(-90 14 {T + ph / 2})">'
                f"{escape(self.ylabel)}</text>"
            )
        for i, (label, color) in enumerate(self._legend):
            y = T + 14 + 16 * i
            out.append(f'<rect x="{L + pw - 150}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{L + pw - 135}" y="{y}">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.render(), encoding="utf-8")
        return path


def height_ramp(values, lo: float | None = None, hi: float | None = None) -> list[str]:
    """Blue (low) to red (high) colours for a scatter coloured by height."""
    v = np.asarray(values, dtype=float)
    lo = float(v.min()) if lo is None else lo
    hi = float(v.max()) if hi is None else hi
    frac = np.clip((v - lo) / (hi - lo if hi > lo else 1.0), 0, 1)
    r = (40 + 200 * frac).astype(int)
    g = (60 + 60 * (1 - np.abs(2 * frac - 1))).astype(int)
    b = (200 - 170 * frac).astype(int)
    return [f"#{a:02x}{c:02x}{d:02x}" for a, c, d in zip(r, g, b)]


def loglog_tail(deltas, tail, title: str = "", metadata: dict | None = None) -> Figure:
    """``l -> ln tail(e^l)`` against the reference line ``-4 l``."""
    d = np.asarray(deltas, dtype=float)
    t = np.asarray(tail, dtype=float)
    ok = (d > 0) & (t > 0)
    ell = np.log(d[ok])
    fig = Figure(title=title, xlabel="l = ln delta", ylabel="ln tail", metadata=metadata or {})
    fig.line(ell, np.log(t[ok]), label="ln tail(e^l)")
    fig.line(ell, -4 * ell, label="-4 l", color=PALETTE[1], dashed=True)
    return fig
