"""Minimal SVG plots of polylines with axes, no plotting dependencies."""

from __future__ import annotations

from importlib import metadata
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


class SvgPlot:
    """Collects polylines in data coordinates and renders them to a fixed canvas.

    The only line that depends on the environment is the leading version
    comment, so outputs are otherwise byte-identical across runs.
    """

    def __init__(self, window, width=600, height=600, margin=40, title=""):
        self.x_lo, self.x_hi, self.y_lo, self.y_hi = map(float, window)
        if not (self.x_hi > self.x_lo and self.y_hi > self.y_lo):
            raise ValueError("empty plot window")
        self.width = width
        self.height = height
        self.margin = margin
        self.title = title
        self._items = []

    def _map(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        w = self.width - 2 * self.margin
        h = self.height - 2 * self.margin
        u = self.margin + (pts[:, 0] - self.x_lo) / (self.x_hi - self.x_lo) * w
        v = self.margin + (self.y_hi - pts[:, 1]) / (self.y_hi - self.y_lo) * h
        return np.column_stack([u, v])

    def polyline(self, points, color=None, width=1.5, dashed=False):
        color = color or PALETTE[len(self._items) % len(PALETTE)]
        uv = self._map(points)
        coords = " ".join(f"{u:.3f},{v:.3f}" for u, v in uv)
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self._items.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} points="{coords}"/>'
        )

    def marker(self, x, y, color="#000000", radius=3.0):
        (u, v), = self._map([(x, y)])
        self._items.append(f'<circle cx="{u:.3f}" cy="{v:.3f}" r="{radius}" fill="{color}"/>')

    def vline(self, x, color="#888888"):
        self.polyline([(x, self.y_lo), (x, self.y_hi)], color=color, width=1.0, dashed=True)

    def _axes(self):
        out = []
        frame = self._map([(self.x_lo, self.y_lo), (self.x_hi, self.y_hi)])
        (u0, v0), (u1, v1) = frame
        out.append(
            f'<rect x="{u0:.3f}" y="{v1:.3f}" width="{u1 - u0:.3f}" height="{v0 - v1:.3f}" '
            'fill="none" stroke="#000000" stroke-width="1"/>'
        )
        if self.x_lo < 0 < self.x_hi:
            (ua, _), = self._map([(0.0, 0.0)])
            out.append(f'<line x1="{ua:.3f}" y1="{v1:.3f}" x2="{ua:.3f}" y2="{v0:.3f}" stroke="#bbbbbb"/>')
        if self.y_lo < 0 < self.y_hi:
            (_, va), = self._map([(0.0, 0.0)])
            out.append(f'<line x1="{u0:.3f}" y1="{va:.3f}" x2="{u1:.3f}" y2="{va:.3f}" stroke="#bbbbbb"/>')
        labels = (
            (u0, v0 + 16, "start", f"{self.x_lo:.4g}"),
            (u1, v0 + 16, "end", f"{self.x_hi:.4g}"),
            (u0 - 4, v0, "end", f"{self.y_lo:.4g}"),
            (u0 - 4, v1 + 10, "end", f"{self.y_hi:.4g}"),
        )
        for u, v, anchor, text in labels:
            out.append(f'<text x="{u:.3f}" y="{v:.3f}" font-size="11" text-anchor="{anchor}">{text}</text>')
        if self.title:
            out.append(
                f'<text x="{self.width / 2:.3f}" y="{self.margin / 2:.3f}" font-size="13" '
                f'text-anchor="middle">{escape(self.title)}</text>'
            )
        return out

    def render(self) -> str:
        lines = [
            f"<!-- calabi_slag {_version()} -->",
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">',
            '<rect width="100%" height="100%" fill="#ffffff"/>',
        ]
        lines += self._axes()
        lines.append(
            f'<clipPath id="frame"><rect x="{self.margin}" y="{self.margin}" '
            f'width="{self.width - 2 * self.margin}" height="{self.height - 2 * self.margin}"/></clipPath>'
        )
        lines.append('<g clip-path="url(#frame)">')
        lines += self._items
        lines.append("</g>")
        lines.append("</svg>")
        return "\n".join(lines) + "\n"

    def write(self, stream):
        stream.write(self.render())
