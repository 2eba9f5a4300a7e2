from pathlib import Path
from typing import List, Tuple
from xml.sax.saxutils import escape

import numpy as np

from bitrel.core.storage import write_bytes
from bitrel.models.schemas import MetricKind
from bitrel.services.kde import CurveSet

# one colour per metric, in MetricKind order
PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]
TICK_STEP = 0.25


class LinePlot:
    """Minimal standalone SVG line plot: one polyline per curve, ticked axes, legend."""

    def __init__(self, width: int = 640, height: int = 400, margin: int = 48):
        self.width = width
        self.height = height
        self.margin = margin

    def _frame(self, x_range: Tuple[float, float], y_max: float):
        left, top = self.margin, self.margin / 2
        plot_w = self.width - self.margin - 150
        plot_h = self.height - self.margin - top

        def to_px(x: np.ndarray, y: np.ndarray):
            px = left + (x - x_range[0]) / (x_range[1] - x_range[0]) * plot_w
            py = top + plot_h - y / y_max * plot_h
            return px, py

        return left, top, plot_w, plot_h, to_px

    def render(self, curve_set: CurveSet, title: str = "", clip_negative: bool = False) -> str:
        grid = curve_set.grid
        keep = grid >= 0 if clip_negative else np.ones_like(grid, dtype=bool)
        x_range = (max(0.0, float(grid[0])) if clip_negative else float(grid[0]), float(grid[-1]))
        peaks = [float(c.density[keep].max()) for c in curve_set.curves.values()]
        y_max = max(peaks + [1.0]) * 1.05
        left, top, plot_w, plot_h, to_px = self._frame(x_range, y_max)

        parts: List[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="11">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
        ]
        if title:
            parts.append(f'<text x="{left + plot_w / 2:.1f}" y="{top - 6:.1f}" text-anchor="middle">{escape(title)}</text>')

        # ticks every 0.25 across the x domain
        first = np.ceil(x_range[0] / TICK_STEP) * TICK_STEP
        for tick in np.arange(first, x_range[1] + 1e-9, TICK_STEP):
            px, _ = to_px(np.array(tick), np.array(0.0))
            parts.append(f'<line x1="{px:.1f}" y1="{top + plot_h}" x2="{px:.1f}" y2="{top + plot_h + 4}" stroke="black"/>')
            parts.append(f'<text x="{px:.1f}" y="{top + plot_h + 16}" text-anchor="middle">{tick:.2f}</text>')
        for fraction in np.arange(0.0, 1.0 + 1e-9, TICK_STEP):
            value = fraction * y_max
            _, py = to_px(np.array(x_range[0]), np.array(value))
            parts.append(f'<line x1="{left - 4}" y1="{py:.1f}" x2="{left}" y2="{py:.1f}" stroke="black"/>')
            parts.append(f'<text x="{left - 6}" y="{py + 4:.1f}" text-anchor="end">{value:.2f}</text>')

        for index, (kind, curve) in enumerate(curve_set.curves.items()):
            colour = PALETTE[list(MetricKind).index(kind)]
            px, py = to_px(grid[keep], curve.density[keep])
            points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
            parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{points}"/>')
            ly = top + 14 + index * 16
            lx = left + plot_w + 16
            parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{colour}" stroke-width="2"/>')
            parts.append(f'<text x="{lx + 26}" y="{ly}">{escape(kind.value)}</text>')

        parts.append(
            f'<text x="{left + plot_w / 2:.1f}" y="{self.height - 6}" text-anchor="middle">'
            f'{escape(curve_set.statistic.value.upper())}</text>'
        )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def write(self, curve_set: CurveSet, path: Path, title: str = "", clip_negative: bool = False):
        write_bytes(path, self.render(curve_set, title, clip_negative).encode("utf-8"))
