from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .tsp import Instance, check_permutation


def tour_svg(inst: Instance, order, title: str = "", size: int = 512, margin: int = 24) -> str:
    """SVG text: closed tour path plus one circle per city."""
    order = check_permutation(order, inst.n)
    c = inst.coords
    lo = c.min(axis=0)
    span = float((c.max(axis=0) - lo).max()) or 1.0
    inner = size - 2 * margin
    px = margin + (c[:, 0] - lo[0]) / span * inner
    py = size - margin - (c[:, 1] - lo[1]) / span * inner  # y grows upward
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 20}" '
             f'viewBox="0 0 {size} {size + 20}">',
             f"<title>{escape(title)}</title>",
             f'<rect width="100%" height="100%" fill="white"/>']
    if inst.n >= 2:
        pts = " L ".join(f"{px[i]:.2f} {py[i]:.2f}" for i in order)
        parts.append(f'<path d="M {pts} Z" fill="none" stroke="#1f77b4" stroke-width="1.2"/>')
    r = max(1.0, min(4.0, 200.0 / np.sqrt(inst.n) / 10))
    parts.extend(f'<circle class="city" cx="{px[i]:.2f}" cy="{py[i]:.2f}" r="{r:.2f}" fill="#d62728"/>'
                 for i in range(inst.n))
    parts.append(f'<text x="{margin}" y="{size + 12}" font-family="sans-serif" font-size="12">'
                 f"{escape(title)}</text>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_tour_svg(inst: Instance, order, out_path, title: str = "") -> None:
    Path(out_path).write_text(tour_svg(inst, order, title))
