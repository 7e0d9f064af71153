"""Deterministic SVG heatmaps for similarity matrices."""
from __future__ import annotations

from dataclasses import dataclass
from html import escape

import numpy as np

from .metrics import SimilarityMatrix, format_score

# 17 evenly spaced viridis anchors; the 256-entry table interpolates between them.
_ANCHORS = (
    (68, 1, 84), (72, 24, 106), (71, 45, 123), (66, 64, 134), (59, 82, 139),
    (51, 99, 141), (44, 114, 142), (38, 130, 142), (33, 145, 140), (31, 160, 136),
    (40, 174, 128), (63, 188, 115), (94, 201, 98), (132, 212, 75), (173, 220, 48),
    (216, 226, 25), (253, 231, 37),
)


def _build_palette():
    anchors = np.array(_ANCHORS, dtype=np.float64)
    pos = np.linspace(0.0, 1.0, len(anchors))
    t = np.arange(256) / 255.0
    chans = [np.interp(t, pos, anchors[:, c]) for c in range(3)]
    # round half up so the table does not depend on numpy's banker's rounding
    return tuple(tuple(int(np.floor(ch[i] + 0.5)) for ch in chans) for i in range(256))


PALETTE: tuple[tuple[int, int, int], ...] = _build_palette()
NAN_FILL = "#9e9e9e"


@dataclass(frozen=True)
class HeatmapStyle:
    value_range: tuple[float, float] = (0.0, 1.0)
    cell_px: int = 36
    show_labels: bool = True
    title: str | None = None

    def __post_init__(self):
        lo, hi = self.value_range
        if not lo < hi:
            raise ValueError(f"value range needs lo < hi, got {self.value_range}")
        if self.cell_px < 1:
            raise ValueError("cell_px must be positive")


def palette_index(value: float, value_range=(0.0, 1.0)) -> int:
    """Palette slot for ``value`` after clamping to ``value_range``.

    The value is first rounded to the 9 significant digits used in CSV
    output, so a score read back from CSV maps to the same slot.
    """
    lo, hi = value_range
    v = float(format_score(value))
    v = min(max(v, lo), hi)
    return int(np.floor((v - lo) / (hi - lo) * 255.0 + 0.5))


def hex_color(idx: int) -> str:
    r, g, b = PALETTE[idx]
    return f"#{r:02x}{g:02x}{b:02x}"


def render_heatmap_svg(m: SimilarityMatrix, style: HeatmapStyle | None = None) -> bytes:
    style = style or HeatmapStyle()
    n_rows, n_cols = m.shape
    c = style.cell_px
    longest = max((len(s) for s in m.row_labels + m.col_labels), default=0)
    margin = (8 + 7 * longest) if style.show_labels else 4
    top = margin + (20 if style.title else 0)
    bar_w = 14
    width = margin + n_cols * c + 20 + bar_w + 48
    bar_h = max(n_rows * c, 64)
    height = top + bar_h + 8
    lo, hi = style.value_range

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        "<defs>",
        '<pattern id="nan-hatch" patternUnits="userSpaceOnUse" width="6" height="6">',
        f'<rect width="6" height="6" fill="{NAN_FILL}"/>',
        '<path d="M0,6 L6,0" stroke="#ffffff" stroke-width="1"/>',
        "</pattern>",
        "</defs>",
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if style.title:
        out.append(f'<text x="{margin}" y="14" font-size="13">{escape(style.title)}</text>')
    out.append(f'<g id="cells" data-metric="{escape(m.metric)}">')
    for i in range(n_rows):
        for j in range(n_cols):
            v = m.scores[i, j]
            x, y = margin + j * c, top + i * c
            if np.isnan(v):
                out.append(
                    f'<rect class="nan" x="{x}" y="{y}" width="{c}" height="{c}" '
                    f'fill="url(#nan-hatch)" data-row="{i}" data-col="{j}"/>'
                )
            else:
                k = palette_index(v, style.value_range)
                out.append(
                    f'<rect x="{x}" y="{y}" width="{c}" height="{c}" fill="{hex_color(k)}" '
                    f'data-row="{i}" data-col="{j}" data-index="{k}" data-value="{format_score(v)}"/>'
                )
    out.append("</g>")
    if style.show_labels:
        out.append('<g id="row-labels" text-anchor="end">')
        for i, label in enumerate(m.row_labels):
            out.append(f'<text x="{margin - 4}" y="{top + i * c + c // 2 + 4}">{escape(label)}</text>')
        out.append("</g>")
        out.append('<g id="col-labels" text-anchor="start">')
        for j, label in enumerate(m.col_labels):
            x, y = margin + j * c + c // 2 + 4, top - 4
            out.append(f'<text x="{x}" y="{y}" transform="rotate(-90 {x} {y})">{escape(label)}</text>')
        out.append("</g>")

    # colorbar, bright at the top
    bx = margin + n_cols * c + 20
    step = bar_h / 256.0
    out.append('<g id="colorbar">')
    for k in range(256):
        y = top + (255 - k) * step
        out.append(f'<rect x="{bx}" y="{y:.3f}" width="{bar_w}" height="{step + 0.05:.3f}" fill="{hex_color(k)}"/>')
    out.append(f'<text x="{bx + bar_w + 4}" y="{top + 10}">{format_score(hi)}</text>')
    out.append(f'<text x="{bx + bar_w + 4}" y="{top + bar_h}">{format_score(lo)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


def write_heatmap_svg(path, m: SimilarityMatrix, style: HeatmapStyle | None = None):
    with open(path, "wb") as f:
        f.write(render_heatmap_svg(m, style))
