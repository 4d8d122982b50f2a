"""Minimal static SVG boxplots (five-number summary plus outlier dots).

No charting dependency: output is a deterministic string, so rendered
files can be golden-tested byte for byte.
"""

from __future__ import annotations

import numpy as np

_W, _H = 480, 320
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 56, 16, 34, 44
_BOX_FILL = "#9ecae1"
_LINE = "#1f4e79"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def five_number_summary(values) -> dict:
    """Quartiles plus whiskers at the most extreme points within 1.5 IQR."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("empty sample")
    q1, med, q3 = (float(np.percentile(v, q)) for q in (25, 50, 75))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    whisk_lo = float(inside[0]) if inside.size else q1
    whisk_hi = float(inside[-1]) if inside.size else q3
    outliers = v[(v < lo_fence) | (v > hi_fence)]
    return {"q1": q1, "median": med, "q3": q3,
            "whisker_low": whisk_lo, "whisker_high": whisk_hi,
            "outliers": [float(o) for o in outliers]}


def boxplot_svg(groups: dict, title: str, ylabel: str) -> str:
    """Render one box per (label, values) pair; returns the SVG document."""
    if not groups:
        raise ValueError("no groups to plot")
    stats = {label: five_number_summary(vals) for label, vals in groups.items()}
    lo = min(min(s["whisker_low"], *(s["outliers"] or [s["whisker_low"]]))
             for s in stats.values())
    hi = max(max(s["whisker_high"], *(s["outliers"] or [s["whisker_high"]]))
             for s in stats.values())
    if hi == lo:
        hi = lo + 1.0
    pad = 0.06 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    plot_w = _W - _MARGIN_L - _MARGIN_R
    plot_h = _H - _MARGIN_T - _MARGIN_B

    def ypix(v: float) -> float:
        return _MARGIN_T + plot_h * (hi - v) / (hi - lo)

    k = len(stats)
    slot = plot_w / k
    box_w = min(60.0, slot * 0.5)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<text x="14" y="{_MARGIN_T + plot_h / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 14 {_MARGIN_T + plot_h / 2:.0f})">{ylabel}</text>',
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{_MARGIN_T + plot_h:.0f}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        y = ypix(v)
        out.append(f'<line x1="{_MARGIN_L - 4}" y1="{_fmt(y)}" x2="{_MARGIN_L}" '
                   f'y2="{_fmt(y)}" stroke="black"/>')
        out.append(f'<text x="{_MARGIN_L - 7}" y="{_fmt(y + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="10">{v:.3g}</text>')

    for i, (label, s) in enumerate(stats.items()):
        cx = _MARGIN_L + slot * (i + 0.5)
        x0, x1 = cx - box_w / 2, cx + box_w / 2
        for v0, v1 in ((s["whisker_low"], s["q1"]), (s["q3"], s["whisker_high"])):
            out.append(f'<line x1="{_fmt(cx)}" y1="{_fmt(ypix(v0))}" '
                       f'x2="{_fmt(cx)}" y2="{_fmt(ypix(v1))}" stroke="{_LINE}"/>')
        for v in (s["whisker_low"], s["whisker_high"]):
            out.append(f'<line x1="{_fmt(cx - box_w / 4)}" y1="{_fmt(ypix(v))}" '
                       f'x2="{_fmt(cx + box_w / 4)}" y2="{_fmt(ypix(v))}" '
                       f'stroke="{_LINE}"/>')
        ytop, ybot = ypix(s["q3"]), ypix(s["q1"])
        out.append(f'<rect x="{_fmt(x0)}" y="{_fmt(ytop)}" width="{_fmt(box_w)}" '
                   f'height="{_fmt(ybot - ytop)}" fill="{_BOX_FILL}" '
                   f'stroke="{_LINE}"/>')
        ymed = ypix(s["median"])
        out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(ymed)}" x2="{_fmt(x1)}" '
                   f'y2="{_fmt(ymed)}" stroke="{_LINE}" stroke-width="2"/>')
        for o in s["outliers"]:
            out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(ypix(o))}" r="2.5" '
                       f'fill="none" stroke="{_LINE}"/>')
        out.append(f'<text x="{_fmt(cx)}" y="{_H - 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
