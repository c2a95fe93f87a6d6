"""Minimal SVG line plots (log-margin against log t), written without a plotting library."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def _ticks(lo: float, hi: float, k: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


def margin_plot(series: dict, title: str = "log-margin vs t", width: int = 640, height: int = 400) -> str:
    """``series`` maps a label to a list of (t, log_margin); t is drawn on a log10 axis."""
    pts = [(math.log10(t), m) for s in series.values() for t, m in s if t > 0 and math.isfinite(m)]
    pad_l, pad_r, pad_t, pad_b = 70, 20, 30, 45
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>']
    if not pts:
        out.append("</svg>")
        return "\n".join(out)
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(0.0, min(p[1] for p in pts)), max(p[1] for p in pts)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    W, H = width - pad_l - pad_r, height - pad_t - pad_b

    def X(v):
        return pad_l + (v - x0) / (x1 - x0) * W

    def Y(v):
        return pad_t + (1 - (v - y0) / (y1 - y0)) * H

    out.append(f'<rect x="{pad_l}" y="{pad_t}" width="{W}" height="{H}" fill="none" stroke="black"/>')
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{X(v):.2f}" y1="{pad_t + H}" x2="{X(v):.2f}" y2="{pad_t + H + 5}" stroke="black"/>')
        out.append(f'<text x="{X(v):.2f}" y="{pad_t + H + 18}" text-anchor="middle" font-size="11">'
                   f'1e{v:.2f}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<line x1="{pad_l - 5}" y1="{Y(v):.2f}" x2="{pad_l}" y2="{Y(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{pad_l - 8}" y="{Y(v) + 4:.2f}" text-anchor="end" font-size="11">{v:.4g}</text>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{pad_l}" y1="{Y(0):.2f}" x2="{pad_l + W}" y2="{Y(0):.2f}" '
                   'stroke="gray" stroke-dasharray="4 3"/>')
    out.append(f'<text x="{pad_l + W / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="12">t</text>')
    out.append(f'<text x="14" y="{pad_t + H / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {pad_t + H / 2:.1f})">log-margin</text>')
    for i, (label, s) in enumerate(series.items()):
        p = [(X(math.log10(t)), Y(m)) for t, m in s if t > 0 and math.isfinite(m)]
        if not p:
            continue
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in p)
        out.append(f'<polyline fill="none" stroke="{PALETTE[i % len(PALETTE)]}" stroke-width="1" '
                   f'points="{coords}"><title>{escape(str(label))}</title></polyline>')
    out.append("</svg>")
    return "\n".join(out)
