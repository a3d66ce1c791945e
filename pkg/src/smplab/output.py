"""Deterministic artifact writers: reports, JSON mirrors and SVG line plots."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

PANEL_W, PANEL_H = 360, 260
MARGIN = dict(left=58, right=14, top=30, bottom=42)
COLORS = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400")


def write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def report_text(config, body_lines, title):
    """Report with the resolved configuration embedded as a commented header."""
    head = [f"# smplab {__version__} {title}", "# resolved configuration:"]
    head += [f"#   {ln}" for ln in config.render().splitlines()]
    return "\n".join(head + [""] + list(body_lines)) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def json_text(config, payload: dict) -> str:
    doc = {"config": config.render(), "tolerances": config.tolerances, "result": payload}
    return json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"


# -- SVG -----------------------------------------------------------------------------


@dataclass
class Panel:
    title: str
    series: list = field(default_factory=list)  # (label, x, y)
    xlabel: str = "x"
    ylabel: str = "u"
    logy: bool = False


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt_tick(t):
    return f"{t:.4g}"


def _panel_svg(panel: Panel, ox, oy):
    xs = np.concatenate([np.asarray(s[1], float) for s in panel.series]) if panel.series else np.array([0.0, 1.0])
    ys = np.concatenate([np.asarray(s[2], float) for s in panel.series]) if panel.series else np.array([0.0, 1.0])
    if panel.logy:
        ys = np.log10(np.maximum(np.abs(ys), 1e-300))
    good = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = float(xs[good].min()), float(xs[good].max())
    y0, y1 = float(ys[good].min()), float(ys[good].max())
    if y1 - y0 < 1e-12 * max(1.0, abs(y0)):
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    if x1 <= x0:
        x1 = x0 + 1.0
    L, T = ox + MARGIN["left"], oy + MARGIN["top"]
    W = PANEL_W - MARGIN["left"] - MARGIN["right"]
    H = PANEL_H - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return L + (x - x0) / (x1 - x0) * W

    def py(y):
        return T + (y1 - y) / (y1 - y0) * H

    out = [f'<rect x="{L:.2f}" y="{T:.2f}" width="{W:.2f}" height="{H:.2f}" fill="none" stroke="#444"/>']
    out.append(f'<text x="{ox + PANEL_W / 2:.2f}" y="{oy + 18:.2f}" text-anchor="middle" font-size="13">{_esc(panel.title)}</text>')
    for t in _nice_ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{T + H:.2f}" x2="{X:.2f}" y2="{T + H + 4:.2f}" stroke="#444"/>')
        out.append(f'<text x="{X:.2f}" y="{T + H + 16:.2f}" text-anchor="middle" font-size="10">{_fmt_tick(t)}</text>')
    for t in _nice_ticks(y0, y1):
        Y = py(t)
        label = _fmt_tick(10**t) if panel.logy else _fmt_tick(t)
        out.append(f'<line x1="{L - 4:.2f}" y1="{Y:.2f}" x2="{L:.2f}" y2="{Y:.2f}" stroke="#444"/>')
        out.append(f'<text x="{L - 6:.2f}" y="{Y + 3:.2f}" text-anchor="end" font-size="10">{label}</text>')
    if not panel.logy and y0 < 0 < y1:
        Y = py(0.0)
        out.append(f'<line x1="{L:.2f}" y1="{Y:.2f}" x2="{L + W:.2f}" y2="{Y:.2f}" stroke="#999" stroke-dasharray="4 3"/>')
    out.append(f'<text x="{L + W / 2:.2f}" y="{oy + PANEL_H - 8:.2f}" text-anchor="middle" font-size="11">{_esc(panel.xlabel)}</text>')
    out.append(
        f'<text x="{ox + 14:.2f}" y="{T + H / 2:.2f}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 {ox + 14:.2f} {T + H / 2:.2f})">{_esc(panel.ylabel)}</text>'
    )
    for i, (label, x, y) in enumerate(panel.series):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if panel.logy:
            y = np.log10(np.maximum(np.abs(y), 1e-300))
        keep = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[keep], y[keep]))
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        if label:
            out.append(f'<text x="{L + W - 4:.2f}" y="{T + 14 + 13 * i:.2f}" text-anchor="end" font-size="10" fill="{color}">{_esc(label)}</text>')
    return out


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def svg_text(panels, cols=None) -> str:
    """Grid of line-plot panels as standalone SVG markup."""
    panels = list(panels)
    cols = cols or min(len(panels), 2) or 1
    rows = math.ceil(len(panels) / cols)
    W, H = cols * PANEL_W, rows * PANEL_H
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">']
    out.append(f'<rect width="{W}" height="{H}" fill="white"/>')
    for i, p in enumerate(panels):
        out += _panel_svg(p, (i % cols) * PANEL_W, (i // cols) * PANEL_H)
    out.append("</svg>")
    return "\n".join(out) + "\n"
