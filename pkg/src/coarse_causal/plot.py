"""Tiny SVG line plots (median with shaded interquartile band) for sweep results."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

W, H, PAD = 480, 320, 50
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"]


def _summaries(rows, metric):
    """``{series label: [(n, q25, median, q75), ...]}`` with one series per alpha pair."""
    groups = defaultdict(lambda: defaultdict(list))
    for r in rows:
        if r.get(metric) in ("", None):
            continue
        groups[f"α=({r['alpha_ref']}, {r['alpha_edge']})"][int(r["n"])].append(float(r[metric]))
    return {label: [(n, *np.percentile(v, [25, 50, 75])) for n, v in sorted(by_n.items())]
            for label, by_n in groups.items()}


def line_plot_svg(series: dict, title: str, ylabel: str) -> str:
    pts = [p for s in series.values() for p in s]
    if not pts:
        xs, ys = [1.0, 10.0], [0.0, 1.0]
    else:
        xs = [p[0] for p in pts]
        ys = [y for p in pts for y in p[1:]]
    lx0, lx1 = np.log10(min(xs)), np.log10(max(xs))
    if lx1 == lx0:
        lx0, lx1 = lx0 - 0.5, lx1 + 0.5
    y0, y1 = min(0.0, min(ys)), max(ys) if max(ys) > min(0.0, min(ys)) else 1.0

    def sx(x):
        return PAD + (np.log10(x) - lx0) / (lx1 - lx0) * (W - 2 * PAD)

    def sy(y):
        return H - PAD - (y - y0) / (y1 - y0) * (H - 2 * PAD)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
           f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
           f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">n (log scale)</text>',
           f'<text x="14" y="{H / 2}" transform="rotate(-90 14 {H / 2})" text-anchor="middle">{escape(ylabel)}</text>']
    for n in sorted(set(xs)):
        out.append(f'<text x="{sx(n):.1f}" y="{H - PAD + 14}" text-anchor="middle">{n:g}</text>')
    for y in np.linspace(y0, y1, 5):
        out.append(f'<text x="{PAD - 4}" y="{sy(y) + 4:.1f}" text-anchor="end">{y:.3g}</text>')
    for k, (label, s) in enumerate(sorted(series.items())):
        c = COLORS[k % len(COLORS)]
        band = [(sx(n), sy(q75)) for n, _, _, q75 in s] + [(sx(n), sy(q25)) for n, q25, _, _ in reversed(s)]
        out.append(f'<polygon points="{" ".join(f"{x:.1f},{y:.1f}" for x, y in band)}" fill="{c}" fill-opacity="0.2"/>')
        line = " ".join(f"{sx(n):.1f},{sy(med):.1f}" for n, _, med, _ in s)
        out.append(f'<polyline points="{line}" fill="none" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{W - PAD + 4 - 120}" y="{PAD + 14 * k}" fill="{c}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def summary_plots(rows, out_dir) -> list[Path]:
    """ARI, F-score and runtime against n; returns the written paths."""
    out_dir = Path(out_dir)
    written = []
    for metric, title, ylabel in [("ari", "Partition recovery", "ARI"),
                                  ("f", "Edge recovery", "F-score"),
                                  ("runtime_ms", "Learn-stage runtime", "runtime (ms)")]:
        path = out_dir / f"{metric}_vs_n.svg"
        path.write_text(line_plot_svg(_summaries(rows, metric), title, ylabel))
        written.append(path)
    return written
