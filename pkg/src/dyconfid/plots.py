"""Minimal SVG chart emission from run metrics.

Charts are assembled as plain strings from the metrics values only, so
identical metrics produce byte-identical SVG files (no timestamps, no
library-generated ids).
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence

from .harness import RunArtifact

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 36, 46
PLOT_W = WIDTH - MARGIN_L - MARGIN_R
PLOT_H = HEIGHT - MARGIN_T - MARGIN_B
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _header(title: str) -> List[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="22" text-anchor="middle" font-size="15">{title}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{PLOT_W}" height="{PLOT_H}" '
        f'fill="none" stroke="#444"/>',
    ]


def _axis_labels(x_label: str, y_label: str, y_lo: float, y_hi: float,
                 x_lo: float, x_hi: float) -> List[str]:
    parts = [
        f'<text x="{MARGIN_L + PLOT_W / 2:.0f}" y="{HEIGHT - 8}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="14" y="{MARGIN_T + PLOT_H / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {MARGIN_T + PLOT_H / 2:.0f})">{y_label}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        yv = y_lo + frac * (y_hi - y_lo)
        ypix = MARGIN_T + PLOT_H * (1.0 - frac)
        parts.append(f'<text x="{MARGIN_L - 6}" y="{ypix + 4:.2f}" text-anchor="end" '
                     f'font-size="11">{_f(yv)}</text>')
        xv = x_lo + frac * (x_hi - x_lo)
        xpix = MARGIN_L + PLOT_W * frac
        parts.append(f'<text x="{xpix:.2f}" y="{MARGIN_T + PLOT_H + 16}" text-anchor="middle" '
                     f'font-size="11">{_f(xv)}</text>')
    return parts


def line_chart(title: str, x_label: str, y_label: str,
               series: Sequence[tuple]) -> str:
    """``series`` is a list of (name, xs, ys); y range fixed to [0, 1] padding
    to the data maximum when it exceeds 1."""
    y_hi = max(1.0, max((max(ys) for _, _, ys in series if len(ys)), default=1.0))
    x_hi = max((max(xs) for _, xs, _ in series if len(xs)), default=1.0) or 1.0
    parts = _header(title)
    parts += _axis_labels(x_label, y_label, 0.0, y_hi, 0.0, x_hi)
    for i, (name, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(
            f"{MARGIN_L + PLOT_W * (x / x_hi):.2f},{MARGIN_T + PLOT_H * (1 - y / y_hi):.2f}"
            for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{MARGIN_L + 8}" y="{MARGIN_T + 16 + 15 * i}" font-size="12" '
                     f'fill="{color}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart(title: str, x_label: str, y_label: str,
              groups: Sequence[tuple], n_bars: int) -> str:
    """Grouped bars: ``groups`` is a list of (name, values) with ``n_bars``
    values each (one per class)."""
    y_hi = max(1.0, max((max(v) for _, v in groups if len(v)), default=1.0))
    parts = _header(title)
    parts += _axis_labels(x_label, y_label, 0.0, y_hi, 0.0, max(n_bars - 1, 1))
    n_groups = max(1, len(groups))
    slot = PLOT_W / max(n_bars, 1)
    bar_w = slot * 0.8 / n_groups
    for gi, (name, values) in enumerate(groups):
        color = PALETTE[gi % len(PALETTE)]
        for c, v in enumerate(values):
            x = MARGIN_L + slot * c + slot * 0.1 + bar_w * gi
            h = PLOT_H * (v / y_hi)
            y = MARGIN_T + PLOT_H - h
            parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
                         f'height="{h:.2f}" fill="{color}"/>')
        parts.append(f'<text x="{MARGIN_L + 8}" y="{MARGIN_T + 16 + 15 * gi}" font-size="12" '
                     f'fill="{color}">{name}</text>')
    for c in range(n_bars):
        x = MARGIN_L + slot * c + slot * 0.5
        parts.append(f'<text x="{x:.2f}" y="{MARGIN_T + PLOT_H + 16}" text-anchor="middle" '
                     f'font-size="11">{c}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plots(artifacts: Sequence[RunArtifact], out_dir) -> List[Path]:
    """Render the standard charts for a set of runs: unlabeled utilization and
    accuracy over epochs, plus final-epoch per-class thresholds and
    confidences. Returns the written paths (empty input writes nothing)."""
    if not artifacts:
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for a in artifacts:
        for col in ("utilization", "mean_class_acc", "epoch"):
            if col not in a.columns:
                raise ValueError(f"metrics for {a.directory} lack column {col!r}")
    names = [f"{a.config.run_name()}/s{a.seed}" for a in artifacts]
    epochs = [a.column("epoch") for a in artifacts]
    written = []

    def save(fname: str, content: str) -> None:
        p = out / fname
        p.write_text(content)
        written.append(p)

    save("utilization.svg", line_chart(
        "Unlabeled utilization per epoch", "epoch", "utilization fraction",
        [(n, e, a.column("utilization")) for n, e, a in zip(names, epochs, artifacts)]))
    save("accuracy.svg", line_chart(
        "Test accuracy per epoch", "epoch", "mean class accuracy",
        [(n, e, a.column("mean_class_acc")) for n, e, a in zip(names, epochs, artifacts)]))
    C = artifacts[0].config.run.C
    save("thresholds_final.svg", bar_chart(
        "Final-epoch class thresholds", "class", "threshold",
        [(n, [a.final(f"thr_{c}") for c in range(C)]) for n, a in zip(names, artifacts)], C))
    save("confidence_final.svg", bar_chart(
        "Final-epoch class confidence", "class", "class confidence",
        [(n, [a.final(f"P_{c}") for c in range(C)]) for n, a in zip(names, artifacts)], C))
    return written
