"""Static SVG charts written by hand: grouped ANP bars, polarization
trajectories over normalized progress, and a method x dataset heat grid."""
from __future__ import annotations

import logging
from html import escape
from pathlib import Path

import numpy as np

__all__ = ["bar_chart_svg", "trajectory_svg", "heat_grid_svg", "emit_plots"]

log = logging.getLogger(__name__)

PALETTE = ["#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f"]
W, H = 720, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 60


def _num(v: float) -> str:
    return f"{v:.4g}"


def _svg(body: list, width=W, height=H) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">')
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>\n"])


def _legend(names, x0, y0) -> list:
    out = []
    for i, name in enumerate(names):
        y = y0 + 16 * i
        out.append(f'<rect x="{x0}" y="{y}" width="10" height="10" fill="{PALETTE[i % len(PALETTE)]}"/>')
        out.append(f'<text x="{x0 + 14}" y="{y + 9}">{escape(name)}</text>')
    return out


def _y_axis(lo, hi, plot_h) -> list:
    out = [f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + plot_h}" stroke="black"/>']
    for frac in np.linspace(0, 1, 5):
        y = TOP + plot_h * (1 - frac)
        out.append(f'<line x1="{LEFT - 4}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">{_num(lo + frac * (hi - lo))}</text>')
    return out


def bar_chart_svg(values: dict, title="ANP by dataset (lower is better)") -> str:
    """``values[(dataset, method)] = anp``; bars grouped by dataset."""
    datasets = sorted({d for d, _ in values})
    methods = sorted({m for _, m in values})
    plot_w, plot_h = W - LEFT - RIGHT, H - TOP - BOTTOM
    hi = max(values.values()) or 1.0
    group_w = plot_w / len(datasets)
    bar_w = group_w * 0.8 / len(methods)
    body = [f'<text x="{LEFT}" y="18" font-size="13">{escape(title)}</text>']
    body += _y_axis(0.0, hi, plot_h)
    body.append(f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" y2="{TOP + plot_h}" stroke="black"/>')
    for i, ds in enumerate(datasets):
        gx = LEFT + i * group_w + group_w * 0.1
        for j, m in enumerate(methods):
            if (ds, m) not in values:
                continue
            v = values[(ds, m)]
            h = plot_h * v / hi
            x = gx + j * bar_w
            body.append(
                f'<rect x="{x:.2f}" y="{TOP + plot_h - h:.2f}" width="{bar_w:.2f}" height="{h:.2f}" '
                f'fill="{PALETTE[j % len(PALETTE)]}"><title>{escape(ds)} / {escape(m)}: {_num(v)}</title></rect>'
            )
        body.append(f'<text x="{LEFT + (i + 0.5) * group_w:.2f}" y="{TOP + plot_h + 16}" '
                    f'text-anchor="middle">{escape(ds)}</text>')
    body += _legend(methods, W - RIGHT + 15, TOP)
    return _svg(body)


def trajectory_svg(series: dict, title="Normalized polarization vs progress") -> str:
    """``series[label] = pol_hat`` over t = 0..k, drawn against x = t / k in [0, 1]."""
    labels = sorted(series)
    plot_w, plot_h = W - LEFT - RIGHT, H - TOP - BOTTOM
    hi = max(max(v) for v in series.values()) or 1.0
    body = [f'<text x="{LEFT}" y="18" font-size="13">{escape(title)}</text>']
    body += _y_axis(0.0, hi, plot_h)
    body.append(f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" y2="{TOP + plot_h}" stroke="black"/>')
    for frac in np.linspace(0, 1, 6):
        x = LEFT + plot_w * frac
        body.append(f'<text x="{x:.2f}" y="{TOP + plot_h + 16}" text-anchor="middle">{_num(frac)}</text>')
    body.append(f'<text x="{LEFT + plot_w / 2}" y="{H - 18}" text-anchor="middle">t / k</text>')
    for j, label in enumerate(labels):
        ys = np.asarray(series[label], float)
        k = len(ys) - 1
        xs = np.arange(k + 1) / k if k > 0 else np.zeros(1)
        pts = " ".join(f"{LEFT + plot_w * x:.2f},{TOP + plot_h * (1 - y / hi):.2f}" for x, y in zip(xs, ys))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{PALETTE[j % len(PALETTE)]}" '
                    f'stroke-width="1.8"><title>{escape(label)}</title></polyline>')
    body += _legend(labels, W - RIGHT + 15, TOP)
    return _svg(body)


def heat_grid_svg(values: dict, title="ANP heat grid (lower is better)") -> str:
    """Rows are methods, columns datasets; colour runs from light (low) to dark (high)."""
    datasets = sorted({d for d, _ in values})
    methods = sorted({m for _, m in values})
    cell_w, cell_h = 90, 26
    left, top = 150, 40
    width = left + cell_w * len(datasets) + 20
    height = top + cell_h * len(methods) + 60
    vals = np.array(list(values.values()), float)
    lo, hi = float(vals.min()), float(vals.max())
    span = hi - lo if hi > lo else 1.0
    body = [f'<text x="10" y="20" font-size="13">{escape(title)}</text>']
    for j, ds in enumerate(datasets):
        body.append(f'<text x="{left + (j + 0.5) * cell_w}" y="{top - 6}" text-anchor="middle">{escape(ds)}</text>')
    for i, m in enumerate(methods):
        y = top + i * cell_h
        body.append(f'<text x="{left - 6}" y="{y + cell_h / 2 + 4}" text-anchor="end">{escape(m)}</text>')
        for j, ds in enumerate(datasets):
            x = left + j * cell_w
            if (ds, m) not in values:
                body.append(f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="#eeeeee" stroke="white"/>')
                continue
            v = values[(ds, m)]
            shade = int(235 - 180 * (v - lo) / span)
            body.append(f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                        f'fill="rgb({shade},{shade},255)" stroke="white"/>')
            colour = "white" if shade < 140 else "black"
            body.append(f'<text x="{x + cell_w / 2}" y="{y + cell_h / 2 + 4}" text-anchor="middle" '
                        f'fill="{colour}">{_num(v)}</text>')
    return _svg(body, width, height)


def _mean_by(rows) -> dict:
    acc = {}
    for r in rows:
        acc.setdefault((r.dataset, r.method), []).append(r.anp)
    return {key: float(np.mean(v)) for key, v in acc.items()}


def emit_plots(rows, trajectories: dict, out_dir) -> list:
    """Write ``anp_bars.svg``, ``heat_grid.svg`` and one trajectory chart per dataset.

    ``trajectories`` maps ``(dataset, method, seed)`` to a sequence of
    normalized polarization values (or anything with ``pol_hat_steps``).
    """
    rows = list(rows)
    if not rows:
        log.warning("no result rows; nothing to plot")
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    means = _mean_by(rows)
    written = []
    for name, text in (("anp_bars.svg", bar_chart_svg(means)), ("heat_grid.svg", heat_grid_svg(means))):
        (out / name).write_text(text)
        written.append(out / name)
    by_ds = {}
    for (ds, method, seed), traj in sorted(trajectories.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        steps = getattr(traj, "pol_hat_steps", traj)
        by_ds.setdefault(ds, {}).setdefault(method, steps)  # first seed per method
    for ds, series in by_ds.items():
        path = out / f"trajectory_{ds}.svg"
        path.write_text(trajectory_svg(series, title=f"{ds}: normalized polarization vs t/k"))
        written.append(path)
    return written
