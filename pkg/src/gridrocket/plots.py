"""Matplotlib rendering of benchmark scaling figures."""

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_AXIS_LABELS = {
    "n_instances": "instances",
    "l_series": "series length",
    "n_kernels": "kernels",
}


def _series(rows, param):
    pts = sorted(
        ((getattr(r, param), r.wall_seconds) for r in rows if r.varied == param and not r.error)
    )
    return [p[0] for p in pts], [p[1] for p in pts]


def render_scaling_figures(rows, out_dir, baseline_rows=None, stem="scaling"):
    """One log-log wall-time figure per varied parameter; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for param in sorted({r.varied for r in rows}):
        xs, ys = _series(rows, param)
        if not xs:
            continue
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(xs, ys, "o-", label="this engine")
        if baseline_rows is not None:
            bx, by = _series(baseline_rows, param)
            if bx:
                ax.plot(bx, by, "s--", label="baseline")
        # Linear-scaling guide anchored at the first measured point.
        guide = [ys[0] * x / xs[0] for x in xs]
        ax.plot(xs, guide, ":", color="gray", label="linear")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log", base=2)
        ax.set_xlabel(_AXIS_LABELS.get(param, param))
        ax.set_ylabel("wall time [s]")
        ax.legend()
        ax.set_title(f"scaling in {_AXIS_LABELS.get(param, param)}")
        fig.tight_layout()
        path = os.path.join(out_dir, f"{stem}_{param}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
