"""Optional PNG figures (needs the ``plot`` extra).

The CLI's file contract is PGM/PPM plus TSV; these renderers are a
convenience for reports and are only imported when ``--figures`` is given.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import LinearSegmentedColormap
except ImportError as exc:  # pragma: no cover - exercised only without the extra
    raise ImportError("figures need matplotlib; install the 'plot' extra") from exc

# Same anchors as the PPM writer: blue, grey, yellow.
DIVERGING = LinearSegmentedColormap.from_list(
    "blue_grey_yellow", [(0.0, 0.0, 1.0), (128 / 255, 128 / 255, 128 / 255), (1.0, 1.0, 0.0)])


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def template_grid(path, templates, shape, symmetric: bool = True, titles=None,
                  ncols: int | None = None, suptitle: str | None = None) -> Path:
    """One panel per template; diverging colours for symmetric models, grey otherwise."""
    templates = np.asarray(templates, dtype=float).reshape(-1, *shape)
    n = len(templates)
    ncols = ncols or min(n, 8)
    nrows = -(-n // ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(1.6 * ncols, 1.6 * nrows), squeeze=False)
    cmap = DIVERGING if symmetric else "gray_r"
    for i, ax in enumerate(axes.flat):
        ax.set_axis_off()
        if i < n:
            ax.imshow(templates[i], cmap=cmap, vmin=0.0, vmax=1.0, interpolation="nearest")
            if titles is not None:
                ax.set_title(titles[i], fontsize=8)
    if suptitle:
        fig.suptitle(suptitle)
    return _finish(fig, path)


def landscape_figure(path, axis, values, maxima=(), title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4))
    lo, hi = float(axis[0]), float(axis[-1])
    im = ax.imshow(values.T, origin="lower", extent=(lo, hi, lo, hi), cmap="viridis")
    for p1, p2 in maxima:
        ax.plot(p1, p2, "r+", markersize=10)
    ax.set_xlabel("p1")
    ax.set_ylabel("p2")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="expected log-likelihood per pixel (nats)")
    return _finish(fig, path)


def history_figure(path, xs, ys, xlabel: str, ylabel: str, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot(xs, ys, marker="o")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def scene_figure(path, noisy, shape, picks, truth, glyph_shape, grid) -> Path:
    """Noisy scene with ground-truth boxes (green) and detections (red, dashed)."""
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(np.asarray(noisy).reshape(shape), cmap="gray_r", interpolation="nearest")
    gh, gw = glyph_shape
    for pairs, colour, style in ((truth, "tab:green", "-"), (picks, "tab:red", "--")):
        for g, t in pairs:
            sx, sy, _ = grid.params(t)
            ax.add_patch(plt.Rectangle((sx - 0.5, sy - 0.5), gw, gh, fill=False,
                                       edgecolor=colour, linestyle=style, linewidth=1.2))
            ax.text(sx, sy - 0.8, str(g), color=colour, fontsize=7)
    ax.set_axis_off()
    return _finish(fig, path)
