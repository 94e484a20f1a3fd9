"""Render recovery and error curves from summary rows to PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_MARKERS = ("o", "s", "^", "d", "v", "*", "x")


def _style(ax, xlabel, ylabel, title):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)


def _curve(summary_rows, x_attr, y_attr, curve_attr):
    curves = {}
    for s in summary_rows:
        curves.setdefault(getattr(s, curve_attr), []).append(s)
    for cid in sorted(curves):
        pts = sorted(curves[cid], key=lambda s: getattr(s, x_attr))
        xs = [getattr(s, x_attr) for s in pts]
        ys = [getattr(s, y_attr) for s in pts]
        errs = [1.96 * s.std_err for s in pts]
        yield cid, xs, ys, errs


def render_figures(summary_rows, out_dir) -> list:
    """One recovery figure (and one error figure where applicable) per setting."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    settings = list(dict.fromkeys(s.setting for s in summary_rows))

    comparison = [s for s in settings if s.startswith("comparison")]
    if comparison and "gaussian" in settings:
        written.append(_render_comparison(summary_rows, out))
        settings = [s for s in settings if not s.startswith("comparison")]

    for setting in settings:
        rows = [s for s in summary_rows if s.setting == setting]
        if setting == "novel":
            written.extend(_render_novel(rows, out))
        else:
            written.extend(_render_union(rows, out, setting))
    return written


def _render_union(rows, out, setting):
    paths = []
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for n, xs, ys, errs in _curve(rows, "t", "recovery_mean", "n"):
        ax.errorbar(xs, ys, yerr=errs, marker=_MARKERS[n % len(_MARKERS)],
                    capsize=2, markersize=4, label=f"n = {n}")
    ax.set_ylim(-0.05, 1.05)
    _style(ax, "T = mn / log(p+1)", "P(recovered = true support)",
           f"support union recovery ({setting})")
    path = out / f"fig_{setting}_recovery.png"
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for n, xs, ys, _ in _curve(rows, "t", "err_inf_mean", "n"):
        ax.plot(xs, ys, marker=_MARKERS[n % len(_MARKERS)], markersize=4,
                label=f"n = {n}")
    _style(ax, "T = mn / log(p+1)", "mean max-entry error",
           f"estimation error ({setting})")
    path = out / f"fig_{setting}_errinf.png"
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths


def _render_novel(rows, out):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for k, xs, ys, errs in _curve(rows, "t", "recovery_mean", "k"):
        extra = rows[0].j_size - k
        ax.errorbar(xs, ys, yerr=errs, marker=_MARKERS[extra % len(_MARKERS)],
                    capsize=2, markersize=4, label=f"{extra} extra zeros")
    ax.set_ylim(-0.05, 1.05)
    _style(ax, "T = n / log(|J|+1)", "P(extra zeros identified)",
           "novel-task support recovery")
    path = out / "fig_novel_recovery.png"
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _render_comparison(summary_rows, out):
    labels = {
        "gaussian": "pooled (meta)",
        "comparison_independent": "independent union",
        "comparison_multitask": "multi-task sup-norm",
    }
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    for i, (setting, label) in enumerate(labels.items()):
        pts = sorted((s for s in summary_rows if s.setting == setting),
                     key=lambda s: s.m)
        if not pts:
            continue
        ax.errorbar([s.m for s in pts], [s.recovery_mean for s in pts],
                    yerr=[1.96 * s.std_err for s in pts],
                    marker=_MARKERS[i], capsize=2, markersize=4, label=label)
    ax.set_ylim(-0.05, 1.05)
    _style(ax, "number of auxiliary tasks m", "P(recovered = true support)",
           "method comparison")
    path = out / "fig_comparison.png"
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
