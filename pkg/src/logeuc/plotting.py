"""Figures for lab and sweep reports.

Figures are written as SVG (plus optional PNG) next to the CSV tables they
visualize. SVG output is made reproducible by fixing the hash salt and
dropping the date metadata.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SCHEME_STYLE = {
    "rgw": {"color": "#d62728", "label": "RGW (proposed map)"},
    "rff": {"color": "#e377c2", "label": "Random Fourier"},
    "maclaurin": {"color": "#2ca02c", "label": "Random MacLaurin"},
    "fastfood": {"color": "#1f77b4", "label": "Fastfood"},
}

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "logeuc",
    "svg.fonttype": "path",
}


def _size(scale=1.0):
    width = 5.5 * scale
    return (width, width * (math.sqrt(5.0) - 1.0) / 2.0)


def _save(fig, path, png=False):
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    if png:
        fig.savefig(path.with_suffix(".png"), dpi=150)
    plt.close(fig)
    return path


def plot_sweep(rows, exact_accuracy, path, png=False):
    """Accuracy against log(nu): one line per scheme, dashed exact reference.

    ``rows`` are dicts with ``scheme``, ``effective_nu``, ``mean_accuracy``
    and ``sd_accuracy``.
    """
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=_size())
        for scheme, style in SCHEME_STYLE.items():
            pts = sorted((r["effective_nu"], r["mean_accuracy"], r["sd_accuracy"])
                         for r in rows if r["scheme"] == scheme)
            if not pts:
                continue
            nus, means, sds = zip(*pts)
            ax.errorbar(nus, means, yerr=sds, marker="o", ms=3, capsize=2, lw=1.2, **style)
        if exact_accuracy is not None and not math.isnan(exact_accuracy):
            ax.axhline(exact_accuracy, color="black", ls="--", lw=1.0, label="Exact Log-Euclidean")
        ax.set_xscale("log")
        ax.set_xlabel(r"feature dimension $\nu$")
        ax.set_ylabel("holdout accuracy")
        ax.set_ylim(0.0, 1.02)
        ax.legend(loc="lower right")
        fig.tight_layout()
        return _save(fig, path, png)


def plot_variance(reports_by_scheme, path, png=False):
    """Empirical variance of the induced kernel against nu (log-log), with
    reference slopes -1 and -3 anchored at the first RGW point."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=_size())
        anchor = None
        for scheme, reports in reports_by_scheme.items():
            if not reports:
                continue
            nus = [r.nu for r in reports]
            var = [r.sample_variance for r in reports]
            ax.plot(nus, var, marker="o", ms=3, lw=1.2, **SCHEME_STYLE[scheme])
            if anchor is None or scheme == "rgw":
                anchor = (nus, var[0])
        if anchor is not None:
            nus, v0 = anchor
            n0 = nus[0]
            ax.plot(nus, [v0 * (n0 / n) for n in nus], color="gray", ls=":", lw=1.0,
                    label=r"$\propto 1/\nu$")
            ax.plot(nus, [v0 * (n0 / n) ** 3 for n in nus], color="gray", ls="-.", lw=1.0,
                    label=r"$\propto 1/\nu^3$")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel(r"feature dimension $\nu$")
        ax.set_ylabel("variance of induced kernel")
        ax.legend()
        fig.tight_layout()
        return _save(fig, path, png)


def plot_chebyshev(tables, path, png=False):
    """Empirical exceedance curves next to the Chebyshev bounds.

    ``tables`` maps a label (e.g. ``"rgw nu=64"``) to a ``ChebyshevTable``.
    """
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=_size())
        for i, (label, tab) in enumerate(tables.items()):
            color = f"C{i % 10}"
            ax.plot(tab.epsilon, tab.empirical_tail, marker="o", ms=3, color=color,
                    label=f"{label} empirical")
            ax.plot(tab.epsilon, tab.measured_bound, ls="--", color=color,
                    label=f"{label} Chebyshev (measured var)")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(r"$\epsilon$")
        ax.set_ylabel(r"$P(|K_\Phi - K| \geq \epsilon)$")
        ax.legend(fontsize=6)
        fig.tight_layout()
        return _save(fig, path, png)
