"""Figures written next to the text reports of the command line."""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.titlesize": 11,
    "axes.labelsize": 10,
    "legend.fontsize": 9,
    "legend.frameon": False,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

MODE_COLORS = {
    "movmf": "#1f77b4",
    "spherical_kmeans": "#ff7f0e",
    "movmf_tied": "#2ca02c",
}


def figsize(width=6.0, height=None):
    if height is None:
        height = width * (math.sqrt(5.0) - 1.0) / 2.0
    return (width, height)


def _save(fig, path):
    # no timestamp or version in the file, so reruns give identical bytes
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_objective_trace(trace, path, title="Hard-EM objective"):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        ax.plot(np.arange(len(trace)), trace, marker="o", ms=3, lw=1.5)
        ax.set_xlabel("iteration")
        ax.set_ylabel("complete-data log-likelihood")
        ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)


def plot_score(report, path, title="Scoring"):
    """DER components (seconds) on the left, MI against both entropies on the right."""
    with plt.rc_context(STYLE):
        fig, (left, right) = plt.subplots(1, 2, figsize=figsize(8.0, 3.2))
        names = ["false alarm", "miss", "speaker error"]
        values = [report.phi_fa, report.phi_miss, report.phi_err]
        left.bar(names, values, color=["#9467bd", "#8c564b", "#d62728"])
        left.set_ylabel("seconds")
        left.set_title(f"DER {report.der_percent:.2f}% of {report.phi_total:.1f} s")
        right.bar(["MI", "H(ref)", "H(sys)"],
                  [report.mi_bits, report.h_ref_bits, report.h_sys_bits],
                  color=["#1f77b4", "#7f7f7f", "#bcbd22"])
        right.set_ylabel("bits")
        right.set_title("frame-level mutual information")
        fig.suptitle(title)
        fig.tight_layout()
        _save(fig, path)


def plot_benchmark(rows, path, title="movMF vs spherical K-means"):
    """Mean and standard error of DER, MI and ARI per clustering mode."""
    modes = list(dict.fromkeys(r["mode"] for r in rows))
    metrics = [("der_percent", "DER (%)"), ("mi_bits", "MI (bits)"), ("ari", "ARI")]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(metrics), figsize=figsize(9.0, 3.2))
        for ax, (key, label) in zip(axes, metrics):
            means, errs = [], []
            for mode in modes:
                vals = np.array([r[key] for r in rows if r["mode"] == mode], dtype=float)
                means.append(vals.mean())
                errs.append(vals.std(ddof=1) / math.sqrt(vals.size) if vals.size > 1 else 0.0)
            ax.bar(range(len(modes)), means, yerr=errs, capsize=3,
                   color=[MODE_COLORS.get(m, "#7f7f7f") for m in modes])
            ax.set_xticks(range(len(modes)))
            ax.set_xticklabels(modes, rotation=15)
            ax.set_ylabel(label)
        fig.suptitle(title)
        fig.tight_layout()
        _save(fig, path)
