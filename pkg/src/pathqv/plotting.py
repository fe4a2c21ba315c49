"""Figures for the ``report`` command (PNG via the Agg backend)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


def _save(fig, out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, name)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_tv_estimates(study: dict, out_dir: str) -> str:
    """c·TV^c (and 2c·TV^2c) against c, with the reference level."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        rows = study["tv_table"]
        cs = [r["c"] for r in rows]
        ax.plot(cs, [r["estimate"] for r in rows], "o-", label=r"$c\,TV^c$")
        ax.plot(cs, [r["proof_estimate"] for r in rows], "s--", label=r"$2c\,TV^{2c}$", alpha=0.7)
        ref = rows[0]["reference"] if rows else None
        if ref is not None:
            ax.axhline(ref, color="k", lw=0.8, label="reference")
        ax.set_xscale("log", base=2)
        ax.invert_xaxis()
        ax.set_xlabel("truncation c")
        ax.set_ylabel("estimate at T")
        ax.legend()
        return _save(fig, out_dir, "tv_estimates.png")


def plot_partition_errors(study: dict, out_dir: str) -> str:
    """Sup-norm QV error against level, one line per partition family."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        fams: dict[str, list] = {}
        for r in study["partition_table"]:
            fams.setdefault(r["family"], []).append(r)
        for fam, rows in sorted(fams.items()):
            ax.plot([r["level"] for r in rows], [r["error"] for r in rows], "o-", label=fam)
        ax.set_xlabel("level n")
        ax.set_ylabel("sup error of discrete QV")
        ax.legend()
        return _save(fig, out_dir, "partition_errors.png")


def plot_path(path, out_dir: str) -> str:
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 2.6))
        for i in range(path.dim):
            ax.step(path.times, path.values[:, i], where="post", lw=0.6, label=f"x{i + 1}")
        ax.set_xlabel("t")
        if path.dim > 1:
            ax.legend()
        return _save(fig, out_dir, "path.png")
