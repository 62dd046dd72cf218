"""Matplotlib renderings of the sweep tables and shot histograms.

Every function takes plain rows/arrays and a target path and writes one
figure file; the format follows the path suffix.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.2,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def _figure(width=4.0, ratio=0.75, **kw):
    with plt.rc_context(STYLE):
        return plt.subplots(figsize=(width, width * ratio), **kw)


def _save(fig, path):
    with plt.rc_context(STYLE):
        fig.savefig(path)
    plt.close(fig)
    return path


def plot_joint(table: np.ndarray, path, empirical: np.ndarray | None = None):
    """Joint count surface, with optional measured frequencies as dots."""
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(4.5, 3.6))
        ax = fig.add_subplot(projection="3d")
    mt, mr = np.meshgrid(np.arange(table.shape[0]), np.arange(table.shape[1]), indexing="ij")
    ax.plot_wireframe(mt, mr, table, color="0.55", linewidth=0.6)
    if empirical is not None:
        e = empirical[: table.shape[0], : table.shape[1]]
        ax.scatter(mt[: e.shape[0], : e.shape[1]], mr[: e.shape[0], : e.shape[1]], e,
                   color="tab:red", s=6)
    ax.set_xlabel(r"$m_T$")
    ax.set_ylabel(r"$m_R$")
    ax.set_zlabel(r"$p_{TR}$")
    return _save(fig, path)


def plot_cps_by_condition(rows: list[dict], path):
    """Fano factor versus the conditioning value, mean count in an inset."""
    fig, ax = _figure()
    m = [r["m_R"] for r in rows]
    ax.plot(m, [r["F_CPS"] for r in rows], "k-", label=r"$F_{CPS}$")
    ax.plot(m, [r["F_T"] for r in rows], "g-", label=r"$F_T$")
    ax.set_xlabel(r"$m_R$")
    ax.set_ylabel("Fano factor")
    ax.set_ylim(1.0, max(r["F_T"] for r in rows) * 1.1)
    ax.legend(loc="upper left")
    inset = ax.inset_axes([0.6, 0.12, 0.36, 0.36])
    inset.plot(m, [r["M_CPS"] for r in rows], "k-")
    inset.set_xlabel(r"$m_R$", fontsize=7)
    inset.set_ylabel(r"$M_{CPS}$", fontsize=7)
    inset.tick_params(labelsize=6)
    return _save(fig, path)


def plot_energy_sweep(rows: list[dict], path, kind: str = "CPS"):
    """Log-linear Fano factors versus total detected mean, mean count inset."""
    fig, ax = _figure()
    total = np.array([r["M_T"] + r["M_R"] for r in rows])
    ax.semilogx(total, [r[f"F_{kind}"] for r in rows], "k-o", ms=3, label=rf"$F_{{{kind}}}$")
    ax.semilogx(total, [r["F_T"] for r in rows], "g-s", ms=3, label=r"$F_T$")
    ax.set_xlabel(r"$M_T + M_R$")
    ax.set_ylabel("Fano factor")
    ax.legend(loc="lower right")
    inset = ax.inset_axes([0.14, 0.56, 0.32, 0.32])
    mt = [r["M_T"] for r in rows]
    inset.plot(mt, [r[f"M_{kind}"] for r in rows], "k-")
    inset.plot(mt, mt, "g-")
    inset.set_xlabel(r"$M_T$", fontsize=7)
    inset.set_ylabel(rf"$M_{{{kind}}}$", fontsize=7)
    inset.tick_params(labelsize=6)
    return _save(fig, path)


def plot_nong(x, eps, path, xlabel: str, logx: bool = False):
    fig, ax = _figure()
    (ax.semilogx if logx else ax.plot)(x, eps, "k-o", ms=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(r"$\varepsilon$")
    return _save(fig, path)


def plot_histograms(panels, path):
    """``panels`` is a list of ``(label, empirical, theory, fidelity)``."""
    fig, ax = _figure(width=4.5)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, (label, emp, th, f) in enumerate(panels):
        c = colors[i % len(colors)]
        ax.plot(np.arange(len(th)), th, "-", color=c, lw=0.9)
        ax.plot(np.arange(len(emp)), emp, "o", color=c, ms=3,
                label=f"{label} (f={f:.4f})")
    ax.set_xlim(-0.5, max(len(p[1]) for p in panels) + 0.5)
    ax.set_xlabel(r"$m_T$")
    ax.set_ylabel(r"$p_T(m_T)$")
    ax.legend(loc="upper right")
    return _save(fig, path)


def plot_wigner(xs, ps, w, path):
    fig, ax = _figure(width=3.6, ratio=1.0)
    im = ax.contourf(xs, ps, np.asarray(w).T, levels=40, cmap="viridis")
    fig.colorbar(im, ax=ax, label="W")
    ax.set_xlabel("x")
    ax.set_ylabel("p")
    ax.set_aspect("equal")
    return _save(fig, path)
