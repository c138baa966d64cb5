"""File and figure output for CLI runs.

Every report is written twice: a delimited file (CSV, floats at 17
significant digits so doubles round-trip) and a rendered matplotlib figure
next to it.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .convergence import ConvergenceReport
from .domains import Mesh
from .fekete import FeketeArray
from .gram import DiscreteMeasure

__all__ = [
    "write_text",
    "fig_mesh",
    "fig_fekete",
    "fig_diameter",
    "fig_converge",
    "fig_optimal",
    "fig_perturb",
    "fig_bergman",
    "fig_gram",
    "perturb_rows_to_csv",
]


def write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _save(fig, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _scatter_points(ax, pts: np.ndarray, **kw) -> None:
    if pts.shape[1] == 1:
        ax.scatter(pts[:, 0].real, pts[:, 0].imag, **kw)
        ax.set_xlabel("Re z")
        ax.set_ylabel("Im z")
    else:
        ax.scatter(np.abs(pts[:, 0]), np.abs(pts[:, 1]), **kw)
        ax.set_xlabel("|z1|")
        ax.set_ylabel("|z2|")


def fig_mesh(mesh: Mesh, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 5))
    _scatter_points(ax, mesh.points, s=6, color="tab:blue")
    ax.set_title(f"mesh {mesh.label} ({len(mesh)} points)")
    ax.set_aspect("equal", adjustable="datalim")
    _save(fig, path)


def fig_fekete(array: FeketeArray, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    last = array.records[-1]
    _scatter_points(ax1, last.points, s=25, color="tab:red", zorder=3)
    ax1.set_title(f"selected points, n={last.n} ({last.mesh_label})")
    ax1.set_aspect("equal", adjustable="datalim")
    ns = [r.n for r in array.records]
    ax2.plot(ns, [r.delta_estimate for r in array.records], "o-", label="delta_n estimate")
    flagged = [r.n for r in array.records if r.flagged]
    if flagged:
        ax2.scatter(
            flagged,
            [r.delta_estimate for r in array.records if r.flagged],
            marker="x",
            color="red",
            label="flagged",
            zorder=3,
        )
    ax2.set_xlabel("n")
    ax2.set_ylabel("delta_n")
    ax2.legend()
    ax2.set_title(f"{array.shape_label}, w={array.weight_label}, {array.extractor}")
    _save(fig, path)


def fig_diameter(report: ConvergenceReport, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    ns = report.column("n")
    ax.plot(ns, report.column("delta_kn"), "o-", label="delta_n(K_n mesh)")
    ax.plot(ns, report.column("delta_k"), "s-", label="delta_n(K mesh)")
    lim = report.meta.get("limit_estimate_k")
    if lim is not None and np.isfinite(lim):
        ax.axhline(lim, ls="--", color="gray", label=f"extrapolated limit {lim:.4f}")
    ax.set_xlabel("n")
    ax.set_ylabel("delta_n")
    ax.legend()
    ax.set_title(f"diagonal diameter scan: {report.meta.get('shape')}")
    _save(fig, path)


def fig_converge(report: ConvergenceReport, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.semilogy(report.column("n"), report.column("discrepancy"), "o-")
    ax.set_xlabel("n")
    ax.set_ylabel(f"moment discrepancy (s={report.meta.get('s')})")
    ax.set_title(
        f"{report.meta.get('shape')} vs {report.meta.get('reference')}"
    )
    _save(fig, path)


def fig_optimal(mu: DiscreteMeasure, max_b_ratio: float, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.5, 5))
    pts = mu.atoms
    sizes = 2000 * mu.probs
    if pts.shape[1] == 1:
        sc = ax.scatter(pts[:, 0].real, pts[:, 0].imag, s=np.maximum(sizes, 1), c=mu.probs)
        ax.set_xlabel("Re z")
        ax.set_ylabel("Im z")
    else:
        sc = ax.scatter(np.abs(pts[:, 0]), np.abs(pts[:, 1]), s=np.maximum(sizes, 1), c=mu.probs)
        ax.set_xlabel("|z1|")
        ax.set_ylabel("|z2|")
    fig.colorbar(sc, ax=ax, label="probability")
    ax.set_title(f"optimal measure (max B_n/m_n = {max_b_ratio:.6f})")
    _save(fig, path)


def fig_perturb(rows: list[dict], path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    ns = [r["n"] for r in rows]
    ax.plot(ns, [r["fprime_direct"] for r in rows], "o-", label="f_n'(0) Bergman form")
    ax.plot(ns, [r["fprime_fd"] for r in rows], "x--", label="f_n'(0) finite diff")
    ax.axhline(rows[0]["g_prime_ref"], ls=":", color="gray", label="g'(0) reference")
    ax.set_xlabel("n")
    ax.legend()
    ax.set_title("derivative of the log-det functional vs reference")
    _save(fig, path)


def fig_bergman(points: np.ndarray, values: np.ndarray, m: int, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    if points.shape[1] == 1 and np.max(np.abs(points[:, 0].imag)) < 1e-12:
        ax.plot(points[:, 0].real, values, ".")
        ax.set_xlabel("Re z")
    else:
        sc = ax.scatter(points[:, 0].real, points[:, 0].imag, c=values, s=8)
        fig.colorbar(sc, ax=ax, label="B_n")
        ax.set_xlabel("Re z1")
        ax.set_ylabel("Im z1")
    ax.axhline(m, ls="--", color="gray") if points.shape[1] == 1 else None
    ax.set_title(f"Bergman function on the mesh (m_n = {m})")
    _save(fig, path)


def fig_gram(entries: np.ndarray, logdet: float, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(np.abs(entries), cmap="viridis")
    fig.colorbar(im, ax=ax, label="|G[i,j]|")
    ax.set_xlabel("j")
    ax.set_ylabel("i")
    ax.set_title(f"Gram matrix magnitude (log det = {logdet:.6g})")
    _save(fig, path)


def perturb_rows_to_csv(rows: list[dict]) -> str:
    cols = ["n", "f_n0", "fprime_direct", "fprime_fd", "g_prime_ref", "gap"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(f"{r[c]:.17g}" if c != "n" else str(r[c]) for c in cols))
    return "\n".join(lines) + "\n"
