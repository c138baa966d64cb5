"""Extraction of (approximate, weighted) Fekete tuples from meshes and
generation of arrays whose n-th configuration lives in the neighborhood
mesh K_n.

Greedy extraction works on the row-orthonormalized weighted Vandermonde
matrix of the mesh: column operations change every subdeterminant by the
same constant factor, so selection on the orthonormalized columns is
equivalent to selection on the raw monomial columns but numerically far
better conditioned.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .basis import GradedBasis, enumerate_basis
from .domains import Mesh, WeightFn, make_weight, neighborhood_mesh, shape_from_spec
from .vandermonde import LogScaledValue, weighted_vdm_logabs

__all__ = [
    "greedy_fekete",
    "exchange_refine",
    "brute_force_fekete",
    "extract",
    "aawf_array",
    "make_eps_schedule",
    "FeketeRecord",
    "FeketeArray",
]

BRUTE_FORCE_GUARD = 10**7

EXTRACTORS = ("greedy", "greedy+exchange", "brute-force")


def _weighted_rows(points: np.ndarray, basis: GradedBasis, w: WeightFn):
    """Rows of the mesh's weighted Vandermonde matrix, restricted to points
    with w > 0.  Returns (rows, kept_indices)."""
    logw = w.log_w(points)
    keep = np.flatnonzero(np.isfinite(logw))
    rows = basis.eval_many(points[keep]) * np.exp(basis.n * logw[keep])[:, None]
    return rows, keep


def greedy_fekete(mesh: Mesh, basis: GradedBasis, w: WeightFn) -> np.ndarray:
    """Greedy row-pivoted selection of m_n mesh points.

    Each step picks the mesh point whose weighted monomial row has the
    largest component orthogonal to the span of the rows already chosen;
    ties go to the lowest mesh index.
    """
    idx = greedy_fekete_indices(mesh, basis, w)
    return mesh.points[idx]


def greedy_fekete_indices(mesh: Mesh, basis: GradedBasis, w: WeightFn) -> np.ndarray:
    m = basis.m
    rows, keep = _weighted_rows(mesh.points, basis, w)
    if rows.shape[0] < m:
        raise ValueError("weight degenerate on mesh")
    # orthonormalize the columns once; selection is invariant
    Q, _ = np.linalg.qr(rows)
    resid = Q.copy()
    chosen: list[int] = []
    for _ in range(m):
        norms = np.einsum("ij,ij->i", resid.conj(), resid).real
        norms[chosen] = -1.0
        p = int(np.argmax(norms))
        if norms[p] <= 0:
            raise ValueError("mesh does not support a nonsingular Vandermonde")
        chosen.append(p)
        u = resid[p] / math.sqrt(norms[p])
        resid -= np.outer(resid @ u.conj(), u)
        resid[p] = 0.0
    return keep[np.array(chosen)]


def _mesh_indices_of(pts: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Locate given points in the mesh (exact up to 1e-12)."""
    out = []
    for p in np.asarray(pts, dtype=complex).reshape(len(pts), -1):
        dist = np.max(np.abs(mesh.points - p[None, :]), axis=1)
        j = int(np.argmin(dist))
        if dist[j] > 1e-12:
            raise ValueError("point was not extracted from this mesh")
        out.append(j)
    return np.array(out)


def exchange_refine(
    pts, mesh: Mesh, basis: GradedBasis, w: WeightFn, max_sweeps: int = 10
) -> np.ndarray:
    """Single-point exchanges accepted only when log|W| strictly increases.

    Terminates after a sweep with no improving exchange or after
    max_sweeps.  The output log|W| is never below the input's.
    """
    m = basis.m
    rows, keep = _weighted_rows(mesh.points, basis, w)
    Q, _ = np.linalg.qr(rows)
    pos_of = {int(k): i for i, k in enumerate(keep)}
    idx = [pos_of[int(j)] for j in _mesh_indices_of(pts, mesh)]
    for _ in range(max_sweeps):
        improved = False
        for j in range(m):
            S = Q[idx]
            try:
                C = np.linalg.solve(S.T, Q.T).T  # C[p, j] = det ratio for swap
            except np.linalg.LinAlgError:
                break
            ratios = np.abs(C[:, j])
            ratios[idx] = 0.0
            p = int(np.argmax(ratios))
            if ratios[p] > 1.0 + 1e-12:
                idx[j] = p
                improved = True
        if not improved:
            break
    return mesh.points[keep[np.array(idx)]]


def brute_force_fekete(mesh: Mesh, basis: GradedBasis, w: WeightFn) -> np.ndarray:
    """Exact maximizer of |W| over all m_n-subsets of the mesh."""
    m = basis.m
    N = len(mesh)
    if math.comb(N, m) > BRUTE_FORCE_GUARD:
        raise ValueError(
            f"brute force over C({N},{m}) subsets exceeds the {BRUTE_FORCE_GUARD} guard"
        )
    logw = w.log_w(mesh.points)
    best = float("-inf")
    best_idx = None
    if basis.d == 1:
        z = mesh.points[:, 0]
        for comb in combinations(range(N), m):
            lw = basis.n * logw[list(comb)].sum()
            if not np.isfinite(lw):
                continue
            zz = z[list(comb)]
            diffs = np.abs(zz[None, :] - zz[:, None])[np.triu_indices(m, 1)]
            if np.any(diffs == 0):
                continue
            val = float(np.sum(np.log(diffs))) + lw
            if val > best:
                best, best_idx = val, comb
    else:
        V = basis.eval_many(mesh.points)
        for comb in combinations(range(N), m):
            lw = basis.n * logw[list(comb)].sum()
            if not np.isfinite(lw):
                continue
            sub = V[list(comb)]
            sign, ld = np.linalg.slogdet(sub)
            if sign == 0:
                continue
            val = float(ld) + lw
            if val > best:
                best, best_idx = val, comb
    if best_idx is None:
        raise ValueError("weight degenerate on mesh")
    return mesh.points[list(best_idx)]


def extract(mesh: Mesh, basis: GradedBasis, w: WeightFn, extractor: str) -> np.ndarray:
    """Dispatch on extractor name: greedy, greedy+exchange, brute-force."""
    if extractor in ("greedy",):
        return greedy_fekete(mesh, basis, w)
    if extractor in ("greedy+exchange", "exchange"):
        pts = greedy_fekete(mesh, basis, w)
        return exchange_refine(pts, mesh, basis, w)
    if extractor in ("brute-force", "brute"):
        return brute_force_fekete(mesh, basis, w)
    raise ValueError(f"unknown extractor {extractor!r}; supported: {EXTRACTORS}")


def make_eps_schedule(law: str, eps0: float = 1.0) -> Callable[[int], float]:
    """'zero' gives eps_n = 0; 'inv-n' gives eps_n = eps0 / n."""
    if law == "zero":
        return lambda n: 0.0
    if law == "inv-n":
        if eps0 <= 0:
            raise ValueError("inv-n schedule needs eps0 > 0")
        return lambda n: eps0 / n
    raise ValueError(f"unknown eps law {law!r}; supported: zero, inv-n")


@dataclass(frozen=True)
class FeketeRecord:
    """One degree of an array: the selected tuple and its diagnostics."""

    n: int
    epsilon: float
    mesh_label: str
    points: np.ndarray  # (m_n, d)
    log_abs_w: float  # log |W| at the selected points
    delta_estimate: float  # extractor's (max |W|)^{1/l_n} over the mesh
    achieved: float  # (|W| at the recorded points)^{1/l_n}
    flagged: bool  # achieved < (1 - slack) * delta_estimate


@dataclass(frozen=True)
class FeketeArray:
    shape_label: str
    weight_label: str
    extractor: str
    slack: float
    records: tuple[FeketeRecord, ...]
    trend_consistent: bool = field(default=True)

    def deltas(self) -> np.ndarray:
        return np.array([r.delta_estimate for r in self.records])

    def to_json(self) -> str:
        return json.dumps(
            {
                "shape": self.shape_label,
                "weight": self.weight_label,
                "extractor": self.extractor,
                "slack": self.slack,
                "trend_consistent": self.trend_consistent,
                "records": [
                    {
                        "n": r.n,
                        "epsilon": r.epsilon,
                        "mesh": r.mesh_label,
                        "points": [[p.real, p.imag] for p in np.ravel(r.points)]
                        if r.points.shape[1] == 1
                        else [[c.real, c.imag] for row in r.points for c in row],
                        "d": int(r.points.shape[1]),
                        "log_abs_w": r.log_abs_w,
                        "delta_estimate": r.delta_estimate,
                        "achieved": r.achieved,
                        "flagged": r.flagged,
                    }
                    for r in self.records
                ],
            }
        )

    def to_csv(self) -> str:
        d = self.records[0].points.shape[1] if self.records else 1
        cols = ",".join(f"re_{k+1},im_{k+1}" for k in range(d))
        lines = [f"n,epsilon,{cols},log_abs_w,delta_estimate,achieved,flagged"]
        for r in self.records:
            for p in r.points:
                coords = ",".join(f"{p[k].real:.17g},{p[k].imag:.17g}" for k in range(d))
                lines.append(
                    f"{r.n},{r.epsilon:.17g},{coords},{r.log_abs_w:.17g},"
                    f"{r.delta_estimate:.17g},{r.achieved:.17g},{int(r.flagged)}"
                )
        return "\n".join(lines) + "\n"


def make_record(
    pts,
    mesh: Mesh,
    basis: GradedBasis,
    w: WeightFn,
    delta_estimate: float,
    slack: float,
) -> FeketeRecord:
    """Record arbitrary points against a mesh diameter estimate; used both
    by aawf_array and to flag deliberately corrupted configurations."""
    pts = np.asarray(pts, dtype=complex)
    if pts.ndim == 1:
        pts = pts[:, None]
    lw = weighted_vdm_logabs(basis, basis.n, w, pts)
    achieved = math.exp(lw.log_abs / basis.l) if not lw.is_zero else 0.0
    return FeketeRecord(
        n=basis.n,
        epsilon=mesh.epsilon,
        mesh_label=mesh.label,
        points=pts,
        log_abs_w=lw.log_abs,
        delta_estimate=delta_estimate,
        achieved=achieved,
        flagged=bool(achieved < (1.0 - slack) * delta_estimate),
    )


def aawf_array(
    shape,
    weight,
    eps_schedule: Callable[[int], float] | Sequence[float],
    n_range: Sequence[int],
    slack: float = 0.02,
    extractor: str = "greedy+exchange",
    resolution: int = 200,
) -> FeketeArray:
    """Per-degree extraction on the shrinking neighborhood meshes K_n.

    The slack parameter operationalizes the asymptotic near-maximality
    hypothesis at finite n: a record is flagged when its achieved
    normalized |W| falls below (1 - slack) times the mesh estimate.
    """
    if not 0 <= slack < 1:
        raise ValueError("slack must be in [0, 1)")
    shape = shape_from_spec(shape)
    w = make_weight(weight)
    n_range = list(n_range)
    if callable(eps_schedule):
        eps_list = [float(eps_schedule(n)) for n in n_range]
    else:
        eps_list = [float(e) for e in eps_schedule]
        if len(eps_list) != len(n_range):
            raise ValueError("eps schedule length must match n range")
    if any(b > a + 1e-15 for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps schedule must be nonincreasing")
    records = []
    for n, eps in zip(n_range, eps_list):
        basis = enumerate_basis(shape.dim, n)
        mesh = neighborhood_mesh(shape, eps, resolution)
        try:
            pts = extract(mesh, basis, w, extractor)
        except ValueError as exc:
            raise ValueError(f"extraction failed at degree n={n}: {exc}") from exc
        lw = weighted_vdm_logabs(basis, n, w, pts)
        delta = math.exp(lw.log_abs / basis.l)
        records.append(make_record(pts, mesh, basis, w, delta, slack))
    deltas = [r.delta_estimate for r in records]
    trend = all(b <= a * 1.02 for a, b in zip(deltas, deltas[1:]))
    if len(deltas) >= 2:
        trend = trend and deltas[-1] <= deltas[0]
    return FeketeArray(
        shape_label=shape.label,
        weight_label=w.label,
        extractor=extractor,
        slack=slack,
        records=tuple(records),
        trend_consistent=trend,
    )
