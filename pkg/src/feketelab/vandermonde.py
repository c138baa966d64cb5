"""Log-domain (weighted) Vandermonde determinants and finite-degree
diameter estimates.

Determinant magnitudes underflow or overflow double precision well before
degree 20, so every determinant here is carried as a sign-phase plus
log-magnitude pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor

from .basis import GradedBasis
from .domains import Mesh, WeightFn

__all__ = [
    "LogScaledValue",
    "vdm_logabs",
    "weighted_vdm_logabs",
    "delta_n_estimate",
    "PIVOT_RTOL",
]

# a pivot below this fraction of the largest pivot declares the determinant zero
PIVOT_RTOL = 1e-14


@dataclass(frozen=True)
class LogScaledValue:
    """A complex value v = phase * exp(log_abs) with |phase| = 1.

    A zero value is represented by is_zero = True and log_abs = -inf;
    its phase is undefined and stored as 1.
    """

    log_abs: float
    phase: complex = 1.0 + 0.0j
    is_zero: bool = False

    @staticmethod
    def zero() -> "LogScaledValue":
        return LogScaledValue(log_abs=float("-inf"), phase=1.0, is_zero=True)

    @staticmethod
    def of(v: complex) -> "LogScaledValue":
        a = abs(v)
        if a == 0:
            return LogScaledValue.zero()
        return LogScaledValue(log_abs=math.log(a), phase=v / a)

    def value(self) -> complex:
        if self.is_zero:
            return 0.0
        return self.phase * math.exp(self.log_abs)

    def scaled(self, log_factor: float) -> "LogScaledValue":
        if self.is_zero or log_factor == float("-inf"):
            return LogScaledValue.zero()
        return LogScaledValue(self.log_abs + log_factor, self.phase, False)


def _as_tuple(points, d: int) -> np.ndarray:
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != d:
        raise ValueError(f"points have dimension {pts.shape[1]}, basis has {d}")
    return pts


def _product_formula(z: np.ndarray) -> LogScaledValue:
    """Univariate VDM via prod_{j<k} (z_k - z_j)."""
    m = len(z)
    log_abs = 0.0
    phase = 1.0 + 0.0j
    for j in range(m):
        diffs = z[j + 1 :] - z[j]
        mags = np.abs(diffs)
        if np.any(mags == 0):
            return LogScaledValue.zero()
        log_abs += float(np.sum(np.log(mags)))
        phase *= complex(np.prod(diffs / mags))
    phase /= abs(phase)
    return LogScaledValue(log_abs=log_abs, phase=phase)


def _lu_logdet(A: np.ndarray) -> LogScaledValue:
    """Log-domain determinant via column scaling and pivoted LU."""
    A = np.asarray(A, dtype=complex)
    m = A.shape[0]
    scales = np.max(np.abs(A), axis=0)
    if np.any(scales == 0):
        return LogScaledValue.zero()
    B = A / scales[None, :]
    lu, piv = lu_factor(B, check_finite=False)
    diag = np.diag(lu)
    mags = np.abs(diag)
    if mags.max() == 0 or mags.min() < PIVOT_RTOL * mags.max():
        return LogScaledValue.zero()
    log_abs = float(np.sum(np.log(mags)) + np.sum(np.log(scales)))
    nswaps = int(np.sum(piv != np.arange(m)))
    phase = complex(np.prod(diag / mags)) * (-1.0) ** nswaps
    phase /= abs(phase)
    return LogScaledValue(log_abs=log_abs, phase=phase)


def vdm_logabs(basis: GradedBasis, points, method: str = "auto") -> LogScaledValue:
    """det[e_i(zeta_j)] for m_n points, as a LogScaledValue.

    method 'product' is the univariate fast path prod_{j<k}(z_k - z_j);
    'lu' is the general pivoted factorization; 'auto' picks the product
    formula when d = 1.
    """
    pts = _as_tuple(points, basis.d)
    if pts.shape[0] != basis.m:
        raise ValueError(f"need {basis.m} points, got {pts.shape[0]}")
    if method not in ("auto", "product", "lu"):
        raise ValueError(f"unknown method {method!r}")
    if method == "product" and basis.d != 1:
        raise ValueError("product formula only applies to d = 1")
    if basis.d == 1 and method in ("auto", "product"):
        return _product_formula(pts[:, 0])
    # columns are points, rows are basis monomials
    A = basis.eval_many(pts).T
    return _lu_logdet(A)


def weighted_vdm_logabs(
    basis: GradedBasis, n: int, w: WeightFn, points, method: str = "auto"
) -> LogScaledValue:
    """|W| = |VDM| * prod_j w(zeta_j)^n in the log domain."""
    if n != basis.n:
        raise ValueError("degree n must match the basis degree")
    pts = _as_tuple(points, basis.d)
    v = vdm_logabs(basis, pts, method=method)
    logw = w.log_w(pts)
    if np.any(np.isneginf(logw)) or v.is_zero:
        return LogScaledValue.zero()
    return v.scaled(float(n * np.sum(logw)))


def delta_n_estimate(
    mesh: Mesh, w: WeightFn, basis: GradedBasis, extractor: str = "greedy+exchange"
) -> float:
    """Finite-degree weighted diameter estimate over a mesh:
    (max extracted |W|)^{1/l_n}.

    A lower bound on the true mesh maximum for the greedy extractors and
    the exact mesh maximum under 'brute-force'.
    """
    if basis.l == 0:
        raise ValueError("n = 0 has l_n = 0; the diameter exponent is undefined")
    from . import fekete  # deferred; fekete imports this module

    pts = fekete.extract(mesh, basis, w, extractor)
    lw = weighted_vdm_logabs(basis, basis.n, w, pts)
    return math.exp(lw.log_abs / basis.l)
