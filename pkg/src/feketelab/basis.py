"""Graded monomial basis in d complex variables.

The basis lists all monomials z^alpha with total degree <= n, ordered by
degree first and ascending lexicographic order on the exponent vector
within each degree block.  The within-degree ordering is a convention of
this package; determinant magnitudes do not depend on it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["MultiIndex", "GradedBasis", "enumerate_basis", "eval_monomials", "dims"]


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector of a monomial z_1^a_1 ... z_d^a_d."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        if len(self.exponents) < 1:
            raise ValueError("multi-index needs at least one variable")
        if any(a < 0 for a in self.exponents):
            raise ValueError("exponents must be nonnegative")

    @property
    def degree(self) -> int:
        return sum(self.exponents)


def dims(d: int, n: int) -> tuple[int, int]:
    """Dimension m_n of polynomials of degree <= n in d variables, and the
    degree sum l_n of the graded basis.

    m_n = C(n+d, d) and l_n = d/(d+1) * n * m_n; the second value is the
    exact integer d * C(n+d, d+1).
    """
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    m = math.comb(n + d, d)
    l = d * math.comb(n + d, d + 1)
    return m, l


def _exponents_of_degree(d: int, k: int) -> list[tuple[int, ...]]:
    """All exponent vectors in d variables of total degree exactly k,
    ascending lexicographic."""
    if d == 1:
        return [(k,)]
    out = []
    for a1 in range(k + 1):
        for rest in _exponents_of_degree(d - 1, k - a1):
            out.append((a1,) + rest)
    return out


@dataclass(frozen=True)
class GradedBasis:
    """Ordered monomial basis of degree <= n in d variables."""

    d: int
    n: int
    indices: tuple[MultiIndex, ...]
    m: int = field(init=False)
    l: int = field(init=False)

    def __post_init__(self):
        m, l = dims(self.d, self.n)
        if len(self.indices) != m:
            raise ValueError("index list length does not match m_n")
        degsum = sum(mi.degree for mi in self.indices)
        if degsum != l:
            raise ValueError("degree sum does not match l_n")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "l", l)

    @property
    def exponent_array(self) -> np.ndarray:
        """(m, d) int array of exponents, cached on first use."""
        arr = getattr(self, "_exp_arr", None)
        if arr is None:
            arr = np.array([mi.exponents for mi in self.indices], dtype=np.int64)
            object.__setattr__(self, "_exp_arr", arr)
        return arr

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate all basis monomials at an (N, d) array of points.

        Returns an (N, m) complex array with column j equal to z^alpha(j).
        """
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[1] != self.d:
            raise ValueError(f"points have dimension {pts.shape[1]}, basis has {self.d}")
        exps = self.exponent_array
        # z^alpha coordinatewise; 0^0 := 1
        out = np.ones((pts.shape[0], self.m), dtype=complex)
        for k in range(self.d):
            col = pts[:, k]
            maxe = int(exps[:, k].max())
            if maxe == 0:
                continue
            powers = np.empty((pts.shape[0], maxe + 1), dtype=complex)
            powers[:, 0] = 1.0
            for e in range(1, maxe + 1):
                powers[:, e] = powers[:, e - 1] * col
            out *= powers[:, exps[:, k]]
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.d,
                "n": self.n,
                "indices": [list(mi.exponents) for mi in self.indices],
                "m": self.m,
                "l": self.l,
            }
        )

    @staticmethod
    def from_json(text: str) -> "GradedBasis":
        obj = json.loads(text)
        basis = enumerate_basis(obj["d"], obj["n"])
        got = [list(mi.exponents) for mi in basis.indices]
        if got != obj["indices"] or basis.m != obj["m"] or basis.l != obj["l"]:
            raise ValueError("serialized basis does not match the graded ordering")
        return basis


def enumerate_basis(d: int, n: int) -> GradedBasis:
    """Graded basis of all monomials of degree <= n in d variables."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    indices = []
    for k in range(n + 1):
        indices.extend(MultiIndex(e) for e in _exponents_of_degree(d, k))
    return GradedBasis(d=d, n=n, indices=tuple(indices))


def eval_monomials(basis: GradedBasis, z) -> np.ndarray:
    """Evaluate the basis at a single point, returning an (m,) vector."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape != (basis.d,):
        raise ValueError(f"point has shape {z.shape}, expected ({basis.d},)")
    return basis.eval_many(z[None, :])[0]
