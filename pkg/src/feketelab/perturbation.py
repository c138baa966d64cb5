"""Perturbed weights w_t = w e^{-tu} and the log-determinant functional

    f_n(t) = -(1 / 2 l_n) log det G_n^{mu_n, w_t},

its derivative at 0 via the Bergman function, its concavity in t, and the
experiment comparing f_n'(0) against the reference derivative
g'(0) = ((d+1)/d) * int u d(mu_ref).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import GradedBasis, enumerate_basis
from .domains import WeightFn, make_weight, neighborhood_mesh, shape_from_spec
from .fekete import extract
from .gram import DiscreteMeasure, SingularGramError, bergman_at_atoms, gram_matrix, logdet_gram

__all__ = [
    "PolyProbe",
    "probe_from_spec",
    "perturbed_weight",
    "f_n",
    "fn_prime_direct",
    "fn_prime_fd",
    "concavity_scan",
    "ConcavityReport",
    "derivative_experiment",
]


@dataclass(frozen=True)
class PolyProbe:
    """Real-valued polynomial test function u(z) = sum c_{ab} z^a conj(z)^b.

    Stored as a dict keyed by pairs of exponent multi-indices; realness
    requires c_{ab} = conj(c_{ba}), which is validated at construction.
    """

    coeffs: tuple  # ((alpha, beta, complex coeff), ...)
    label: str = "probe"

    def __post_init__(self):
        table = {(a, b): c for a, b, c in self.coeffs}
        for (a, b), c in table.items():
            if abs(np.conj(table.get((b, a), 0.0)) - c) > 1e-12 * max(1.0, abs(c)):
                raise ValueError("probe coefficients must satisfy c_ab = conj(c_ba)")

    def eval(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        out = np.zeros(pts.shape[0], dtype=complex)
        for a, b, c in self.coeffs:
            term = np.ones(pts.shape[0], dtype=complex)
            for k, (ak, bk) in enumerate(zip(a, b)):
                term *= pts[:, k] ** ak * np.conj(pts[:, k]) ** bk
            out += c * term
        return out.real

    def integrate(self, ref) -> float:
        """Integral of u against an EquilibriumReference via its moments."""
        total = sum(c * ref.moment(a, b) for a, b, c in self.coeffs)
        return float(np.real(total))


def probe_from_spec(spec, d: int = 1) -> PolyProbe:
    """Named probes: 'const:c', 're' = Re z_1, 're2' = Re(z_1)^2,
    'abs2' = |z_1|^2."""
    if isinstance(spec, PolyProbe):
        return spec
    name, _, rest = str(spec).partition(":")
    zero = (0,) * d
    e1 = (1,) + (0,) * (d - 1)
    e2 = (2,) + (0,) * (d - 1)
    if name == "const":
        c = float(rest) if rest else 1.0
        return PolyProbe(coeffs=((zero, zero, c),), label=f"const:{c:g}")
    if name == "re":
        return PolyProbe(coeffs=((e1, zero, 0.5), (zero, e1, 0.5)), label="re")
    if name == "re2":
        # (z + conj z)^2 / 4
        return PolyProbe(
            coeffs=((e2, zero, 0.25), (zero, e2, 0.25), (e1, e1, 0.5)), label="re2"
        )
    if name == "abs2":
        return PolyProbe(coeffs=((e1, e1, 1.0),), label="abs2")
    raise ValueError(f"unknown probe {spec!r}")


def _u_eval(u) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(u, PolyProbe):
        return u.eval
    if callable(u):
        return lambda pts: np.asarray(u(pts), dtype=float)
    raise TypeError("u must be a PolyProbe or a callable")


def perturbed_weight(w: WeightFn, u, t: float) -> WeightFn:
    """w_t = w * exp(-t u), i.e. Q_t = Q + t u."""
    ueval = _u_eval(u)
    return WeightFn(
        q=lambda pts: w.q_values(pts) + t * ueval(pts),
        label=f"{w.label}*exp(-{t:g}u)",
        admissible_hint=w.admissible_hint,
    )


def f_n(basis: GradedBasis, n: int, w: WeightFn, u, mu_n: DiscreteMeasure, t: float) -> float:
    wt = perturbed_weight(w, u, t)
    ld = logdet_gram(gram_matrix(basis, n, wt, mu_n))
    if not np.isfinite(ld):
        raise SingularGramError(f"Gram matrix singular at t = {t:g}")
    return -ld / (2 * basis.l)


def fn_prime_direct(basis: GradedBasis, n: int, w: WeightFn, u, mu_n: DiscreteMeasure) -> float:
    """f_n'(0) = ((d+1)/(d m_n)) * sum_k p_k u(a_k) B_n(a_k)."""
    B = bergman_at_atoms(basis, n, w, mu_n)
    uvals = _u_eval(u)(mu_n.atoms)
    d = basis.d
    return float((d + 1) / (d * basis.m) * np.sum(mu_n.probs * uvals * B))


def fn_prime_fd(
    basis: GradedBasis, n: int, w: WeightFn, u, mu_n: DiscreteMeasure, h: float = 1e-4
) -> float:
    if h <= 0:
        raise ValueError("h must be positive")
    return (f_n(basis, n, w, u, mu_n, h) - f_n(basis, n, w, u, mu_n, -h)) / (2 * h)


@dataclass(frozen=True)
class ConcavityReport:
    t_grid: np.ndarray
    values: np.ndarray  # f_n on the grid; nan where singular
    second_diffs: np.ndarray
    max_violation: float  # largest positive centered second difference
    scale: float
    singular_points: tuple[float, ...] = ()

    @property
    def concave(self) -> bool:
        return self.max_violation <= 1e-8 * self.scale


def concavity_scan(
    basis: GradedBasis,
    n: int,
    w: WeightFn,
    u,
    mu_n: DiscreteMeasure,
    t_grid: Sequence[float],
) -> ConcavityReport:
    t = np.asarray(t_grid, dtype=float)
    if len(t) < 3 or np.any(np.diff(t) <= 0):
        raise ValueError("t grid must be sorted with at least 3 points")
    vals = np.empty(len(t))
    singular = []
    for i, ti in enumerate(t):
        try:
            vals[i] = f_n(basis, n, w, u, mu_n, float(ti))
        except SingularGramError:
            vals[i] = np.nan
            singular.append(float(ti))
    d2 = np.full(len(t) - 2, np.nan)
    for i in range(1, len(t) - 1):
        hl, hr = t[i] - t[i - 1], t[i + 1] - t[i]
        trio = vals[i - 1 : i + 2]
        if np.any(np.isnan(trio)):
            continue
        # centered second difference on a possibly nonuniform grid
        d2[i - 1] = 2 * (
            vals[i - 1] / (hl * (hl + hr)) - vals[i] / (hl * hr) + vals[i + 1] / (hr * (hl + hr))
        )
    finite = d2[np.isfinite(d2)]
    maxv = float(np.max(finite)) if len(finite) else 0.0
    scale = float(np.nanmax(np.abs(vals))) if np.any(np.isfinite(vals)) else 1.0
    scale = max(scale, 1.0)
    return ConcavityReport(
        t_grid=t,
        values=vals,
        second_diffs=d2,
        max_violation=max(maxv, 0.0),
        scale=scale,
        singular_points=tuple(singular),
    )


def derivative_experiment(
    shape,
    w,
    u,
    n_range: Sequence[int],
    eps_schedule,
    extractor: str = "greedy+exchange",
    resolution: int = 200,
    h: float = 1e-4,
) -> list[dict]:
    """Tabulate f_n(0), f_n'(0) (Bergman form and finite differences) for
    AAWF empirical measures on the K_n meshes, against the reference
    derivative g'(0) = ((d+1)/d) int u d(mu_ref)."""
    from .convergence import reference_for

    shape = shape_from_spec(shape)
    w = make_weight(w)
    u = probe_from_spec(u, d=shape.dim) if not isinstance(u, PolyProbe) else u
    ref = reference_for(shape, w)
    d = shape.dim
    g_prime = (d + 1) / d * u.integrate(ref)
    rows = []
    for n in n_range:
        eps = float(eps_schedule(n)) if callable(eps_schedule) else float(eps_schedule)
        basis = enumerate_basis(d, n)
        mesh = neighborhood_mesh(shape, eps, resolution)
        pts = extract(mesh, basis, w, extractor)
        mu_n = DiscreteMeasure.uniform(pts)
        f0 = f_n(basis, n, w, u, mu_n, 0.0)
        fpd = fn_prime_direct(basis, n, w, u, mu_n)
        fpf = fn_prime_fd(basis, n, w, u, mu_n, h=h)
        rows.append(
            {
                "n": n,
                "f_n0": f0,
                "fprime_direct": fpd,
                "fprime_fd": fpf,
                "g_prime_ref": g_prime,
                "gap": abs(fpd - g_prime),
            }
        )
    return rows
