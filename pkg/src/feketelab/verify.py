"""End-to-end identity suite: exact determinant/Bergman identities,
derivative and concavity checks, and the optimal-measure certificate.

Every check returns (name, passed, detail); the CLI `verify` subcommand
runs them all and exits nonzero on any violation.
"""

from __future__ import annotations

import math

import numpy as np

from .basis import enumerate_basis
from .domains import build_mesh, make_weight
from .fekete import brute_force_fekete
from .gram import (
    DiscreteMeasure,
    bergman_at_atoms,
    check_bergman_identity,
    check_detG_identity,
    gram_matrix,
    logdet_gram,
    optimal_measure,
)
from .perturbation import (
    PolyProbe,
    concavity_scan,
    f_n,
    fn_prime_direct,
    fn_prime_fd,
    perturbed_weight,
)
from .vandermonde import weighted_vdm_logabs

__all__ = ["run_verify", "random_measure", "random_probe"]

# (d, n, max atoms) combos whose brute-force tuple counts stay inside the guard
_TUPLE_COMBOS = [
    (1, 1, 5),
    (1, 2, 5),
    (1, 3, 5),
    (2, 1, 5),
    (2, 2, 5),
    (2, 3, 3),
]


def random_measure(rng, d: int, s: int, box: float = 1.0) -> DiscreteMeasure:
    atoms = box * (rng.uniform(-1, 1, (s, d)) + 1j * rng.uniform(-1, 1, (s, d)))
    probs = rng.dirichlet(np.ones(s))
    # keep probabilities bounded away from 0 so Gram matrices stay honest
    probs = (probs + 0.05) / (1 + 0.05 * s)
    return DiscreteMeasure(atoms=atoms, probs=probs)


def random_probe(rng, d: int) -> PolyProbe:
    zero = (0,) * d
    e1 = (1,) + (0,) * (d - 1)
    c0 = rng.uniform(-1, 1)
    c1 = rng.uniform(-0.5, 0.5) + 1j * rng.uniform(-0.5, 0.5)
    c11 = rng.uniform(0, 1)
    return PolyProbe(
        coeffs=((zero, zero, c0), (e1, zero, c1), (zero, e1, np.conj(c1)), (e1, e1, c11)),
        label="random",
    )


def _weight_for(rng):
    return make_weight("constant" if rng.random() < 0.5 else "gaussian:1")


def _uniform_config(rng, basis, w, max_cond: float = 1e6) -> DiscreteMeasure:
    """Uniform measure on m_n random points, resampled until the Gram
    matrix is well enough conditioned that logdet carries ~10 digits.

    Exact identities are tested on such instances; near-degenerate
    configurations only measure rounding noise, not the identity.
    """
    for _ in range(200):
        pts = rng.uniform(-1, 1, (basis.m, basis.d)) + 1j * rng.uniform(-1, 1, (basis.m, basis.d))
        mu = DiscreteMeasure.uniform(pts)
        if np.linalg.cond(gram_matrix(basis, basis.n, w, mu).entries) <= max_cond:
            return mu
    raise RuntimeError("could not sample a well-conditioned configuration")


def check_det_identity_suite(rng, instances: int = 200, rtol: float = 1e-10):
    worst = 0.0
    for i in range(instances):
        d, n, smax = _TUPLE_COMBOS[int(rng.integers(len(_TUPLE_COMBOS)))]
        s = int(rng.integers(2, smax + 1))
        mu = random_measure(rng, d, s)
        w = _weight_for(rng)
        basis = enumerate_basis(d, n)
        worst = max(worst, check_detG_identity(basis, n, w, mu))
    return ("det-gram tuple identity", worst <= rtol, f"max residual {worst:.3e} over {instances}")


def check_bergman_identity_suite(rng, instances: int = 200, zs_per: int = 5, rtol: float = 1e-10):
    # nonsingular G needs at least m_n atoms; combos sized accordingly
    combos = [(1, 1, 2, 5), (1, 2, 3, 5), (1, 3, 4, 5), (2, 1, 3, 5), (2, 2, 6, 7)]
    worst = 0.0
    for i in range(instances):
        d, n, smin, smax = combos[int(rng.integers(len(combos)))]
        s = int(rng.integers(smin, smax + 1))
        mu = random_measure(rng, d, s)
        w = _weight_for(rng)
        basis = enumerate_basis(d, n)
        for _ in range(zs_per):
            z = rng.uniform(-1, 1, d) + 1j * rng.uniform(-1, 1, d)
            worst = max(worst, check_bergman_identity(basis, n, w, mu, z))
    return (
        "bergman tuple identity",
        worst <= rtol,
        f"max residual {worst:.3e} over {instances} x {zs_per} points",
    )


def check_bergman_trace_suite(rng, instances: int = 100, atol: float = 1e-8):
    combos = [(1, 1, 2, 8), (1, 3, 4, 9), (2, 1, 3, 8), (2, 2, 6, 9)]
    worst_trace = 0.0
    worst_atomic = 0.0
    for i in range(instances):
        d, n, smin, smax = combos[int(rng.integers(len(combos)))]
        s = int(rng.integers(smin, smax + 1))
        mu = random_measure(rng, d, s)
        w = _weight_for(rng)
        basis = enumerate_basis(d, n)
        B = bergman_at_atoms(basis, n, w, mu)
        worst_trace = max(worst_trace, abs(float(np.sum(mu.probs * B)) - basis.m))
        # atomic value: uniform measure on exactly m_n points
        mu_u = DiscreteMeasure.uniform(
            rng.uniform(-1, 1, (basis.m, d)) + 1j * rng.uniform(-1, 1, (basis.m, d))
        )
        Bu = bergman_at_atoms(basis, n, w, mu_u)
        worst_atomic = max(worst_atomic, float(np.max(np.abs(Bu - basis.m))))
    ok = worst_trace <= atol and worst_atomic <= atol
    return (
        "bergman trace and atomic value",
        ok,
        f"trace dev {worst_trace:.3e}, atomic dev {worst_atomic:.3e}",
    )


def check_uniform_det_identity_suite(rng, instances: int = 100, rtol: float = 1e-10):
    """det G(nu_n) = |W|^2 / m^m for uniform measures on m_n points."""
    combos = [(1, n) for n in range(1, 5)] + [(2, n) for n in range(1, 5)]
    worst = 0.0
    for i in range(instances):
        d, n = combos[int(rng.integers(len(combos)))]
        basis = enumerate_basis(d, n)
        w = _weight_for(rng)
        # condition-capped sampling: logdet through Cholesky loses digits on
        # near-degenerate configurations, drowning a 1e-10 identity check
        mu = _uniform_config(rng, basis, w)
        ld = logdet_gram(gram_matrix(basis, n, w, mu))
        lw = weighted_vdm_logabs(basis, n, w, mu.atoms)
        ref = 2 * lw.log_abs - basis.m * math.log(basis.m)
        worst = max(worst, abs(ld - ref) / max(abs(ld), abs(ref), 1.0))
    return ("uniform-measure det identity", worst <= rtol, f"max log-residual {worst:.3e}")


def check_derivative_suite(rng, instances: int = 100, rtol: float = 1e-6, h: float = 1e-4):
    combos = [(1, n, 12) for n in range(1, 7)] + [(2, 1, 12), (2, 2, 12), (2, 3, 12)]
    worst = 0.0
    worst_affine = 0.0
    for i in range(instances):
        d, n, smax = combos[int(rng.integers(len(combos)))]
        basis = enumerate_basis(d, n)
        s = int(rng.integers(basis.m, smax + 1))
        mu = random_measure(rng, d, s)
        w = _weight_for(rng)
        u = random_probe(rng, d)
        direct = fn_prime_direct(basis, n, w, u, mu)
        fd = fn_prime_fd(basis, n, w, u, mu, h=h)
        worst = max(worst, abs(direct - fd) / max(abs(direct), abs(fd), 1.0))
        # affine structure for uniform atomic-at-m_n measures; moderate
        # degree and t, since cond(G(t)) grows like the spread of
        # exp(-2 n t u) across the atoms and would swamp a 1e-9 check
        na = min(n, 4 if d == 1 else 2)
        ba = enumerate_basis(d, na)
        t = float(rng.uniform(-0.3, 0.3))
        for _ in range(200):
            mu_u = _uniform_config(rng, ba, w, max_cond=1e5)
            wt = perturbed_weight(w, u, t)
            if np.linalg.cond(gram_matrix(ba, na, wt, mu_u).entries) <= 1e5:
                break
        lhs = f_n(ba, na, w, u, mu_u, t)
        slope = (d + 1) / d * float(np.mean(u.eval(mu_u.atoms)))
        rhs = f_n(ba, na, w, u, mu_u, 0.0) + slope * t
        worst_affine = max(worst_affine, abs(lhs - rhs) / max(abs(rhs), 1.0))
    ok = worst <= rtol and worst_affine <= 1e-9
    return (
        "derivative identity",
        ok,
        f"max fd gap {worst:.3e}, max affine dev {worst_affine:.3e}",
    )


def check_concavity_suite(rng, instances: int = 50):
    combos = [(1, 2, 8), (1, 3, 9), (2, 1, 7), (2, 2, 9)]
    worst_rel = 0.0
    for i in range(instances):
        d, n, smax = combos[int(rng.integers(len(combos)))]
        basis = enumerate_basis(d, n)
        s = int(rng.integers(basis.m, smax + 1))
        w = _weight_for(rng)
        u0 = random_probe(rng, d)
        # sample until the Gram matrix stays well conditioned over the whole
        # t range; the probe is rescaled so exp(-2 n t u) cannot spread the
        # atom weights beyond ~e^6, else second differences only see noise
        for _ in range(200):
            mu = random_measure(rng, d, s)
            uvals = u0.eval(mu.atoms)
            c = 3.0 / (n * max(float(np.max(np.abs(uvals))), 1e-3))
            u = PolyProbe(
                coeffs=tuple((a, b, c * v) for a, b, v in u0.coeffs), label="scaled"
            )
            conds = [
                np.linalg.cond(gram_matrix(basis, n, perturbed_weight(w, u, t), mu).entries)
                for t in (-1.0, 0.0, 1.0)
            ]
            if max(conds) <= 1e5:
                break
        rep = concavity_scan(basis, n, w, u, mu, np.linspace(-1, 1, 21))
        worst_rel = max(worst_rel, rep.max_violation / rep.scale)
    return (
        "perturbation concavity",
        worst_rel <= 1e-8,
        f"max positive second difference {worst_rel:.3e} (relative)",
    )


def check_optimal_measure_suite(rng, tol: float = 1e-3, n_random: int = 50):
    cases = [
        ("interval", "constant", 41, 2),
        ("circle", "constant", 24, 2),
        ("disk:2", "gaussian:1", 6, 1),
    ]
    details = []
    ok = True
    for shape, weight, res, n in cases:
        mesh = build_mesh(shape, res)
        w = make_weight(weight)
        basis = enumerate_basis(mesh.dim, n)
        mu = optimal_measure(mesh, basis, n, w, tol=tol)
        B = bergman_at_atoms(basis, n, w, mu)
        ratio = float(B.max()) / basis.m
        ld_opt = logdet_gram(gram_matrix(basis, n, w, mu))
        # uniform-Fekete candidate
        fk = brute_force_fekete(mesh, basis, w)
        ld_fk = logdet_gram(gram_matrix(basis, n, w, DiscreteMeasure.uniform(fk)))
        beats_fekete = ld_fk <= ld_opt + math.log(1 + 10 * tol)
        beats_random = True
        for _ in range(n_random):
            probs = rng.dirichlet(np.ones(len(mesh)))
            mu_r = DiscreteMeasure(atoms=mesh.points, probs=probs)
            ld_r = logdet_gram(gram_matrix(basis, n, w, mu_r))
            if ld_r > ld_opt + math.log(1 + 10 * tol):
                beats_random = False
        case_ok = ratio <= 1 + tol and beats_fekete and beats_random
        ok = ok and case_ok
        details.append(f"{shape}: ratio {ratio:.6f}, fekete gap {ld_opt - ld_fk:+.3e}")
    return ("optimal-measure certificate", ok, "; ".join(details))


def run_verify(seed: int = 0, fast: bool = False):
    """Run the full identity suite; returns a list of (name, ok, detail)."""
    rng = np.random.default_rng(seed)
    k = 0.2 if fast else 1.0
    results = [
        check_det_identity_suite(rng, instances=max(10, int(200 * k))),
        check_bergman_identity_suite(rng, instances=max(10, int(200 * k))),
        check_bergman_trace_suite(rng, instances=max(10, int(100 * k))),
        check_uniform_det_identity_suite(rng, instances=max(10, int(100 * k))),
        check_derivative_suite(rng, instances=max(10, int(100 * k))),
        check_concavity_suite(rng, instances=max(5, int(50 * k))),
        check_optimal_measure_suite(rng, n_random=max(10, int(50 * k))),
    ]
    return results
