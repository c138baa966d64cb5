import json
import math

import numpy as np
import pytest

from feketelab import (
    DiscreteMeasure,
    GramMatrix,
    SingularGramError,
    bergman_at_atoms,
    bergman_function,
    brute_force_fekete,
    build_mesh,
    check_bergman_identity,
    check_detG_identity,
    enumerate_basis,
    gram_matrix,
    logdet_gram,
    make_weight,
    optimal_measure,
    weighted_vdm_logabs,
)

W1 = make_weight("constant")


def _roots_measure(n):
    z = np.exp(2j * math.pi * np.arange(n + 1) / (n + 1))[:, None]
    return DiscreteMeasure.uniform(z)


class TestDiscreteMeasure:
    def test_validation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            DiscreteMeasure(atoms=np.array([[0.0], [1.0]]), probs=np.array([0.5, 0.6]))
        with pytest.raises(ValueError, match="nonnegative"):
            DiscreteMeasure(atoms=np.array([[0.0], [1.0]]), probs=np.array([1.5, -0.5]))
        with pytest.raises(ValueError, match="distinct"):
            DiscreteMeasure(atoms=np.array([[1.0], [1.0]]), probs=np.array([0.5, 0.5]))

    def test_uniform(self):
        mu = DiscreteMeasure.uniform([[0.0], [1.0], [2.0]])
        assert np.allclose(mu.probs, 1 / 3)
        assert mu.size == 3 and mu.dim == 1

    def test_json_round_trip(self):
        mu = DiscreteMeasure(
            atoms=np.array([[0.1 + 0.2j, -1.0], [2.0, 0.5j]]), probs=np.array([0.25, 0.75])
        )
        back = DiscreteMeasure.from_json(mu.to_json())
        assert np.allclose(back.atoms, mu.atoms)
        assert np.allclose(back.probs, mu.probs)

    def test_csv_columns(self):
        mu = DiscreteMeasure.uniform([[1j], [2.0]])
        lines = mu.to_csv().strip().splitlines()
        assert lines[0] == "re_1,im_1,prob"
        assert len(lines) == 3


class TestGramMatrix:
    def test_roots_of_unity_identity(self):
        for n in (1, 2, 4):
            b = enumerate_basis(1, n)
            G = gram_matrix(b, n, W1, _roots_measure(n))
            assert np.allclose(G.entries, np.eye(b.m), atol=1e-12)

    def test_single_atom_rank_one(self):
        b = enumerate_basis(1, 2)
        mu = DiscreteMeasure(atoms=np.array([[0.7 + 0.1j]]), probs=np.array([1.0]))
        G = gram_matrix(b, 2, W1, mu)
        assert np.linalg.matrix_rank(G.entries, tol=1e-10) == 1

    def test_constant_weight_scaling(self):
        b = enumerate_basis(1, 2)
        n = 2
        mu = DiscreteMeasure.uniform([[0.2], [0.5], [-0.3]])
        c = 1.7
        w_scaled = make_weight("grid", grid_points=mu.atoms, grid_q=np.full(3, -math.log(c)))
        G1 = gram_matrix(b, n, W1, mu)
        G2 = gram_matrix(b, n, w_scaled, mu)
        assert np.allclose(G2.entries, c ** (2 * n) * G1.entries)

    def test_hermitian_enforced(self):
        with pytest.raises(ValueError, match="Hermitian"):
            GramMatrix(entries=np.array([[1.0, 2.0], [0.0, 1.0]]), d=1, n=1, weight_label="w")

    def test_json_round_trip(self):
        b = enumerate_basis(1, 2)
        G = gram_matrix(b, 2, W1, DiscreteMeasure.uniform([[0.1j], [0.5], [-0.7]]))
        back = GramMatrix.from_json(G.to_json())
        assert np.allclose(back.entries, G.entries)
        assert (back.d, back.n, back.weight_label) == (G.d, G.n, G.weight_label)


class TestLogDet:
    def test_identity(self):
        b = enumerate_basis(1, 2)
        G = gram_matrix(b, 2, W1, _roots_measure(2))
        assert np.isclose(logdet_gram(G), 0.0, atol=1e-12)

    def test_rank_deficient_is_minus_inf(self):
        b = enumerate_basis(1, 2)
        mu = DiscreteMeasure.uniform([[0.0], [1.0]])  # 2 atoms < m = 3
        assert logdet_gram(gram_matrix(b, 2, W1, mu)) == float("-inf")

    def test_uniform_measure_det_identity(self):
        # det G = |W|^2 / m^m for uniform measures on m points
        rng = np.random.default_rng(8)
        for d, n in [(1, 2), (1, 4), (2, 1), (2, 2)]:
            b = enumerate_basis(d, n)
            w = make_weight("gaussian:1")
            pts = rng.uniform(-1, 1, (b.m, d)) + 1j * rng.uniform(-1, 1, (b.m, d))
            mu = DiscreteMeasure.uniform(pts)
            ld = logdet_gram(gram_matrix(b, n, w, mu))
            lw = weighted_vdm_logabs(b, n, w, pts)
            assert np.isclose(ld, 2 * lw.log_abs - b.m * math.log(b.m), rtol=1e-10)


class TestBergman:
    def test_atom_value_is_m(self):
        rng = np.random.default_rng(9)
        b = enumerate_basis(1, 3)
        pts = rng.uniform(-1, 1, (b.m, 1)) + 1j * rng.uniform(-1, 1, (b.m, 1))
        mu = DiscreteMeasure.uniform(pts)
        vals = bergman_at_atoms(b, 3, W1, mu)
        assert np.allclose(vals, b.m, atol=1e-9)

    def test_trace_identity(self):
        rng = np.random.default_rng(10)
        b = enumerate_basis(2, 2)
        atoms = rng.uniform(-1, 1, (9, 2)) + 1j * rng.uniform(-1, 1, (9, 2))
        probs = rng.dirichlet(np.ones(9))
        mu = DiscreteMeasure(atoms=atoms, probs=probs)
        vals = bergman_at_atoms(b, 2, make_weight("gaussian:1"), mu)
        assert np.isclose(np.sum(mu.probs * vals), b.m, atol=1e-8)

    def test_roots_of_unity_on_circle(self):
        n = 4
        b = enumerate_basis(1, n)
        mu = _roots_measure(n)
        z = np.exp(0.3j)
        # sum_{j=0}^{n} |z|^{2j} = n + 1 on the unit circle
        assert np.isclose(bergman_function(b, n, W1, mu, z), n + 1, atol=1e-10)

    def test_singular_measure_raises(self):
        b = enumerate_basis(1, 2)
        mu = DiscreteMeasure.uniform([[0.0], [1.0]])
        with pytest.raises(SingularGramError, match="does not determine"):
            bergman_function(b, 2, W1, mu, 0.5)


class TestDetIdentity:
    def test_hand_example(self):
        # mu = (delta_0 + delta_1)/2, n = 1: det G = 1/4 and the ordered
        # tuple sum is 1/2 = 2! * det G
        b = enumerate_basis(1, 1)
        mu = DiscreteMeasure.uniform([[0.0], [1.0]])
        G = gram_matrix(b, 1, W1, mu)
        assert np.isclose(np.linalg.det(G.entries).real, 0.25)
        assert check_detG_identity(b, 1, W1, mu) <= 1e-12

    def test_single_atom_both_sides_zero(self):
        b = enumerate_basis(1, 1)
        mu = DiscreteMeasure(atoms=np.array([[0.3]]), probs=np.array([1.0]))
        assert check_detG_identity(b, 1, W1, mu) <= 1e-12

    def test_random_gaussian_instance(self):
        rng = np.random.default_rng(11)
        b = enumerate_basis(1, 2)
        atoms = rng.uniform(-1, 1, (4, 1)) + 1j * rng.uniform(-1, 1, (4, 1))
        mu = DiscreteMeasure(atoms=atoms, probs=rng.dirichlet(np.ones(4)))
        assert check_detG_identity(b, 2, make_weight("gaussian:1"), mu) <= 1e-10

    def test_guard(self):
        b = enumerate_basis(2, 3)  # m = 10
        atoms = np.linspace(0, 1, 8)[:, None] * np.array([1.0, 1.0])
        mu = DiscreteMeasure.uniform(atoms.astype(complex))
        with pytest.raises(ValueError, match="guard"):
            check_detG_identity(b, 3, W1, mu)  # 8^10 tuples


class TestBergmanIdentity:
    def test_atom_of_uniform_measure(self):
        rng = np.random.default_rng(12)
        b = enumerate_basis(1, 2)
        pts = rng.uniform(-1, 1, (b.m, 1)) + 1j * rng.uniform(-1, 1, (b.m, 1))
        mu = DiscreteMeasure.uniform(pts)
        assert check_bergman_identity(b, 2, W1, mu, pts[0]) <= 1e-10
        assert np.isclose(bergman_function(b, 2, W1, mu, pts[0]), b.m, atol=1e-9)

    def test_degree_zero(self):
        b = enumerate_basis(1, 0)
        mu = DiscreteMeasure(atoms=np.array([[0.4]]), probs=np.array([1.0]))
        assert np.isclose(bergman_function(b, 0, W1, mu, 1.7), 1.0)
        assert check_bergman_identity(b, 0, W1, mu, 1.7) <= 1e-12

    def test_random_instance(self):
        rng = np.random.default_rng(13)
        b = enumerate_basis(1, 2)
        atoms = rng.uniform(-1, 1, (4, 1)) + 1j * rng.uniform(-1, 1, (4, 1))
        mu = DiscreteMeasure(atoms=atoms, probs=rng.dirichlet(np.ones(4)))
        assert check_bergman_identity(b, 2, W1, mu, 0.3) <= 1e-10


class TestBasisReorderInvariance:
    def test_detg_and_bergman(self):
        from feketelab.basis import GradedBasis

        b = enumerate_basis(2, 2)
        idx = list(b.indices)
        idx[1], idx[2] = idx[2], idx[1]  # swap within the degree-1 block
        b2 = GradedBasis(d=2, n=2, indices=tuple(idx))
        rng = np.random.default_rng(14)
        atoms = rng.uniform(-1, 1, (8, 2)) + 1j * rng.uniform(-1, 1, (8, 2))
        mu = DiscreteMeasure(atoms=atoms, probs=rng.dirichlet(np.ones(8)))
        ld1 = logdet_gram(gram_matrix(b, 2, W1, mu))
        ld2 = logdet_gram(gram_matrix(b2, 2, W1, mu))
        assert np.isclose(ld1, ld2, rtol=1e-10)
        z = 0.3 + 0.1j, -0.2
        assert np.isclose(
            bergman_function(b, 2, W1, mu, z), bergman_function(b2, 2, W1, mu, z), rtol=1e-10
        )


class TestOptimalMeasure:
    def test_minimal_mesh_gives_uniform(self):
        mesh = build_mesh("circle", 3)
        b = enumerate_basis(1, 2)
        mu = optimal_measure(mesh, b, 2, W1)
        assert np.allclose(mu.probs, 1 / 3, atol=1e-9)

    def test_certificate_on_circle(self):
        mesh = build_mesh("circle", 20)
        b = enumerate_basis(1, 1)
        mu = optimal_measure(mesh, b, 1, W1, tol=1e-3)
        vals = bergman_at_atoms(b, 1, W1, mu)
        assert vals.max() <= b.m * (1 + 1e-3)

    def test_beats_uniform_fekete_candidate(self):
        mesh = build_mesh("interval:-1,1", 41)
        b = enumerate_basis(1, 2)
        mu = optimal_measure(mesh, b, 2, W1, tol=1e-3)
        ld_opt = logdet_gram(gram_matrix(b, 2, W1, mu))
        fk = brute_force_fekete(mesh, b, W1)
        # nu_n side computed exactly via the uniform-measure det identity
        lw = weighted_vdm_logabs(b, 2, W1, fk)
        ld_fk = 2 * lw.log_abs - b.m * math.log(b.m)
        assert ld_opt >= ld_fk - math.log(1 + 10e-3)

    def test_beats_random_measures(self):
        rng = np.random.default_rng(15)
        mesh = build_mesh("interval:-1,1", 21)
        b = enumerate_basis(1, 2)
        tol = 1e-3
        mu = optimal_measure(mesh, b, 2, W1, tol=tol)
        ld_opt = logdet_gram(gram_matrix(b, 2, W1, mu))
        for _ in range(50):
            probs = rng.dirichlet(np.ones(len(mesh)))
            mu_r = DiscreteMeasure(atoms=mesh.points, probs=probs)
            assert logdet_gram(gram_matrix(b, 2, W1, mu_r)) <= ld_opt + math.log(1 + 10 * tol)

    def test_max_iter_error_carries_ratio(self):
        mesh = build_mesh("interval:-1,1", 41)
        b = enumerate_basis(1, 2)
        with pytest.raises(RuntimeError, match="max B_n/m_n"):
            optimal_measure(mesh, b, 2, W1, tol=1e-12, max_iter=3)

    def test_degenerate_weight(self):
        mesh = build_mesh("interval:-1,1", 9)
        q = np.full(9, np.inf)
        q[0] = 0.0
        w = make_weight("grid", grid_points=mesh.points, grid_q=q)
        b = enumerate_basis(1, 1)
        with pytest.raises(ValueError, match="degenerate"):
            optimal_measure(mesh, b, 1, w)
