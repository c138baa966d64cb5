import math

import numpy as np
import pytest

from feketelab import (
    DiscreteMeasure,
    PolyProbe,
    SingularGramError,
    derivative_experiment,
    concavity_scan,
    enumerate_basis,
    f_n,
    fn_prime_direct,
    fn_prime_fd,
    gram_matrix,
    logdet_gram,
    make_eps_schedule,
    make_weight,
    perturbed_weight,
    probe_from_spec,
)

W1 = make_weight("constant")


def _generic_measure(rng, d, s):
    atoms = rng.uniform(-1, 1, (s, d)) + 1j * rng.uniform(-1, 1, (s, d))
    return DiscreteMeasure(atoms=atoms, probs=rng.dirichlet(np.ones(s)))


class TestProbes:
    def test_named_probes(self):
        pts = np.array([[0.5 + 0.25j]])
        assert np.isclose(probe_from_spec("const:3").eval(pts)[0], 3.0)
        assert np.isclose(probe_from_spec("re").eval(pts)[0], 0.5)
        assert np.isclose(probe_from_spec("re2").eval(pts)[0], 0.25)
        assert np.isclose(probe_from_spec("abs2").eval(pts)[0], 0.3125)

    def test_probe_values_are_real(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(10, 1)) + 1j * rng.normal(size=(10, 1))
        for spec in ("re", "re2", "abs2"):
            vals = probe_from_spec(spec).eval(pts)
            assert vals.dtype.kind == "f"

    def test_realness_validation(self):
        with pytest.raises(ValueError, match="conj"):
            PolyProbe(coeffs=(((1,), (0,), 1.0 + 0j),))  # missing conjugate partner

    def test_unknown_probe(self):
        with pytest.raises(ValueError):
            probe_from_spec("sin")


class TestPerturbedWeight:
    def test_q_shift(self):
        w = make_weight("gaussian:1")
        u = probe_from_spec("re")
        wt = perturbed_weight(w, u, 0.5)
        pts = np.array([[0.3]])
        assert np.isclose(wt.q_values(pts)[0], 0.09 + 0.5 * 0.3)

    def test_t_zero_is_identity(self):
        w = make_weight("gaussian:2")
        wt = perturbed_weight(w, probe_from_spec("abs2"), 0.0)
        pts = np.array([[0.7 + 0.2j]])
        assert np.isclose(wt.q_values(pts)[0], w.q_values(pts)[0])


class TestFn:
    def test_value_at_zero(self):
        rng = np.random.default_rng(1)
        b = enumerate_basis(1, 2)
        mu = _generic_measure(rng, 1, 5)
        val = f_n(b, 2, W1, probe_from_spec("re"), mu, 0.0)
        ld = logdet_gram(gram_matrix(b, 2, W1, mu))
        assert np.isclose(val, -ld / (2 * b.l))

    def test_constant_u_exactness(self):
        rng = np.random.default_rng(2)
        for d, n in [(1, 3), (2, 2)]:
            b = enumerate_basis(d, n)
            mu = _generic_measure(rng, d, b.m + 2)
            u = probe_from_spec("const:0.7", d=d)
            for t in (-0.8, 0.3, 1.1):
                lhs = f_n(b, n, W1, u, mu, t)
                rhs = f_n(b, n, W1, u, mu, 0.0) + (d + 1) / d * 0.7 * t
                assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))

    def test_singular_raises(self):
        b = enumerate_basis(1, 2)
        mu = DiscreteMeasure.uniform([[0.0], [1.0]])
        with pytest.raises(SingularGramError):
            f_n(b, 2, W1, probe_from_spec("re"), mu, 0.0)

    def test_affine_for_uniform_atomic(self):
        rng = np.random.default_rng(3)
        b = enumerate_basis(1, 3)
        pts = rng.uniform(-1, 1, (b.m, 1)) + 1j * rng.uniform(-1, 1, (b.m, 1))
        mu = DiscreteMeasure.uniform(pts)
        u = probe_from_spec("re")
        slope = 2.0 * float(np.mean(u.eval(pts)))
        f0 = f_n(b, 3, W1, u, mu, 0.0)
        for t in np.linspace(-1, 1, 9):
            assert abs(f_n(b, 3, W1, u, mu, float(t)) - (f0 + slope * t)) <= 1e-9


class TestDerivative:
    def test_constant_probe(self):
        rng = np.random.default_rng(4)
        b = enumerate_basis(1, 2)
        mu = _generic_measure(rng, 1, 6)
        val = fn_prime_direct(b, 2, W1, probe_from_spec("const:1.5"), mu)
        assert np.isclose(val, 2 * 1.5, atol=1e-10)

    def test_uniform_atomic_mean_formula(self):
        rng = np.random.default_rng(5)
        b = enumerate_basis(2, 1)
        pts = rng.uniform(-1, 1, (b.m, 2)) + 1j * rng.uniform(-1, 1, (b.m, 2))
        mu = DiscreteMeasure.uniform(pts)
        u = probe_from_spec("re", d=2)
        want = 1.5 * float(np.mean(u.eval(pts)))
        assert np.isclose(fn_prime_direct(b, 1, W1, u, mu), want, atol=1e-10)

    def test_fd_zero_probe(self):
        rng = np.random.default_rng(6)
        b = enumerate_basis(1, 2)
        mu = _generic_measure(rng, 1, 5)
        assert np.isclose(fn_prime_fd(b, 2, W1, probe_from_spec("const:0"), mu), 0.0)

    def test_fd_matches_direct(self):
        rng = np.random.default_rng(7)
        b = enumerate_basis(1, 2)
        mu = _generic_measure(rng, 1, 5)
        u = probe_from_spec("re2")
        direct = fn_prime_direct(b, 2, W1, u, mu)
        fd = fn_prime_fd(b, 2, W1, u, mu, h=1e-4)
        assert abs(direct - fd) <= 1e-6 * max(1.0, abs(direct))

    def test_richardson_consistency(self):
        rng = np.random.default_rng(8)
        b = enumerate_basis(1, 3)
        mu = _generic_measure(rng, 1, 7)
        u = probe_from_spec("abs2")
        direct = fn_prime_direct(b, 3, W1, u, mu)
        err_h = abs(fn_prime_fd(b, 3, W1, u, mu, h=1e-2) - direct)
        err_h2 = abs(fn_prime_fd(b, 3, W1, u, mu, h=5e-3) - direct)
        # central differences: quartering of the error when halving h
        assert err_h2 <= err_h / 4 * 1.5

    def test_bad_h(self):
        b = enumerate_basis(1, 1)
        mu = DiscreteMeasure.uniform([[0.0], [1.0]])
        with pytest.raises(ValueError):
            fn_prime_fd(b, 1, W1, probe_from_spec("re"), mu, h=0.0)


class TestConcavity:
    def test_affine_case_zero_second_diffs(self):
        rng = np.random.default_rng(9)
        b = enumerate_basis(1, 2)
        pts = rng.uniform(-1, 1, (b.m, 1)) + 1j * rng.uniform(-1, 1, (b.m, 1))
        mu = DiscreteMeasure.uniform(pts)
        rep = concavity_scan(b, 2, W1, probe_from_spec("re"), mu, np.linspace(-1, 1, 21))
        assert rep.concave
        assert np.max(np.abs(rep.second_diffs)) <= 1e-8

    def test_constant_probe_zero_second_diffs(self):
        rng = np.random.default_rng(10)
        b = enumerate_basis(1, 2)
        mu = _generic_measure(rng, 1, 6)
        rep = concavity_scan(b, 2, W1, probe_from_spec("const:2"), mu, np.linspace(-1, 1, 11))
        assert np.max(np.abs(rep.second_diffs)) <= 1e-8

    def test_generic_six_atom_measure(self):
        rng = np.random.default_rng(11)
        b = enumerate_basis(1, 2)
        mu = _generic_measure(rng, 1, 6)
        rep = concavity_scan(b, 2, W1, probe_from_spec("re"), mu, np.linspace(-1, 1, 21))
        assert rep.concave
        # strictly concave here: interior second differences negative
        assert np.median(rep.second_diffs) < 0

    def test_grid_validation(self):
        b = enumerate_basis(1, 1)
        mu = DiscreteMeasure.uniform([[0.0], [1.0]])
        with pytest.raises(ValueError):
            concavity_scan(b, 1, W1, probe_from_spec("re"), mu, [0.0, 1.0])
        with pytest.raises(ValueError):
            concavity_scan(b, 1, W1, probe_from_spec("re"), mu, [0.0, 1.0, 0.5])


class TestDerivativeExperiment:
    def test_interval_re2(self):
        rows = derivative_experiment(
            "interval:-1,1", "constant", "re2", [4, 8, 12],
            make_eps_schedule("zero"), resolution=200,
        )
        # g'(0) = 2 * arcsine second moment = 2 * 1/2 = 1
        assert np.isclose(rows[0]["g_prime_ref"], 1.0, atol=1e-10)
        gaps = [r["gap"] for r in rows]
        assert gaps[-1] < gaps[0]
        assert gaps[-1] < 0.15

    def test_constant_probe_exact_all_n(self):
        rows = derivative_experiment(
            "interval:-1,1", "constant", "const:1", [2, 3, 4],
            make_eps_schedule("zero"), resolution=60,
        )
        for r in rows:
            assert np.isclose(r["fprime_direct"], 2.0, atol=1e-9)
            assert np.isclose(r["g_prime_ref"], 2.0, atol=1e-10)

    def test_circle_re_symmetry(self):
        rows = derivative_experiment(
            "circle", "constant", "re", [4, 8], make_eps_schedule("zero"), resolution=120,
        )
        assert np.isclose(rows[0]["g_prime_ref"], 0.0, atol=1e-10)
        assert all(abs(r["fprime_direct"]) < 0.05 for r in rows)

    def test_missing_reference(self):
        with pytest.raises(ValueError, match="reference"):
            derivative_experiment(
                "square:1", "constant", "re", [2], make_eps_schedule("zero"), resolution=20,
            )
