import itertools
import math

import numpy as np
import pytest

import oracles
from weakint import (
    FiniteAlphabet,
    GibbsModel,
    Kernel,
    LWeight,
    NumericalError,
    Statistic,
    expectation_oracle,
    gibbs_measure,
    gibbs_true_measure,
    make_free_energy,
    make_gibbs_kl,
    make_l2_reg_delta,
    make_l_statistic,
    make_mean,
    make_smoothed_median,
    make_u_statistic,
    make_v_statistic,
    seminorms_exact,
    seminorms_probe,
)
from weakint.statlib import (
    CONSTANT_ONE,
    MARGIN_LOSSES,
    NAMED_KERNELS,
    random_gibbs_model,
    smoothed_median_weight,
    solve_regularized_erm,
)

BIN = FiniteAlphabet([0.0, 1.0], [0.5, 0.5])
TRI = FiniteAlphabet([0.0, 0.3, 1.0], [0.25, 0.25, 0.5])
RNG = np.random.default_rng(2024)


def within_declared(f, alphabet):
    sn = seminorms_exact(f, alphabet)
    a_n, b_n = f.params.bounds(f.arity)
    return sn.m_value <= a_n + 1e-10 and sn.j_value <= b_n + 1e-10


def assert_symmetric(f, d=None, trials=100):
    rng = np.random.default_rng(7)
    x = rng.random(f.arity) if d is None else d.sample(rng, f.arity)
    v = f(x)
    for _ in range(trials):
        assert f(x[rng.permutation(f.arity)]) == pytest.approx(v, abs=1e-12)


class TestMean:
    def test_values(self):
        f = make_mean(5)
        assert f(np.zeros(5)) == 0.0
        assert f(np.ones(5)) == 1.0

    def test_seminorms(self):
        sn = seminorms_exact(make_mean(4), BIN)
        assert sn.m_value == pytest.approx(0.25) and sn.j_value == pytest.approx(0, abs=1e-14)

    def test_patched(self):
        f = make_mean(6)
        x, y = RNG.random(6), RNG.random(6)
        np.testing.assert_allclose(f.patched(x, y), Statistic(6, f.func).patched(x, y), atol=1e-15)

    def test_moments(self):
        assert make_mean(4).moments(TRI) == pytest.approx((TRI.mean(), TRI.var() / 4))

    def test_symmetric(self):
        assert_symmetric(make_mean(8))


class TestKernels:
    def test_range_checked(self):
        with pytest.raises(ValueError):
            Kernel(2, lambda u, v: 2 * u + v)

    def test_order(self):
        with pytest.raises(ValueError):
            Kernel(0, lambda: 0.0)

    def test_named(self):
        assert set(NAMED_KERNELS) >= {"var", "prod", "absdiff"}


class TestUV:
    def test_v_m1_is_mean_of_kernel(self):
        k = Kernel(1, lambda u: u * u)
        f = make_v_statistic(k, 1, 4)
        x = RNG.random(4)
        assert f(x) == pytest.approx(np.mean(x**2))
        assert seminorms_exact(f, TRI).j_value == pytest.approx(0, abs=1e-14)

    def test_constant_kernel(self):
        k = Kernel(2, lambda u, v: 0.3 + 0 * u * v)
        assert make_v_statistic(k, 2, 4)(RNG.random(4)) == pytest.approx(0.3)
        zero = Kernel(2, lambda u, v: 0 * u)
        assert make_u_statistic(zero, 2, 4)(RNG.random(4)) == 0.0

    def test_v_includes_repeats(self):
        f = make_v_statistic(NAMED_KERNELS["prod"], 2, 3)
        x = np.array([0.2, 0.5, 0.9])
        assert f(x) == pytest.approx(np.mean(x) ** 2)

    def test_m_too_large(self):
        with pytest.raises(ValueError):
            make_v_statistic(NAMED_KERNELS["prod"], 2, 2)
        with pytest.raises(ValueError):
            make_u_statistic(NAMED_KERNELS["prod"], 3, 3)

    def test_order_mismatch(self):
        with pytest.raises(ValueError):
            make_u_statistic(NAMED_KERNELS["prod"], 3, 5)

    def test_kernel_provider(self):
        prov = lambda j: NAMED_KERNELS["prod"] if j[0] <= j[1] else NAMED_KERNELS["absdiff"]
        f = make_v_statistic(None, 2, 3, kernel_provider=prov)
        x = np.array([0.1, 0.6, 0.3])
        want = np.mean([x[i] * x[j] if i <= j else abs(x[i] - x[j]) for i in range(3) for j in range(3)])
        assert f(x) == pytest.approx(want)
        assert within_declared(f.with_params(f.params), TRI)

    def test_u_var_is_sample_variance(self):
        for n in (3, 7, 20):
            f = make_u_statistic(NAMED_KERNELS["var"], 2, n)
            x = RNG.random(n)
            assert abs(f(x) - oracles.sample_variance(list(x))) <= 1e-12

    def test_u_unbiased(self):
        p = FiniteAlphabet([0.0, 1.0], [0.3, 0.7])
        for name in ("var", "prod", "absdiff"):
            k = NAMED_KERNELS[name]
            u = make_u_statistic(k, 2, 3)
            e_kappa = sum(p.probs[i] * p.probs[j] * float(k.eval(p.points[i], p.points[j])) for i in range(2) for j in range(2))
            assert expectation_oracle(u, p) == pytest.approx(e_kappa, abs=1e-14)

    def test_u_m3(self):
        k = Kernel(3, lambda a, b, c: a * b * c)
        f = make_u_statistic(k, 3, 4)
        x = np.array([0.1, 0.5, 0.7, 0.9])
        want = np.mean([x[i] * x[j] * x[l] for i, j, l in itertools.combinations(range(4), 3)])
        assert f(x) == pytest.approx(want)

    @pytest.mark.parametrize("name", ["var", "prod", "absdiff"])
    def test_u_patched(self, name):
        f = make_u_statistic(NAMED_KERNELS[name], 2, 9)
        x, y = RNG.random(9), RNG.random(9)
        np.testing.assert_allclose(f.patched(x, y), Statistic(9, f.func).patched(x, y), atol=1e-14)

    def test_u_patched_asymmetric(self):
        k = Kernel(2, lambda u, v: u * (1 - v), symmetric=False)
        f = make_u_statistic(k, 2, 6)
        x, y = RNG.random(6), RNG.random(6)
        np.testing.assert_allclose(f.patched(x, y), Statistic(6, f.func).patched(x, y), atol=1e-14)

    def test_declared(self):
        assert make_v_statistic(NAMED_KERNELS["prod"], 2, 3).params.a == 4
        assert make_v_statistic(NAMED_KERNELS["prod"], 2, 3).params.b == 8
        assert make_u_statistic(NAMED_KERNELS["prod"], 2, 3).params.b == 16

    @pytest.mark.parametrize("n", [3, 4])
    @pytest.mark.parametrize("name", ["var", "prod", "absdiff"])
    def test_seminorms_within_declared(self, name, n):
        assert within_declared(make_u_statistic(NAMED_KERNELS[name], 2, n), TRI)
        assert within_declared(make_v_statistic(NAMED_KERNELS[name], 2, n), TRI)

    def test_symmetric(self):
        assert_symmetric(make_u_statistic(NAMED_KERNELS["var"], 2, 8))
        assert_symmetric(make_v_statistic(NAMED_KERNELS["prod"], 2, 6))


class TestL:
    def test_constant_weight_is_mean(self):
        for n in (2, 5, 31):
            x = RNG.random(n)
            assert abs(make_l_statistic(CONSTANT_ONE, n)(x) - make_mean(n)(x)) <= 1e-15

    def test_constant_input(self):
        w = smoothed_median_weight(0.2)
        f = make_l_statistic(w, 6)
        want = 0.4 * np.sum(w.F(np.arange(1, 7) / 6)) / 6
        assert f(np.full(6, 0.4)) == pytest.approx(want)

    def test_weight_checks(self):
        with pytest.raises(ValueError):
            LWeight(lambda t: 2 * t, 1.0, 2.0)
        with pytest.raises(ValueError):
            LWeight(lambda t: np.sin(10 * t), 1.0, 1.0)

    def test_smoothed_median_shape(self):
        z = 0.15
        w = smoothed_median_weight(z)
        h = 0.5 - z
        assert w.F(z) == 0.0
        assert w.F(0.5) == pytest.approx(1 / h)
        assert w.F(0.3) == pytest.approx((0.3 - z) / h**2)
        assert w.F(0.7) == pytest.approx((1 - 0.7 - z) / h**2)
        assert w.F(0.95) == 0.0 and w.F(0.05) == 0.0
        t = RNG.random(100)
        np.testing.assert_allclose(w.F(t), w.F(1 - t), atol=1e-12)
        assert w.sup_norm == pytest.approx(1 / h) and w.lip_const == pytest.approx(h**-2)

    def test_probed_lipschitz_matches(self):
        w = smoothed_median_weight(0.1)
        s = np.linspace(0, 1, 100_001)
        slopes = np.abs(np.diff(w.F(s))) / np.diff(s)
        assert slopes.max() == pytest.approx(w.lip_const, abs=1e-6)

    @pytest.mark.parametrize("zeta", [0.0, 0.5, -0.1])
    def test_zeta_range(self, zeta):
        with pytest.raises(ValueError):
            make_smoothed_median(zeta, 5)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            make_l_statistic(CONSTANT_ONE, 1)

    def test_patched(self):
        f = make_smoothed_median(0.1, 25)
        x = RNG.random(25)
        y = RNG.random(25)
        y[:5] = x[3]  # ties with the base
        np.testing.assert_allclose(f.patched(x, y), Statistic(25, f.func).patched(x, y), atol=1e-13)

    def test_ties(self):
        f = make_smoothed_median(0.1, 6)
        x = np.array([0.2, 0.2, 0.5, 0.5, 0.5, 0.9])
        assert f(x) == f(x[::-1])

    @pytest.mark.parametrize("n", [3, 4])
    def test_within_declared(self, n):
        assert within_declared(make_smoothed_median(0.1, n), TRI)
        assert within_declared(make_smoothed_median(0.3, n), TRI)
        assert within_declared(make_l_statistic(CONSTANT_ONE, n), TRI)

    def test_refined_bounds(self):
        """|D| <= |F|_inf |y - y'| / n and |DD| <= Lip(F) diam(overlap) / n^2."""
        n = 3
        w = smoothed_median_weight(0.1)
        f = make_l_statistic(w, n)
        pts = list(TRI.points)
        vals = oracles.values_table(f, pts, n)
        K = len(pts)
        for t in vals:
            for k in range(n):
                for y, y2 in itertools.product(range(K), repeat=2):
                    a, b = list(t), list(t)
                    a[k], b[k] = y, y2
                    d = abs(vals[tuple(a)] - vals[tuple(b)])
                    assert d <= w.sup_norm * abs(pts[y] - pts[y2]) / n + 1e-12
                for l in range(n):
                    if l == k:
                        continue
                    for y, y2, z, z2 in itertools.product(range(K), repeat=4):
                        def at(yy, zz):
                            c = list(t)
                            c[k], c[l] = yy, zz
                            return vals[tuple(c)]

                        dd = abs((at(y, z) - at(y2, z)) - (at(y, z2) - at(y2, z2)))
                        lo = max(min(pts[y], pts[y2]), min(pts[z], pts[z2]))
                        hi = min(max(pts[y], pts[y2]), max(pts[z], pts[z2]))
                        assert dd <= w.lip_const * max(0.0, hi - lo) / n**2 + 1e-12

    def test_symmetric(self):
        assert_symmetric(make_smoothed_median(0.2, 11))


def two_model():
    return GibbsModel([1.0, 2.0], [[0.0, 1.0], [1.0, 0.5]], 1.0, BIN)


class TestGibbs:
    def test_validation(self):
        with pytest.raises(ValueError):
            GibbsModel([1.0, 0.0], [[0, 1], [1, 0]], 1.0, BIN)
        with pytest.raises(ValueError):
            GibbsModel([1.0, 1.0], [[0, 1.5], [1, 0]], 1.0, BIN)
        with pytest.raises(ValueError):
            GibbsModel([1.0], [[0, 1], [1, 0]], 1.0, BIN)

    def test_beta_zero(self):
        m = random_gibbs_model(4, TRI, 0.0, 1)
        pi = gibbs_measure(m, [0.0, 1.0, 0.3])
        np.testing.assert_allclose(pi, m.rho / m.rho.sum(), atol=1e-15)
        assert make_free_energy(m, 3)(np.zeros(3)) == pytest.approx(math.log(m.rho.sum()))
        assert make_gibbs_kl(m, TRI, 3)(np.ones(3)) == pytest.approx(0.0, abs=1e-15)

    def test_single_model(self):
        m = GibbsModel([0.7], [[0.2, 0.9]], 1.3, BIN)
        assert gibbs_measure(m, [0.0, 1.0]) == pytest.approx([1.0])
        f = make_free_energy(m, 2)
        assert f([0.0, 1.0]) == pytest.approx(math.log(0.7) - 1.3 * 0.55)
        assert seminorms_exact(f, BIN).j_value == pytest.approx(0.0, abs=1e-14)

    def test_two_model_hand(self):
        m = two_model()
        pi = gibbs_measure(m, [1.0, 1.0])
        w1, w2 = math.exp(-1.0), 2 * math.exp(-0.5)
        assert pi == pytest.approx([w1 / (w1 + w2), w2 / (w1 + w2)], abs=1e-15)
        true = gibbs_true_measure(m, BIN)
        w1, w2 = math.exp(-0.5), 2 * math.exp(-0.75)
        assert true == pytest.approx([w1 / (w1 + w2), w2 / (w1 + w2)], abs=1e-15)

    def test_normalized_and_stable(self):
        m = random_gibbs_model(6, TRI, 800.0, 2)
        pi = gibbs_measure(m, [0.0, 0.3, 1.0, 1.0])
        assert np.all(np.isfinite(pi)) and np.all(pi >= 0)
        assert abs(pi.sum() - 1) <= 1e-12
        assert np.isfinite(make_free_energy(m, 4)([0.0, 0.3, 1.0, 1.0]))

    def test_kl_zero_at_matching_sample(self):
        m = random_gibbs_model(3, BIN, 1.5, 4)
        assert make_gibbs_kl(m, BIN, 2)([0.0, 1.0]) <= 1e-12

    def test_kl_nonnegative(self):
        m = random_gibbs_model(4, TRI, 2.0, 3)
        kl = make_gibbs_kl(m, TRI, 4)
        X = TRI.sample(np.random.default_rng(0), (200, 4))
        assert np.all(kl.evaluate_batch(X) >= 0)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_free_energy_within_declared(self, beta):
        m = random_gibbs_model(3, BIN, beta, 0)
        assert within_declared(make_free_energy(m, 2), BIN)
        m3 = random_gibbs_model(4, TRI, beta, 1)
        assert within_declared(make_free_energy(m3, 3), TRI)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_kl_within_declared(self, beta):
        m = random_gibbs_model(3, TRI, beta, 5)
        assert within_declared(make_gibbs_kl(m, TRI, 3), TRI)

    def test_declared(self):
        m = random_gibbs_model(2, BIN, 2.0, 0)
        p = make_free_energy(m, 3).params
        assert (p.a, p.b) == (2.0, 8.0)
        p = make_gibbs_kl(m, BIN, 3).params
        assert (p.a, p.b) == (20.0, 120.0)

    def test_symmetric(self):
        m = random_gibbs_model(3, TRI, 1.0, 0)
        assert_symmetric(make_free_energy(m, 6), TRI)
        assert_symmetric(make_gibbs_kl(m, TRI, 6), TRI)


SUR = FiniteAlphabet(np.linspace(-1, 1, 9), np.full(9, 1 / 9))


class TestL2Delta:
    def test_squared_closed_form(self):
        X = RNG.uniform(-1, 1, (4, 7, 1))
        lam = 0.3
        W = solve_regularized_erm(X, MARGIN_LOSSES["squared"], lam)
        want = X[..., 0].mean(1) / ((X[..., 0] ** 2).mean(1) + lam)
        np.testing.assert_allclose(W[:, 0], want, atol=1e-10)

    def test_logistic_stationary(self):
        X = RNG.uniform(-1, 1, (3, 6, 2)) / 2
        loss = MARGIN_LOSSES["logistic"]
        W = solve_regularized_erm(X, loss, 0.2)
        grad = np.einsum("bn,bnd->bd", loss.deriv(np.einsum("bnd,bd->bn", X, W)), X) / 6 + 0.4 * W
        assert np.abs(grad).max() <= 1e-10

    def test_losses_normalized(self):
        for loss in MARGIN_LOSSES.values():
            assert float(loss.value(0.0)) == pytest.approx(1.0)
            t = np.linspace(-3, 3, 601)
            second = np.diff(loss.deriv(t)) / np.diff(t)
            assert second.max() <= loss.curvature + 1e-9 and second.min() >= -1e-12

    def test_nonconvergence(self):
        f = make_l2_reg_delta(1, "logistic", 0.5, 4, SUR, max_iter=1)
        with pytest.raises(NumericalError):
            f(np.array([0.5, -0.5, 0.25, 1.0]))

    def test_regularizer_dominates(self):
        flat = make_l2_reg_delta(1, "logistic", 0.99, 6, SUR)
        x = SUR.sample(np.random.default_rng(1), 6)
        assert abs(flat(x)) < 0.15

    def test_symmetric(self):
        assert_symmetric(make_l2_reg_delta(1, "logistic", 0.5, 6, SUR), SUR, trials=20)

    def test_probe_decreases_with_lambda(self):
        ms = [seminorms_probe(make_l2_reg_delta(1, "logistic", lam, 6, SUR), SUR, 300, 0).m_value for lam in (0.1, 0.5, 0.9)]
        assert ms[0] > ms[1] > ms[2]

    def test_no_declared_params(self):
        assert make_l2_reg_delta(1, "squared", 0.5, 3, SUR).params is None

    def test_input_checks(self):
        with pytest.raises(ValueError):
            make_l2_reg_delta(1, "squared", 1.5, 3, SUR)
        f = make_l2_reg_delta(1, "squared", 0.5, 3, SUR)
        with pytest.raises(ValueError):
            f(np.array([2.0, 0.0, 0.0]))

    def test_two_dimensional(self):
        pts = np.array([[0.0, 0.0], [0.6, 0.0], [0.0, -0.8], [0.5, 0.5]])
        sur = FiniteAlphabet(pts, np.full(4, 0.25))
        f = make_l2_reg_delta(2, "logistic", 0.4, 3, sur)
        x = pts[[1, 2, 3]]
        assert np.isfinite(f(x))
        assert f(x) == pytest.approx(f(x[[2, 0, 1]]), abs=1e-12)
