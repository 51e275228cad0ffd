"""The empirical objective, its gradients, and its population form."""

import mpmath
import numpy as np
import pytest

from renyivar import (
    AlphaOrder,
    CriticOutputs,
    Gaussian,
    bootstrap_objective_se,
    empirical_objective,
    init_mlp,
    logmeanexp,
    objective_gradient,
    population_objective,
    renyi_gaussian_exact,
)


def naive_objective(on_q, on_p, alpha):
    """Direct, unstabilized evaluation: the independent reference."""
    return float(
        np.log(np.mean(np.exp((alpha - 1.0) * np.asarray(on_q)))) / (alpha - 1.0)
        - np.log(np.mean(np.exp(alpha * np.asarray(on_p)))) / alpha
    )


def mp_objective(on_q, on_p, alpha):
    """Arbitrary-precision evaluation for extreme output magnitudes."""
    with mpmath.workdps(60):
        a = mpmath.mpf(alpha)
        tq = mpmath.log(mpmath.fsum(mpmath.e ** ((a - 1) * mpmath.mpf(v)) for v in on_q) / len(on_q)) / (a - 1)
        tp = mpmath.log(mpmath.fsum(mpmath.e ** (a * mpmath.mpf(v)) for v in on_p) / len(on_p)) / a
        return float(tq - tp)


@pytest.fixture
def gauss_pair():
    return Gaussian.from_moments([1.0], [[1.0]]), Gaussian.from_moments([0.0], [[1.0]])


class TestEmpiricalObjective:
    @pytest.mark.parametrize("alpha", [-0.5, 0.3, 0.5, 2.0])
    def test_zero_outputs_give_zero(self, alpha):
        out = CriticOutputs(np.zeros(7), np.zeros(4))
        value = empirical_objective(out, AlphaOrder(alpha))
        assert value.value == 0.0
        assert value.term_q == value.term_p == 0.0

    @pytest.mark.parametrize("c", [-50.0, -3.0, 0.1, 7.0, 50.0])
    def test_constant_outputs_cancel(self, c):
        out = CriticOutputs(np.full(5, c), np.full(9, c))
        assert abs(empirical_objective(out, AlphaOrder(0.5)).value) < 1e-10

    def test_hand_value(self):
        out = CriticOutputs(np.array([1.0, 2.0]), np.array([0.0]))
        value = empirical_objective(out, AlphaOrder(2.0)).value
        assert value == pytest.approx(np.log((np.e + np.e**2) / 2.0), abs=1e-14)
        assert value == pytest.approx(naive_objective([1, 2], [0], 2.0), abs=1e-12)

    @pytest.mark.parametrize("alpha", [-0.5, 0.25, 0.5, 0.75, 2.0])
    def test_matches_naive_on_moderate_outputs(self, alpha):
        gen = np.random.default_rng(1)
        for _ in range(10):
            on_q, on_p = gen.normal(size=11), gen.normal(size=7)
            stable = empirical_objective(CriticOutputs(on_q, on_p), AlphaOrder(alpha))
            assert stable.value == pytest.approx(
                naive_objective(on_q, on_p, alpha), abs=1e-12
            )
            assert stable.value == pytest.approx(stable.term_q - stable.term_p, abs=1e-12)

    @pytest.mark.parametrize("scale", [600.0, 700.0])
    def test_extreme_outputs_stay_finite(self, scale):
        # The naive form overflows float64 here; max subtraction must not.
        gen = np.random.default_rng(2)
        on_q = gen.uniform(-scale, scale, size=6)
        on_p = gen.uniform(-scale, scale, size=6)
        value = empirical_objective(CriticOutputs(on_q, on_p), AlphaOrder(0.5))
        assert np.isfinite(value.value)
        assert value.value == pytest.approx(mp_objective(on_q, on_p, 0.5), rel=1e-10)

    def test_shift_invariance_sweep(self):
        gen = np.random.default_rng(3)
        on_q, on_p = gen.normal(size=20), gen.normal(size=20)
        base = empirical_objective(CriticOutputs(on_q, on_p), AlphaOrder(0.7)).value
        for c in np.linspace(-50, 50, 11):
            shifted = empirical_objective(
                CriticOutputs(on_q + c, on_p + c), AlphaOrder(0.7)
            ).value
            assert shifted == pytest.approx(base, abs=1e-10)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75, 0.9])
    def test_duality_under_order_reversal(self, alpha):
        gen = np.random.default_rng(4)
        for _ in range(10):
            on_q, on_p = gen.normal(size=8), gen.normal(size=13)
            direct = empirical_objective(CriticOutputs(on_q, on_p), AlphaOrder(alpha)).value
            swapped = empirical_objective(
                CriticOutputs(-on_p, -on_q), AlphaOrder(1.0 - alpha)
            ).value
            assert abs(direct - swapped) < 1e-12

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            CriticOutputs(np.array([]), np.zeros(3))
        with pytest.raises(ValueError):
            CriticOutputs(np.array([np.nan]), np.zeros(3))
        with pytest.raises(ValueError):
            CriticOutputs(np.zeros(3), np.array([np.inf]))

    def test_logmeanexp_empty(self):
        with pytest.raises(ValueError):
            logmeanexp(np.array([]))


class TestObjectiveGradient:
    def test_uniform_at_zero_outputs(self):
        out = CriticOutputs(np.zeros(4), np.zeros(5))
        gq, gp = objective_gradient(out, AlphaOrder(0.5))
        assert np.allclose(gq, 0.25)
        assert np.allclose(gp, -0.2)

    @pytest.mark.parametrize("alpha", [-0.5, 0.3, 0.5, 2.0])
    def test_normalization_identity(self, alpha):
        gen = np.random.default_rng(5)
        for _ in range(5):
            out = CriticOutputs(gen.normal(size=17), gen.normal(size=9))
            gq, gp = objective_gradient(out, AlphaOrder(alpha))
            assert abs(gq.sum() - 1.0) < 1e-12
            assert abs(gp.sum() + 1.0) < 1e-12

    def test_matches_central_finite_differences(self):
        gen = np.random.default_rng(6)
        h = 1e-5
        out = CriticOutputs(gen.normal(size=5), gen.normal(size=5))
        alpha = AlphaOrder(0.5)
        gq, gp = objective_gradient(out, alpha)
        for side, grad in (("q", gq), ("p", gp)):
            for i in range(5):
                vq, vp = out.on_q.copy(), out.on_p.copy()
                target = vq if side == "q" else vp
                target[i] += h
                up = empirical_objective(CriticOutputs(vq, vp), alpha).value
                target[i] -= 2 * h
                down = empirical_objective(CriticOutputs(vq, vp), alpha).value
                fd = (up - down) / (2 * h)
                assert abs(fd - grad[i]) / max(abs(fd), 1e-9) < 1e-6


class TestPopulationObjective:
    def test_zero_critic(self, gauss_pair):
        q, p = gauss_pair
        value = population_objective(lambda x: np.zeros(len(x)), q, p, AlphaOrder(0.5))
        assert abs(value) < 1e-9

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 2.0])
    def test_log_ratio_critic_attains_divergence(self, gauss_pair, alpha):
        q, p = gauss_pair
        g_star = lambda x: q.log_density(x) - p.log_density(x)
        value = population_objective(g_star, q, p, AlphaOrder(alpha), 1e-9)
        assert value == pytest.approx(0.5, abs=1e-6)

    def test_shifted_optimizer_attains_same_value(self, gauss_pair):
        q, p = gauss_pair
        g_star = lambda x: q.log_density(x) - p.log_density(x)
        shifted = population_objective(
            lambda x: g_star(x) + 17.0, q, p, AlphaOrder(0.5), 1e-9
        )
        assert shifted == pytest.approx(0.5, abs=1e-6)

    def test_never_exceeds_divergence(self, gauss_pair):
        # Variational upper bound: no critic beats the true value.  The full
        # 200-critic sweep runs in the acceptance suite.
        q, p = gauss_pair
        gen = np.random.default_rng(7)
        for alpha in (0.5, 2.0):
            bound = renyi_gaussian_exact(q.spec, p.spec, AlphaOrder(alpha))
            for i in range(20):
                critic = init_mlp([1, 8, 1], seed=int(gen.integers(1 << 30)))
                scale = gen.uniform(0.2, 2.0)
                value = population_objective(
                    lambda x: scale * critic.forward(x), q, p, AlphaOrder(alpha), 1e-9
                )
                assert value <= bound + 1e-6

    def test_rejects_high_dimension(self):
        q = Gaussian.from_moments(np.zeros(3), np.eye(3))
        with pytest.raises(ValueError, match="dimension"):
            population_objective(lambda x: np.zeros(len(x)), q, q, AlphaOrder(0.5))


class TestBootstrap:
    def test_positive_and_shrinks_with_n(self):
        gen = np.random.default_rng(8)
        small = CriticOutputs(gen.normal(size=100), gen.normal(size=100))
        big = CriticOutputs(gen.normal(size=10_000), gen.normal(size=10_000))
        se_small = bootstrap_objective_se(small, AlphaOrder(0.5), n_boot=100, seed=1)
        se_big = bootstrap_objective_se(big, AlphaOrder(0.5), n_boot=100, seed=1)
        assert se_small > se_big > 0.0
