"""Critic classes: evaluation, gradients, clipping, init, checkpoints."""

import numpy as np
import pytest

from renyivar import (
    ExpFamCritic,
    MlpCritic,
    clip_params,
    critic_from_checkpoint,
    critic_to_checkpoint,
    get_statistic,
    init_mlp,
)


def randomize_biases(critic, gen):
    # Zero biases leave pre-activations exactly at the ReLU kink whenever a
    # row dies in the previous layer; there the subgradient convention and a
    # central difference legitimately disagree, so gradchecks jitter biases.
    for b in critic.biases:
        b += 0.1 * gen.standard_normal(b.shape)
    return critic


def finite_difference_check(critic, x, upstream, step=1e-5, tol=1e-5):
    grad = critic.backward(x, upstream)
    worst = 0.0
    for arr, garr in zip(critic.parameters(), grad.arrays):
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + step
            up = float(upstream @ critic.forward(x))
            arr[idx] = orig - step
            down = float(upstream @ critic.forward(x))
            arr[idx] = orig
            fd = (up - down) / (2 * step)
            denom = max(abs(fd), abs(garr[idx]), 1e-6)
            worst = max(worst, abs(fd - garr[idx]) / denom)
    assert worst < tol, f"max relative gradient error {worst}"


class TestMlpForward:
    def test_zero_parameters_give_zero(self):
        critic = MlpCritic(
            [3, 4, 1],
            [np.zeros((3, 4)), np.zeros((4, 1))],
            [np.zeros(4), np.zeros(1)],
        )
        assert np.array_equal(critic.forward(np.ones((5, 3))), np.zeros(5))

    def test_relu_kills_negative_input(self):
        critic = MlpCritic(
            [1, 1, 1],
            [np.array([[1.0]]), np.array([[1.0]])],
            [np.zeros(1), np.zeros(1)],
        )
        assert critic.forward(np.array([[-3.0]]))[0] == 0.0
        assert critic.forward(np.array([[2.0]]))[0] == 2.0

    def test_rejects_wrong_width(self):
        critic = init_mlp([3, 4, 1], seed=0)
        with pytest.raises(ValueError, match="columns"):
            critic.forward(np.zeros((2, 5)))

    def test_output_width_must_be_one(self):
        with pytest.raises(ValueError, match="scalar"):
            init_mlp([3, 4, 2], seed=0)


class TestExpFamCritic:
    def test_beta_statistic_hand_value(self):
        critic = ExpFamCritic(np.array([1.0, 1.0]), get_statistic("beta", 1))
        out = critic.forward(np.array([[0.5]]))
        assert out[0] == pytest.approx(2.0 * np.log(0.5), abs=1e-12)

    def test_statistic_clamps_boundary(self):
        critic = ExpFamCritic(np.array([1.0, 0.0]), get_statistic("beta", 1))
        assert np.isfinite(critic.forward(np.array([[0.0]]))[0])

    def test_linearity_exact_on_dyadic_inputs(self):
        # Dyadic statistics and integer coefficients make every float op
        # exact, so additivity in the coefficients holds bit for bit.
        stat = get_statistic("identity", 3)
        x = np.array([[1.0, 2.0, 4.0], [0.5, 8.0, -2.0]])
        k1 = np.array([1.0, -2.0, 3.0])
        k2 = np.array([4.0, 0.5, -1.0])
        combined = ExpFamCritic(k1 + k2, stat).forward(x)
        split = ExpFamCritic(k1, stat).forward(x) + ExpFamCritic(k2, stat).forward(x)
        assert np.array_equal(combined, split)

    def test_linearity_close_on_generic_inputs(self):
        stat = get_statistic("beta", 2)
        gen = np.random.default_rng(0)
        x = gen.uniform(0.05, 0.95, size=(6, 2))
        k1, k2 = gen.normal(size=4), gen.normal(size=4)
        combined = ExpFamCritic(k1 + k2, stat).forward(x)
        split = ExpFamCritic(k1, stat).forward(x) + ExpFamCritic(k2, stat).forward(x)
        assert np.allclose(combined, split, atol=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ExpFamCritic(np.zeros(3), get_statistic("beta", 2))

    def test_unknown_statistic(self):
        with pytest.raises(ValueError, match="unknown statistic"):
            get_statistic("laplace", 2)


class TestBackward:
    def test_zero_upstream_gives_zero_gradient(self):
        critic = init_mlp([2, 4, 1], seed=1)
        grad = critic.backward(np.ones((3, 2)), np.zeros(3))
        assert all(np.all(g == 0.0) for g in grad.arrays)

    def test_linear_critic_gradient(self):
        critic = MlpCritic([1, 1], [np.array([[2.0]])], [np.zeros(1)])
        grad = critic.backward(np.array([[3.0]]), np.array([1.0]))
        assert grad.arrays[0][0, 0] == 3.0  # d(w*x)/dw = x
        assert grad.arrays[1][0] == 1.0

    def test_expfam_gradient_is_weighted_statistics(self):
        stat = get_statistic("identity", 2)
        critic = ExpFamCritic(np.zeros(2), stat)
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        grad = critic.backward(x, np.array([2.0, -1.0]))
        assert np.array_equal(grad.arrays[0], np.array([-1.0, 0.0]))

    def test_upstream_shape_checked(self):
        critic = init_mlp([2, 4, 1], seed=1)
        with pytest.raises(ValueError, match="upstream"):
            critic.backward(np.ones((3, 2)), np.zeros(4))

    @pytest.mark.parametrize("seed", range(10))
    def test_two_hidden_layer_finite_differences(self, seed):
        gen = np.random.default_rng(seed)
        critic = randomize_biases(init_mlp([3, 4, 4, 1], seed=seed + 100), gen)
        x = gen.standard_normal((8, 3))
        finite_difference_check(critic, x, gen.standard_normal(8))

    @pytest.mark.parametrize("seed", range(5))
    def test_expfam_finite_differences(self, seed):
        gen = np.random.default_rng(seed)
        critic = ExpFamCritic(gen.normal(size=4), get_statistic("beta", 2))
        x = gen.uniform(0.1, 0.9, size=(6, 2))
        finite_difference_check(critic, x, gen.standard_normal(6))


class TestClipping:
    def test_within_bound_unchanged(self):
        critic = init_mlp([2, 4, 1], seed=3)
        before = [p.copy() for p in critic.parameters()]
        clip_params(critic, 10.0)
        assert all(np.array_equal(b, p) for b, p in zip(before, critic.parameters()))

    def test_out_of_bound_clipped(self):
        critic = MlpCritic([1, 1], [np.array([[10.0]])], [np.array([-7.0])])
        clip_params(critic, 2.0)
        assert critic.weights[0][0, 0] == 2.0
        assert critic.biases[0][0] == -2.0

    def test_idempotent_bitwise(self):
        critic = init_mlp([2, 8, 1], seed=4)
        for p in critic.parameters():
            p *= 100.0
        clip_params(critic, 0.3)
        once = [p.copy() for p in critic.parameters()]
        clip_params(critic, 0.3)
        assert all(
            a.tobytes() == b.tobytes() for a, b in zip(once, critic.parameters())
        )

    def test_rejects_nonpositive_bound(self):
        with pytest.raises(ValueError):
            clip_params(init_mlp([1, 2, 1], seed=0), 0.0)


class TestInit:
    def test_deterministic(self):
        a, b = init_mlp([3, 16, 1], seed=9), init_mlp([3, 16, 1], seed=9)
        assert all(
            x.tobytes() == y.tobytes() for x, y in zip(a.parameters(), b.parameters())
        )

    def test_biases_zero(self):
        critic = init_mlp([3, 16, 8, 1], seed=0)
        assert all(np.all(b == 0.0) for b in critic.biases)

    def test_weight_variance_matches_uniform_limit(self):
        critic = init_mlp([256, 256, 1], seed=17)
        w = critic.weights[0]
        target = 2.0 / (256 + 256)  # (2 * limit)^2 / 12 with the fan-based limit
        assert abs(w.var() - target) / target < 0.2
        limit = np.sqrt(6.0 / 512)
        assert np.max(np.abs(w)) <= limit


class TestLipschitzSanity:
    def test_clipped_network_bound(self):
        # With the bound below 1, (bound * width)^depth dominates the network's
        # true l1-Lipschitz constant; a wiring bug (e.g. a lost clip or an
        # extra scale) would overshoot it.
        bound, width, depth = 0.5, 4, 2
        critic = init_mlp([3, width, width, 1], seed=5)
        for p in critic.parameters():
            p *= 10.0
        clip_params(critic, bound)
        gen = np.random.default_rng(6)
        factor = (bound * width) ** depth
        for _ in range(50):
            x, y = gen.standard_normal(3), gen.standard_normal(3)
            lhs = abs(
                critic.forward(x[None, :])[0] - critic.forward(y[None, :])[0]
            )
            assert lhs <= factor * np.sum(np.abs(x - y)) + 1e-12


class TestCheckpoints:
    def test_mlp_round_trip_bitwise(self):
        critic = init_mlp([3, 5, 1], seed=11, param_bound=2.0)
        again = critic_from_checkpoint(critic_to_checkpoint(critic))
        assert again.layer_dims == critic.layer_dims
        assert again.param_bound == critic.param_bound
        x = np.random.default_rng(0).standard_normal((4, 3))
        assert np.array_equal(critic.forward(x), again.forward(x))

    def test_expfam_round_trip(self):
        critic = ExpFamCritic(np.array([0.5, -1.5]), get_statistic("beta", 1))
        again = critic_from_checkpoint(critic_to_checkpoint(critic))
        assert isinstance(again, ExpFamCritic)
        assert np.array_equal(again.delta_kappa, critic.delta_kappa)
        assert again.statistic.name == "beta"

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="checkpoint"):
            critic_from_checkpoint({"kind": "transformer"})
