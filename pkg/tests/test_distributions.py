"""Distribution specs, samplers, densities, and serialization."""

import numpy as np
import pytest

from renyivar import (
    AlphaOrder,
    BetaProduct,
    BetaProductSpec,
    EmbeddingSpec,
    Gaussian,
    GaussianSpec,
    JointCorrelatedGaussian,
    ProductOfMarginals,
    Pushforward,
    UnsupportedDensityError,
    distribution_from_config,
)
from renyivar.distributions import RNG_ID


class TestAlphaOrder:
    @pytest.mark.parametrize("bad", [0.0, 1.0, 1e-10, 1.0 - 1e-10, np.inf, np.nan])
    def test_rejects_excluded_orders(self, bad):
        with pytest.raises(ValueError):
            AlphaOrder(bad)

    @pytest.mark.parametrize("good", [-2.0, -0.5, 0.25, 0.5, 0.9, 1.1, 2.0, 50.0])
    def test_accepts_valid_orders(self, good):
        assert float(AlphaOrder(good)) == good

    def test_complement(self):
        assert AlphaOrder(0.3).complement.value == pytest.approx(0.7)


class TestGaussianSpec:
    def test_rejects_asymmetric_covariance(self):
        cov = np.array([[1.0, 0.1], [0.3, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            GaussianSpec(np.zeros(2), cov)

    def test_rejects_non_positive_definite(self):
        cov = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(np.linalg.LinAlgError):
            GaussianSpec(np.zeros(2), cov)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            GaussianSpec(np.zeros(3), np.eye(2))

    def test_precision_inverts_covariance(self):
        cov = np.array([[2.0, 0.5], [0.5, 1.0]])
        spec = GaussianSpec(np.zeros(2), cov)
        assert np.allclose(spec.precision @ cov, np.eye(2), atol=1e-12)


class TestBetaProductSpec:
    def test_rejects_nonpositive_shapes(self):
        with pytest.raises(ValueError):
            BetaProductSpec(np.array([1.0, 0.0]), np.array([1.0, 1.0]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            BetaProductSpec(np.array([1.0]), np.array([1.0, 2.0]))


class TestSampling:
    def test_gaussian_determinism_bytes(self):
        dist = Gaussian.from_moments([0.0], [[1.0]])
        a = dist.sample(3, seed=7)
        b = dist.sample(3, seed=7)
        assert a.data.shape == (3, 1)
        assert a.data.tobytes() == b.data.tobytes()
        assert a.rng_id == RNG_ID
        assert a.seed == 7

    def test_different_seeds_differ(self):
        dist = Gaussian.from_moments([0.0], [[1.0]])
        assert not np.array_equal(dist.sample(5, 1).data, dist.sample(5, 2).data)

    def test_sample_rejects_empty(self):
        with pytest.raises(ValueError):
            Gaussian.from_moments([0.0], [[1.0]]).sample(0, seed=1)

    def test_gaussian_law_five_standard_errors(self):
        mean = np.array([1.0, -2.0])
        cov = np.array([[2.0, 0.6], [0.6, 1.0]])
        n = 100_000
        data = Gaussian(GaussianSpec(mean, cov)).sample(n, seed=123).data
        se_mean = np.sqrt(np.diag(cov) / n)
        assert np.all(np.abs(data.mean(axis=0) - mean) < 5 * se_mean)
        # variance of the sample variance ~ 2 sigma^4 / n for Gaussians
        se_var = np.sqrt(2.0 * np.diag(cov) ** 2 / n)
        assert np.all(np.abs(data.var(axis=0) - np.diag(cov)) < 5 * se_var)

    def test_beta_law(self):
        spec = BetaProductSpec(np.array([2.0, 2.0]), np.array([2.0, 2.0]))
        n = 100_000
        data = BetaProduct(spec).sample(n, seed=5).data
        assert np.all(np.abs(data.mean(axis=0) - 0.5) < 0.01)
        var = 0.25 / 5.0  # a*b / ((a+b)^2 (a+b+1))
        se_var = np.sqrt(2.0) * var / np.sqrt(n)  # crude but conservative at 5x
        assert np.all(np.abs(data.var(axis=0) - var) < 5 * se_var)

    def test_beta_support(self):
        data = BetaProduct.from_shapes([0.6, 3.0], [0.7, 1.0]).sample(2000, 3).data
        assert np.all((data > 0.0) & (data < 1.0))


class TestEmbedding:
    def test_identity_head_is_bitwise(self):
        emb = EmbeddingSpec(4, 50, seed=99)
        base = Gaussian.from_moments(np.zeros(4), np.eye(4))
        push = Pushforward(base, emb)
        batch = push.sample(2, seed=13)
        assert batch.data.shape == (2, 50)
        assert batch.data[:, :4].tobytes() == base.sample(2, seed=13).data.tobytes()

    def test_deterministic_in_seed(self):
        a = EmbeddingSpec(4, 20, seed=1)
        b = EmbeddingSpec(4, 20, seed=1)
        assert np.array_equal(a.affine_matrix, b.affine_matrix)
        assert np.array_equal(a.coeffs, b.coeffs)
        assert np.array_equal(a.indices, b.indices)
        assert np.all((a.indices >= 0) & (a.indices < 4))

    def test_rejects_shrinking_map(self):
        with pytest.raises(ValueError):
            EmbeddingSpec(4, 3, seed=0)

    def test_dimension_check(self):
        emb = EmbeddingSpec(4, 10, seed=0)
        with pytest.raises(ValueError):
            emb.apply(np.zeros((5, 3)))

    def test_pushforward_requires_matching_base(self):
        with pytest.raises(ValueError):
            Pushforward(Gaussian.from_moments([0.0], [[1.0]]), EmbeddingSpec(4, 10, 0))


class TestLogDensity:
    def test_standard_normal_at_zero(self):
        dist = Gaussian.from_moments([0.0], [[1.0]])
        assert dist.log_density(np.zeros(1)) == pytest.approx(-0.5 * np.log(2 * np.pi))

    def test_translation_symmetry(self):
        shifted = Gaussian.from_moments([1.0], [[1.0]])
        standard = Gaussian.from_moments([0.0], [[1.0]])
        diff = shifted.log_density(np.array([1.0])) - standard.log_density(np.zeros(1))
        assert diff == pytest.approx(0.0, abs=1e-14)

    def test_uniform_beta_is_flat(self):
        dist = BetaProduct.from_shapes([1.0], [1.0])
        assert dist.log_density(np.array([0.5])) == pytest.approx(0.0, abs=1e-14)

    def test_beta_outside_support(self):
        dist = BetaProduct.from_shapes([2.0], [3.0])
        assert dist.log_density(np.array([1.5])) == -np.inf
        assert dist.log_density(np.array([0.0])) == -np.inf

    def test_density_integrates_against_samples(self):
        # Monte Carlo check: E_q[exp(-log q)] over the support box is the box volume.
        dist = BetaProduct.from_shapes([2.0, 3.0], [4.0, 2.0])
        data = dist.sample(200_000, seed=8).data
        est = np.exp(-dist.log_density(data)).mean()
        assert est == pytest.approx(1.0, abs=0.02)

    def test_pushforward_has_no_density(self):
        push = Pushforward(
            Gaussian.from_moments(np.zeros(4), np.eye(4)), EmbeddingSpec(4, 8, 1)
        )
        with pytest.raises(UnsupportedDensityError):
            push.log_density(np.zeros(8))


class TestJointCorrelatedGaussian:
    def test_rejects_bad_rho(self):
        with pytest.raises(ValueError):
            JointCorrelatedGaussian(3, 1.0)

    def test_joint_covariance_structure(self):
        joint = JointCorrelatedGaussian(3, 0.4)
        cov = joint.joint_spec.cov
        assert np.allclose(cov[:3, :3], np.eye(3))
        assert np.allclose(cov[:3, 3:], 0.4 * np.eye(3))
        assert joint.pair_split == 3
        assert np.allclose(joint.product_spec.cov, np.eye(6))

    def test_empirical_correlation(self):
        joint = JointCorrelatedGaussian(2, 0.6)
        data = joint.sample(100_000, seed=2).data
        for i in range(2):
            r = np.corrcoef(data[:, i], data[:, 2 + i])[0, 1]
            assert r == pytest.approx(0.6, abs=0.02)

    def test_product_of_marginals_is_independent(self):
        pom = ProductOfMarginals(JointCorrelatedGaussian(2, 0.9))
        data = pom.sample(100_000, seed=4).data
        r = np.corrcoef(data[:, 0], data[:, 2])[0, 1]
        assert abs(r) < 0.02


class TestConfigRoundTrip:
    @pytest.mark.parametrize(
        "config",
        [
            {"type": "gaussian", "mean": [1.0, 2.0], "cov": [[2.0, 0.5], [0.5, 1.0]]},
            {"type": "beta_product", "a": [2.0, 0.7], "b": [1.0, 3.0]},
            {
                "type": "pushforward",
                "base": {"type": "gaussian", "mean": [0.0] * 4, "cov": np.eye(4).tolist()},
                "embedding": {"input_dim": 4, "output_dim": 12, "seed": 3},
            },
            {"type": "joint_correlated_gaussian", "dim": 3, "rho": 0.25},
            {
                "type": "product_of_marginals",
                "joint": {"type": "joint_correlated_gaussian", "dim": 2, "rho": 0.5},
            },
        ],
    )
    def test_round_trip(self, config):
        dist = distribution_from_config(config)
        again = distribution_from_config(dist.to_config())
        assert again.to_config() == dist.to_config()
        # identical sampling streams after a round trip
        assert np.array_equal(dist.sample(4, 9).data, again.sample(4, 9).data)

    def test_unknown_type_rejected(self):
        with pytest.raises(ValueError, match="unknown distribution type"):
            distribution_from_config({"type": "cauchy"})

    def test_source_id_stable(self):
        d = Gaussian.from_moments([0.0], [[1.0]])
        assert d.source_id == Gaussian.from_moments([0.0], [[1.0]]).source_id
        assert d.source_id != Gaussian.from_moments([1.0], [[1.0]]).source_id
