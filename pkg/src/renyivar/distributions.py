"""Reference distributions: validated specs, seeded samplers, and log densities.

Every distribution here is immutable after construction and safe to share
across threads; sampling takes the seed by value, so parallel sweeps simply
use disjoint seeds.  All randomness flows through a counter-based Philox
generator whose algorithm identifier is recorded in the sample provenance.
"""

from __future__ import annotations

import hashlib
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

__all__ = [
    "ALPHA_GUARD",
    "RNG_ID",
    "AlphaOrder",
    "GaussianSpec",
    "BetaProductSpec",
    "EmbeddingSpec",
    "SampleBatch",
    "Distribution",
    "Gaussian",
    "BetaProduct",
    "Pushforward",
    "JointCorrelatedGaussian",
    "ProductOfMarginals",
    "UnsupportedDensityError",
    "distribution_from_config",
]

#: Orders closer than this to 0 or 1 are rejected at construction.
ALPHA_GUARD = 1e-8

#: Identifier of the bit generator backing every sampler in this package.
RNG_ID = "numpy-philox4x64"

#: Half-width of quadrature boxes for Gaussian targets, in per-axis standard
#: deviations.  Tail mass beyond 12 sigma is < 1e-30, far below any tolerance
#: used by the oracles.
GAUSSIAN_BOX_SIGMAS = 12.0


class UnsupportedDensityError(ValueError):
    """Raised when a distribution has no density on its ambient space."""


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class AlphaOrder:
    """A validated divergence order: a finite real excluding 0 and 1.

    Values within ``ALPHA_GUARD`` of the excluded points are rejected, since
    the objective's ``1/alpha`` and ``1/(alpha-1)`` prefactors blow up there.
    """

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not np.isfinite(v):
            raise ValueError(f"alpha must be finite, got {self.value!r}")
        if abs(v) <= ALPHA_GUARD or abs(v - 1.0) <= ALPHA_GUARD:
            raise ValueError(
                f"alpha must differ from 0 and 1 by more than {ALPHA_GUARD}; "
                f"got {v!r}"
            )
        object.__setattr__(self, "value", v)

    @property
    def complement(self) -> "AlphaOrder":
        """The order ``1 - alpha`` appearing in the reversal identity."""
        return AlphaOrder(1.0 - self.value)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True, eq=False)
class GaussianSpec:
    """Mean vector and SPD covariance of a multivariate Gaussian.

    The covariance must be symmetric to within 1e-12 and admit a Cholesky
    factorization; the lower factor is cached for samplers and densities.
    """

    mean: np.ndarray
    cov: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        mean = _readonly(np.atleast_1d(self.mean))
        cov = _readonly(np.atleast_2d(self.cov))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"mean (m,) and cov (m, m) required; got {mean.shape} and {cov.shape}"
            )
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValueError("covariance is not symmetric (tolerance 1e-12)")
        chol = _readonly(np.linalg.cholesky(cov))  # raises LinAlgError if not PD
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", chol)

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def precision(self) -> np.ndarray:
        linv = solve_triangular(self.chol, np.eye(self.dim), lower=True)
        return linv.T @ linv

    @property
    def log_det_cov(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def same_as(self, other: "GaussianSpec") -> bool:
        return np.array_equal(self.mean, other.mean) and np.array_equal(
            self.cov, other.cov
        )


@dataclass(frozen=True, eq=False)
class BetaProductSpec:
    """Per-coordinate shape parameters of a product of Beta distributions."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        a = _readonly(np.atleast_1d(self.a))
        b = _readonly(np.atleast_1d(self.b))
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-d arrays of equal length")
        if np.any(a <= 0.0) or np.any(b <= 0.0):
            raise ValueError("Beta shape parameters must be strictly positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.size

    def same_as(self, other: "BetaProductSpec") -> bool:
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)


class EmbeddingSpec:
    """A seeded nonlinear embedding of R^input_dim into R^output_dim.

    The first ``input_dim`` output coordinates copy the input exactly, which
    makes the map one-to-one.  Each remaining coordinate is an affine form
    plus a cos*sin cross term and a quadratic cross term::

        out_i(x) = A_i . x + t_i + c1*cos(c2*x[j1])*sin(c3*x[j2]) + c4*x[j3]*x[j4]

    All affine entries and coefficients ``c1..c4`` are drawn i.i.d. N(0, 1)
    and the coordinate indices uniformly from ``{0..input_dim-1}``, in a fixed
    documented order, from a Philox stream keyed by ``seed``.  A spec is thus
    fully reproducible from ``(input_dim, output_dim, seed)``.
    """

    def __init__(self, input_dim: int, output_dim: int, seed: int) -> None:
        if input_dim < 1:
            raise ValueError("input_dim must be positive")
        if output_dim < input_dim:
            raise ValueError("output_dim must be >= input_dim")
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)
        self.seed = int(seed)
        extra = self.output_dim - self.input_dim
        gen = _rng(self.seed)
        # Draw order: affine matrix, affine shift, trig/quad coefficients, indices.
        self.affine_matrix = _readonly(gen.standard_normal((extra, self.input_dim)))
        self.affine_shift = _readonly(gen.standard_normal(extra))
        self.coeffs = _readonly(gen.standard_normal((extra, 4)))
        idx = gen.integers(0, self.input_dim, size=(extra, 4))
        idx.flags.writeable = False
        self.indices = idx

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Map a batch of rows; ``x`` has shape (n, input_dim)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.input_dim:
            raise ValueError(
                f"expected {self.input_dim} columns, got {x.shape[1]}"
            )
        n = x.shape[0]
        out = np.empty((n, self.output_dim))
        out[:, : self.input_dim] = x
        if self.output_dim > self.input_dim:
            c = self.coeffs
            j = self.indices
            out[:, self.input_dim:] = (
                x @ self.affine_matrix.T
                + self.affine_shift
                + c[:, 0] * np.cos(c[:, 1] * x[:, j[:, 0]]) * np.sin(c[:, 2] * x[:, j[:, 1]])
                + c[:, 3] * x[:, j[:, 2]] * x[:, j[:, 3]]
            )
        return out

    def same_as(self, other: "EmbeddingSpec") -> bool:
        return (
            self.input_dim == other.input_dim
            and self.output_dim == other.output_dim
            and self.seed == other.seed
        )

    def to_config(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """An (n, m) matrix of i.i.d. draws plus provenance.

    ``source_id`` identifies the generating distribution, ``seed`` the stream,
    and ``rng_id`` the frozen generator algorithm, so any batch can be
    regenerated exactly.
    """

    data: np.ndarray
    source_id: str
    seed: int
    rng_id: str = RNG_ID

    def __post_init__(self) -> None:
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if data.shape[0] < 1:
            raise ValueError("a sample batch needs at least one row")
        if not np.all(np.isfinite(data)):
            raise ValueError("sample batch contains non-finite rows")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


class Distribution(ABC):
    """Common surface: dimension, seeded sampling, and (where it exists) a
    log density plus a truncation box for quadrature."""

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        ...

    @abstractmethod
    def to_config(self) -> dict:
        """JSON-serializable description (see README for the schema)."""

    def sample(self, n: int, seed: int) -> SampleBatch:
        """Draw ``n`` i.i.d. rows, deterministically in ``(self, n, seed)``."""
        if n < 1:
            raise ValueError("n must be >= 1")
        data = self._draw(_rng(seed), int(n))
        return SampleBatch(data, self.source_id, int(seed))

    def log_density(self, x: np.ndarray) -> np.ndarray | float:
        """Log density at ``x``; a float for a single point, an (n,) array
        for a batch of rows.  -inf outside the support."""
        raise UnsupportedDensityError(
            f"{type(self).__name__} has no density on its ambient space"
        )

    def quadrature_box(self) -> np.ndarray:
        """Axis-aligned (dim, 2) truncation box covering all but negligible mass."""
        raise UnsupportedDensityError(
            f"{type(self).__name__} has no quadrature domain"
        )

    @property
    def source_id(self) -> str:
        cfg = json.dumps(self.to_config(), sort_keys=True)
        digest = hashlib.sha1(cfg.encode()).hexdigest()[:10]
        return f"{self.to_config()['type']}-{digest}"

    def _batchify(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} columns, got {x.shape[1]}")
        return x, single


class Gaussian(Distribution):
    """Multivariate Gaussian; samples via the Cholesky transform of standard
    normals."""

    def __init__(self, spec: GaussianSpec) -> None:
        self.spec = spec

    @classmethod
    def from_moments(cls, mean, cov) -> "Gaussian":
        return cls(GaussianSpec(np.asarray(mean, float), np.asarray(cov, float)))

    @property
    def dim(self) -> int:
        return self.spec.dim

    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        z = gen.standard_normal((n, self.dim))
        return z @ self.spec.chol.T + self.spec.mean

    def log_density(self, x):
        x, single = self._batchify(x)
        y = solve_triangular(self.spec.chol, (x - self.spec.mean).T, lower=True)
        out = (
            -0.5 * np.sum(y * y, axis=0)
            - 0.5 * self.spec.log_det_cov
            - 0.5 * self.dim * np.log(2.0 * np.pi)
        )
        return float(out[0]) if single else out

    def quadrature_box(self) -> np.ndarray:
        half = GAUSSIAN_BOX_SIGMAS * np.sqrt(np.diag(self.spec.cov))
        return np.column_stack([self.spec.mean - half, self.spec.mean + half])

    def to_config(self) -> dict:
        return {
            "type": "gaussian",
            "mean": self.spec.mean.tolist(),
            "cov": self.spec.cov.tolist(),
        }


class BetaProduct(Distribution):
    """Product of independent Beta(a_i, b_i) coordinates on (0, 1)^m.

    Sampling uses the Gamma-ratio construction X = G_a / (G_a + G_b) with
    G_a ~ Gamma(a, 1) and G_b ~ Gamma(b, 1) drawn from numpy's generator.
    """

    def __init__(self, spec: BetaProductSpec) -> None:
        self.spec = spec

    @classmethod
    def from_shapes(cls, a, b) -> "BetaProduct":
        return cls(BetaProductSpec(np.asarray(a, float), np.asarray(b, float)))

    @property
    def dim(self) -> int:
        return self.spec.dim

    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        ga = gen.gamma(self.spec.a, size=(n, self.dim))
        gb = gen.gamma(self.spec.b, size=(n, self.dim))
        return ga / (ga + gb)

    def log_density(self, x):
        x, single = self._batchify(x)
        a, b = self.spec.a, self.spec.b
        log_beta = gammaln(a) + gammaln(b) - gammaln(a + b)
        inside = np.all((x > 0.0) & (x < 1.0), axis=1)
        out = np.full(x.shape[0], -np.inf)
        if np.any(inside):
            xi = x[inside]
            out[inside] = np.sum(
                (a - 1.0) * np.log(xi) + (b - 1.0) * np.log1p(-xi) - log_beta,
                axis=1,
            )
        # Boundary points carry the density limit where it is finite (e.g. the
        # uniform Beta(1,1)); treat exact 0/1 coordinates via the same formula
        # only when the corresponding exponent vanishes.
        boundary = ~inside & np.all((x >= 0.0) & (x <= 1.0), axis=1)
        for i in np.nonzero(boundary)[0]:
            row = x[i]
            at0 = row == 0.0
            at1 = row == 1.0
            if np.all((~at0) | (a == 1.0)) and np.all((~at1) | (b == 1.0)):
                safe = np.clip(row, 1e-300, 1.0 - 1e-16)
                out[i] = float(
                    np.sum(
                        np.where(at0, 0.0, (a - 1.0) * np.log(safe))
                        + np.where(at1, 0.0, (b - 1.0) * np.log1p(-safe))
                        - log_beta
                    )
                )
        return float(out[0]) if single else out

    def quadrature_box(self) -> np.ndarray:
        return np.column_stack([np.zeros(self.dim), np.ones(self.dim)])

    def to_config(self) -> dict:
        return {
            "type": "beta_product",
            "a": self.spec.a.tolist(),
            "b": self.spec.b.tolist(),
        }


class Pushforward(Distribution):
    """The image of a base distribution under a fixed embedding.

    Supports sampling only; the image of the embedding has measure zero in
    the ambient space, so there is no density to evaluate.
    """

    def __init__(self, base: Distribution, embedding: EmbeddingSpec) -> None:
        if base.dim != embedding.input_dim:
            raise ValueError(
                f"base dimension {base.dim} != embedding input {embedding.input_dim}"
            )
        self.base = base
        self.embedding = embedding

    @property
    def dim(self) -> int:
        return self.embedding.output_dim

    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return self.embedding.apply(self.base._draw(gen, n))

    def to_config(self) -> dict:
        return {
            "type": "pushforward",
            "base": self.base.to_config(),
            "embedding": self.embedding.to_config(),
        }


class JointCorrelatedGaussian(Distribution):
    """The joint law of two d-dimensional standard Gaussian blocks whose i-th
    coordinates are pairwise correlated with coefficient rho."""

    def __init__(self, block_dim: int, rho: float) -> None:
        if block_dim < 1:
            raise ValueError("block_dim must be positive")
        if not -1.0 < rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {rho!r}")
        self.block_dim = int(block_dim)
        self.rho = float(rho)
        d = self.block_dim
        cov = np.eye(2 * d)
        cov[:d, d:] = self.rho * np.eye(d)
        cov[d:, :d] = self.rho * np.eye(d)
        self._gaussian = Gaussian(GaussianSpec(np.zeros(2 * d), cov))

    @property
    def dim(self) -> int:
        return 2 * self.block_dim

    @property
    def pair_split(self) -> int:
        """Column index where the second block starts."""
        return self.block_dim

    @property
    def joint_spec(self) -> GaussianSpec:
        return self._gaussian.spec

    @property
    def product_spec(self) -> GaussianSpec:
        """Spec of the product of the two block marginals."""
        return GaussianSpec(np.zeros(self.dim), np.eye(self.dim))

    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return self._gaussian._draw(gen, n)

    def log_density(self, x):
        return self._gaussian.log_density(x)

    def quadrature_box(self) -> np.ndarray:
        return self._gaussian.quadrature_box()

    def to_config(self) -> dict:
        return {
            "type": "joint_correlated_gaussian",
            "dim": self.block_dim,
            "rho": self.rho,
        }


class ProductOfMarginals(Distribution):
    """The product of the two block marginals of a JointCorrelatedGaussian."""

    def __init__(self, joint: JointCorrelatedGaussian) -> None:
        self.joint = joint
        self._gaussian = Gaussian(joint.product_spec)

    @property
    def dim(self) -> int:
        return self.joint.dim

    def _draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        return self._gaussian._draw(gen, n)

    def log_density(self, x):
        return self._gaussian.log_density(x)

    def quadrature_box(self) -> np.ndarray:
        return self._gaussian.quadrature_box()

    def to_config(self) -> dict:
        return {"type": "product_of_marginals", "joint": self.joint.to_config()}


def distribution_from_config(cfg: dict) -> Distribution:
    """Rebuild a distribution from its JSON description.

    Raises:
        ValueError: on an unknown ``type`` tag or malformed fields.
    """
    try:
        kind = cfg["type"]
    except (TypeError, KeyError):
        raise ValueError("distribution config must be a dict with a 'type' key")
    if kind == "gaussian":
        return Gaussian.from_moments(cfg["mean"], cfg["cov"])
    if kind == "beta_product":
        return BetaProduct.from_shapes(cfg["a"], cfg["b"])
    if kind == "pushforward":
        emb = cfg["embedding"]
        return Pushforward(
            distribution_from_config(cfg["base"]),
            EmbeddingSpec(emb["input_dim"], emb["output_dim"], emb["seed"]),
        )
    if kind == "joint_correlated_gaussian":
        return JointCorrelatedGaussian(cfg["dim"], cfg["rho"])
    if kind == "product_of_marginals":
        joint = distribution_from_config(cfg["joint"])
        if not isinstance(joint, JointCorrelatedGaussian):
            raise ValueError("product_of_marginals requires a joint_correlated_gaussian")
        return ProductOfMarginals(joint)
    raise ValueError(f"unknown distribution type {kind!r}")
