"""Critic function classes: a ReLU multilayer perceptron and an
exponential-family linear critic.

Both expose the same small surface: ``forward`` evaluates the critic on a
batch of rows, ``backward`` accumulates the exact gradient of a weighted
output sum with respect to the parameters, ``parameters()`` lists the
parameter arrays in a fixed order, and ``clip_`` projects every parameter
onto [-bound, bound].  Critics are mutated only by optimizer steps;
evaluation is read-only and safe to run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ParamGradient",
    "MlpCritic",
    "ExpFamCritic",
    "BetaLogStatistic",
    "IdentityStatistic",
    "get_statistic",
    "init_mlp",
    "clip_params",
    "critic_to_checkpoint",
    "critic_from_checkpoint",
]

#: Samples are clamped into [BETA_CLAMP, 1 - BETA_CLAMP] before taking logs;
#: draws sit in the open interval almost surely, this only guards rounding.
BETA_CLAMP = 1e-12


@dataclass
class ParamGradient:
    """Gradient arrays congruent, in order and shape, with a critic's
    ``parameters()`` list."""

    arrays: list[np.ndarray]

    def add_(self, other: "ParamGradient") -> "ParamGradient":
        for mine, theirs in zip(self.arrays, other.arrays, strict=True):
            mine += theirs
        return self

    def check_congruent(self, critic) -> None:
        params = critic.parameters()
        if len(params) != len(self.arrays) or any(
            g.shape != p.shape for g, p in zip(self.arrays, params)
        ):
            raise ValueError("gradient shapes do not match the critic")


class BetaLogStatistic:
    """Sufficient statistic of a Beta product: (log x_i, log(1 - x_i))
    interleaved coordinate-wise, with samples clamped off the boundary."""

    name = "beta"

    def __init__(self, input_dim: int) -> None:
        self.input_dim = int(input_dim)
        self.output_dim = 2 * self.input_dim

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.clip(np.atleast_2d(x), BETA_CLAMP, 1.0 - BETA_CLAMP)
        out = np.empty((x.shape[0], self.output_dim))
        out[:, 0::2] = np.log(x)
        out[:, 1::2] = np.log1p(-x)
        return out


class IdentityStatistic:
    """The identity statistic T(x) = x (Gaussian location family)."""

    name = "identity"

    def __init__(self, input_dim: int) -> None:
        self.input_dim = int(input_dim)
        self.output_dim = self.input_dim

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.atleast_2d(np.asarray(x, dtype=float))


_STATISTICS = {"beta": BetaLogStatistic, "identity": IdentityStatistic}


def get_statistic(name: str, input_dim: int):
    try:
        return _STATISTICS[name](input_dim)
    except KeyError:
        raise ValueError(
            f"unknown statistic {name!r}; available: {sorted(_STATISTICS)}"
        )


class MlpCritic:
    """Fully connected ReLU network with a scalar output.

    ``layer_dims`` runs from the input width through the hidden widths to the
    output width, which must be 1.  When ``param_bound`` is set, every weight
    and bias is kept in [-param_bound, param_bound] (the optimizer re-clips
    after each step).
    """

    def __init__(
        self,
        layer_dims: list[int],
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        param_bound: float | None = None,
    ) -> None:
        layer_dims = [int(d) for d in layer_dims]
        if len(layer_dims) < 2 or any(d < 1 for d in layer_dims):
            raise ValueError("layer_dims must list at least input and output widths")
        if layer_dims[-1] != 1:
            raise ValueError("critics are scalar-valued; output width must be 1")
        if param_bound is not None and param_bound <= 0:
            raise ValueError("param_bound must be positive")
        expected = list(zip(layer_dims[:-1], layer_dims[1:]))
        if len(weights) != len(expected) or len(biases) != len(expected):
            raise ValueError("one weight matrix and bias per affine layer required")
        for w, b, (din, dout) in zip(weights, biases, expected):
            if w.shape != (din, dout) or b.shape != (dout,):
                raise ValueError(
                    f"layer shape mismatch: {w.shape}/{b.shape} vs ({din}, {dout})"
                )
        self.layer_dims = layer_dims
        self.weights = [np.array(w, dtype=float) for w in weights]
        self.biases = [np.array(b, dtype=float) for b in biases]
        self.param_bound = param_bound

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.parameters())

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def _check_input(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} columns, got {x.shape[1]}")
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the critic row-wise; returns an (n,) array."""
        h = self._check_input(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h[:, 0]

    def backward(self, x: np.ndarray, upstream: np.ndarray) -> ParamGradient:
        """Gradient of sum_i upstream_i * critic(x_i) with respect to the
        parameters (reverse-mode accumulation; the ReLU subgradient at 0
        is taken to be 0)."""
        x = self._check_input(x)
        upstream = np.asarray(upstream, dtype=float)
        if upstream.shape != (x.shape[0],):
            raise ValueError("upstream must have one entry per batch row")
        activations = [x]
        pre = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            pre.append(z)
            h = np.maximum(z, 0.0) if i < last else z
            activations.append(h)
        grad_w = [np.empty_like(w) for w in self.weights]
        grad_b = [np.empty_like(b) for b in self.biases]
        delta = upstream[:, None]
        for i in range(last, -1, -1):
            grad_w[i] = activations[i].T @ delta
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0.0)
        arrays = []
        for gw, gb in zip(grad_w, grad_b):
            arrays.append(gw)
            arrays.append(gb)
        return ParamGradient(arrays)

    def clip_(self, bound: float) -> "MlpCritic":
        for p in self.parameters():
            np.clip(p, -bound, bound, out=p)
        return self


class ExpFamCritic:
    """Linear critic kappa . T(x) over a named sufficient statistic.

    This is the critic class that contains the exact optimizer when both
    measures belong to the exponential family generated by T; the constant
    shift that would complete the log-likelihood ratio is dropped because
    the objective is shift-invariant.
    """

    def __init__(
        self,
        delta_kappa: np.ndarray,
        statistic,
        param_bound: float | None = None,
    ) -> None:
        delta_kappa = np.atleast_1d(np.asarray(delta_kappa, dtype=float))
        if delta_kappa.size != statistic.output_dim:
            raise ValueError(
                f"delta_kappa length {delta_kappa.size} != statistic output "
                f"{statistic.output_dim}"
            )
        if param_bound is not None and param_bound <= 0:
            raise ValueError("param_bound must be positive")
        self.delta_kappa = delta_kappa
        self.statistic = statistic
        self.param_bound = param_bound

    @classmethod
    def zeros(cls, statistic, param_bound: float | None = None) -> "ExpFamCritic":
        return cls(np.zeros(statistic.output_dim), statistic, param_bound)

    @property
    def input_dim(self) -> int:
        return self.statistic.input_dim

    @property
    def n_params(self) -> int:
        return self.delta_kappa.size

    def parameters(self) -> list[np.ndarray]:
        return [self.delta_kappa]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.input_dim:
            raise ValueError(f"expected {self.input_dim} columns, got {x.shape[1]}")
        return self.statistic(x) @ self.delta_kappa

    def backward(self, x: np.ndarray, upstream: np.ndarray) -> ParamGradient:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        upstream = np.asarray(upstream, dtype=float)
        if upstream.shape != (x.shape[0],):
            raise ValueError("upstream must have one entry per batch row")
        return ParamGradient([self.statistic(x).T @ upstream])

    def clip_(self, bound: float) -> "ExpFamCritic":
        np.clip(self.delta_kappa, -bound, bound, out=self.delta_kappa)
        return self


def init_mlp(
    layer_dims: list[int], seed: int, param_bound: float | None = None
) -> MlpCritic:
    """Build an MLP with uniform Glorot weights and zero biases.

    Weights are i.i.d. uniform on +/- sqrt(6 / (fan_in + fan_out)); the draw
    is deterministic in ``(layer_dims, seed)``.
    """
    gen = np.random.Generator(np.random.Philox(seed))
    weights, biases = [], []
    for din, dout in zip(layer_dims[:-1], layer_dims[1:]):
        limit = np.sqrt(6.0 / (din + dout))
        weights.append(gen.uniform(-limit, limit, size=(din, dout)))
        biases.append(np.zeros(dout))
    return MlpCritic(list(layer_dims), weights, biases, param_bound)


def clip_params(critic, bound: float):
    """Project every parameter of ``critic`` onto [-bound, bound] in place.

    Idempotent: re-clipping with the same bound is a no-op bit for bit.
    """
    if bound <= 0:
        raise ValueError("bound must be positive")
    return critic.clip_(bound)


def critic_to_checkpoint(critic) -> dict:
    """JSON-serializable checkpoint: layout plus row-major parameters."""
    if isinstance(critic, MlpCritic):
        return {
            "kind": "mlp",
            "layer_dims": list(critic.layer_dims),
            "param_bound": critic.param_bound,
            "weights": [w.ravel().tolist() for w in critic.weights],
            "biases": [b.tolist() for b in critic.biases],
        }
    if isinstance(critic, ExpFamCritic):
        return {
            "kind": "expfam",
            "statistic": critic.statistic.name,
            "input_dim": critic.statistic.input_dim,
            "param_bound": critic.param_bound,
            "delta_kappa": critic.delta_kappa.tolist(),
        }
    raise ValueError(f"cannot checkpoint {type(critic).__name__}")


def critic_from_checkpoint(ckpt: dict):
    kind = ckpt.get("kind")
    if kind == "mlp":
        dims = [int(d) for d in ckpt["layer_dims"]]
        weights = [
            np.asarray(w, dtype=float).reshape(din, dout)
            for w, din, dout in zip(ckpt["weights"], dims[:-1], dims[1:])
        ]
        biases = [np.asarray(b, dtype=float) for b in ckpt["biases"]]
        return MlpCritic(dims, weights, biases, ckpt.get("param_bound"))
    if kind == "expfam":
        stat = get_statistic(ckpt["statistic"], ckpt["input_dim"])
        return ExpFamCritic(
            np.asarray(ckpt["delta_kappa"], dtype=float),
            stat,
            ckpt.get("param_bound"),
        )
    raise ValueError(f"unknown checkpoint kind {kind!r}")
