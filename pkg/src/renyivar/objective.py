"""The variational objective behind the sample-based divergence estimator.

For a critic g and order alpha the objective is

    J_alpha(g) = 1/(alpha-1) * log E_Q[exp((alpha-1) g)]
               - 1/alpha     * log E_P[exp(alpha g)],

which is maximized over a critic class.  This module evaluates it on critic
outputs (empirical, log-mean-exp form), differentiates it with respect to
those outputs, and evaluates it against true expectations by quadrature for
low-dimensional ground-truth checks.

Empirical terms are always finite for finite outputs; the inf - inf == -inf
convention of the population functional only matters when a true expectation
diverges, in which case the quadrature form returns -inf.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import AlphaOrder, Distribution
from .exact_divergence import log_integral_on_box

__all__ = [
    "CriticOutputs",
    "ObjectiveValue",
    "logmeanexp",
    "empirical_objective",
    "objective_gradient",
    "population_objective",
    "bootstrap_objective_se",
]


def logmeanexp(values: np.ndarray) -> float:
    """log of the mean of exponentials, stabilized by max subtraction."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("logmeanexp of an empty array")
    m = float(np.max(values))
    return m + float(np.log(np.mean(np.exp(values - m))))


def _softmax(values: np.ndarray) -> np.ndarray:
    shifted = values - np.max(values)
    e = np.exp(shifted)
    return e / e.sum()


@dataclass(frozen=True, eq=False)
class CriticOutputs:
    """Critic values on the Q-side and P-side samples of one evaluation."""

    on_q: np.ndarray
    on_p: np.ndarray

    def __post_init__(self) -> None:
        for name in ("on_q", "on_p"):
            v = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if v.size == 0:
                raise ValueError(f"{name} must be non-empty")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} contains non-finite critic values")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class ObjectiveValue:
    """Objective value with its two log-mean-exp terms kept separate.

    ``value == term_q - term_p`` whenever both terms are finite; the split is
    exposed so training traces can log each curve, which is the useful
    diagnostic when runs destabilize as the order approaches 1.
    """

    value: float
    term_q: float
    term_p: float


def empirical_objective(outputs: CriticOutputs, alpha: AlphaOrder) -> ObjectiveValue:
    """Evaluate the objective on finite critic outputs (log-mean-exp form)."""
    a = float(alpha)
    term_q = logmeanexp((a - 1.0) * outputs.on_q) / (a - 1.0)
    term_p = logmeanexp(a * outputs.on_p) / a
    return ObjectiveValue(term_q - term_p, term_q, term_p)


def objective_gradient(
    outputs: CriticOutputs, alpha: AlphaOrder
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the objective with respect to each critic output.

    Returns the Q-side and P-side gradients; softmax weights make the Q-side
    sum to exactly 1 and the P-side to -1.
    """
    a = float(alpha)
    grad_q = _softmax((a - 1.0) * outputs.on_q)
    grad_p = -_softmax(a * outputs.on_p)
    return grad_q, grad_p


def population_objective(
    g: Callable[[np.ndarray], np.ndarray],
    q: Distribution,
    p: Distribution,
    alpha: AlphaOrder,
    quad_tol: float = 1e-9,
) -> float:
    """The objective under true expectations, evaluated by quadrature.

    Requires distributions with densities and dimension <= 2.  Each of the
    two integrals is computed on the distribution's own truncation box to
    absolute tolerance ``quad_tol`` on its logarithm.  For any critic the
    result is a lower bound on the exact divergence, with equality at the
    log-likelihood-ratio critic.
    """
    if q.dim > 2 or p.dim > 2:
        raise ValueError("population objective supports dimension <= 2 only")
    a = float(alpha)

    def log_weighted(dist: Distribution, scale: float) -> float:
        def log_f(x: np.ndarray) -> np.ndarray:
            gx = np.asarray(g(x), dtype=float)
            return scale * gx + np.asarray(dist.log_density(x), dtype=float)

        return log_integral_on_box(log_f, dist.quadrature_box(), quad_tol)

    term_q = log_weighted(q, a - 1.0) / (a - 1.0)
    term_p = log_weighted(p, a) / a
    if np.isinf(term_q) or np.isinf(term_p):
        return -np.inf
    return term_q - term_p


def bootstrap_objective_se(
    outputs: CriticOutputs,
    alpha: AlphaOrder,
    n_boot: int = 200,
    seed: int = 0,
) -> float:
    """Bootstrap standard error of the empirical objective.

    Resamples each side with replacement ``n_boot`` times and returns the
    standard deviation of the recomputed objective values.
    """
    gen = np.random.Generator(np.random.Philox(seed))
    nq, np_ = outputs.on_q.size, outputs.on_p.size
    values = np.empty(n_boot)
    for i in range(n_boot):
        vq = outputs.on_q[gen.integers(0, nq, size=nq)]
        vp = outputs.on_p[gen.integers(0, np_, size=np_)]
        values[i] = empirical_objective(CriticOutputs(vq, vp), alpha).value
    return float(np.std(values))
