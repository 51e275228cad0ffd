"""Sufficient sample size for a target estimator accuracy.

For a critic class of parameter dimension d with norm bound K, Lipschitz
constant L in the parameters, and sup bound M, the estimator error is below
epsilon with probability at least 1 - delta once

    n >= 32 * D^2 / eps^2 * ( d * log(16*L*K*sqrt(d)/eps)
                              + 2*d*M*max(|alpha|, |alpha-1|)
                              + log(4/delta) ),

    D = max( exp(2*|alpha|*M) / |alpha|, exp(2*|alpha-1|*M) / |alpha-1| ).

The prefactor is exponential in M, so everything is kept in log space until
the final exponentiation; bounds too large for float64 are flagged instead
of overflowing.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

from .distributions import AlphaOrder

_LOG_FLOAT_MAX = math.log(sys.float_info.max)

__all__ = ["ComplexityInput", "SampleComplexityBound", "sample_complexity_bound", "log_d_factor"]


@dataclass(frozen=True)
class ComplexityInput:
    """Accuracy targets and critic-class constants for the bound."""

    epsilon: float
    delta: float
    d_k: int
    K_k: float
    L_k: float
    M_k: float
    alpha: AlphaOrder

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.d_k < 1:
            raise ValueError("d_k must be a positive integer")
        if self.K_k <= 0 or self.L_k <= 0 or self.M_k <= 0:
            raise ValueError("K_k, L_k and M_k must be positive")
        if not isinstance(self.alpha, AlphaOrder):
            object.__setattr__(self, "alpha", AlphaOrder(float(self.alpha)))


@dataclass(frozen=True)
class SampleComplexityBound:
    """The bound as a real number plus its integer ceiling.

    ``n_samples`` is None when the real value overflows float64, in which
    case ``astronomically_large`` is set and ``raw`` is +inf.
    """

    raw: float
    n_samples: int | None
    astronomically_large: bool


def log_d_factor(alpha: AlphaOrder, m_k: float) -> float:
    """log of D = max(exp(2|a|M)/|a|, exp(2|a-1|M)/|a-1|), overflow-free."""
    a = float(alpha)
    return max(
        2.0 * abs(a) * m_k - math.log(abs(a)),
        2.0 * abs(a - 1.0) * m_k - math.log(abs(a - 1.0)),
    )


def sample_complexity_bound(inp: ComplexityInput) -> SampleComplexityBound:
    """Evaluate the sufficient-sample-size bound.

    Raises:
        ValueError: when 16*L*K*sqrt(d)/epsilon <= 1, where the covering
            term turns negative and the bound is vacuous.
    """
    a = float(inp.alpha)
    log_cover_arg = (
        math.log(16.0)
        + math.log(inp.L_k)
        + math.log(inp.K_k)
        + 0.5 * math.log(inp.d_k)
        - math.log(inp.epsilon)
    )
    if log_cover_arg <= 0.0:
        raise ValueError(
            "the bound is vacuous for these parameters: "
            f"16*L_k*K_k*sqrt(d_k)/epsilon = {math.exp(log_cover_arg):.6g} <= 1, "
            "so the covering log term is nonpositive; increase L_k*K_k*sqrt(d_k) "
            "or decrease epsilon"
        )
    bracket = (
        inp.d_k * log_cover_arg
        + 2.0 * inp.d_k * inp.M_k * max(abs(a), abs(a - 1.0))
        + math.log(4.0 / inp.delta)
    )
    log_n = (
        math.log(32.0)
        + 2.0 * log_d_factor(inp.alpha, inp.M_k)
        - 2.0 * math.log(inp.epsilon)
        + math.log(bracket)
    )
    if log_n >= _LOG_FLOAT_MAX:
        return SampleComplexityBound(math.inf, None, True)
    raw = math.exp(log_n)
    if not math.isfinite(raw):
        return SampleComplexityBound(math.inf, None, True)
    return SampleComplexityBound(raw, max(1, math.ceil(raw)), False)
