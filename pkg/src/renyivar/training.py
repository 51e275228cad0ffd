"""Adam-based stochastic maximization of the empirical objective.

One run draws a fixed dataset from each measure, then ascends the minibatch
objective: the gradient is the plug-in gradient of the log of the minibatch
mean, which is a biased estimate of the population gradient but is exactly
the quantity the streaming optimizer sees.  The full-sample objective is
recorded on an evaluation cadence and the reported estimate is a moving
average of the last few recorded values.

Everything is deterministic in the config seed: the seed is split into four
documented substreams (Q data, P data, critic init, shuffling) via the first
four 64-bit words of ``numpy.random.SeedSequence(seed)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .critics import (
    ExpFamCritic,
    ParamGradient,
    clip_params,
    get_statistic,
    init_mlp,
)
from .distributions import AlphaOrder, Distribution
from .objective import CriticOutputs, empirical_objective, objective_gradient

__all__ = [
    "CriticConfig",
    "TrainConfig",
    "AdamState",
    "EstimateTrace",
    "TrainingError",
    "init_adam_state",
    "adam_step",
    "train_estimator",
    "estimate_mutual_information",
]

#: Consecutive evaluations above 10x the running median before a run is
#: flagged non-converged.
DIVERGENCE_PATIENCE = 50
DIVERGENCE_FACTOR = 10.0


class TrainingError(RuntimeError):
    """A NaN gradient or objective; carries the offending step index."""

    def __init__(self, message: str, step: int) -> None:
        super().__init__(f"{message} (step {step})")
        self.step = step


@dataclass(frozen=True)
class CriticConfig:
    """Which critic class to train.

    ``kind`` is "mlp" (hidden widths in ``hidden_dims``) or "expfam"
    (named sufficient statistic in ``statistic``).
    """

    kind: str = "mlp"
    hidden_dims: tuple[int, ...] = (32,)
    statistic: str = "beta"

    def __post_init__(self) -> None:
        if self.kind not in ("mlp", "expfam"):
            raise ValueError(f"critic kind must be 'mlp' or 'expfam', got {self.kind!r}")
        if self.kind == "mlp" and (
            len(self.hidden_dims) == 0 or any(d < 1 for d in self.hidden_dims)
        ):
            raise ValueError("hidden_dims must be a non-empty tuple of positive ints")
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))

    def build(self, input_dim: int, init_seed: int, param_bound: float | None):
        if self.kind == "mlp":
            dims = [input_dim, *self.hidden_dims, 1]
            return init_mlp(dims, init_seed, param_bound)
        return ExpFamCritic.zeros(get_statistic(self.statistic, input_dim), param_bound)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one estimation run."""

    alpha: AlphaOrder
    critic: CriticConfig = field(default_factory=CriticConfig)
    n_samples: int = 20_000
    minibatch: int = 512
    steps: int = 3000
    learning_rate: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    seed: int = 0
    smoothing_window: int = 10
    param_bound: float | None = None
    eval_interval: int = 10

    def __post_init__(self) -> None:
        if not isinstance(self.alpha, AlphaOrder):
            object.__setattr__(self, "alpha", AlphaOrder(float(self.alpha)))
        if self.n_samples < 1 or self.steps < 1 or self.minibatch < 1:
            raise ValueError("n_samples, minibatch and steps must be positive")
        if self.minibatch > self.n_samples:
            raise ValueError("minibatch cannot exceed n_samples")
        if self.smoothing_window < 1 or self.smoothing_window > self.steps:
            raise ValueError("smoothing_window must lie in [1, steps]")
        if self.eval_interval < 1:
            raise ValueError("eval_interval must be positive")
        if self.learning_rate <= 0 or self.eps <= 0:
            raise ValueError("learning_rate and eps must be positive")
        b1, b2 = self.betas
        if not (0.0 < b1 < 1.0 and 0.0 < b2 < 1.0):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.param_bound is not None and self.param_bound <= 0:
            raise ValueError("param_bound must be positive")

    def substreams(self) -> tuple[int, int, int, int]:
        """(q_data, p_data, init, shuffle) seeds derived from ``seed``."""
        words = np.random.SeedSequence(self.seed).generate_state(4, dtype=np.uint64)
        return tuple(int(w) for w in words)


@dataclass
class AdamState:
    """First/second moment accumulators congruent with the critic parameters."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0


def init_adam_state(critic) -> AdamState:
    params = critic.parameters()
    return AdamState(
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
    )


def adam_step(
    critic,
    grad: ParamGradient,
    state: AdamState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
):
    """One bias-corrected Adam ascent step, in place.

    Parameters move along +gradient (the objective is maximized).  When the
    critic carries a ``param_bound`` the parameters are re-clipped after the
    update.  Returns ``(critic, state)``.

    Raises:
        TrainingError: if the gradient contains NaN.
    """
    grad.check_congruent(critic)
    b1, b2 = betas
    state.step += 1
    t = state.step
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, m, v in zip(critic.parameters(), grad.arrays, state.m, state.v):
        if np.any(np.isnan(g)):
            raise TrainingError("NaN gradient", t)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p += lr * (m / c1) / (np.sqrt(v / c2) + eps)
    if critic.param_bound is not None:
        clip_params(critic, critic.param_bound)
    return critic, state


@dataclass(frozen=True, eq=False)
class EstimateTrace:
    """Recorded full-sample objective values plus the smoothed estimate.

    ``smoothed_estimate`` is the mean of the last ``smoothing_window``
    recorded values and ``final_full_sample_estimate`` the very last one.
    """

    steps: np.ndarray
    objective: np.ndarray
    term_q: np.ndarray
    term_p: np.ndarray
    smoothed_estimate: float
    final_full_sample_estimate: float
    converged: bool = True

    def to_csv(self, path_or_buffer) -> None:
        """Write columns (step, objective, term_q, term_p)."""
        own = isinstance(path_or_buffer, (str, bytes))
        f = open(path_or_buffer, "w", newline="") if own else path_or_buffer
        try:
            writer = csv.writer(f)
            writer.writerow(["step", "objective", "term_q", "term_p"])
            for row in zip(self.steps, self.objective, self.term_q, self.term_p):
                writer.writerow([int(row[0]), repr(row[1]), repr(row[2]), repr(row[3])])
        finally:
            if own:
                f.close()

    @classmethod
    def from_csv(cls, path_or_buffer, smoothing_window: int = 10) -> "EstimateTrace":
        own = isinstance(path_or_buffer, (str, bytes))
        f = open(path_or_buffer, newline="") if own else path_or_buffer
        try:
            reader = csv.reader(f)
            header = next(reader)
            if header != ["step", "objective", "term_q", "term_p"]:
                raise ValueError(f"unexpected trace header {header!r}")
            rows = [r for r in reader]
        finally:
            if own:
                f.close()
        steps = np.array([int(r[0]) for r in rows])
        obj = np.array([float(r[1]) for r in rows])
        tq = np.array([float(r[2]) for r in rows])
        tp = np.array([float(r[3]) for r in rows])
        window = min(smoothing_window, obj.size)
        return cls(steps, obj, tq, tp, float(obj[-window:].mean()), float(obj[-1]))


def _train_on_arrays(
    data_q: np.ndarray, data_p: np.ndarray, cfg: TrainConfig, init_seed: int, shuffle_seed: int
) -> EstimateTrace:
    alpha = cfg.alpha
    critic = cfg.critic.build(data_q.shape[1], init_seed, cfg.param_bound)
    state = init_adam_state(critic)
    shuffler = np.random.Generator(np.random.Philox(shuffle_seed))

    n = cfg.n_samples
    batches_per_epoch = n // cfg.minibatch
    order_q = order_p = None
    batch_idx = batches_per_epoch  # force a reshuffle on the first step

    rec_steps: list[int] = []
    rec_obj: list[float] = []
    rec_tq: list[float] = []
    rec_tp: list[float] = []
    divergence_streak = 0
    converged = True

    for step in range(1, cfg.steps + 1):
        if batch_idx >= batches_per_epoch:
            order_q = shuffler.permutation(n)
            order_p = shuffler.permutation(n)
            batch_idx = 0
        sel = slice(batch_idx * cfg.minibatch, (batch_idx + 1) * cfg.minibatch)
        batch_q = data_q[order_q[sel]]
        batch_p = data_p[order_p[sel]]
        batch_idx += 1

        out = CriticOutputs(critic.forward(batch_q), critic.forward(batch_p))
        grad_q, grad_p = objective_gradient(out, alpha)
        grad = critic.backward(batch_q, grad_q).add_(critic.backward(batch_p, grad_p))
        adam_step(critic, grad, state, cfg.learning_rate, cfg.betas, cfg.eps)

        if step % cfg.eval_interval == 0 or step == cfg.steps:
            full = empirical_objective(
                CriticOutputs(critic.forward(data_q), critic.forward(data_p)), alpha
            )
            if not np.isfinite(full.value):
                raise TrainingError("non-finite full-sample objective", step)
            rec_steps.append(step)
            rec_obj.append(full.value)
            rec_tq.append(full.term_q)
            rec_tp.append(full.term_p)
            median = float(np.median(rec_obj))
            if median > 0.0 and full.value > DIVERGENCE_FACTOR * median:
                divergence_streak += 1
                if divergence_streak >= DIVERGENCE_PATIENCE:
                    converged = False
            else:
                divergence_streak = 0

    objective = np.array(rec_obj)
    if cfg.smoothing_window > objective.size:
        raise ValueError(
            f"smoothing_window {cfg.smoothing_window} exceeds the "
            f"{objective.size} recorded evaluations; lower it or eval_interval"
        )
    return EstimateTrace(
        steps=np.array(rec_steps),
        objective=objective,
        term_q=np.array(rec_tq),
        term_p=np.array(rec_tp),
        smoothed_estimate=float(objective[-cfg.smoothing_window :].mean()),
        final_full_sample_estimate=float(objective[-1]),
        converged=converged,
    )


def train_estimator(q: Distribution, p: Distribution, cfg: TrainConfig) -> EstimateTrace:
    """Train the critic on fixed samples from ``q`` and ``p``.

    Draws ``cfg.n_samples`` rows from each measure once, then runs
    ``cfg.steps`` minibatch ascent steps, sampling minibatches without
    replacement within each reshuffled epoch.
    """
    if q.dim != p.dim:
        raise ValueError(f"dimension mismatch: {q.dim} vs {p.dim}")
    seed_q, seed_p, seed_init, seed_shuffle = cfg.substreams()
    data_q = q.sample(cfg.n_samples, seed_q).data
    data_p = p.sample(cfg.n_samples, seed_p).data
    return _train_on_arrays(data_q, data_p, cfg, seed_init, seed_shuffle)


def estimate_mutual_information(joint: Distribution, cfg: TrainConfig) -> EstimateTrace:
    """Estimate the divergence between a joint law and its product of
    marginals from paired samples.

    The Q side is a joint draw; the P side permutes the second halves of an
    independent joint draw against its first halves, which realizes the
    product of the two block marginals.
    """
    split = getattr(joint, "pair_split", None)
    if split is None:
        raise ValueError("mutual information needs a pair-structured distribution")
    seed_q, seed_p, seed_init, seed_shuffle = cfg.substreams()
    data_q = joint.sample(cfg.n_samples, seed_q).data
    raw_p = joint.sample(cfg.n_samples, seed_p).data
    perm = np.random.Generator(np.random.Philox(seed_p)).permutation(cfg.n_samples)
    data_p = np.column_stack([raw_p[:, :split], raw_p[perm, split:]])
    return _train_on_arrays(data_q, data_p, cfg, seed_init, seed_shuffle)
