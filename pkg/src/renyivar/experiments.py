"""Config-driven experiment harness with CSV output and reproducible seeding.

Each experiment expands into a deterministic list of independent tasks (one
per grid point and repetition), runs them serially or in a process pool, and
aggregates rows sorted by key, so the emitted CSV is byte-identical across
re-runs with the same config and seed.  Every per-run seed derives from the
experiment seed through documented stream splitting; exact reference values
always come from the closed-form oracles, never from constants.

Grid coordinates beyond (alpha, run) are encoded in the experiment column,
e.g. ``mi-sweep[rho=0.5]`` or ``n-scaling[n=2500]``.
"""

from __future__ import annotations

import csv
import json
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .complexity import ComplexityInput, sample_complexity_bound
from .distributions import (
    AlphaOrder,
    BetaProduct,
    BetaProductSpec,
    JointCorrelatedGaussian,
    distribution_from_config,
)
from .exact_divergence import renyi_exact, renyi_gaussian_exact
from .training import CriticConfig, TrainConfig, estimate_mutual_information, train_estimator

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ResultRow",
    "ExperimentResult",
    "derive_seed",
    "default_config",
    "config_from_dict",
    "config_to_dict",
    "run_experiment",
    "run_gaussian_1d",
    "run_embedding_experiment",
    "run_mi_sweep",
    "run_beta_expfam",
    "run_n_scaling",
    "complexity_table",
    "emit_csv",
    "parse_csv",
    "reproduce_estimate",
]

EXPERIMENTS = (
    "gaussian-1d",
    "embedding",
    "mi-sweep",
    "beta-expfam",
    "n-scaling",
    "complexity-table",
)

#: Default 4-dimensional Gaussian pair for the embedding study.
EMBEDDING_BASE_Q = {
    "type": "gaussian",
    "mean": [2.0, 0.0, 0.0, 0.0],
    "cov": np.diag([1.5, 0.7, 2.0, 1.0]).tolist(),
}
EMBEDDING_BASE_P = {
    "type": "gaussian",
    "mean": [0.0, 0.0, 0.0, 0.0],
    "cov": np.eye(4).tolist(),
}

GAUSSIAN_1D_Q = {"type": "gaussian", "mean": [1.0], "cov": [[1.0]]}
GAUSSIAN_1D_P = {"type": "gaussian", "mean": [0.0], "cov": [[1.0]]}


def derive_seed(root: int, *tags) -> int:
    """Derive a 64-bit sub-seed from a root seed and hashable tags.

    String tags are folded in via crc32; integer tags directly.  The scheme
    is frozen: changing it silently re-seeds every experiment.
    """
    words = [int(root) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, str):
            words.append(zlib.crc32(tag.encode()))
        else:
            words.append(int(tag) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(words).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ResultRow:
    """One estimate with its provenance and reference value."""

    experiment: str
    alpha: float
    run_index: int
    seed: int
    estimate: float
    exact: float | None
    rel_error: float
    converged: bool
    wall_time_s: float | None = None

    @classmethod
    def build(cls, experiment, alpha, run_index, seed, estimate, exact, converged, wall):
        if exact is None:
            err = float("nan")
        elif exact != 0.0:
            err = abs(estimate - exact) / abs(exact)
        else:
            err = abs(estimate)
        return cls(
            experiment, float(alpha), int(run_index), int(seed),
            float(estimate), exact, err, bool(converged), wall,
        )

    def key(self) -> tuple:
        return (self.experiment, self.alpha, self.run_index)


CSV_COLUMNS = [
    "experiment", "alpha", "run", "seed", "estimate", "exact", "rel_error", "converged",
]


def emit_csv(rows: list[ResultRow], path_or_buffer, include_timing: bool = False) -> None:
    """Write result rows as UTF-8 CSV with a header and '.' decimals.

    Timing is excluded by default so that re-runs with the same config and
    seed produce byte-identical files; pass ``include_timing=True`` for a
    wall_time_s column.
    """
    own = isinstance(path_or_buffer, (str, bytes))
    f = open(path_or_buffer, "w", newline="", encoding="utf-8") if own else path_or_buffer
    try:
        writer = csv.writer(f)
        header = CSV_COLUMNS + (["wall_time_s"] if include_timing else [])
        writer.writerow(header)
        for r in sorted(rows, key=ResultRow.key):
            record = [
                r.experiment,
                repr(r.alpha),
                r.run_index,
                r.seed,
                repr(r.estimate),
                "" if r.exact is None else repr(r.exact),
                repr(r.rel_error),
                "true" if r.converged else "false",
            ]
            if include_timing:
                record.append("" if r.wall_time_s is None else repr(r.wall_time_s))
            writer.writerow(record)
    finally:
        if own:
            f.close()


def parse_csv(path_or_buffer) -> list[ResultRow]:
    own = isinstance(path_or_buffer, (str, bytes))
    f = open(path_or_buffer, newline="", encoding="utf-8") if own else path_or_buffer
    try:
        reader = csv.reader(f)
        header = next(reader)
        if header[: len(CSV_COLUMNS)] != CSV_COLUMNS:
            raise ValueError(f"unexpected result header {header!r}")
        timed = len(header) > len(CSV_COLUMNS)
        rows = []
        for rec in reader:
            wall = None
            if timed and rec[len(CSV_COLUMNS)] != "":
                wall = float(rec[len(CSV_COLUMNS)])
            rows.append(
                ResultRow(
                    experiment=rec[0],
                    alpha=float(rec[1]),
                    run_index=int(rec[2]),
                    seed=int(rec[3]),
                    estimate=float(rec[4]),
                    exact=None if rec[5] == "" else float(rec[5]),
                    rel_error=float(rec[6]),
                    converged=rec[7] == "true",
                    wall_time_s=wall,
                )
            )
        return rows
    finally:
        if own:
            f.close()


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment end to end."""

    experiment: str
    seed: int = 0
    alphas: tuple[float, ...] = (0.5,)
    repetitions: int = 3
    out: str | None = None
    train: TrainConfig = None
    workers: int = 1
    # gaussian-1d / n-scaling distribution pair
    q: dict = field(default_factory=lambda: dict(GAUSSIAN_1D_Q))
    p: dict = field(default_factory=lambda: dict(GAUSSIAN_1D_P))
    # embedding study
    embed_dim: int = 50
    base_q: dict = field(default_factory=lambda: json.loads(json.dumps(EMBEDDING_BASE_Q)))
    base_p: dict = field(default_factory=lambda: json.loads(json.dumps(EMBEDDING_BASE_P)))
    # mutual-information sweep
    rhos: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    block_dim: int = 5
    # beta-expfam comparison
    beta_dim: int = 5
    ab_range: tuple[float, float] = (0.5, 5.0)
    mlp_comparison_hidden: tuple[int, ...] = (4,)
    # n-scaling
    n_list: tuple[int, ...] = (2500, 5000, 10000, 20000, 40000)
    # complexity-table grid and critic-class constants
    eps_grid: tuple[float, ...] = (0.2, 0.1, 0.05)
    delta_grid: tuple[float, ...] = (0.1, 0.05, 0.01)
    complexity_d_k: int = 100
    complexity_K_k: float = 1.0
    complexity_L_k: float = 1.0
    complexity_M_k: float = 1.0

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; choose one of {EXPERIMENTS}"
            )
        if len(self.alphas) == 0:
            raise ValueError("alphas must be a non-empty list of orders")
        for a in self.alphas:
            AlphaOrder(float(a))  # rejects 0 and 1 with a clear message
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.experiment == "mi-sweep" and len(self.rhos) == 0:
            raise ValueError("rhos must be a non-empty list for mi-sweep")
        if self.experiment == "n-scaling":
            if len(self.n_list) == 0:
                raise ValueError("n_list must be a non-empty ascending list")
            if list(self.n_list) != sorted(self.n_list):
                raise ValueError("n_list must be ascending")
        if self.experiment == "complexity-table" and (
            len(self.eps_grid) == 0 or len(self.delta_grid) == 0
        ):
            raise ValueError("eps_grid and delta_grid must be non-empty")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.train is None:
            object.__setattr__(self, "train", _default_train(self.experiment))


def _default_train(experiment: str) -> TrainConfig:
    alpha = AlphaOrder(0.5)
    if experiment == "gaussian-1d":
        return TrainConfig(
            alpha=alpha, critic=CriticConfig("mlp", (32,)), n_samples=20_000,
            minibatch=512, steps=3000, learning_rate=1e-3,
        )
    if experiment == "embedding":
        return TrainConfig(
            alpha=alpha, critic=CriticConfig("mlp", (128,)), n_samples=20_000,
            minibatch=1000, steps=5000, learning_rate=1e-3, eval_interval=25,
        )
    if experiment == "mi-sweep":
        # A lean critic on a large fixed sample: small correlations carry tiny
        # divergence values, and a wide network inflates them by overfitting.
        return TrainConfig(
            alpha=alpha, critic=CriticConfig("mlp", (32,)), n_samples=100_000,
            minibatch=1000, steps=2500, learning_rate=1e-3, eval_interval=50,
        )
    if experiment == "beta-expfam":
        return TrainConfig(
            alpha=alpha, critic=CriticConfig("expfam", statistic="beta"),
            n_samples=50_000, minibatch=1000, steps=3000, learning_rate=1e-2,
            eval_interval=10,
        )
    if experiment == "n-scaling":
        return TrainConfig(
            alpha=alpha, critic=CriticConfig("mlp", (32,)), n_samples=2500,
            minibatch=512, steps=1500, learning_rate=1e-3,
        )
    # complexity-table runs no training; keep a valid placeholder.
    return TrainConfig(alpha=alpha)


def default_config(experiment: str, seed: int = 0, out: str | None = None) -> ExperimentConfig:
    """Desk-scale defaults for each experiment."""
    base = ExperimentConfig(experiment=experiment, seed=seed, out=out)
    if experiment == "gaussian-1d":
        return replace(base, alphas=(0.3, 0.5, 0.7), repetitions=3)
    if experiment == "embedding":
        return replace(base, alphas=(0.5,), repetitions=3)
    if experiment == "mi-sweep":
        return replace(base, alphas=(0.5,), repetitions=1)
    if experiment == "beta-expfam":
        return replace(base, alphas=(0.2, 0.5, 0.8), repetitions=3)
    if experiment == "n-scaling":
        return replace(base, alphas=(0.5,), repetitions=3)
    return base


# ---------------------------------------------------------------------------
# Config (de)serialization


def config_to_dict(cfg: ExperimentConfig) -> dict:
    t = cfg.train
    return {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "alphas": list(cfg.alphas),
        "repetitions": cfg.repetitions,
        "out": cfg.out,
        "workers": cfg.workers,
        "q": cfg.q,
        "p": cfg.p,
        "embed_dim": cfg.embed_dim,
        "base_q": cfg.base_q,
        "base_p": cfg.base_p,
        "rhos": list(cfg.rhos),
        "block_dim": cfg.block_dim,
        "beta_dim": cfg.beta_dim,
        "ab_range": list(cfg.ab_range),
        "mlp_comparison_hidden": list(cfg.mlp_comparison_hidden),
        "n_list": list(cfg.n_list),
        "eps_grid": list(cfg.eps_grid),
        "delta_grid": list(cfg.delta_grid),
        "complexity_d_k": cfg.complexity_d_k,
        "complexity_K_k": cfg.complexity_K_k,
        "complexity_L_k": cfg.complexity_L_k,
        "complexity_M_k": cfg.complexity_M_k,
        "train": {
            "critic": {
                "kind": t.critic.kind,
                "hidden_dims": list(t.critic.hidden_dims),
                "statistic": t.critic.statistic,
            },
            "n_samples": t.n_samples,
            "minibatch": t.minibatch,
            "steps": t.steps,
            "learning_rate": t.learning_rate,
            "betas": list(t.betas),
            "eps": t.eps,
            "smoothing_window": t.smoothing_window,
            "param_bound": t.param_bound,
            "eval_interval": t.eval_interval,
        },
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build and validate a config from a JSON-style dict.

    Unknown keys are rejected so typos fail loudly.
    """
    if not isinstance(data, dict):
        raise ValueError("experiment config must be a JSON object")
    data = dict(data)
    train_data = data.pop("train", None)
    known = set(ExperimentConfig.__dataclass_fields__) - {"train"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in ("alphas", "rhos", "n_list", "eps_grid", "delta_grid", "ab_range",
                "mlp_comparison_hidden"):
        if key in data:
            data[key] = tuple(data[key])
    train = None
    if train_data is not None:
        train_data = dict(train_data)
        critic_data = train_data.pop("critic", {})
        critic = CriticConfig(
            kind=critic_data.get("kind", "mlp"),
            hidden_dims=tuple(critic_data.get("hidden_dims", (32,))),
            statistic=critic_data.get("statistic", "beta"),
        )
        if "betas" in train_data:
            train_data["betas"] = tuple(train_data["betas"])
        alpha = AlphaOrder(float(data.get("alphas", (0.5,))[0]))
        train = TrainConfig(alpha=alpha, critic=critic, **train_data)
    return ExperimentConfig(train=train, **data)


# ---------------------------------------------------------------------------
# Task execution


@dataclass(frozen=True)
class _Task:
    experiment: str
    alpha: float
    run_index: int
    seed: int
    train: TrainConfig
    mode: str  # "pair" or "mi"
    q_config: dict
    p_config: dict | None
    exact: float | None


def _execute_task(task: _Task) -> ResultRow:
    start = time.perf_counter()
    if task.mode == "mi":
        joint = distribution_from_config(task.q_config)
        trace = estimate_mutual_information(joint, task.train)
    else:
        q = distribution_from_config(task.q_config)
        p = distribution_from_config(task.p_config)
        trace = train_estimator(q, p, task.train)
    wall = time.perf_counter() - start
    return ResultRow.build(
        task.experiment, task.alpha, task.run_index, task.seed,
        trace.smoothed_estimate, task.exact, trace.converged, wall,
    )


def _run_tasks(tasks: list[_Task], workers: int) -> list[ResultRow]:
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_execute_task, tasks))
    else:
        rows = [_execute_task(t) for t in tasks]
    return sorted(rows, key=ResultRow.key)


def _train_for(cfg: ExperimentConfig, alpha: float, seed: int, **overrides) -> TrainConfig:
    return replace(cfg.train, alpha=AlphaOrder(alpha), seed=seed, **overrides)


# ---------------------------------------------------------------------------
# Experiment task builders


def _gaussian_1d_tasks(cfg: ExperimentConfig) -> list[_Task]:
    q = distribution_from_config(cfg.q)
    p = distribution_from_config(cfg.p)
    tasks = []
    for alpha in cfg.alphas:
        exact = renyi_exact(q, p, AlphaOrder(alpha))
        for rep in range(cfg.repetitions):
            seed = derive_seed(cfg.seed, "gaussian-1d", repr(alpha), rep)
            tasks.append(_Task(
                "gaussian-1d", alpha, rep, seed, _train_for(cfg, alpha, seed),
                "pair", cfg.q, cfg.p, exact,
            ))
    return tasks


def _embedding_tasks(cfg: ExperimentConfig) -> list[_Task]:
    base_q = distribution_from_config(cfg.base_q)
    base_p = distribution_from_config(cfg.base_p)
    if cfg.embed_dim > 64:
        raise ValueError("embedding output dimension is capped at 64 at desk scale")
    tasks = []
    for alpha in cfg.alphas:
        # An injective embedding leaves the divergence unchanged, so the
        # reference value lives on the low-dimensional base pair.
        exact = renyi_exact(base_q, base_p, AlphaOrder(alpha))
        for rep in range(cfg.repetitions):
            seed = derive_seed(cfg.seed, "embedding", repr(alpha), rep)
            emb_seed = derive_seed(cfg.seed, "embedding-map", repr(alpha), rep)
            emb = {"input_dim": base_q.dim, "output_dim": cfg.embed_dim, "seed": emb_seed}
            q_cfg = {"type": "pushforward", "base": cfg.base_q, "embedding": emb}
            p_cfg = {"type": "pushforward", "base": cfg.base_p, "embedding": emb}
            tasks.append(_Task(
                "embedding", alpha, rep, seed, _train_for(cfg, alpha, seed),
                "pair", q_cfg, p_cfg, exact,
            ))
    return tasks


def _mi_sweep_tasks(cfg: ExperimentConfig) -> list[_Task]:
    tasks = []
    for alpha in cfg.alphas:
        for rho in cfg.rhos:
            joint = JointCorrelatedGaussian(cfg.block_dim, rho)
            exact = renyi_gaussian_exact(
                joint.joint_spec, joint.product_spec, AlphaOrder(alpha)
            )
            for rep in range(cfg.repetitions):
                seed = derive_seed(cfg.seed, "mi-sweep", repr(alpha), repr(rho), rep)
                tasks.append(_Task(
                    f"mi-sweep[rho={rho}]", alpha, rep, seed,
                    _train_for(cfg, alpha, seed), "mi", joint.to_config(), None, exact,
                ))
    return tasks


def _beta_expfam_tasks(cfg: ExperimentConfig) -> list[_Task]:
    if cfg.beta_dim > 25:
        raise ValueError("beta-expfam dimension is capped at 25 at desk scale")
    lo, hi = cfg.ab_range
    tasks = []
    for alpha in cfg.alphas:
        for rep in range(cfg.repetitions):
            seed = derive_seed(cfg.seed, "beta-expfam", repr(alpha), rep)
            gen = np.random.Generator(np.random.Philox(
                derive_seed(cfg.seed, "beta-params", repr(alpha), rep)
            ))
            shapes = gen.uniform(lo, hi, size=(4, cfg.beta_dim))
            q = BetaProduct(BetaProductSpec(shapes[0], shapes[1]))
            p = BetaProduct(BetaProductSpec(shapes[2], shapes[3]))
            exact = renyi_exact(q, p, AlphaOrder(alpha))
            expfam_train = _train_for(
                cfg, alpha, seed,
                critic=CriticConfig("expfam", statistic="beta"),
            )
            mlp_train = _train_for(
                cfg, alpha, seed,
                critic=CriticConfig("mlp", cfg.mlp_comparison_hidden),
            )
            tasks.append(_Task(
                "beta-expfam[critic=expfam]", alpha, rep, seed, expfam_train,
                "pair", q.to_config(), p.to_config(), exact,
            ))
            tasks.append(_Task(
                "beta-expfam[critic=mlp]", alpha, rep, seed, mlp_train,
                "pair", q.to_config(), p.to_config(), exact,
            ))
    return tasks


def _n_scaling_tasks(cfg: ExperimentConfig) -> list[_Task]:
    q = distribution_from_config(cfg.q)
    p = distribution_from_config(cfg.p)
    tasks = []
    for alpha in cfg.alphas:
        exact = renyi_exact(q, p, AlphaOrder(alpha))
        for n in cfg.n_list:
            for rep in range(cfg.repetitions):
                seed = derive_seed(cfg.seed, "n-scaling", repr(alpha), n, rep)
                train = _train_for(
                    cfg, alpha, seed,
                    n_samples=int(n), minibatch=min(cfg.train.minibatch, int(n)),
                )
                tasks.append(_Task(
                    f"n-scaling[n={n}]", alpha, rep, seed, train,
                    "pair", cfg.q, cfg.p, exact,
                ))
    return tasks


_TASK_BUILDERS = {
    "gaussian-1d": _gaussian_1d_tasks,
    "embedding": _embedding_tasks,
    "mi-sweep": _mi_sweep_tasks,
    "beta-expfam": _beta_expfam_tasks,
    "n-scaling": _n_scaling_tasks,
}


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    extras: dict


def run_gaussian_1d(cfg: ExperimentConfig) -> list[ResultRow]:
    return _run_tasks(_gaussian_1d_tasks(cfg), cfg.workers)


def run_embedding_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Train on embedded samples; reference values come from the base pair."""
    return _run_tasks(_embedding_tasks(cfg), cfg.workers)


def run_mi_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    return _run_tasks(_mi_sweep_tasks(cfg), cfg.workers)


def run_beta_expfam(cfg: ExperimentConfig) -> list[ResultRow]:
    """Exponential-family critic versus a small MLP on the same Beta pairs."""
    return _run_tasks(_beta_expfam_tasks(cfg), cfg.workers)


def scaling_slope(rows: list[ResultRow]) -> float:
    """Least-squares slope of log mean relative error against log n."""
    by_n: dict[int, list[float]] = {}
    for r in rows:
        if r.experiment.startswith("n-scaling[n="):
            n = int(r.experiment[len("n-scaling[n="):-1])
            by_n.setdefault(n, []).append(r.rel_error)
    if len(by_n) < 2:
        raise ValueError("need at least two n values to fit a slope")
    ns = sorted(by_n)
    mean_err = [float(np.mean(by_n[n])) for n in ns]
    slope = float(np.polyfit(np.log(ns), np.log(mean_err), 1)[0])
    return slope


def run_n_scaling(cfg: ExperimentConfig) -> tuple[list[ResultRow], float]:
    """Per-n rows plus the fitted log-log decay slope (reported, not asserted)."""
    rows = _run_tasks(_n_scaling_tasks(cfg), cfg.workers)
    return rows, scaling_slope(rows)


def complexity_table(cfg: ExperimentConfig) -> list[dict]:
    """Sufficient-sample-size table over the (epsilon, delta) grid."""
    alpha = AlphaOrder(cfg.alphas[0])
    table = []
    for eps in cfg.eps_grid:
        for delta in cfg.delta_grid:
            bound = sample_complexity_bound(ComplexityInput(
                epsilon=eps, delta=delta, d_k=cfg.complexity_d_k,
                K_k=cfg.complexity_K_k, L_k=cfg.complexity_L_k,
                M_k=cfg.complexity_M_k, alpha=alpha,
            ))
            table.append({
                "epsilon": eps,
                "delta": delta,
                "n_samples": bound.n_samples,
                "raw": bound.raw,
                "astronomically_large": bound.astronomically_large,
            })
    return table


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Dispatch on the experiment id; returns rows plus experiment extras."""
    if cfg.experiment == "complexity-table":
        return ExperimentResult(rows=[], extras={"table": complexity_table(cfg)})
    if cfg.experiment == "n-scaling":
        rows, slope = run_n_scaling(cfg)
        return ExperimentResult(rows=rows, extras={"slope": slope})
    rows = _run_tasks(_TASK_BUILDERS[cfg.experiment](cfg), cfg.workers)
    return ExperimentResult(rows=rows, extras={})


def reproduce_estimate(cfg: ExperimentConfig, row: ResultRow) -> float:
    """Re-run the single task behind ``row`` and return the fresh estimate.

    The task list is rebuilt deterministically from the config, so the value
    must match the recorded estimate exactly.
    """
    tasks = _TASK_BUILDERS[cfg.experiment](cfg)
    for task in tasks:
        if (task.experiment, task.alpha, task.run_index) == row.key():
            return _execute_task(task).estimate
    raise ValueError(f"no task matches row {row.key()!r}")
