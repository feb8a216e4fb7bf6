"""Experiment driver: metrics, hyperparameter grids, CSV/JSON emission.

Runs are declarative (ExperimentConfig) and fully seeded, so rerunning a
config reproduces every non-timing CSV column bit for bit.  Timing covers
update calls only; evaluation sits outside the clock.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .batch import BatchConfig, solve_batch
from .core import Kernel, LossModel, Triplet, distance_gaps, triplet_array
from .data import (
    gen_points,
    load_triplets,
    oracle_answer_many,
    sample_distinct_queries,
    split,
)
from .errors import DivergenceError, EmptySetError
from .linalg import full_eigendecomposition
from .online import OnlineLearner, PolicyKind, StepPolicy


def normalized_error(k: Kernel, triplets: Sequence[Triplet]) -> float:
    """Fraction of comparisons the kernel fails to satisfy (strictly)."""
    if len(triplets) == 0:
        raise EmptySetError("cannot normalize over an empty triplet set")
    gaps = distance_gaps(k.mat, triplet_array(triplets))
    return float(np.count_nonzero(gaps >= 0.0)) / len(triplets)


def kernel_rank(k: Kernel, rel_tol: float = 1e-6) -> int:
    """Number of eigenvalues above rel_tol times the largest."""
    vals, _ = full_eigendecomposition(k.mat)
    top = vals[0]
    if top <= 0:
        return 0
    return int(np.count_nonzero(vals > rel_tol * top))


CSV_COLUMNS = [
    "method", "trial", "observed_count", "test_error", "train_error",
    "kernel_rank", "cumulative_seconds", "eig_computations",
    "projections_applied",
]


@dataclass(frozen=True)
class MetricsRow:
    method: str
    trial: int
    observed_count: int
    test_error: float
    train_error: float
    kernel_rank: int
    cumulative_seconds: float
    eig_computations: int
    projections_applied: int

    def as_list(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


# Method names: "pa-erkle", "pa-ste-erkle", "ste-erkle", "gnmds-erkle"
# (constant rate), schedule suffixes "-invj" / "-invsqrtj", and the batch
# baselines "gnmds-batch", "ste-batch".

ONLINE_METHODS = {
    "pa-erkle", "pa-ste-erkle",
    "ste-erkle", "gnmds-erkle",
    "ste-erkle-invj", "gnmds-erkle-invj",
    "ste-erkle-invsqrtj", "gnmds-erkle-invsqrtj",
}
BATCH_METHODS = {"gnmds-batch", "ste-batch"}


@dataclass
class ExperimentConfig:
    methods: list[str]
    # dataset: synthetic cloud unless triplet_file is given
    n: int = 100
    d: int = 50
    data_seed: int = 7
    triplet_file: str | None = None
    train_count: int = 10000
    val_count: int = 1000
    test_count: int = 20000
    # policy / model parameters
    beta: int = 1
    p: float = 0.73  # PA_STE target probability
    delta0: float = 1.0  # base rate for schedules and constant-rate runs
    tau_grid: list[float] = field(default_factory=lambda: list(np.logspace(-2, 2, 10)))
    delta_grid: list[float] = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.5])
    minibatch: int = 100
    batch_max_iters: int = 1000
    batch_obj_tol: float = 1e-7
    # protocol
    eval_every: int = 100
    seeds: list[int] = field(default_factory=lambda: [0])
    out: str = "metrics.csv"

    def __post_init__(self):
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        unknown = set(self.methods) - ONLINE_METHODS - BATCH_METHODS
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")

    @property
    def trials(self) -> int:
        return len(self.seeds)


def _policy_for(method: str, config: ExperimentConfig) -> tuple[LossModel, StepPolicy]:
    if method == "pa-erkle":
        return LossModel.GNMDS, StepPolicy.pa_gnmds()
    if method == "pa-ste-erkle":
        return LossModel.STE, StepPolicy.pa_ste(config.p)
    base, _, sched = method.partition("-erkle")
    model = LossModel.STE if base == "ste" else LossModel.GNMDS
    if sched == "-invj":
        return model, StepPolicy.inverse_j(config.delta0)
    if sched == "-invsqrtj":
        return model, StepPolicy.inverse_sqrt_j(config.delta0)
    return model, StepPolicy.constant(config.delta0)


def _trial_data(config: ExperimentConfig, seed: int):
    """Disjoint train/val/test triplet lists for one trial."""
    if config.triplet_file is not None:
        tf = load_triplets(config.triplet_file)
        train, val, test = split(
            tf.rows, (config.train_count, config.val_count, config.test_count), seed
        )
        return tf.n_declared, train, val, test
    cloud = gen_points(config.n, config.d, config.data_seed)
    total = config.train_count + config.val_count + config.test_count
    queries = sample_distinct_queries(config.n, total, seed)
    triplets = oracle_answer_many(cloud, queries)
    train = triplets[: config.train_count]
    val = triplets[config.train_count: config.train_count + config.val_count]
    test = triplets[config.train_count + config.val_count:]
    return config.n, train, val, test


def _run_online(method: str, config: ExperimentConfig, trial: int, seed: int,
                n: int, train, test) -> Iterable[MetricsRow]:
    model, policy = _policy_for(method, config)
    learner = OnlineLearner.create(n, model, policy, config.beta, seed)
    elapsed = 0.0
    for i, t in enumerate(train, start=1):
        t0 = time.perf_counter()
        learner.observe_with_replay(t)
        elapsed += time.perf_counter() - t0
        if i % config.eval_every == 0 or i == len(train):
            yield MetricsRow(
                method, trial, i,
                normalized_error(learner.kernel, test),
                normalized_error(learner.kernel, train[:i]),
                kernel_rank(learner.kernel),
                elapsed,
                learner.stats.eig_computations,
                learner.stats.projections_applied,
            )


def select_batch_params(model: LossModel, config: ExperimentConfig, n: int,
                        train, val) -> tuple[float, float]:
    """Pick (tau, delta) minimizing validation error of a full-train solve.

    Ties prefer smaller tau, then smaller delta; diverging grid points are
    discarded.
    """
    best = None
    for tau in sorted(config.tau_grid):
        for delta in sorted(config.delta_grid):
            cfg = BatchConfig(model, tau, delta, config.batch_max_iters,
                              config.batch_obj_tol)
            try:
                result = solve_batch(cfg, train, n)
            except DivergenceError:
                continue
            err = normalized_error(result.kernel, val)
            if best is None or err < best[0]:
                best = (err, tau, delta)
    if best is None:
        raise DivergenceError("every (tau, delta) grid point diverged")
    return best[1], best[2]


def _run_batch(method: str, config: ExperimentConfig, trial: int,
               n: int, train, val, test) -> Iterable[MetricsRow]:
    model = LossModel.STE if method.startswith("ste") else LossModel.GNMDS
    tau, delta = select_batch_params(model, config, n, train, val)
    cfg = BatchConfig(model, tau, delta, config.batch_max_iters, config.batch_obj_tol)
    elapsed = 0.0
    cuts = list(range(config.minibatch, len(train) + 1, config.minibatch))
    if not cuts or cuts[-1] != len(train):
        cuts.append(len(train))
    for cut in cuts:
        t0 = time.perf_counter()
        result = solve_batch(cfg, train[:cut], n)
        elapsed += time.perf_counter() - t0
        yield MetricsRow(
            method, trial, cut,
            normalized_error(result.kernel, test),
            normalized_error(result.kernel, train[:cut]),
            kernel_rank(result.kernel),
            elapsed, 0, 0,
        )


def run_experiment(config: ExperimentConfig) -> list[MetricsRow]:
    """Run every (trial, method) pair, streaming rows to the CSV as they
    are produced, and write a JSON manifest next to it."""
    out = Path(config.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config": dataclasses.asdict(config),
        "version": __version__,
    }
    out.with_suffix(".manifest.json").write_text(json.dumps(manifest, indent=2))

    rows: list[MetricsRow] = []
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for trial, seed in enumerate(config.seeds):
            n, train, val, test = _trial_data(config, seed)
            for method in config.methods:
                if method in ONLINE_METHODS:
                    produced = _run_online(method, config, trial, seed, n, train, test)
                else:
                    produced = _run_batch(method, config, trial, n, train, val, test)
                for row in produced:
                    rows.append(row)
                    writer.writerow(row.as_list())
                    fh.flush()
    return rows


def aggregate(in_csv: str | Path, out_csv: str | Path) -> None:
    """Mean and 95% confidence half-width per (method, observed_count),
    across trials."""
    from scipy import stats as st

    groups: dict[tuple[str, int], list[dict]] = {}
    with open(in_csv, newline="") as fh:
        for rec in csv.DictReader(fh):
            key = (rec["method"], int(rec["observed_count"]))
            groups.setdefault(key, []).append(rec)

    metric_cols = ["test_error", "train_error", "kernel_rank", "cumulative_seconds"]
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["method", "observed_count", "trials"]
        for c in metric_cols:
            header += [f"{c}_mean", f"{c}_ci95"]
        writer.writerow(header)
        for (method, count), recs in sorted(groups.items()):
            row = [method, count, len(recs)]
            for c in metric_cols:
                vals = np.array([float(r[c]) for r in recs])
                mean = float(vals.mean())
                if len(vals) > 1:
                    half = float(st.t.ppf(0.975, len(vals) - 1)
                                 * vals.std(ddof=1) / np.sqrt(len(vals)))
                else:
                    half = 0.0
                row += [mean, half]
            writer.writerow(row)
