"""Batch baselines: projected gradient descent with trace regularization,
plus the mini-batch re-solving protocol used for online comparisons."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .core import (
    Kernel,
    LossModel,
    Triplet,
    grad_weights,
    total_loss,
    triplet_array,
)
from .errors import DivergenceError


@dataclass
class BatchConfig:
    model: LossModel = LossModel.GNMDS
    tau: float = 0.0           # trace regularization weight
    delta: float = 0.05        # fixed learning rate within a solve
    max_iters: int = 1000
    obj_tol: float = 1e-7
    init: Kernel | None = None  # None -> identity; else warm start (copied)

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.max_iters < 1 or self.obj_tol <= 0:
            raise ValueError("max_iters >= 1 and obj_tol > 0 required")


def batch_gradient(model: LossModel, k: Kernel, triplets: Sequence[Triplet],
                   tau: float) -> np.ndarray:
    """Sum of weighted per-comparison gradient patterns plus tau on the
    diagonal.  Dense symmetric (n, n) result."""
    n = k.n
    grad = np.zeros((n, n))
    if len(triplets) > 0:
        t_arr = triplet_array(triplets)
        w = grad_weights(model, k.mat, t_arr)
        a, b, c = t_arr[:, 0], t_arr[:, 1], t_arr[:, 2]
        np.add.at(grad, (a, b), -2.0 * w)
        np.add.at(grad, (b, a), -2.0 * w)
        np.add.at(grad, (a, c), 2.0 * w)
        np.add.at(grad, (c, a), 2.0 * w)
        np.add.at(grad, (b, b), w)
        np.add.at(grad, (c, c), -w)
    if tau != 0.0:
        grad[np.diag_indices(n)] += tau
    return grad


def project_psd_full(mat: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues to zero."""
    vals, vecs = linalg.full_eigendecomposition(mat)
    clipped = np.maximum(vals, 0.0)
    out = (vecs * clipped) @ vecs.T
    return 0.5 * (out + out.T)  # kill rounding asymmetry


def objective(model: LossModel, k: Kernel, triplets: Sequence[Triplet],
              tau: float) -> float:
    return total_loss(model, k, triplets) + tau * float(np.trace(k.mat))


@dataclass(frozen=True)
class BatchResult:
    kernel: Kernel
    iterations: int
    final_objective: float
    objective_delta: float
    converged: bool  # stopped on objective change rather than the cap


def solve_batch(config: BatchConfig, triplets: Sequence[Triplet], n: int) -> BatchResult:
    """Projected gradient descent until the objective change falls below
    obj_tol or max_iters is hit."""
    if len(triplets) == 0:
        raise ValueError("need at least one triplet")
    k = config.init.copy() if config.init is not None else Kernel.identity(n)
    obj = objective(config.model, k, triplets, config.tau)
    obj0 = max(obj, 1e-12)
    delta_obj = float("inf")
    it = 0
    for it in range(1, config.max_iters + 1):
        grad = batch_gradient(config.model, k, triplets, config.tau)
        k.mat = project_psd_full(k.mat - config.delta * grad)
        new_obj = objective(config.model, k, triplets, config.tau)
        if new_obj > 1e6 * obj0:
            raise DivergenceError(
                f"objective grew to {new_obj:.3g} from {obj0:.3g}; reduce delta"
            )
        delta_obj = abs(new_obj - obj)
        obj = new_obj
        if delta_obj < config.obj_tol:
            break
    k.eig_lower_bound = 0.0
    return BatchResult(k, it, obj, delta_obj, delta_obj < config.obj_tol)


def minibatch_run(
    stream: Sequence[Triplet],
    m: int,
    config: BatchConfig,
    n: int,
    eval_hook: Callable[[Kernel, int], None] | None = None,
    warm_start: bool = False,
) -> list[Kernel]:
    """Re-solve on the full prefix after every m new comparisons.

    A partial final chunk is flushed with one last solve.  Cold-starts
    from identity per solve unless warm_start, which chains solutions.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    solutions: list[Kernel] = []
    prev: Kernel | None = config.init
    cut_points = list(range(m, len(stream) + 1, m))
    if not cut_points or cut_points[-1] != len(stream):
        cut_points.append(len(stream))
    for cut in cut_points:
        cfg = BatchConfig(config.model, config.tau, config.delta,
                          config.max_iters, config.obj_tol,
                          init=prev if warm_start else config.init)
        result = solve_batch(cfg, stream[:cut], n)
        solutions.append(result.kernel)
        if warm_start:
            prev = result.kernel
        if eval_hook is not None:
            eval_hook(result.kernel, cut)
    return solutions
