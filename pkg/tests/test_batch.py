import numpy as np
import pytest

from rckl import core
from rckl.batch import (
    BatchConfig,
    batch_gradient,
    minibatch_run,
    project_psd_full,
    solve_batch,
)
from rckl.core import Kernel, LossModel, Triplet
from rckl.data import gen_points, gram_matrix, oracle_answer_many, sample_queries
from rckl.errors import DivergenceError
from rckl.harness import normalized_error


def random_kernel(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n))
    return Kernel(x @ x.T / n)


def synthetic_triplets(n, d, count, seed):
    cloud = gen_points(n, d, seed)
    return oracle_answer_many(cloud, sample_queries(n, count, seed + 1)), cloud


def test_batch_gradient_empty():
    k = Kernel.identity(5)
    assert np.array_equal(batch_gradient(LossModel.STE, k, [], 0.0), np.zeros((5, 5)))


def test_batch_gradient_single_triplet():
    k = Kernel.identity(5)
    t = Triplet(0, 1, 2)
    g = batch_gradient(LossModel.STE, k, [t], 0.0)
    f = core.grad_weight(LossModel.STE, k, t)
    assert np.allclose(g, f * core.canonical_gradient(5, t), atol=1e-14)
    assert np.count_nonzero(g) == 6


def test_batch_gradient_matches_finite_differences():
    from rckl.linalg import sym_set

    k = random_kernel(6, 2)
    rng = np.random.default_rng(1)
    triplets = [Triplet(*(int(i) for i in rng.permutation(6)[:3])) for _ in range(20)]
    tau = 0.3
    g = batch_gradient(LossModel.STE, k, triplets, tau)
    eps = 1e-6
    for i in range(6):
        for j in range(i, 6):
            orig = k.mat[i, j]
            sym_set(k.mat, i, j, orig + eps)
            hi = core.total_loss(LossModel.STE, k, triplets) + tau * np.trace(k.mat)
            sym_set(k.mat, i, j, orig - eps)
            lo = core.total_loss(LossModel.STE, k, triplets) + tau * np.trace(k.mat)
            sym_set(k.mat, i, j, orig)
            assert g[i, j] == pytest.approx((hi - lo) / (2 * eps), abs=1e-5)


def test_batch_gradient_matches_step_pattern():
    """Cross-module: summed gradient equals accumulated step perturbations."""
    k = random_kernel(8, 5)
    rng = np.random.default_rng(3)
    triplets = [Triplet(*(int(i) for i in rng.permutation(8)[:3])) for _ in range(15)]
    g = batch_gradient(LossModel.GNMDS, k, triplets, 0.0)
    acc = Kernel(np.zeros((8, 8)))
    for t in triplets:
        w = core.grad_weight(LossModel.GNMDS, k, t)
        core.apply_gradient_step(acc, t, -w)  # -gamma accumulates +w*G
    assert np.array_equal(g, acc.mat)


def test_project_psd_full_diag():
    assert np.allclose(project_psd_full(np.diag([2.0, -3.0])), np.diag([2.0, 0.0]))


def test_project_psd_full_idempotent():
    rng = np.random.default_rng(7)
    m = rng.standard_normal((15, 15))
    m = 0.5 * (m + m.T)
    once = project_psd_full(m)
    assert np.linalg.norm(project_psd_full(once) - once, "fro") < 1e-10
    psd = random_kernel(6, 8).mat
    assert np.linalg.norm(project_psd_full(psd) - psd, "fro") < 1e-10


def test_solve_batch_single_triplet_reaches_margin():
    cfg = BatchConfig(LossModel.GNMDS, tau=0.0, delta=0.05, max_iters=2000)
    result = solve_batch(cfg, [Triplet(0, 1, 2)], 3)
    k = result.kernel
    gap = core.sq_distance(k, 0, 2) - core.sq_distance(k, 0, 1)
    assert gap >= 1.0 - 1e-6
    assert np.linalg.eigvalsh(k.mat)[0] >= -1e-8


def test_solve_batch_large_tau_shrinks_kernel():
    rng = np.random.default_rng(11)
    triplets = [Triplet(*(int(i) for i in rng.permutation(6)[:3])) for _ in range(10)]
    cfg = BatchConfig(LossModel.GNMDS, tau=10.0, delta=0.01, max_iters=500)
    result = solve_batch(cfg, triplets, 6)
    assert np.trace(result.kernel.mat) < 0.1


def test_solve_batch_objective_not_above_identity_init():
    triplets, _ = synthetic_triplets(12, 4, 200, 0)
    cfg = BatchConfig(LossModel.STE, tau=0.1, delta=0.002, max_iters=300)
    result = solve_batch(cfg, triplets, 12)
    ident = core.total_loss(LossModel.STE, Kernel.identity(12), triplets) + 0.1 * 12
    assert result.final_objective <= ident


def test_solve_batch_divergence_detected():
    # conflicting triplets plus an absurd rate push the objective past
    # the 1e6x guard instead of looping silently
    conflict = [Triplet(0, 1, 2), Triplet(0, 1, 2), Triplet(0, 2, 1)]
    cfg = BatchConfig(LossModel.STE, tau=0.0, delta=1e8, max_iters=50)
    with pytest.raises(DivergenceError):
        solve_batch(cfg, conflict, 3)


def test_solve_batch_conflict_free_reaches_zero_train_error():
    triplets, _ = synthetic_triplets(12, 3, 300, 6)
    cfg = BatchConfig(LossModel.GNMDS, tau=0.0, delta=0.002, max_iters=2000)
    result = solve_batch(cfg, triplets, 12)
    assert normalized_error(result.kernel, triplets) == 0.0


def test_minibatch_chunking():
    triplets, _ = synthetic_triplets(8, 3, 300, 9)
    cfg = BatchConfig(LossModel.GNMDS, tau=0.0, delta=0.02, max_iters=50)
    counts = []
    sols = minibatch_run(triplets, 100, cfg, 8, eval_hook=lambda k, c: counts.append(c))
    assert counts == [100, 200, 300]
    assert len(sols) == 3


def test_minibatch_flushes_partial_chunk():
    triplets, _ = synthetic_triplets(8, 3, 50, 10)
    cfg = BatchConfig(LossModel.GNMDS, tau=0.0, delta=0.02, max_iters=50)
    counts = []
    minibatch_run(triplets, 100, cfg, 8, eval_hook=lambda k, c: counts.append(c))
    assert counts == [50]


def test_minibatch_deterministic():
    triplets, _ = synthetic_triplets(8, 3, 120, 12)
    cfg = BatchConfig(LossModel.STE, tau=0.01, delta=0.02, max_iters=100)
    a = minibatch_run(triplets, 60, cfg, 8)
    b = minibatch_run(triplets, 60, cfg, 8)
    for ka, kb in zip(a, b):
        assert np.array_equal(ka.mat, kb.mat)
