import csv
import json
from pathlib import Path

import numpy as np
import pytest

from rckl.core import Kernel, Triplet
from rckl.data import gen_points, gram_matrix, oracle_answer_many, sample_queries
from rckl.errors import EmptySetError
from rckl.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    aggregate,
    kernel_rank,
    normalized_error,
    run_experiment,
)


def test_normalized_error_identity_is_one():
    k = Kernel.identity(5)
    triplets = [Triplet(0, 1, 2), Triplet(3, 4, 0)]
    assert normalized_error(k, triplets) == 1.0  # ties are unsatisfied


def test_normalized_error_gram_oracle_is_zero():
    cloud = gen_points(12, 4, 3)
    triplets = oracle_answer_many(cloud, sample_queries(12, 300, 4))
    assert normalized_error(Kernel(gram_matrix(cloud)), triplets) == 0.0


def test_normalized_error_fraction():
    mat = np.eye(3)
    mat[1, 1] = 0.0  # satisfies (0,1,2), not (0,2,1)
    k = Kernel(mat)
    trips = [Triplet(0, 1, 2)] * 9 + [Triplet(0, 2, 1)]
    assert normalized_error(k, trips) == pytest.approx(0.1)


def test_normalized_error_empty():
    with pytest.raises(EmptySetError):
        normalized_error(Kernel.identity(3), [])


def test_kernel_rank():
    assert kernel_rank(Kernel.identity(10)) == 10
    v = np.arange(1.0, 6.0)
    assert kernel_rank(Kernel(np.outer(v, v))) == 1
    cloud = gen_points(20, 5, 1)
    assert kernel_rank(Kernel(gram_matrix(cloud))) == 5


def smoke_config(tmp_path, **kw):
    base = dict(
        methods=["pa-erkle"],
        n=10, d=3,
        train_count=200, val_count=50, test_count=100,
        eval_every=100,
        seeds=[0],
        out=str(tmp_path / "metrics.csv"),
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_run_experiment_smoke(tmp_path):
    config = smoke_config(tmp_path)
    rows = run_experiment(config)
    assert len(rows) == 2
    assert [r.observed_count for r in rows] == [100, 200]
    assert all(0.0 <= r.test_error <= 1.0 for r in rows)
    with open(config.out) as fh:
        reader = csv.reader(fh)
        assert next(reader) == CSV_COLUMNS
        assert len(list(reader)) == 2
    manifest = json.loads(Path(config.out).with_suffix(".manifest.json").read_text())
    assert manifest["config"]["n"] == 10
    assert "version" in manifest


def test_run_experiment_deterministic(tmp_path):
    rows = []
    for tag in ("a", "b"):
        config = smoke_config(
            tmp_path,
            methods=["pa-erkle", "ste-erkle", "gnmds-batch"],
            beta=3,
            tau_grid=[0.0, 0.1],
            delta_grid=[0.02],
            minibatch=100,
            batch_max_iters=100,
            seeds=[0, 1],
            out=str(tmp_path / f"{tag}.csv"),
        )
        rows.append(run_experiment(config))
    for ra, rb in zip(rows[0], rows[1]):
        assert ra.method == rb.method and ra.trial == rb.trial
        assert ra.observed_count == rb.observed_count
        assert ra.test_error == rb.test_error
        assert ra.train_error == rb.train_error
        assert ra.kernel_rank == rb.kernel_rank
        assert ra.eig_computations == rb.eig_computations
        assert ra.projections_applied == rb.projections_applied


def test_evaluation_is_pure():
    cloud = gen_points(10, 3, 5)
    k = Kernel(gram_matrix(cloud))
    before = k.mat.copy()
    triplets = oracle_answer_many(cloud, sample_queries(10, 100, 6))
    e1 = normalized_error(k, triplets)
    e2 = normalized_error(k, triplets)
    assert e1 == e2
    assert np.array_equal(k.mat, before)


def test_batch_rows_and_counts(tmp_path):
    config = smoke_config(
        tmp_path,
        methods=["gnmds-batch"],
        tau_grid=[0.0],
        delta_grid=[0.02],
        minibatch=80,
        batch_max_iters=60,
    )
    rows = run_experiment(config)
    assert [r.observed_count for r in rows] == [80, 160, 200]


def test_aggregate(tmp_path):
    config = smoke_config(tmp_path, seeds=[0, 1, 2])
    run_experiment(config)
    out = tmp_path / "agg.csv"
    aggregate(config.out, out)
    with open(out) as fh:
        recs = list(csv.DictReader(fh))
    assert len(recs) == 2  # two evaluation points
    assert all(r["trials"] == "3" for r in recs)
    assert all(float(r["test_error_ci95"]) >= 0.0 for r in recs)


def test_unknown_method_rejected(tmp_path):
    with pytest.raises(ValueError):
        smoke_config(tmp_path, methods=["mystery-method"])
