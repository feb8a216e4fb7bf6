"""Triplets, kernels, losses, and the sparse per-comparison gradient.

A comparison (a, b, c) asserts "a is more similar to b than to c".  A
kernel induces squared distances d2(a, b) = K[a,a] + K[b,b] - 2 K[a,b];
learning pushes d2(a, b) below d2(a, c) for every observed comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple, Sequence, TextIO

import numpy as np

from .errors import IndexOutOfRangeError, NonFiniteStepError


class Triplet(NamedTuple):
    """Ordered comparison: head a is more similar to b than to c."""

    a: int
    b: int
    c: int

    def validate(self, n: int) -> "Triplet":
        if len({self.a, self.b, self.c}) != 3:
            raise ValueError(f"triplet indices must be distinct: {self}")
        for idx in self:
            if not 0 <= idx < n:
                raise IndexOutOfRangeError(f"index {idx} out of range for n={n}")
        return self


class Query(NamedTuple):
    """A head object compared against an unordered pair of options."""

    head: int
    options: tuple[int, int]

    def validate(self, n: int) -> "Query":
        o1, o2 = self.options
        if o1 == o2 or self.head in self.options:
            raise ValueError(f"query indices must be distinct: {self}")
        for idx in (self.head, o1, o2):
            if not 0 <= idx < n:
                raise IndexOutOfRangeError(f"index {idx} out of range for n={n}")
        return self


class LossModel(str, Enum):
    STE = "ste"
    GNMDS = "gnmds"


@dataclass
class Kernel:
    """Symmetric PSD similarity matrix plus a conservative lower bound
    on its smallest eigenvalue (never above the true minimum)."""

    mat: np.ndarray
    eig_lower_bound: float = 0.0

    @classmethod
    def identity(cls, n: int) -> "Kernel":
        if n < 2:
            raise ValueError("kernel dimension must be at least 2")
        return cls(np.eye(n), 1.0)

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def copy(self) -> "Kernel":
        return Kernel(self.mat.copy(), self.eig_lower_bound)


def _check_index(n: int, *idx: int) -> None:
    for i in idx:
        if not 0 <= i < n:
            raise IndexOutOfRangeError(f"index {i} out of range for n={n}")


def sq_distance(k: Kernel, a: int, b: int) -> float:
    _check_index(k.n, a, b)
    m = k.mat
    return float(m[a, a] + m[b, b] - 2.0 * m[a, b])


def satisfies(k: Kernel, t: Triplet) -> bool:
    """Strict inequality: ties count as unsatisfied."""
    return sq_distance(k, t.a, t.b) < sq_distance(k, t.a, t.c)


def _distance_gap(k: Kernel, t: Triplet) -> float:
    """d2(a, b) - d2(a, c); negative means the comparison holds."""
    return sq_distance(k, t.a, t.b) - sq_distance(k, t.a, t.c)


def ste_prob(k: Kernel, t: Triplet) -> float:
    """Logistic probability that the comparison holds, overflow-safe."""
    gap = _distance_gap(k, t)
    if gap >= 0:
        z = math.exp(-gap)
        p = z / (1.0 + z)
    else:
        p = 1.0 / (1.0 + math.exp(gap))
    # keep the result in the open interval even for extreme gaps
    return min(max(p, 5e-324), 1.0 - 1e-16)


def loss(model: LossModel, k: Kernel, t: Triplet) -> float:
    gap = _distance_gap(k, t)
    if model is LossModel.STE:
        return float(np.logaddexp(0.0, gap))  # -log p, stable
    return max(0.0, gap + 1.0)


def total_loss(model: LossModel, k: Kernel, triplets: Sequence[Triplet]) -> float:
    if len(triplets) == 0:
        return 0.0
    gaps = distance_gaps(k.mat, triplet_array(triplets))
    if model is LossModel.STE:
        return float(np.sum(np.logaddexp(0.0, gaps)))
    return float(np.sum(np.maximum(0.0, gaps + 1.0)))


def grad_weight(model: LossModel, k: Kernel, t: Triplet) -> float:
    """Scalar weight on the canonical gradient pattern.

    STE: 1 - p (always in (0, 1)).  GNMDS: subgradient indicator of the
    hinge, active iff d2(a,b) - d2(a,c) + 1 > 0 (a tie at the margin is
    passive).
    """
    if model is LossModel.STE:
        return 1.0 - ste_prob(k, t)
    return 1.0 if _distance_gap(k, t) + 1.0 > 0.0 else 0.0


def apply_gradient_step(k: Kernel, t: Triplet, gamma: float) -> None:
    """In-place step K <- K - gamma * G(t), touching 8 entries.

    Shifts d2(a,b) by -5*gamma and d2(a,c) by +5*gamma exactly.  Does not
    restore PSD; the eigenvalue lower bound is loosened by 3*|gamma|
    (Weyl) and the caller decides whether to project.
    """
    if not math.isfinite(gamma):
        raise NonFiniteStepError(f"step magnitude must be finite, got {gamma}")
    a, b, c = t.validate(k.n)
    m = k.mat
    m[a, b] += 2.0 * gamma
    m[b, a] += 2.0 * gamma
    m[a, c] -= 2.0 * gamma
    m[c, a] -= 2.0 * gamma
    m[b, b] -= gamma
    m[c, c] += gamma
    k.eig_lower_bound -= 3.0 * abs(gamma)


def canonical_gradient(n: int, t: Triplet) -> np.ndarray:
    """Densified gradient pattern G(t): 8 nonzeros, eigenvalues {3, -3, 0}."""
    t.validate(n)
    g = np.zeros((n, n))
    g[t.a, t.b] = g[t.b, t.a] = -2.0
    g[t.a, t.c] = g[t.c, t.a] = 2.0
    g[t.b, t.b] = 1.0
    g[t.c, t.c] = -1.0
    return g


# --- vectorized helpers over triplet collections ---

def triplet_array(triplets: Sequence[Triplet] | np.ndarray) -> np.ndarray:
    arr = np.asarray(triplets, dtype=np.intp)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("expected an (m, 3) array of triplets")
    return arr


def distance_gaps(mat: np.ndarray, t_arr: np.ndarray) -> np.ndarray:
    """d2(a,b) - d2(a,c) for each row of an (m, 3) triplet array."""
    a, b, c = t_arr[:, 0], t_arr[:, 1], t_arr[:, 2]
    diag = np.diag(mat)
    d2ab = diag[a] + diag[b] - 2.0 * mat[a, b]
    d2ac = diag[a] + diag[c] - 2.0 * mat[a, c]
    return d2ab - d2ac


def grad_weights(model: LossModel, mat: np.ndarray, t_arr: np.ndarray) -> np.ndarray:
    gaps = distance_gaps(mat, t_arr)
    if model is LossModel.STE:
        # 1 - p = sigmoid(gap), computed stably on both tails
        out = np.empty_like(gaps)
        pos = gaps >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-gaps[pos]))
        z = np.exp(gaps[~pos])
        out[~pos] = z / (1.0 + z)
        return out
    return (gaps + 1.0 > 0.0).astype(float)


# --- kernel checkpoint format ---
# line 1: n; next n lines: rows of n floats; last line: "lower_bound <float>"

def save_kernel(k: Kernel, fh: TextIO) -> None:
    fh.write(f"{k.n}\n")
    for row in k.mat:
        fh.write(" ".join(repr(float(x)) for x in row) + "\n")
    fh.write(f"lower_bound {k.eig_lower_bound!r}\n")


def load_kernel(fh: TextIO) -> Kernel:
    n = int(fh.readline())
    mat = np.empty((n, n))
    for i in range(n):
        row = [float(x) for x in fh.readline().split()]
        if len(row) != n:
            raise ValueError(f"checkpoint row {i} has {len(row)} entries, expected {n}")
        mat[i] = row
    tag, value = fh.readline().split()
    if tag != "lower_bound":
        raise ValueError("checkpoint missing lower_bound line")
    return Kernel(mat, float(value))
