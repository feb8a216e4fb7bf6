"""Online learner: one comparison at a time in O(n^2).

Each observation takes a stochastic step along the sparse per-comparison
gradient, then restores positive semidefiniteness with a rank-1
correction built from the smallest eigenpair.  A running Weyl bound on
the smallest eigenvalue lets most updates skip the eigensolver entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import linalg
from .core import (
    Kernel,
    LossModel,
    Triplet,
    apply_gradient_step,
    grad_weight,
    sq_distance,
)
from .errors import InvalidPolicyParamError


class PolicyKind(Enum):
    CONSTANT = "constant"
    INVERSE_J = "inv_j"
    INVERSE_SQRT_J = "inv_sqrt_j"
    PA_GNMDS = "pa_gnmds"
    PA_STE = "pa_ste"


@dataclass(frozen=True)
class StepPolicy:
    """Step-size rule.  The PA (passive-aggressive) rules return zero when
    the comparison is already met by the required margin / probability and
    otherwise the smallest step that makes it exactly tight."""

    kind: PolicyKind
    delta: float = 1.0  # base rate for the schedule policies
    p: float = 0.0      # target probability for PA_STE

    def __post_init__(self):
        if self.kind in (PolicyKind.CONSTANT, PolicyKind.INVERSE_J, PolicyKind.INVERSE_SQRT_J):
            if self.delta <= 0:
                raise InvalidPolicyParamError("delta must be positive")
        if self.kind is PolicyKind.PA_STE and not 0.5 < self.p < 1.0:
            raise InvalidPolicyParamError("PA_STE needs 0.5 < p < 1")

    @classmethod
    def constant(cls, delta: float = 1.0) -> "StepPolicy":
        return cls(PolicyKind.CONSTANT, delta=delta)

    @classmethod
    def inverse_j(cls, delta0: float = 1.0) -> "StepPolicy":
        return cls(PolicyKind.INVERSE_J, delta=delta0)

    @classmethod
    def inverse_sqrt_j(cls, delta0: float = 1.0) -> "StepPolicy":
        return cls(PolicyKind.INVERSE_SQRT_J, delta=delta0)

    @classmethod
    def pa_gnmds(cls) -> "StepPolicy":
        return cls(PolicyKind.PA_GNMDS)

    @classmethod
    def pa_ste(cls, p: float) -> "StepPolicy":
        return cls(PolicyKind.PA_STE, p=p)

    @property
    def is_passive_aggressive(self) -> bool:
        return self.kind in (PolicyKind.PA_GNMDS, PolicyKind.PA_STE)


def step_size(policy: StepPolicy, model: LossModel, k: Kernel, t: Triplet, j: int) -> float:
    """Step size for observation j (1-based).

    PA rules: the active step shifts d2(a,b) - d2(a,c) by -10*delta, so
    the tight step is (gap + margin) / 10, floored at zero.  For PA_STE
    the margin is kappa = log(p) - log(1 - p); p = e/(1+e) gives kappa = 1
    and recovers the GNMDS rule.
    """
    if j < 1:
        raise ValueError("observation index must be >= 1")
    if policy.kind is PolicyKind.CONSTANT:
        return policy.delta
    if policy.kind is PolicyKind.INVERSE_J:
        return policy.delta / j
    if policy.kind is PolicyKind.INVERSE_SQRT_J:
        return policy.delta / math.sqrt(j)
    gap = sq_distance(k, t.a, t.b) - sq_distance(k, t.a, t.c)
    if policy.kind is PolicyKind.PA_GNMDS:
        return max(0.0, (gap + 1.0) / 10.0)
    kappa = math.log(policy.p) - math.log(1.0 - policy.p)
    return max(0.0, (gap + kappa) / 10.0)


@dataclass(frozen=True)
class ProjectionOutcome:
    applied: bool
    eigenpair: linalg.EigenPair

    def __bool__(self) -> bool:
        return self.applied


def project_psd_rank1(
    k: Kernel, tol: float = linalg.DEFAULT_TOL, v0: np.ndarray | None = None
) -> ProjectionOutcome:
    """Nearest-PSD projection valid when at most one eigenvalue is negative.

    Subtracts lam * v v^T for the smallest eigenpair (lam, v) when lam < 0;
    O(n^2).  Refreshes the eigenvalue lower bound to max(0, lam).  Truthy
    result iff a correction was applied; the eigenpair is exposed so
    callers can warm-start the next projection.
    """
    pair = linalg.smallest_eigenpair(k.mat, tol, v0=v0)
    k.eig_lower_bound = max(0.0, pair.value)
    applied = pair.value < 0
    if applied:
        k.mat -= pair.value * np.outer(pair.vector, pair.vector)
    return ProjectionOutcome(applied, pair)


@dataclass
class ProjectionStats:
    updates: int = 0              # active (gamma > 0) steps
    passive: int = 0              # steps with gamma == 0
    eig_computations: int = 0     # smallest-eigenpair solves
    projections_applied: int = 0  # solves where a correction was needed
    skips: int = 0                # projections avoided via the Weyl bound


@dataclass(frozen=True)
class UpdateReport:
    gamma: float
    active: bool
    projected: bool
    skipped: bool
    eig_lower_bound: float


@dataclass
class OnlineLearner:
    """Single-writer online kernel learner.

    The kernel starts at identity (smallest eigenvalue exactly 1).  Every
    observed comparison is appended to an in-memory replay buffer;
    observe_with_replay additionally resamples past comparisons.
    """

    kernel: Kernel
    model: LossModel = LossModel.GNMDS
    policy: StepPolicy = field(default_factory=StepPolicy.pa_gnmds)
    passes_beta: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.passes_beta < 1:
            raise ValueError("passes_beta must be >= 1")
        self.observed: list[Triplet] = []
        self.j = 0
        self.stats = ProjectionStats()
        self._rng = np.random.default_rng(self.rng_seed)
        self._steps = 0  # total steps incl. replay; drives the schedules
        self._warm_vec: np.ndarray | None = None  # eigensolver warm start

    @classmethod
    def create(cls, n: int, model: LossModel = LossModel.GNMDS,
               policy: StepPolicy | None = None, passes_beta: int = 1,
               seed: int = 0) -> "OnlineLearner":
        return cls(Kernel.identity(n), model,
                   policy if policy is not None else StepPolicy.pa_gnmds(),
                   passes_beta, seed)

    def _step(self, t: Triplet) -> UpdateReport:
        self._steps += 1
        delta = step_size(self.policy, self.model, self.kernel, t, self._steps)
        if self.policy.is_passive_aggressive:
            # the PA derivation already folds the gradient weight in
            gamma = delta
        else:
            gamma = delta * grad_weight(self.model, self.kernel, t)
        if gamma == 0.0:
            self.stats.passive += 1
            return UpdateReport(0.0, False, False, False, self.kernel.eig_lower_bound)
        apply_gradient_step(self.kernel, t, gamma)
        self.stats.updates += 1
        projected = skipped = False
        if self.kernel.eig_lower_bound < 0.0:
            self.stats.eig_computations += 1
            outcome = project_psd_rank1(self.kernel, v0=self._warm_vec)
            self._warm_vec = outcome.eigenpair.vector
            projected = outcome.applied
            if projected:
                self.stats.projections_applied += 1
        else:
            self.stats.skips += 1
            skipped = True
        return UpdateReport(gamma, True, projected, skipped, self.kernel.eig_lower_bound)

    def observe(self, t: Triplet) -> UpdateReport:
        t.validate(self.kernel.n)
        report = self._step(t)
        self.observed.append(t)
        self.j += 1
        return report

    def observe_with_replay(self, t: Triplet) -> list[UpdateReport]:
        """Observe t, then take passes_beta - 1 extra steps on comparisons
        drawn uniformly with replacement from the buffer (only once more
        than 2 * passes_beta comparisons have been seen)."""
        reports = [self.observe(t)]
        if self.j > 2 * self.passes_beta:
            for _ in range(self.passes_beta - 1):
                idx = int(self._rng.integers(len(self.observed)))
                reports.append(self._step(self.observed[idx]))
        return reports
