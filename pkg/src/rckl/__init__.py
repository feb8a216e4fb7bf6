"""Kernel learning from relative comparisons: online passive-aggressive
updates with O(n^2) PSD projections, batch baselines, a benchmark
harness, and a live labeling session service."""

__version__ = "0.1.0"

from .core import Kernel, LossModel, Query, Triplet  # noqa: F401
from .online import OnlineLearner, StepPolicy  # noqa: F401
