"""Stratified cubature over dyadic cells of a low-discrepancy point block.

The estimator partitions the first ``k * 2**s`` points of a Sobol stream
(indices 1..k*2**s, origin skipped) into ``N = 2**s`` congruent dyadic
cells, obtained by ``s`` axis-aligned binary splits whose split axes
cycle round-robin over the dimensions.  For point sets balanced on this
grid -- exactly ``k`` points per cell -- the variance of the cubature
mean improves on the plain Monte Carlo variance by

    correction = (1/n) * sum_{i<j} (a_i - a_j)**2,

where ``a_i`` is the integral of the integrand over cell ``i``
(estimated here by the within-cell sample mean times the cell measure
``1/N``) and ``n = k * N`` is the total point count.  With this scaling
the identity is exact: decomposing the per-draw variance into within-
and between-cell parts shows the between-cell share of ``sigma**2 / n``
equals ``(N/n) * sum_i (a_i - abar)**2``, which is the expression above;
for ``k = 1`` it reduces to the classic one-point-per-cell identity with
``1/N`` in front.  The corrected variance is clamped at zero, since the
sample-estimated correction can still overshoot through noise.

Balance caveat: with the origin skipped, the block 1..k*2**s is exactly
balanced for dimension 1 with k=2 at every s, but in higher dimensions
balance can fail once s exceeds a few splits (the block is no longer an
aligned net).  :func:`qint_partition` verifies the count in every cell
and raises :class:`QintPartitionError` when the property does not hold,
rather than silently producing a biased variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimators import Integrand
from .intervals import ConfidenceInterval, normal_quantile
from .sequences import SobolGenerator

__all__ = [
    "QintPartition",
    "QintPartitionError",
    "QintVariance",
    "StratumSummary",
    "qint_interval",
    "qint_partition",
    "qint_variance",
    "stratum_summaries",
]


class QintPartitionError(ValueError):
    """Raised when some dyadic cell does not hold exactly ``k`` points."""


@dataclass(frozen=True)
class QintPartition:
    """First ``k * 2**s`` Sobol points assigned to ``2**s`` dyadic cells.

    Attributes
    ----------
    k : int
        Points per stratum.
    s : int
        Number of binary splits; the stratum count is ``2**s``.
    dimension : int
        Dimension of the point set.
    points : numpy.ndarray
        Shape ``(k * 2**s, dimension)``; stream indices 1..k*2**s.
    stratum_ids : numpy.ndarray
        Shape ``(n,)`` integer cell id of each point, in ``[0, 2**s)``.
    axis_splits : tuple of int
        How many binary splits each axis received (round-robin order).
    """

    k: int
    s: int
    dimension: int
    points: np.ndarray
    stratum_ids: np.ndarray
    axis_splits: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.k * (1 << self.s)

    @property
    def n_strata(self) -> int:
        return 1 << self.s


@dataclass(frozen=True)
class StratumSummary:
    """Per-cell evaluation summary: sample mean of the integrand and count."""

    index: int
    mean: float
    count: int


@dataclass(frozen=True)
class QintVariance:
    """Corrected variance of the cubature mean, with bookkeeping.

    ``value`` is ``max(0, mc_variance - correction)``; ``clamped`` records
    whether the subtraction went negative and was cut at zero.
    """

    value: float
    mc_variance: float
    correction: float
    clamped: bool

    def __post_init__(self) -> None:
        if self.value < 0.0:
            raise ValueError("corrected variance must be non-negative")

    def __float__(self) -> float:
        return self.value


def _round_robin_splits(dimension: int, s: int) -> tuple[int, ...]:
    splits = [0] * dimension
    for j in range(s):
        splits[j % dimension] += 1
    return tuple(splits)


def _assign_strata(points: np.ndarray, axis_splits: Sequence[int]) -> np.ndarray:
    """Mixed-radix cell id over the per-axis dyadic grids."""
    ids = np.zeros(len(points), dtype=np.int64)
    weight = 1
    for axis, bits in enumerate(axis_splits):
        cells = 1 << bits
        levels = np.floor(points[:, axis] * cells).astype(np.int64)
        # points live in [0, 1), so levels are already within range
        ids += levels * weight
        weight *= cells
    return ids


def qint_partition(gen: SobolGenerator, k: int = 2, s: int = 0) -> QintPartition:
    """Draw ``k * 2**s`` points from ``gen`` and stratify them.

    The generator must be positioned at the start of the origin-skipped
    stream so the block covers indices 1..k*2**s exactly.

    Raises
    ------
    QintPartitionError
        If any dyadic cell ends up with a count different from ``k``.
    """
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if s < 0:
        raise ValueError(f"s must be non-negative, got {s}")
    if gen.index != 1:
        raise ValueError(
            "generator must be at the start of the origin-skipped stream "
            f"(index 1); it is at index {gen.index}"
        )
    n = k << s
    points = gen.take(n)
    axis_splits = _round_robin_splits(gen.dimension, s)
    ids = _assign_strata(points, axis_splits)
    counts = np.bincount(ids, minlength=1 << s)
    bad = np.nonzero(counts != k)[0]
    if bad.size:
        first = int(bad[0])
        raise QintPartitionError(
            f"stratum {first} holds {int(counts[first])} points, expected {k} "
            f"({bad.size} of {1 << s} cells unbalanced; k={k}, s={s}, "
            f"dimension={gen.dimension})"
        )
    return QintPartition(
        k=k,
        s=s,
        dimension=gen.dimension,
        points=points,
        stratum_ids=ids,
        axis_splits=axis_splits,
    )


def stratum_summaries(f: Integrand, part: QintPartition) -> tuple[StratumSummary, ...]:
    """Evaluate ``f`` on the partition and summarize each cell."""
    means = _stratum_means(f.evaluate(part.points), part)
    return tuple(
        StratumSummary(index=i, mean=float(m), count=part.k)
        for i, m in enumerate(means)
    )


def _stratum_means(values: np.ndarray, part: QintPartition) -> np.ndarray:
    sums = np.bincount(part.stratum_ids, weights=values, minlength=part.n_strata)
    return sums / part.k


def _variance_from_values(
    values: np.ndarray, part: QintPartition, mc_variance: float
) -> QintVariance:
    n_strata = part.n_strata
    # estimated cell integrals: within-cell mean times the cell measure
    cell_integrals = _stratum_means(values, part) / n_strata
    # (1/n) sum_{i<j} (a_i - a_j)^2  ==  (1/k) sum_i (a_i - abar)^2
    correction = (
        float(np.sum((cell_integrals - cell_integrals.mean()) ** 2)) / part.k
    )
    raw = mc_variance - correction
    clamped = raw < 0.0
    return QintVariance(
        value=0.0 if clamped else raw,
        mc_variance=mc_variance,
        correction=correction,
        clamped=clamped,
    )


def qint_variance(
    f: Integrand, part: QintPartition, mc_variance: float
) -> QintVariance:
    """Corrected variance ``max(0, mc_variance - correction)``.

    ``mc_variance`` must be the plain variance of the sample mean
    (sample variance over the same ``n`` points divided by ``n``).
    """
    if f.dimension != part.dimension:
        raise ValueError(
            f"integrand dimension {f.dimension} does not match "
            f"partition dimension {part.dimension}"
        )
    if mc_variance < 0.0:
        raise ValueError("mc_variance must be non-negative")
    return _variance_from_values(f.evaluate(part.points), part, mc_variance)


def qint_interval(
    f: Integrand,
    gen: SobolGenerator,
    k: int,
    s: int,
    confidence: float,
) -> ConfidenceInterval:
    """Confidence interval around the stratified cubature mean.

    The half-width is ``C * sqrt(corrected variance)`` with ``C`` the
    two-sided normal quantile for ``confidence``.  When the sample is
    degenerate (all values equal, e.g. an indicator that never fired),
    the sample variance is floored at ``1/n**2`` before the division by
    ``n``, so the interval still shrinks deterministically with ``n``
    instead of collapsing to a point.
    """
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    part = qint_partition(gen, k, s)
    if part.n < 2:
        raise ValueError("need at least two points to estimate a variance")
    values = f.evaluate(part.points)
    n = part.n
    center = float(values.mean())
    sample_var = float(values.var(ddof=1))
    if sample_var == 0.0:
        sample_var = 1.0 / (n * n)
    qv = _variance_from_values(values, part, sample_var / n)
    half_width = normal_quantile(1.0 - (1.0 - confidence) / 2.0) * math.sqrt(qv.value)
    raw_lo = center - half_width
    raw_hi = center + half_width
    return ConfidenceInterval(
        lo=max(0.0, raw_lo),
        hi=min(1.0, raw_hi),
        confidence=confidence,
        method="qint",
        n_used=n,
        raw_lo=raw_lo,
        raw_hi=raw_hi,
    )
