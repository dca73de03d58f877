"""MC, QMC, and RQMC estimation of E[f(U)] over the unit hypercube.

An ``Integrand`` wraps the function under integration with its dimension;
it can carry a vectorized batch evaluator for speed, falling back to a
per-point loop. Reports carry the point estimate, a variance estimate
(``None`` for plain QMC, where no cheap error bound exists), and, for RQMC,
the per-replicate breakdown.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .sequences import PseudoRandomGenerator, SobolGenerator, randomize_shift

__all__ = [
    "Integrand",
    "EstimateReport",
    "mc_estimate",
    "qmc_estimate",
    "rqmc_estimate",
    "absolute_error_trace",
]


@dataclass
class Integrand:
    """A deterministic real function on [0,1)^dimension.

    Exactly one of ``fn`` (scalar: point -> value) or ``batch``
    (vector: (n, dim) array -> (n,) array) must be supplied; ``batch`` is
    preferred when both are present.
    """

    dimension: int
    fn: Optional[Callable[[np.ndarray], float]] = None
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    value_range: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.fn is None and self.batch is None:
            raise ValueError("Integrand needs fn or batch")

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise ValueError(
                f"points shape {pts.shape} does not match dimension {self.dimension}"
            )
        if self.batch is not None:
            out = np.asarray(self.batch(pts), dtype=np.float64)
            if out.shape != (pts.shape[0],):
                raise ValueError(f"batch evaluator returned shape {out.shape}")
            return out
        return np.array([self.fn(p) for p in pts], dtype=np.float64)


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate with variance bookkeeping.

    ``variance_estimate`` is None for plain QMC — deliberately not 0, so
    downstream code cannot mistake a deterministic QMC value for one with a
    CLT error bar.
    """

    estimate: float
    variance_estimate: Optional[float]
    n: int
    method: str
    replicates: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.variance_estimate is not None and self.variance_estimate < 0:
            raise ValueError("variance_estimate must be non-negative")


def mc_estimate(f: Integrand, gen: PseudoRandomGenerator, n: int) -> EstimateReport:
    """Plain Monte Carlo mean with the unbiased variance estimate s^2/n."""
    if n < 2:
        raise ValueError(f"mc_estimate needs n >= 2 for the sample variance, got {n}")
    values = f.evaluate(gen.take(n, f.dimension))
    est = float(values.mean())
    sample_var = float(values.var(ddof=1))
    return EstimateReport(estimate=est, variance_estimate=sample_var / n,
                          n=n, method="MC")


def qmc_estimate(f: Integrand, gen: SobolGenerator, n: int) -> EstimateReport:
    """Deterministic QMC mean over the next n Sobol points; no variance."""
    if n < 1:
        raise ValueError(f"qmc_estimate needs n >= 1, got {n}")
    values = f.evaluate(gen.take(n))
    return EstimateReport(estimate=float(values.mean()), variance_estimate=None,
                          n=n, method="QMC")


def rqmc_estimate(f: Integrand, gen: SobolGenerator, prng: PseudoRandomGenerator,
                  n: int, r: int = 10) -> EstimateReport:
    """Randomized QMC: r independent torus shifts of one n-point Sobol set.

    The estimate is the mean of the r replicate means; the variance estimate
    is the replicate spread divided by r(r-1), i.e. the variance of the
    overall mean. Replicates are reduced in index order so serial and
    parallel evaluation agree bit-for-bit.
    """
    if n < 1:
        raise ValueError(f"rqmc_estimate needs n >= 1, got {n}")
    if r < 2:
        raise ValueError(f"rqmc_estimate needs r >= 2 replicates, got {r}")
    base = gen.take(n)
    shifts = prng.take(r, f.dimension)
    reps = [float(f.evaluate(randomize_shift(base, shifts[j])).mean())
            for j in range(r)]
    est = float(np.mean(reps))
    var = float(sum((rep - est) ** 2 for rep in reps) / (r * (r - 1)))
    return EstimateReport(estimate=est, variance_estimate=var, n=n,
                          method="RQMC", replicates=tuple(reps))


def absolute_error_trace(f: Integrand, true_value: float, method: str,
                         n_grid: Sequence[int],
                         seeds: Sequence[int] = (0,)) -> list[tuple[int, float]]:
    """|estimate - true_value| along a sample-count grid.

    MC errors are averaged over the given seeds; QMC is a single
    deterministic curve (seeds ignored).
    """
    if len(n_grid) == 0:
        raise ValueError("empty sample-count grid")
    method = method.upper()
    trace: list[tuple[int, float]] = []
    if method == "MC":
        if len(seeds) == 0:
            raise ValueError("MC error trace needs at least one seed")
        for n in n_grid:
            errs = []
            for seed in seeds:
                gen = PseudoRandomGenerator(seed)
                values = f.evaluate(gen.take(n, f.dimension))
                errs.append(abs(float(values.mean()) - true_value))
            trace.append((n, float(np.mean(errs))))
    elif method == "QMC":
        for n in n_grid:
            gen = SobolGenerator(f.dimension)
            values = f.evaluate(gen.take(n))
            trace.append((n, abs(float(values.mean()) - true_value)))
    else:
        raise ValueError(f"unknown trace method {method!r} (MC or QMC)")
    return trace
