"""Sequential estimation: sample until the interval is tight enough.

The loop draws 0/1 samples from an oracle, recomputes the chosen
confidence interval at every checkpoint, and stops at the first
checkpoint where the interval is tight enough: the closed-form methods
stop when the raw half-width drops to the target, the quantile-pair
methods (bayes, clopper_pearson) when the larger distance from the
running proportion to a raw endpoint does — see ``_stop_quantity``.
Checkpoints are every sample up to ``dense_until`` (default 1000) and
every ``batch`` samples afterwards; the stop happens exactly at a
checkpoint, never interpolated between two.

Three sampling strategies share that loop:

``MC``
    one pseudorandom stream; the sample count grows by one.
``RQMC``
    ``replicates`` (default 10) torus-shifted copies of a single Sobol
    stream grown in lockstep.  By default the interval method consumes
    the pooled ``(n_total, n_s_total)`` tally over all copies
    (``rqmc_mode="pooled"``).  The alternative reading — a normal-theory
    interval on the spread of the per-copy running means — is available
    as ``rqmc_mode="replicate_means"`` but carries no accuracy claims.
``QINT``
    the stratified cubature interval on a doubling schedule: n = 2, 4,
    8, ... points, one stratification level added per step, a fresh
    low-discrepancy stream each time (so every step's point set extends
    the previous one).  The schedule is always recorded in the report's
    trajectory.

Method names are the keys of ``intervals.METHODS`` plus ``"qint"``.
Defaults couple methods to the sampler they are normally quoted with:
``bayes`` and ``clopper_pearson`` run plain MC, ``qint`` runs the
doubling sampler, everything else runs RQMC.

``validated_estimate`` runs two of these loops over one shared point
stream: the satisfaction indicator (1 only on definite yes) and the
non-refutation indicator (0 only on definite no).  Their running means
bracket the true probability at every checkpoint, so the pair of final
intervals yields the enclosure ``[lower.lo, upper.hi]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .estimators import Integrand
from .intervals import METHODS, BernoulliSummary, ConfidenceInterval
from .models import ThreeValuedOutcome  # noqa: F401  (re-exported: the verdict alphabet)
from .qint import qint_interval
from .sequences import PseudoRandomGenerator, SobolGenerator, randomize_shift
from .special import normal_quantile

__all__ = [
    "SAMPLERS",
    "StoppingRule",
    "SequentialReport",
    "AveragedReport",
    "ValidatedReport",
    "ThreeValuedOutcome",
    "default_sampler",
    "sequential_estimate",
    "averaged_runs",
    "validated_estimate",
]

SAMPLERS = ("MC", "RQMC", "QINT")

SeedLike = Union[int, np.random.SeedSequence]

_MC_CHUNK = 4096
_RQMC_BASE_CHUNK = 512
_QINT_POINTS_PER_STRATUM = 2


@dataclass(frozen=True)
class StoppingRule:
    """When to stop sampling.

    confidence : coverage level of the interval, in (0, 1).
    half_width : target accuracy; stop once the method's stopping
        quantity (raw half-width, or endpoint deviation from the
        running proportion for the quantile-pair methods) is <= this.
    max_samples : hard cap; reaching it yields an unconverged report
        carrying the last interval rather than an exception.
    batch : samples per check once past the dense phase.
    dense_until : the interval is recomputed at every sample up to this
        count (the regime where a single success can move the interval a
        lot), every ``batch`` samples afterwards.
    """

    confidence: float
    half_width: float
    max_samples: int = 10_000_000
    batch: int = 16
    dense_until: int = 1000

    def __post_init__(self):
        if not (0.0 < self.confidence < 1.0):
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")
        if not self.half_width > 0.0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.max_samples < 1:
            raise ValueError(f"max_samples must be >= 1, got {self.max_samples}")
        if self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")
        if self.dense_until < 0:
            raise ValueError(f"dense_until must be >= 0, got {self.dense_until}")

    def next_checkpoint(self, n: int) -> int:
        return n + 1 if n < self.dense_until else n + self.batch


@dataclass(frozen=True)
class SequentialReport:
    """One sequential run: the final interval and how it was reached."""

    interval: ConfidenceInterval
    n_used: int
    method: str
    sampler: str
    converged: bool
    trajectory: Optional[Tuple[Tuple[int, ConfidenceInterval], ...]] = None


@dataclass(frozen=True)
class AveragedReport:
    """Endpoint-wise arithmetic means over independent sequential runs."""

    mean_lo: float
    mean_hi: float
    mean_n_used: float
    method: str
    sampler: str
    confidence: float
    reports: Tuple[SequentialReport, ...]

    @property
    def runs(self) -> int:
        return len(self.reports)

    def contains(self, p: float) -> bool:
        return self.mean_lo <= p <= self.mean_hi


@dataclass(frozen=True)
class ValidatedReport:
    """Bracketing pair of runs: lower bounds via definite-yes, upper via
    not-definite-no.  The enclosure is sound for the true probability
    whenever both intervals cover their respective means."""

    lower: SequentialReport
    upper: SequentialReport

    @property
    def enclosure(self) -> Tuple[float, float]:
        return (self.lower.interval.lo, self.upper.interval.hi)

    @property
    def converged(self) -> bool:
        return self.lower.converged and self.upper.converged


def default_sampler(method: str) -> str:
    """The sampler a method is normally paired with."""
    m = method.lower()
    if m == "qint":
        return "QINT"
    if m in ("bayes", "clopper_pearson"):
        return "MC"
    return "RQMC"


def _resolve(method: str, sampler: Optional[str]) -> Tuple[str, str]:
    m = str(method).lower()
    if m != "qint" and m not in METHODS:
        known = sorted(METHODS) + ["qint"]
        raise ValueError(f"unknown interval method {method!r}; known: {known}")
    s = default_sampler(m) if sampler is None else str(sampler).upper()
    if s not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}; known: {list(SAMPLERS)}")
    if (m == "qint") != (s == "QINT"):
        raise ValueError(
            "the qint method and the QINT sampler imply each other; "
            f"got method={m!r} with sampler={s!r}"
        )
    return m, s


def _as_integrand(oracle) -> Integrand:
    if isinstance(oracle, Integrand):
        return oracle
    to_integrand = getattr(oracle, "as_integrand", None)
    if callable(to_integrand):
        return to_integrand()
    raise TypeError(
        f"oracle must be an Integrand or provide as_integrand(); got {type(oracle).__name__}"
    )


def _check_binary(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.size and not np.all((v == 0.0) | (v == 1.0)):
        bad = v[(v != 0.0) & (v != 1.0)][0]
        raise ValueError(f"sequential estimation needs 0/1 sample values, got {bad!r}")
    return v


# Methods whose interval is an equal-tailed pair of distribution
# quantiles (posterior or exact-binomial).  Their stopping quantity is
# the deviation of the raw endpoints from the running proportion — a
# quantile interval at a degenerate tally hugs 0 on one side, so its
# width alone says nothing about how far the estimate could be off.
_QUANTILE_METHODS = frozenset({"bayes", "clopper_pearson"})


def _stop_quantity(method: str, ci: ConfidenceInterval, p_hat: float) -> float:
    """What must drop to ``rule.half_width`` before the loop stops.

    Measured on pre-clamp endpoints so that intervals poking below 0 or
    above 1 still count their full spread.  For the closed-form methods
    this is the raw half-width (they are symmetric around their own
    center, transformed or not); for the quantile-pair methods it is the
    larger distance from the running proportion to a raw endpoint.
    """
    if method in _QUANTILE_METHODS:
        return max(ci.raw_hi - p_hat, p_hat - ci.raw_lo)
    return 0.5 * (ci.raw_hi - ci.raw_lo)


class _StreamState:
    """Mutable per-stream bookkeeping inside a run (not exported)."""

    __slots__ = ("count", "last_n", "last_interval", "stopped", "trajectory")

    def __init__(self, keep_trajectory: bool):
        self.count = 0  # successes seen in full chunks so far
        self.last_n = 0
        self.last_interval: Optional[ConfidenceInterval] = None
        self.stopped = False
        self.trajectory: Optional[List[Tuple[int, ConfidenceInterval]]] = (
            [] if keep_trajectory else None
        )

    def record(self, n: int, ci: ConfidenceInterval, rule: StoppingRule, quantity: float):
        self.last_n = n
        self.last_interval = ci
        if self.trajectory is not None:
            self.trajectory.append((n, ci))
        if quantity <= rule.half_width:
            self.stopped = True

    def finish(self, method: str, sampler: str) -> SequentialReport:
        if self.last_interval is None:
            raise RuntimeError("no checkpoint was evaluated; max_samples is too small")
        return SequentialReport(
            interval=self.last_interval,
            n_used=self.last_n,
            method=method,
            sampler=sampler,
            converged=self.stopped,
            trajectory=None if self.trajectory is None else tuple(self.trajectory),
        )


ValueFn = Callable[[np.ndarray], np.ndarray]


def _run_mc(
    fns: Sequence[ValueFn],
    dimension: int,
    method_name: str,
    method_fn,
    rule: StoppingRule,
    seed: SeedLike,
    keep_trajectory: bool,
) -> List[_StreamState]:
    prng = PseudoRandomGenerator(seed)
    states = [_StreamState(keep_trajectory) for _ in fns]
    drawn = 0
    cp = 1
    while drawn < rule.max_samples and not all(st.stopped for st in states):
        m = min(_MC_CHUNK, rule.max_samples - drawn)
        pts = prng.take(m, dimension)
        cums = [np.cumsum(_check_binary(fn(pts))) for fn in fns]
        end = drawn + m

        def eval_at(n: int):
            for st, cum in zip(states, cums):
                if st.stopped:
                    continue
                n_s = st.count + int(cum[n - drawn - 1])
                ci = method_fn(BernoulliSummary(n, n_s), rule.confidence)
                st.record(n, ci, rule, _stop_quantity(method_name, ci, n_s / n))

        while cp <= end and not all(st.stopped for st in states):
            eval_at(cp)
            cp = rule.next_checkpoint(cp)
        # The grid can jump past the cap; still judge the final tally.
        if (
            end == rule.max_samples
            and cp > end
            and not all(st.stopped for st in states)
            and any(st.last_n < end for st in states)
        ):
            eval_at(end)
        for st, cum in zip(states, cums):
            st.count += int(cum[-1])
        drawn = end
    return states


def _replicate_means_interval(
    rep_counts: np.ndarray, base_n: int, n_total: int, confidence: float, method: str
) -> ConfidenceInterval:
    means = rep_counts / base_n
    center = float(means.mean())
    var_of_mean = float(means.var(ddof=1)) / means.size
    if var_of_mean == 0.0:
        # same floor as the degenerate-tally rule: treat the per-sample
        # variance as 1/n^2, so the variance of the mean is 1/n^3
        var_of_mean = 1.0 / float(n_total) ** 3
    hw = normal_quantile(0.5 * (1.0 + confidence)) * var_of_mean ** 0.5
    raw_lo, raw_hi = center - hw, center + hw
    return ConfidenceInterval(
        lo=min(max(raw_lo, 0.0), 1.0),
        hi=min(max(raw_hi, 0.0), 1.0),
        confidence=confidence,
        method=method,
        n_used=n_total,
        raw_lo=raw_lo,
        raw_hi=raw_hi,
    )


def _run_rqmc(
    fns: Sequence[ValueFn],
    dimension: int,
    method_name: str,
    method_fn,
    rule: StoppingRule,
    seed: SeedLike,
    replicates: int,
    rqmc_mode: str,
    keep_trajectory: bool,
) -> List[_StreamState]:
    if rqmc_mode not in ("pooled", "replicate_means"):
        raise ValueError(f"rqmc_mode must be 'pooled' or 'replicate_means', got {rqmc_mode!r}")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    if rqmc_mode == "replicate_means" and replicates < 2:
        raise ValueError("replicate_means needs >= 2 replicates for a spread estimate")
    max_base = rule.max_samples // replicates
    if max_base < 1:
        raise ValueError(
            f"max_samples={rule.max_samples} cannot fit one row of {replicates} replicates"
        )

    sobol = SobolGenerator(dimension)
    shifts = PseudoRandomGenerator(seed).take(replicates, dimension)
    states = [_StreamState(keep_trajectory) for _ in fns]
    rep_counts = [np.zeros(replicates) for _ in fns]
    base_done = 0
    next_target = 1
    while base_done < max_base and not all(st.stopped for st in states):
        mb = min(_RQMC_BASE_CHUNK, max_base - base_done)
        base = sobol.take(mb)
        vals = [
            np.stack([_check_binary(fn(randomize_shift(base, shifts[j])))
                      for j in range(replicates)])
            for fn in fns
        ]  # each (replicates, mb)
        pooled_cums = [np.cumsum(v.sum(axis=0)) for v in vals]
        rep_cums = (
            [np.cumsum(v, axis=1) for v in vals] if rqmc_mode == "replicate_means" else None
        )

        def eval_at(b: int):
            base_n = base_done + b + 1
            n_total = base_n * replicates
            for i, st in enumerate(states):
                if st.stopped:
                    continue
                if rqmc_mode == "pooled":
                    n_s = st.count + int(pooled_cums[i][b])
                    ci = method_fn(BernoulliSummary(n_total, n_s), rule.confidence)
                    st.record(n_total, ci, rule,
                              _stop_quantity(method_name, ci, n_s / n_total))
                else:
                    counts_now = rep_counts[i] + rep_cums[i][:, b]
                    ci = _replicate_means_interval(
                        counts_now, base_n, n_total, rule.confidence, method_name
                    )
                    st.record(n_total, ci, rule, 0.5 * (ci.raw_hi - ci.raw_lo))

        last_b = mb - 1
        for b in range(mb):
            n_total = (base_done + b + 1) * replicates
            if n_total < next_target:
                continue
            eval_at(b)
            next_target = rule.next_checkpoint(n_total)
            if all(st.stopped for st in states):
                break
        else:
            # last chance at the cap, if the grid skipped the final row
            if (
                base_done + mb == max_base
                and not all(st.stopped for st in states)
                and any(st.last_n < max_base * replicates for st in states)
            ):
                eval_at(last_b)
        for i, st in enumerate(states):
            st.count += int(pooled_cums[i][-1])
            rep_counts[i] += vals[i].sum(axis=1)
        base_done += mb
    return states


def _run_qint(
    fns: Sequence[ValueFn], dimension: int, rule: StoppingRule
) -> List[_StreamState]:
    if rule.max_samples < 2 * _QINT_POINTS_PER_STRATUM - 2:
        raise ValueError("max_samples too small for one stratified step")
    # the doubling schedule is the interesting part of a qint run, so the
    # trajectory is always kept
    states = [_StreamState(keep_trajectory=True) for _ in fns]
    k = _QINT_POINTS_PER_STRATUM
    s = 0
    while (k << s) <= rule.max_samples and not all(st.stopped for st in states):
        n = k << s
        for st, fn in zip(states, fns):
            if st.stopped:
                continue
            f = Integrand(
                dimension=dimension,
                batch=lambda pts, g=fn: _check_binary(g(pts)),
            )
            ci = qint_interval(f, SobolGenerator(dimension), k=k, s=s,
                               confidence=rule.confidence)
            st.record(n, ci, rule, 0.5 * (ci.raw_hi - ci.raw_lo))
        s += 1
    return states


def _run(
    fns: Sequence[ValueFn],
    dimension: int,
    method: str,
    sampler: str,
    rule: StoppingRule,
    seed: SeedLike,
    replicates: int,
    rqmc_mode: str,
    keep_trajectory: bool,
) -> List[SequentialReport]:
    if sampler == "MC":
        states = _run_mc(fns, dimension, method, METHODS[method], rule, seed,
                         keep_trajectory)
    elif sampler == "RQMC":
        states = _run_rqmc(
            fns, dimension, method, METHODS[method], rule, seed,
            replicates, rqmc_mode, keep_trajectory,
        )
    else:
        states = _run_qint(fns, dimension, rule)
    return [st.finish(method, sampler) for st in states]


def sequential_estimate(
    oracle,
    method: str,
    rule: StoppingRule,
    sampler: Optional[str] = None,
    seed: SeedLike = 0,
    *,
    replicates: int = 10,
    rqmc_mode: str = "pooled",
    keep_trajectory: bool = False,
) -> SequentialReport:
    """Sample the 0/1 oracle until the interval radius is <= the target.

    ``oracle`` is an Integrand over [0,1)^d with 0/1 values (or anything
    with an ``as_integrand()``, like the built-in models).  Stops at the
    first checkpoint whose stopping quantity is <= ``rule.half_width``;
    if ``rule.max_samples`` arrives first the report carries the last
    interval with ``converged=False``.  The report is a pure function of
    (arguments, seed).
    """
    integrand = _as_integrand(oracle)
    m, s = _resolve(method, sampler)
    return _run(
        [integrand.evaluate], integrand.dimension, m, s, rule, seed,
        replicates, rqmc_mode, keep_trajectory,
    )[0]


def averaged_runs(
    oracle,
    method: str,
    rule: StoppingRule,
    sampler: Optional[str] = None,
    runs: int = 10,
    master_seed: SeedLike = 0,
    *,
    replicates: int = 10,
    rqmc_mode: str = "pooled",
    keep_trajectory: bool = False,
) -> AveragedReport:
    """Independent sequential runs, averaged endpoint-wise.

    Run seeds are spawned deterministically from ``master_seed``; the
    aggregate is the arithmetic mean of the reported interval endpoints
    and of the sample counts, with the per-run reports retained.
    """
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    ss = (
        master_seed
        if isinstance(master_seed, np.random.SeedSequence)
        else np.random.SeedSequence(master_seed)
    )
    reports = tuple(
        sequential_estimate(
            oracle, method, rule, sampler, seed=child,
            replicates=replicates, rqmc_mode=rqmc_mode, keep_trajectory=keep_trajectory,
        )
        for child in ss.spawn(runs)
    )
    m, s = reports[0].method, reports[0].sampler
    return AveragedReport(
        mean_lo=float(np.mean([r.interval.lo for r in reports])),
        mean_hi=float(np.mean([r.interval.hi for r in reports])),
        mean_n_used=float(np.mean([r.n_used for r in reports])),
        method=m,
        sampler=s,
        confidence=rule.confidence,
        reports=reports,
    )


def validated_estimate(
    oracle3,
    method: str,
    rule: StoppingRule,
    sampler: Optional[str] = None,
    seed: SeedLike = 0,
    *,
    replicates: int = 10,
    rqmc_mode: str = "pooled",
    keep_trajectory: bool = False,
) -> ValidatedReport:
    """Bracket a probability through a three-valued oracle.

    ``oracle3`` must expose ``dimension``, ``x_sat_values(points)`` (1
    only on definite yes) and ``x_usat_values(points)`` (0 only on
    definite no) — see the models module.  Both indicator streams are
    estimated over the *same* points, so the lower running mean never
    exceeds the upper one; each stream stops by ``rule`` independently
    and the result is the pair of reports.
    """
    fns = [oracle3.x_sat_values, oracle3.x_usat_values]
    dimension = int(oracle3.dimension)
    m, s = _resolve(method, sampler)
    lower, upper = _run(
        fns, dimension, m, s, rule, seed, replicates, rqmc_mode, keep_trajectory
    )
    return ValidatedReport(lower=lower, upper=upper)
