"""Binomial-proportion confidence intervals.

Nine methods over a (n, n_s) Bernoulli summary: modified CLT, Wilson,
Agresti-Coull (plain and Wilson-centered), logit, Anscombe, arcsine,
Bayesian equal-tailed (Beta posterior), and Clopper-Pearson. All return a
``ConfidenceInterval`` clamped into [0, 1] while retaining the raw
(pre-clamp) endpoints, which the sequential engine needs for its stopping
radius.

Notation used throughout: p_hat = n_s/n, q_hat = 1 - p_hat, n_f = n - n_s,
a = 1 - confidence, and C = Phi^{-1}(1 - a/2) the two-sided normal quantile.

Degenerate-proportion handling:

- modified CLT: when n_s is 0 or n the 0/1 sample has zero variance, so the
  sample standard deviation is floored at 1/n (a 1/n^2 variance floor).
  The floor self-extinguishes once both outcomes have been seen.
- logit: undefined at n_s in {0, n}; falls back to the Anscombe estimate.
- Wilson: the boundary endpoint is an algebraic zero (the half-width equals
  the center at n_s = 0); returned as exact 0.0 / 1.0 rather than an ulp
  residue.
- Clopper-Pearson: lo = 0 at n_s = 0 and hi = 1 at n_s = n (degenerate Beta
  conventions).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .special import beta_inv_cdf, normal_quantile

__all__ = [
    "BernoulliSummary",
    "ConfidenceInterval",
    "BetaParams",
    "JEFFREYS_PRIOR",
    "UNIFORM_PRIOR",
    "METHODS",
    "normal_quantile",
    "beta_inv_cdf",
    "clt_interval",
    "wilson_interval",
    "agresti_coull_interval",
    "agresti_coull_wilson_center_interval",
    "logit_interval",
    "anscombe_interval",
    "arcsine_interval",
    "bayesian_interval",
    "clopper_pearson_interval",
]


@dataclass(frozen=True)
class BernoulliSummary:
    """Running tally of Bernoulli trials: n draws, n_s successes."""

    n: int
    n_s: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")
        if not (0 <= self.n_s <= self.n):
            raise ValueError(f"n_s must satisfy 0 <= n_s <= n, got n_s={self.n_s}, n={self.n}")

    @property
    def p_hat(self) -> float:
        return self.n_s / self.n

    @property
    def q_hat(self) -> float:
        return 1.0 - self.n_s / self.n

    @property
    def n_f(self) -> int:
        return self.n - self.n_s


@dataclass(frozen=True)
class ConfidenceInterval:
    """A clamped [lo, hi] interval plus its raw (pre-clamp) endpoints."""

    lo: float
    hi: float
    confidence: float
    method: str
    n_used: int
    raw_lo: float
    raw_hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def center(self) -> float:
        # construction midpoint: for symmetric methods this is the point
        # estimate even when one clamped endpoint shifted the reported range
        return 0.5 * (self.raw_lo + self.raw_hi)

    def contains(self, p: float) -> bool:
        return self.lo <= p <= self.hi


@dataclass(frozen=True)
class BetaParams:
    """Beta prior parameters for the Bayesian interval."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"prior parameters must be positive, got {self}")


JEFFREYS_PRIOR = BetaParams(0.5, 0.5)
UNIFORM_PRIOR = BetaParams(1.0, 1.0)


def _check(s: BernoulliSummary, confidence: float, *, allow_empty: bool = False) -> None:
    if not (0.0 < confidence < 1.0):
        raise ValueError(f"confidence must be in (0, 1), got {confidence!r}")
    if s.n < 1 and not allow_empty:
        raise ValueError("interval requires at least one trial (n >= 1)")


def _quantile(confidence: float) -> float:
    return normal_quantile(1.0 - (1.0 - confidence) / 2.0)


def _build(method: str, s: BernoulliSummary, confidence: float,
           raw_lo: float, raw_hi: float) -> ConfidenceInterval:
    return ConfidenceInterval(
        lo=min(max(raw_lo, 0.0), 1.0),
        hi=min(max(raw_hi, 0.0), 1.0),
        confidence=confidence,
        method=method,
        n_used=s.n,
        raw_lo=raw_lo,
        raw_hi=raw_hi,
    )


def clt_interval(s: BernoulliSummary, confidence: float, *,
                 floor: bool = True) -> ConfidenceInterval:
    """Modified CLT (normal approximation) interval.

    Center p_hat, half-width C * sigma_eff / sqrt(n), with sigma_eff the
    sample standard deviation of the 0/1 draws floored at 1/n whenever the
    proportion is degenerate (n_s in {0, n}). ``floor=False`` gives the
    textbook interval, which collapses to a point at a degenerate
    proportion (kept for coverage-defect demonstrations).
    """
    _check(s, confidence)
    n, n_s = s.n, s.n_s
    p = s.p_hat
    if n > 1:
        sample_var = n * p * (1.0 - p) / (n - 1.0)
    else:
        sample_var = 0.0
    sd = math.sqrt(sample_var)
    if floor and (n_s == 0 or n_s == n):
        sd = max(sd, 1.0 / n)
    hw = _quantile(confidence) * sd / math.sqrt(n)
    return _build("clt", s, confidence, p - hw, p + hw)


def wilson_interval(s: BernoulliSummary, confidence: float) -> ConfidenceInterval:
    """Wilson score interval (inversion of the CLT test)."""
    _check(s, confidence)
    n, n_s = s.n, s.n_s
    c = _quantile(confidence)
    c2 = c * c
    center = (n_s + c2 / 2.0) / (n + c2)
    hw = (c * math.sqrt(n) / (n + c2)) * math.sqrt(s.p_hat * s.q_hat + c2 / (4.0 * n))
    lo, hi = center - hw, center + hw
    if n_s == 0:
        lo = 0.0  # algebraically exact: hw == center
    if n_s == n:
        hi = 1.0
    return _build("wilson", s, confidence, lo, hi)


def agresti_coull_interval(s: BernoulliSummary, confidence: float) -> ConfidenceInterval:
    """Agresti-Coull interval (adds ~C^2/2 successes and failures)."""
    _check(s, confidence)
    c = _quantile(confidence)
    c2 = c * c
    n_tilde = s.n + c2
    p_tilde = (s.n_s + c2 / 2.0) / n_tilde
    hw = c * math.sqrt(p_tilde * (1.0 - p_tilde) / n_tilde)
    return _build("agresti_coull", s, confidence, p_tilde - hw, p_tilde + hw)


def agresti_coull_wilson_center_interval(s: BernoulliSummary,
                                         confidence: float) -> ConfidenceInterval:
    """Agresti-Coull interval written around the Wilson center.

    Under this normalization the Agresti-Coull center already *is* the
    Wilson center (n_s + C^2/2)/(n + C^2), so the interval coincides with
    ``agresti_coull_interval``; both names are kept because the method
    registry exposes them as distinct tags.
    """
    _check(s, confidence)
    c = _quantile(confidence)
    c2 = c * c
    p_tilde = (s.n_s + c2 / 2.0) / (s.n + c2)
    hw = c * math.sqrt(p_tilde * (1.0 - p_tilde) / (s.n + c2))
    return _build("agresti_coull_wilson", s, confidence, p_tilde - hw, p_tilde + hw)


def _logit_backtransform(lam_lo: float, lam_hi: float) -> tuple[float, float]:
    return (1.0 / (1.0 + math.exp(-lam_lo)), 1.0 / (1.0 + math.exp(-lam_hi)))


def logit_interval(s: BernoulliSummary, confidence: float) -> ConfidenceInterval:
    """Empirical logit interval; Anscombe fallback at a degenerate tally."""
    _check(s, confidence)
    n, n_s, n_f = s.n, s.n_s, s.n_f
    if n_s == 0 or n_s == n:
        inner = anscombe_interval(s, confidence)
        return _build("logit", s, confidence, inner.raw_lo, inner.raw_hi)
    c = _quantile(confidence)
    lam = math.log(n_s / n_f)
    var = n / (n_s * n_f)
    step = c * math.sqrt(var)
    lo, hi = _logit_backtransform(lam - step, lam + step)
    return _build("logit", s, confidence, lo, hi)


def anscombe_interval(s: BernoulliSummary, confidence: float) -> ConfidenceInterval:
    """Anscombe's logit variant with half-count smoothing."""
    _check(s, confidence)
    n, n_s, n_f = s.n, s.n_s, s.n_f
    c = _quantile(confidence)
    lam = math.log((n_s + 0.5) / (n_f + 0.5))
    var = (n + 1.0) * (n + 2.0) / (n * (n_s + 1.0) * (n_f + 1.0))
    step = c * math.sqrt(var)
    lo, hi = _logit_backtransform(lam - step, lam + step)
    return _build("anscombe", s, confidence, lo, hi)


def arcsine_interval(s: BernoulliSummary, confidence: float) -> ConfidenceInterval:
    """Variance-stabilized arcsine interval on p† = (n_s + 3/8)/(n + 3/4)."""
    _check(s, confidence)
    n = s.n
    c = _quantile(confidence)
    p_dag = (s.n_s + 0.375) / (n + 0.75)
    angle = math.asin(math.sqrt(p_dag))
    step = c / (2.0 * math.sqrt(n))
    half_pi = math.pi / 2.0
    lo_angle = min(max(angle - step, 0.0), half_pi)
    hi_angle = min(max(angle + step, 0.0), half_pi)
    return _build("arcsine", s, confidence,
                  math.sin(lo_angle) ** 2, math.sin(hi_angle) ** 2)


def bayesian_interval(s: BernoulliSummary, confidence: float,
                      prior: BetaParams = JEFFREYS_PRIOR) -> ConfidenceInterval:
    """Equal-tailed credible interval from the Beta posterior.

    Posterior is Beta(n_s + alpha, n_f + beta); works at n = 0 (returns the
    prior quantiles). Default prior is Jeffreys (1/2, 1/2).
    """
    _check(s, confidence, allow_empty=True)
    a = 1.0 - confidence
    post_a = s.n_s + prior.alpha
    post_b = s.n_f + prior.beta
    lo = beta_inv_cdf(a / 2.0, post_a, post_b)
    hi = beta_inv_cdf(1.0 - a / 2.0, post_a, post_b)
    return _build("bayes", s, confidence, lo, hi)


def clopper_pearson_interval(s: BernoulliSummary, confidence: float) -> ConfidenceInterval:
    """Clopper-Pearson exact interval (binomial test inversion)."""
    _check(s, confidence)
    n, n_s, n_f = s.n, s.n_s, s.n_f
    a = 1.0 - confidence
    lo = 0.0 if n_s == 0 else beta_inv_cdf(a / 2.0, n_s, n_f + 1.0)
    hi = 1.0 if n_s == n else beta_inv_cdf(1.0 - a / 2.0, n_s + 1.0, n_f)
    return _build("clopper_pearson", s, confidence, lo, hi)


# Registry of method tags -> interval callables. Tags are the stable names
# used by the engine, the CLI, and the CSV output.
METHODS = {
    "clt": clt_interval,
    "wilson": wilson_interval,
    "agresti_coull": agresti_coull_interval,
    "agresti_coull_wilson": agresti_coull_wilson_center_interval,
    "logit": logit_interval,
    "anscombe": anscombe_interval,
    "arcsine": arcsine_interval,
    "bayes": bayesian_interval,
    "clopper_pearson": clopper_pearson_interval,
}
