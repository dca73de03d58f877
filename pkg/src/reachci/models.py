"""Benchmark Bernoulli sources and three-valued (sat/unsat/undet) oracles.

Two analytic single-parameter models drive most experiments.  Both draw a
single uniform ``r = u0`` per trial:

* ``good``: success iff ``0.9*n <= r <= 0.9*n + 0.1`` — the success band
  slides with the parameter ``n`` but always has measure exactly 0.1.
* ``bad``: success iff ``r < (2n - 1)**2`` — the success probability
  sweeps the whole unit range, hitting 0 at ``n = 0.5`` and 1 at the ends.

The banded variants blur the decision boundary by a slack ``delta_band``
and answer sat / unsat / undet instead of 1/0, which is what the
validated (bounding) estimator consumes.  An external process speaking a
tiny line protocol can stand in for the built-in oracles.
"""

from __future__ import annotations

import enum
import subprocess
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimators import Integrand

__all__ = [
    "PROTOCOL_VERSION",
    "BandedPredicate",
    "BernoulliOracle",
    "ExternalOracle",
    "GoodBadModel",
    "ModelKind",
    "OracleProtocolError",
    "ThreeValuedModel",
    "ThreeValuedOutcome",
    "bad_param_for_probability",
    "banded_verdict",
    "bernoulli_sample",
    "good_bad_indicator",
    "good_bad_probability",
]


class ThreeValuedOutcome(enum.Enum):
    """Verdict of a three-valued reachability check."""

    SAT = "sat"
    UNSAT = "unsat"
    UNDET = "undet"

    @property
    def x_sat(self) -> int:
        """1 iff the verdict is definitely-sat."""
        return 1 if self is ThreeValuedOutcome.SAT else 0

    @property
    def x_usat(self) -> int:
        """0 iff the verdict is definitely-unsat (undet counts as 1)."""
        return 0 if self is ThreeValuedOutcome.UNSAT else 1


class ModelKind(enum.Enum):
    GOOD = "good"
    BAD = "bad"


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class BernoulliOracle:
    """Exact synthetic Bernoulli source: outcome 1 iff ``u0 < p_true``."""

    p_true: float
    dimension: int = 1

    def __post_init__(self) -> None:
        _check_unit("p_true", self.p_true)
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    def indicator_values(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points)[:, 0] < self.p_true).astype(float)

    def as_integrand(self) -> Integrand:
        return Integrand(dimension=self.dimension, batch=self.indicator_values)


def bernoulli_sample(oracle: BernoulliOracle, point: Sequence[float]) -> int:
    """0/1 outcome of one trial at ``point``."""
    point = np.asarray(point, dtype=float)
    if point.ndim != 1 or point.shape[0] < 1:
        raise ValueError("point must be a 1-d array with at least one coordinate")
    return int(point[0] < oracle.p_true)


def good_bad_probability(kind: ModelKind, n_param: float) -> float:
    """Analytic success probability of the model at parameter ``n_param``."""
    _check_unit("n_param", n_param)
    if kind is ModelKind.GOOD:
        return 0.1
    return (2.0 * n_param - 1.0) ** 2


def bad_param_for_probability(p: float) -> float:
    """Parameter ``n >= 0.5`` at which the bad model's probability is ``p``."""
    _check_unit("p", p)
    return 0.5 * (1.0 + np.sqrt(p))


def _good_band(n_param: float) -> tuple[float, float]:
    return 0.9 * n_param, 0.9 * n_param + 0.1


def good_bad_indicator(kind: ModelKind, n_param: float, point: Sequence[float]) -> int:
    """0/1 goal outcome for one trial; ``r = point[0]`` is the random draw."""
    _check_unit("n_param", n_param)
    r = float(np.asarray(point, dtype=float).reshape(-1)[0])
    if kind is ModelKind.GOOD:
        lo, hi = _good_band(n_param)
        return int(lo <= r <= hi)
    return int(r < good_bad_probability(kind, n_param))


@dataclass(frozen=True)
class GoodBadModel:
    """One of the analytic models bound to a fixed parameter value."""

    kind: ModelKind
    n_param: float

    def __post_init__(self) -> None:
        _check_unit("n_param", self.n_param)

    @property
    def dimension(self) -> int:
        return 1

    @property
    def probability(self) -> float:
        return good_bad_probability(self.kind, self.n_param)

    def indicator_values(self, points: np.ndarray) -> np.ndarray:
        r = np.asarray(points)[:, 0]
        if self.kind is ModelKind.GOOD:
            lo, hi = _good_band(self.n_param)
            return ((r >= lo) & (r <= hi)).astype(float)
        return (r < self.probability).astype(float)

    def as_integrand(self) -> Integrand:
        return Integrand(dimension=1, batch=self.indicator_values)


# --------------------------------------------------------------------------
# three-valued (banded) oracles


@dataclass(frozen=True)
class BandedPredicate:
    """Goal predicate with a slack band of half-width ``delta_band``.

    Points strictly inside the shrunk goal region are sat, points
    strictly outside the grown region are unsat, everything else
    (within ``delta_band`` of the boundary) is undet.  ``delta_band = 0``
    reproduces the sharp 0/1 indicator exactly.
    """

    kind: ModelKind
    delta_band: float

    def __post_init__(self) -> None:
        if self.delta_band < 0.0:
            raise ValueError(f"delta_band must be >= 0, got {self.delta_band!r}")


def banded_verdict(
    pred: BandedPredicate, n_param: float, point: Sequence[float]
) -> ThreeValuedOutcome:
    """Three-valued verdict of one trial under the banded predicate."""
    _check_unit("n_param", n_param)
    r = float(np.asarray(point, dtype=float).reshape(-1)[0])
    d = pred.delta_band
    if pred.kind is ModelKind.GOOD:
        lo, hi = _good_band(n_param)
        if lo + d <= r <= hi - d:
            return ThreeValuedOutcome.SAT
        if r < lo - d or r > hi + d:
            return ThreeValuedOutcome.UNSAT
        return ThreeValuedOutcome.UNDET
    p = good_bad_probability(pred.kind, n_param)
    if r < p - d:
        return ThreeValuedOutcome.SAT
    if r >= p + d:
        return ThreeValuedOutcome.UNSAT
    return ThreeValuedOutcome.UNDET


@dataclass(frozen=True)
class ThreeValuedModel:
    """Banded predicate bound to a parameter, vectorized for the engine.

    ``x_sat_values`` is 1 only on definitely-sat points and
    ``x_usat_values`` is 0 only on definitely-unsat points, so their means
    bracket the sharp model's success probability on any shared sample.
    """

    predicate: BandedPredicate
    n_param: float

    def __post_init__(self) -> None:
        _check_unit("n_param", self.n_param)

    @property
    def dimension(self) -> int:
        return 1

    def _codes(self, points: np.ndarray) -> np.ndarray:
        """+1 sat / 0 undet / -1 unsat, vectorized over rows of ``points``."""
        r = np.asarray(points)[:, 0]
        d = self.predicate.delta_band
        if self.predicate.kind is ModelKind.GOOD:
            lo, hi = _good_band(self.n_param)
            sat = (r >= lo + d) & (r <= hi - d)
            unsat = (r < lo - d) | (r > hi + d)
        else:
            p = good_bad_probability(self.predicate.kind, self.n_param)
            sat = r < p - d
            unsat = r >= p + d
        return sat.astype(np.int8) - unsat.astype(np.int8)

    def verdicts(self, points: np.ndarray) -> list[ThreeValuedOutcome]:
        lookup = {
            1: ThreeValuedOutcome.SAT,
            0: ThreeValuedOutcome.UNDET,
            -1: ThreeValuedOutcome.UNSAT,
        }
        return [lookup[int(c)] for c in self._codes(points)]

    def x_sat_values(self, points: np.ndarray) -> np.ndarray:
        return (self._codes(points) == 1).astype(float)

    def x_usat_values(self, points: np.ndarray) -> np.ndarray:
        return (self._codes(points) != -1).astype(float)


# --------------------------------------------------------------------------
# external oracle protocol

PROTOCOL_VERSION = 1
# Line protocol over the child's standard streams, one request per line:
#   client: "VERSION <v>"          server: "OK <v>"     (once, at startup)
#   client: "EVAL <p1> ... <pd>"   server: "SAT" | "UNSAT" | "UNDET"
# Any other response is a protocol violation.


class OracleProtocolError(RuntimeError):
    """The external oracle process violated the line protocol."""


class ExternalOracle:
    """Client for an external three-valued oracle process.

    Spawns ``argv``, performs the version handshake, then answers
    ``evaluate`` calls by round-tripping one ``EVAL`` line per point.
    Use as a context manager so the child is always reaped.
    """

    def __init__(self, argv: Sequence[str], dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self._proc = subprocess.Popen(
            list(argv),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        reply = self._roundtrip(f"VERSION {PROTOCOL_VERSION}")
        if reply != f"OK {PROTOCOL_VERSION}":
            self.close()
            raise OracleProtocolError(
                f"handshake failed: expected 'OK {PROTOCOL_VERSION}', got {reply!r}"
            )

    def _roundtrip(self, line: str) -> str:
        assert self._proc.stdin is not None and self._proc.stdout is not None
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
            reply = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise OracleProtocolError(f"oracle process died: {exc}") from exc
        if not reply:
            raise OracleProtocolError("oracle process closed its output stream")
        return reply.strip()

    def evaluate(self, params: Sequence[float]) -> ThreeValuedOutcome:
        params = np.asarray(params, dtype=float).reshape(-1)
        if params.shape[0] != self.dimension:
            raise ValueError(
                f"expected {self.dimension} parameters, got {params.shape[0]}"
            )
        reply = self._roundtrip("EVAL " + " ".join(repr(float(p)) for p in params))
        try:
            return ThreeValuedOutcome[reply]
        except KeyError:
            raise OracleProtocolError(f"unexpected oracle response {reply!r}") from None

    def verdicts(self, points: np.ndarray) -> list[ThreeValuedOutcome]:
        return [self.evaluate(row) for row in np.asarray(points, dtype=float)]

    def x_sat_values(self, points: np.ndarray) -> np.ndarray:
        return np.array([v.x_sat for v in self.verdicts(points)], dtype=float)

    def x_usat_values(self, points: np.ndarray) -> np.ndarray:
        return np.array([v.x_usat for v in self.verdicts(points)], dtype=float)

    def close(self) -> None:
        proc = self._proc
        for stream in (proc.stdin, proc.stdout):
            if stream is not None:
                try:
                    stream.close()
                except OSError:
                    pass
        if proc.poll() is None:
            proc.terminate()
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()

    def __enter__(self) -> "ExternalOracle":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
