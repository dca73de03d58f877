"""Point generators for the unit hypercube.

Sobol low-discrepancy streams (gray-code order, 32-bit), a seeded
pseudorandom source, torus-shift randomization of deterministic point sets,
and an exact star discrepancy for small 2-d sets.

The Sobol generator is authored here from the classic direction-number
construction: point i is the XOR of the direction integers selected by the
bits of gray(i) = i ^ (i >> 1). Dimension 1 is the base-2 van der Corput
stream; higher dimensions take their recurrence degree s, polynomial mask a,
and initial integers m_1..m_s from a plain-text table (`d s a m_1 ... m_s`,
the widely published format). The embedded table covers dimensions 2..21.
"""
from __future__ import annotations

import math
from importlib import resources
from typing import NamedTuple

import numpy as np

__all__ = [
    "BITS",
    "MAX_INDEX",
    "DirectionRow",
    "SobolExhaustedError",
    "SobolGenerator",
    "PseudoRandomGenerator",
    "parse_direction_table",
    "load_direction_table",
    "embedded_direction_table",
    "max_embedded_dimension",
    "randomize_shift",
    "star_discrepancy_2d",
]

BITS = 32
MAX_INDEX = 1 << BITS  # indices run 0 .. 2^32 - 1; beyond that is an error


class SobolExhaustedError(RuntimeError):
    """Raised when a Sobol stream is asked for an index at or past 2^32."""


class DirectionRow(NamedTuple):
    dim: int
    degree: int
    poly: int
    m: tuple[int, ...]


def parse_direction_table(text: str) -> dict[int, DirectionRow]:
    """Parse `d s a m_1 ... m_s` lines into a {dim: DirectionRow} map.

    Blank lines, `#` comments, and a leading non-numeric header line (as in
    the published tables) are ignored.
    """
    table: dict[int, DirectionRow] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if not parts[0].lstrip("-").isdigit():
            if lineno == 1 or not table:
                continue  # header like "d s a m_i"
            raise ValueError(f"direction table line {lineno}: not numeric: {raw!r}")
        values = [int(p) for p in parts]
        if len(values) < 4:
            raise ValueError(f"direction table line {lineno}: too few fields")
        d, s, a = values[0], values[1], values[2]
        m = tuple(values[3:])
        if d < 2:
            raise ValueError(f"direction table line {lineno}: dimension {d} < 2")
        if len(m) != s:
            raise ValueError(
                f"direction table line {lineno}: expected {s} initial integers, got {len(m)}"
            )
        if s < 1 or a < 0 or a >= (1 << max(0, s - 1)):
            raise ValueError(f"direction table line {lineno}: bad degree/poly ({s}, {a})")
        for k, mk in enumerate(m, 1):
            if mk <= 0 or mk % 2 == 0 or mk >= (1 << k):
                raise ValueError(
                    f"direction table line {lineno}: m_{k}={mk} must be odd and < 2^{k}"
                )
        if d in table:
            raise ValueError(f"direction table line {lineno}: duplicate dimension {d}")
        table[d] = DirectionRow(d, s, a, m)
    return table


def load_direction_table(path) -> dict[int, DirectionRow]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_direction_table(fh.read())


_embedded_cache: dict[int, DirectionRow] | None = None


def embedded_direction_table() -> dict[int, DirectionRow]:
    global _embedded_cache
    if _embedded_cache is None:
        text = (resources.files("reachci") / "data" / "directions.txt").read_text()
        _embedded_cache = parse_direction_table(text)
    return _embedded_cache


def max_embedded_dimension() -> int:
    return max(embedded_direction_table())


def _direction_integers(row: DirectionRow | None) -> np.ndarray:
    """32 direction integers V_1..V_BITS (uint64), scaled into the top bits.

    `row=None` selects the built-in dimension-1 van der Corput stream
    (m_k = 1 for every k).
    """
    m = [0] * (BITS + 1)  # 1-indexed
    if row is None:
        for k in range(1, BITS + 1):
            m[k] = 1
    else:
        s, a = row.degree, row.poly
        for k in range(1, min(s, BITS) + 1):
            m[k] = row.m[k - 1]
        for k in range(s + 1, BITS + 1):
            acc = m[k - s] ^ (m[k - s] << s)
            for j in range(1, s):
                if (a >> (s - 1 - j)) & 1:
                    acc ^= m[k - j] << j
            m[k] = acc
    v = np.zeros(BITS, dtype=np.uint64)
    for k in range(1, BITS + 1):
        v[k - 1] = np.uint64(m[k] << (BITS - k))
    return v


class SobolGenerator:
    """Gray-code Sobol stream over [0,1)^d.

    By default the origin (index 0) is skipped so integration never
    evaluates the integrand at the corner point; pass ``include_origin=True``
    to emit it (needed e.g. for the first-2^m permutation property).
    A custom direction table may be supplied for dimensions >= 2.
    """

    def __init__(self, dimension: int, *, include_origin: bool = False,
                 table: dict[int, DirectionRow] | None = None):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        if table is None:
            table = embedded_direction_table()
        max_dim = max(table) if table else 1
        if dimension > max_dim:
            raise ValueError(
                f"dimension {dimension} exceeds direction table (max {max_dim})"
            )
        self.dimension = dimension
        self.include_origin = include_origin
        rows: list[DirectionRow | None] = [None]
        for d in range(2, dimension + 1):
            if d not in table:
                raise ValueError(f"direction table has no row for dimension {d}")
            rows.append(table[d])
        # (dimension, BITS) matrix of direction integers
        self._v = np.stack([_direction_integers(r) for r in rows])
        self._start = 0 if include_origin else 1
        self._index = self._start

    @property
    def index(self) -> int:
        """Index of the next point to be emitted."""
        return self._index

    def reset(self) -> None:
        self._index = self._start

    def fast_forward(self, n: int) -> None:
        """Skip the next n points."""
        if n < 0:
            raise ValueError("cannot fast-forward backwards")
        self._index += n

    def _points_at(self, indices: np.ndarray) -> np.ndarray:
        gray = indices ^ (indices >> np.uint64(1))
        acc = np.zeros((len(indices), self.dimension), dtype=np.uint64)
        for b in range(BITS):
            sel = (gray >> np.uint64(b)) & np.uint64(1) == 1
            if sel.any():
                acc[sel] ^= self._v[:, b]
        return acc.astype(np.float64) * (2.0 ** -BITS)

    def take(self, n: int) -> np.ndarray:
        """Emit the next n points as an (n, dimension) float array."""
        if n < 0:
            raise ValueError("cannot take a negative number of points")
        if self._index + n > MAX_INDEX:
            raise SobolExhaustedError(
                f"Sobol stream exhausted: index {self._index}+{n} exceeds 2^{BITS}"
            )
        idx = np.arange(self._index, self._index + n, dtype=np.uint64)
        self._index += n
        return self._points_at(idx)

    def next_point(self) -> np.ndarray:
        """Emit the next point as a (dimension,) float array."""
        return self.take(1)[0]


class PseudoRandomGenerator:
    """Seed-replayable uniform source (PCG64; period far beyond 2^64)."""

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def next_point(self, dim: int) -> np.ndarray:
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        return self._rng.random(dim)

    def take(self, n: int, dim: int) -> np.ndarray:
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        return self._rng.random((n, dim))

    def reset(self) -> None:
        self._rng = np.random.Generator(np.random.PCG64(self.seed))


def randomize_shift(points: np.ndarray, shift: np.ndarray) -> np.ndarray:
    """Cranley–Patterson rotation: coordinate-wise (x + shift) mod 1."""
    pts = np.asarray(points, dtype=np.float64)
    sh = np.asarray(shift, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError(f"points must be 2-d (n, dim), got shape {pts.shape}")
    if sh.ndim != 1 or sh.shape[0] != pts.shape[1]:
        raise ValueError(
            f"shift dimension {sh.shape} does not match points {pts.shape}"
        )
    out = pts + sh
    out -= np.floor(out)
    # pin any 1.0 produced by rounding back into [0, 1)
    out[out >= 1.0] = 0.0
    return out


def star_discrepancy_2d(points: np.ndarray, n_max: int = 500) -> float:
    """Exact star discrepancy of a 2-d point set (n <= n_max).

    Supremum over anchored boxes [0,c1) x [0,c2) of |count/n - c1*c2|,
    evaluated on the critical grid of point coordinates and their closure
    at 1: the positive part uses closed counts (limit from above), the
    negative part strict counts (limit from below).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"star_discrepancy_2d requires an (n, 2) array, got {pts.shape}")
    n = pts.shape[0]
    if n < 1:
        raise ValueError("empty point set")
    if n > n_max:
        raise ValueError(f"exact star discrepancy limited to n <= {n_max}, got {n}")
    if (pts < 0).any() or (pts >= 1).any():
        raise ValueError("coordinates must lie in [0, 1)")

    xs = np.unique(np.append(pts[:, 0], 1.0))
    ys = np.unique(np.append(pts[:, 1], 1.0))
    rank_x = np.searchsorted(xs, pts[:, 0])
    rank_y = np.searchsorted(ys, pts[:, 1])

    counts = np.zeros((len(xs) + 1, len(ys) + 1), dtype=np.int64)
    np.add.at(counts, (rank_x + 1, rank_y + 1), 1)
    closed = counts.cumsum(axis=0).cumsum(axis=1)  # closed[a+1,b+1] = #{p <= (xs[a], ys[b])}

    area = xs[:, None] * ys[None, :]
    frac_closed = closed[1:, 1:] / n
    frac_strict = closed[:-1, :-1] / n
    d_plus = frac_closed - area
    d_minus = area - frac_strict
    return float(max(d_plus.max(), d_minus.max()))
