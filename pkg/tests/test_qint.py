from __future__ import annotations

import math

import numpy as np
import pytest

from reachci.estimators import Integrand
from reachci.qint import (
    QintPartitionError,
    QintVariance,
    qint_interval,
    qint_partition,
    qint_variance,
    stratum_summaries,
)
from reachci.sequences import PseudoRandomGenerator, SobolGenerator


def indicator(threshold):
    return Integrand(dimension=1, batch=lambda pts: (pts[:, 0] < threshold).astype(float))


IDENTITY = Integrand(dimension=1, batch=lambda pts: pts[:, 0])
HALF = indicator(0.5)
ZERO = Integrand(dimension=1, batch=lambda pts: np.zeros(len(pts)))
ONE = Integrand(dimension=1, batch=lambda pts: np.ones(len(pts)))


# ---------------------------------------------------------------- partition

def test_partition_single_stratum():
    part = qint_partition(SobolGenerator(1), 2, 0)
    assert part.n == 2 and part.n_strata == 1
    assert list(part.stratum_ids) == [0, 0]
    assert part.points[:, 0].tolist() == [0.5, 0.75]


def test_partition_dim1_k2_s3():
    part = qint_partition(SobolGenerator(1), 2, 3)
    assert part.n == 16 and part.n_strata == 8
    assert part.axis_splits == (3,)
    # cell of each point is just its dyadic interval of width 1/8
    expected = np.floor(part.points[:, 0] * 8).astype(int)
    assert np.array_equal(part.stratum_ids, expected)
    assert np.bincount(part.stratum_ids, minlength=8).tolist() == [2] * 8


def test_partition_dim2_k1_s2():
    part = qint_partition(SobolGenerator(2), 1, 2)
    assert part.n == 4 and part.n_strata == 4
    assert part.axis_splits == (1, 1)
    assert np.allclose(
        part.points,
        [[0.5, 0.5], [0.75, 0.25], [0.25, 0.75], [0.375, 0.375]],
    )
    assert sorted(part.stratum_ids.tolist()) == [0, 1, 2, 3]


@pytest.mark.parametrize("dim,k,s", [(1, 2, s) for s in range(9)] + [(2, 2, 1), (2, 2, 2), (2, 2, 3)])
def test_partition_soundness(dim, k, s):
    part = qint_partition(SobolGenerator(dim), k, s)
    n = k << s
    fresh = SobolGenerator(dim).take(n)
    assert np.array_equal(part.points, fresh)  # union of strata == first n points
    assert part.stratum_ids.min() >= 0
    assert part.stratum_ids.max() < part.n_strata
    assert np.all(np.bincount(part.stratum_ids, minlength=part.n_strata) == k)


def test_partition_unbalanced_cell_raises():
    # origin-skipped blocks lose dyadic balance in 2-d once s is large
    with pytest.raises(QintPartitionError, match="stratum"):
        qint_partition(SobolGenerator(2), 2, 4)


def test_partition_requires_stream_start():
    gen = SobolGenerator(1)
    gen.next_point()
    with pytest.raises(ValueError, match="index"):
        qint_partition(gen, 2, 1)
    with pytest.raises(ValueError, match="index"):
        qint_partition(SobolGenerator(1, include_origin=True), 2, 1)


def test_partition_parameter_validation():
    with pytest.raises(ValueError):
        qint_partition(SobolGenerator(1), 0, 1)
    with pytest.raises(ValueError):
        qint_partition(SobolGenerator(1), 2, -1)


# ----------------------------------------------------------------- variance

def mc_var_of(f, part):
    vals = f.evaluate(part.points)
    return float(vals.var(ddof=1)) / part.n


def test_variance_constant_equals_mc():
    const = Integrand(dimension=1, batch=lambda pts: np.full(len(pts), 0.7))
    part = qint_partition(SobolGenerator(1), 2, 4)
    qv = qint_variance(const, part, 1.25e-4)
    assert qv.correction == 0.0
    assert qv.value == 1.25e-4  # exactly mc_variance
    assert not qv.clamped
    assert float(qv) == qv.value


def test_variance_half_indicator_frozen():
    # hand computation: 16 points, 8 of them below 0.5;
    # mc = (16/15 * 1/4)/16 = 1/60; cell integrals are 1/8 (4 cells) and 0
    # (4 cells), so the pairwise correction is 1/64 and the corrected
    # variance is 1/60 - 1/64 = 1/960
    part = qint_partition(SobolGenerator(1), 2, 3)
    mc = mc_var_of(HALF, part)
    assert mc == pytest.approx(1 / 60, abs=1e-15)
    qv = qint_variance(HALF, part, mc)
    assert qv.correction == pytest.approx(1 / 64, abs=1e-15)
    assert qv.value == pytest.approx(1 / 960, abs=1e-15)
    assert not qv.clamped


@pytest.mark.parametrize("k,s", [(2, 2), (2, 4), (4, 2), (4, 3)])
def test_variance_matches_literal_pairwise_sum(k, s):
    # independent route: evaluate the pairwise definition directly
    f = IDENTITY
    part = qint_partition(SobolGenerator(1), k, s)
    vals = f.evaluate(part.points)
    n_strata = part.n_strata
    a = np.array([
        vals[part.stratum_ids == i].mean() / n_strata for i in range(n_strata)
    ])
    pairwise = sum(
        (a[i] - a[j]) ** 2 for i in range(n_strata) for j in range(i + 1, n_strata)
    ) / part.n
    mc = mc_var_of(f, part)
    qv = qint_variance(f, part, mc)
    assert qv.correction == pytest.approx(pairwise, rel=1e-12, abs=1e-18)
    assert qv.value == pytest.approx(max(0.0, mc - pairwise), rel=1e-12, abs=1e-18)


def test_variance_never_exceeds_mc_randomized():
    rng = PseudoRandomGenerator(123)
    for trial in range(50):
        threshold = float(rng.take(1, 1)[0, 0])
        f = indicator(threshold)
        s = 1 + trial % 6
        part = qint_partition(SobolGenerator(1), 2, s)
        mc = mc_var_of(f, part)
        qv = qint_variance(f, part, mc)
        assert qv.value <= mc + 1e-18
        means = [qm.mean for qm in stratum_summaries(f, part)]
        if max(means) - min(means) > 1e-6:
            assert qv.value < mc


def test_variance_monotone_in_s_for_identity():
    values = []
    for s in range(7):
        part = qint_partition(SobolGenerator(1), 2, s)
        mc = mc_var_of(IDENTITY, part)
        values.append(qint_variance(IDENTITY, part, mc).value)
    assert all(b <= a + 1e-18 for a, b in zip(values, values[1:]))
    assert values[-1] > 0.0  # no degenerate clamp-to-zero tail


def test_variance_clamp_flag():
    # correction larger than the supplied mc_variance -> clamp to 0, flagged
    part = qint_partition(SobolGenerator(1), 2, 3)
    qv = qint_variance(HALF, part, 1e-6)
    assert qv.value == 0.0 and qv.clamped


def test_variance_input_validation():
    part = qint_partition(SobolGenerator(1), 2, 2)
    with pytest.raises(ValueError, match="dimension"):
        qint_variance(Integrand(dimension=2, batch=lambda p: p[:, 0]), part, 0.1)
    with pytest.raises(ValueError):
        qint_variance(IDENTITY, part, -1e-9)
    with pytest.raises(ValueError):
        QintVariance(value=-1e-9, mc_variance=0.0, correction=0.0, clamped=False)


def test_stratum_summaries():
    part = qint_partition(SobolGenerator(1), 2, 3)
    summaries = stratum_summaries(HALF, part)
    assert len(summaries) == 8
    assert all(sm.count == 2 for sm in summaries)
    assert [sm.index for sm in summaries] == list(range(8))
    # equal cell sizes: mean of cell means is the overall mean
    overall = HALF.evaluate(part.points).mean()
    assert np.mean([sm.mean for sm in summaries]) == pytest.approx(overall)
    # cells of width 1/8 sit entirely inside or outside [0, 0.5)
    assert sorted(sm.mean for sm in summaries) == [0.0] * 4 + [1.0] * 4


# ----------------------------------------------------------------- interval

def test_interval_degenerate_zero_frozen():
    # all-zero sample: variance floored at 1/n^2, so the half-width is
    # C * n^{-3/2} = 2.5758293.../64 at n=16, c=0.99
    ci = qint_interval(ZERO, SobolGenerator(1), 2, 3, 0.99)
    assert ci.lo == 0.0
    assert ci.hi == pytest.approx(0.040247332867951575, abs=1e-15)
    assert ci.raw_lo == pytest.approx(-0.040247332867951575, abs=1e-15)
    assert ci.center == 0.0
    assert ci.method == "qint" and ci.n_used == 16


def test_interval_degenerate_one_clamps_high_end():
    ci = qint_interval(ONE, SobolGenerator(1), 2, 3, 0.99)
    assert ci.hi == 1.0
    assert ci.raw_hi == pytest.approx(1.040247332867951575, abs=1e-15)
    assert ci.lo == pytest.approx(1 - 0.040247332867951575, abs=1e-15)


def test_interval_band_indicator_contains_truth():
    band = Integrand(
        dimension=1,
        batch=lambda pts: ((pts[:, 0] >= 0.45) & (pts[:, 0] <= 0.55)).astype(float),
    )
    ci = qint_interval(band, SobolGenerator(1), 2, 8, 0.99)
    assert ci.contains(0.1)
    assert ci.half_width <= 5e-3
    assert ci.n_used == 512


def test_interval_width_shrinks_with_s():
    widths = [
        qint_interval(IDENTITY, SobolGenerator(1), 2, s, 0.95).width
        for s in range(1, 7)
    ]
    assert all(b < a for a, b in zip(widths, widths[1:]))


def test_interval_validation():
    with pytest.raises(ValueError):
        qint_interval(ZERO, SobolGenerator(1), 2, 3, 1.0)
    with pytest.raises(ValueError):
        qint_interval(ZERO, SobolGenerator(1), 1, 0, 0.95)  # single point
