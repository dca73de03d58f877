"""Sequential estimation of near-boundary reachability probabilities.

The package estimates the probability that a stochastic system reaches a
goal region, with special care for probabilities near 0 or 1: a sampling
engine (plain Monte Carlo, Sobol quasi-Monte Carlo, randomized QMC, and a
stratified cubature) feeds nine binomial-proportion interval methods and
stops each stream as soon as its interval is tight enough.

Typical use::

    from reachci import BernoulliOracle, StoppingRule, sequential_estimate

    report = sequential_estimate(
        BernoulliOracle(p_true=0.005), "wilson",
        StoppingRule(confidence=0.9999, half_width=5e-3),
    )
    print(report.interval.lo, report.interval.hi, report.n_used)

The ``reachci`` command line exposes the experiment harness (grid sweeps,
convergence traces, discrepancy panels, a selftest).
"""

from .engine import (
    SAMPLERS,
    AveragedReport,
    SequentialReport,
    StoppingRule,
    ValidatedReport,
    averaged_runs,
    default_sampler,
    sequential_estimate,
    validated_estimate,
)
from .estimators import (
    EstimateReport,
    Integrand,
    absolute_error_trace,
    mc_estimate,
    qmc_estimate,
    rqmc_estimate,
)
from .harness import (
    BORDER_GRID,
    CONFIDENCE_GRID,
    DEFAULT_METHODS,
    ExperimentManifest,
    cell_seed,
    convergence_rows,
    load_manifest,
    run_border_sweep,
    run_convergence,
    run_discrepancy,
    run_probability_sweep,
    run_table_row,
    save_manifest,
    selftest,
)
from .intervals import (
    JEFFREYS_PRIOR,
    METHODS,
    BernoulliSummary,
    BetaParams,
    ConfidenceInterval,
)
from .models import (
    PROTOCOL_VERSION,
    BandedPredicate,
    BernoulliOracle,
    ExternalOracle,
    GoodBadModel,
    ModelKind,
    OracleProtocolError,
    ThreeValuedModel,
    ThreeValuedOutcome,
    bad_param_for_probability,
    good_bad_probability,
)
from .qint import (
    QintPartition,
    QintPartitionError,
    QintVariance,
    qint_interval,
    qint_partition,
    qint_variance,
)
from .sequences import (
    PseudoRandomGenerator,
    SobolGenerator,
    randomize_shift,
    star_discrepancy_2d,
)

__all__ = [
    # engine
    "SAMPLERS",
    "StoppingRule",
    "SequentialReport",
    "AveragedReport",
    "ValidatedReport",
    "default_sampler",
    "sequential_estimate",
    "averaged_runs",
    "validated_estimate",
    # estimators
    "Integrand",
    "EstimateReport",
    "mc_estimate",
    "qmc_estimate",
    "rqmc_estimate",
    "absolute_error_trace",
    # harness
    "BORDER_GRID",
    "CONFIDENCE_GRID",
    "DEFAULT_METHODS",
    "ExperimentManifest",
    "cell_seed",
    "convergence_rows",
    "load_manifest",
    "save_manifest",
    "run_border_sweep",
    "run_probability_sweep",
    "run_table_row",
    "run_convergence",
    "run_discrepancy",
    "selftest",
    # intervals
    "BernoulliSummary",
    "ConfidenceInterval",
    "BetaParams",
    "JEFFREYS_PRIOR",
    "METHODS",
    # models
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
    "good_bad_probability",
    # qint
    "QintPartition",
    "QintPartitionError",
    "QintVariance",
    "qint_partition",
    "qint_variance",
    "qint_interval",
    # sequences
    "SobolGenerator",
    "PseudoRandomGenerator",
    "randomize_shift",
    "star_discrepancy_2d",
]

__version__ = "0.1.0"
