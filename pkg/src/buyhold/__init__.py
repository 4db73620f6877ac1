"""Buy-and-hold super-replication pricing for Markovian claims.

The price of a claim g(S_T) under any fully incomplete market model is the
concave envelope of g evaluated at the spot, hedged by buying the envelope's
right derivative in stock and holding to maturity.  This package computes
that price and hedge exactly for a piecewise-affine payoff language, and
verifies the identity numerically against simulated stochastic- and
rough-volatility markets.
"""
from .payoff import (
    NegativePayoffError,
    NonAffineProductError,
    PayoffAst,
    PayoffError,
    PayoffSyntaxError,
    PiecewiseAffine,
    eval_payoff,
    lsc_normalize,
    parse_payoff,
    to_piecewise,
)
from .envelope import (
    ConcaveEnvelope,
    ContactInterval,
    HedgePair,
    MarginReport,
    RegularizedPayoff,
    buy_and_hold_price,
    concave_envelope,
    contact_set,
    envelope_from_table,
    hedge_dominates,
    left_derivative,
    lipschitz_regularize,
    right_derivative,
    write_envelope_csv,
)
from .models import (
    GBM,
    Heston,
    HullWhite,
    ModelSpec,
    PathBatch,
    RoughFOU,
    Scott,
    fbm_increments,
    initial_vol,
    simulate,
    standard_normals,
    stochastic_exponential,
    write_paths_csv,
)
from .stopping import StoppingResult, bellman_envelope, finite_horizon_value
from .duality import (
    DualityReport,
    ProximityStats,
    VolControl,
    attainment_experiment,
    incompleteness_probe,
    mc_upper_bound_check,
    proximity_diagnostic,
    write_reports_csv,
)

__version__ = "0.1.0"
