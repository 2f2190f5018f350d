"""Budget-constrained bidding in repeated first-price auctions.

A simulation laboratory: seeded distributions on [0, 1], empirical and
censored-data CDF estimation, a finite-truncation dynamic-programming
bidder, an oracle benchmark, and a regret-measurement harness.
"""

from .auction import (
    CENSORED,
    FULL,
    AuctionConfig,
    ContractViolationError,
    Observation,
    RoundRecord,
    SimResult,
    make_observation,
    result_to_csv,
    run_auction,
    settle_round,
)
from .distributions import (
    DiscreteAtoms,
    Distribution,
    EmpiricalStep,
    PiecewiseLinearCdf,
    RngStream,
    Uniform,
    spec_from_dict,
)
from .dp import (
    DpConfig,
    InfeasibleBidError,
    InstanceTooLargeError,
    TinyInstance,
    ValueTable,
    enumerate_policy_value,
    horizon_t0,
    myopic_grid_bid,
    optimal_bid,
    q_value,
    solve_value_table,
)
from .estimation import (
    CensoredCdfEstimate,
    CensoredSample,
    CoxFit,
    EmpiricalCdf,
    KernelSpec,
    bandwidth,
    censored_cdf_eval,
    cox_fit,
    dkw_radius,
    zeng_estimate,
)
from .harness import (
    ConfigError,
    Example1Report,
    ExperimentSpec,
    PolicyDef,
    RegretReport,
    RunSpec,
    SlopeFit,
    bounds_table,
    example1_report,
    expected_reward,
    fit_slope,
    load_experiment,
    load_run,
    make_policy,
    measure_regret,
    run_single,
    run_sweep,
    thm1_bound,
    thm2_bound,
)
from .policies import (
    Alg1Policy,
    Alg2Policy,
    BidderParams,
    HalfValuePolicy,
    ModeError,
    OraclePolicy,
    PhaseSchedule,
    ScheduleError,
    half_value_bid,
)

__version__ = "0.1.0"
