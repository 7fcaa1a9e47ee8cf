"""Cascade auction lab: truthful learning mechanisms for multi-slot ad auctions.

Layers, bottom to top: ``model`` (domain types and welfare), ``allocation``
(optimal allocation rules), ``mechanisms`` (payment schemes and the repeated
mechanisms), ``simulation`` (click sampling and the round driver), ``regret``
(metrics, bounds, tuning), ``harness`` (CLI, sweeps, verification).
"""

from .model import (
    Allocation,
    AuctionEnv,
    BidProfile,
    CascadeModel,
    ClickRealization,
    ConfigError,
    ImpossibleEventError,
    cumulative_observation,
    social_welfare,
    social_welfare_excluding,
)
from .allocation import (
    AllocationSolver,
    brute_force_allocation,
    monotonicity_witness,
    optimal_allocation,
    optimal_allocation_excluding,
)
from .mechanisms import (
    AVCG1,
    AVCG2,
    AVCG2Prime,
    AVCG3,
    MechanismState,
    OracleVCG,
    PADAVCG,
    QualityEstimate,
    ResampledBids,
    avcg2_click_payments,
    csrp,
    frozen_estimate,
    make_mechanism,
    myerson_piecewise_payment,
    randomized_allocate,
    srp_click_payment,
    vcg_click_payment,
    vcg_expected_payments,
    wvcg_expected_payments,
)
from .simulation import (
    ReplicationMetrics,
    RoundTrace,
    RunConfig,
    run,
    run_metrics,
    sample_cascade_clicks,
    stream_rng,
)
from .regret import (
    RegretReport,
    THEOREM_IDS,
    bound,
    build_report,
    check_constraints,
    deviation_regret,
    resolve_theorem,
    revenue_regret,
    sw_regret,
    tune,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
