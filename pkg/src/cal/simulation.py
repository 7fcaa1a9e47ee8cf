"""Cascade click sampling and the repeated-auction driver.

A run executes one mechanism for T rounds of truthful bidding,
replicated ``replications`` times.  Determinism contract: every random
draw comes from a counter-based generator keyed by (seed, replication,
round, purpose), so clicks and bid-resampling draws live on independent
streams, each replication is invariant to how many others run, and
common-random-number experiments can replay a stream at will.

``run`` materializes full round traces.  ``run_metrics`` computes the
three regret aggregates per replication without storing traces and
without sampling clicks that cannot influence them (exploitation clicks
never feed back into any mechanism state); because the streams are
purpose-keyed, both paths produce identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mechanisms import (
    Mechanism,
    QualityEstimate,
    ResampledBids,
    make_mechanism,
    vcg_expected_payments,
)
from .model import (
    Allocation,
    AuctionEnv,
    CascadeModel,
    ClickRealization,
    ConfigError,
    social_welfare,
)
from .allocation import optimal_allocation

_PURPOSES = {"clicks": 1, "csrp": 2, "instance": 3, "crn": 4}
_SEED_LIMIT = 2 ** 64

# mechanisms whose exploitation round is a pure function of the frozen state
_STATIC_EXPLOIT = {"oracle-vcg", "avcg1", "avcg2", "pad-avcg"}


def stream_rng(seed: int, replication: int, round_index: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (replication, round, purpose) cell."""
    ss = np.random.SeedSequence(
        entropy=int(seed),
        spawn_key=(int(replication), int(round_index), _PURPOSES[purpose]))
    return np.random.Generator(np.random.Philox(ss))


def sample_cascade_clicks(alloc: Allocation, env: AuctionEnv, model: CascadeModel,
                          rng) -> ClickRealization:
    """One pass of the cascade chain over the displayed slots.

    The user always sees slot 1; each further slot is reached with the
    model's transition probability given the ad above.  Observed ads are
    clicked independently with their quality; clicks do not stop the scan.
    """
    k = env.n_slots
    u = rng.random(2 * k)
    observed = np.zeros(k, dtype=bool)
    clicked = np.zeros(k, dtype=bool)
    observed[0] = True
    for m in range(1, k):
        if not observed[m - 1]:
            break
        observed[m] = u[m - 1] < model.transition(m - 1, int(alloc.ad_at[m - 1]))
    q = env.qualities[alloc.ad_at[:k]]
    clicked = observed & (u[k:] < q)
    return ClickRealization(clicked=clicked, observed=observed)


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation needs, including its seed."""

    env: AuctionEnv
    model: CascadeModel
    mechanism: str
    horizon: int
    seed: int
    replications: int = 1
    tau: int = 0
    delta: float | None = None
    mu: float | None = None
    estimate: QualityEstimate | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        if self.horizon < self.tau:
            raise ConfigError(f"horizon T={self.horizon} < tau={self.tau}")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not 0 <= int(self.seed) < _SEED_LIMIT:
            raise ConfigError("seed must fit in 64 bits")


@dataclass
class RoundTrace:
    """What happened in one round of one replication."""

    t: int
    allocation: Allocation
    resampled: ResampledBids | None
    clicks: ClickRealization
    expected_payments: np.ndarray
    realized_payments: np.ndarray


def _build_mechanism(config: RunConfig) -> Mechanism:
    return make_mechanism(config.mechanism, config.env, config.model,
                          tau=config.tau, delta=config.delta, mu=config.mu,
                          estimate=config.estimate)


def replication_trace(config: RunConfig, replication: int) -> list[RoundTrace]:
    """Full trace of one replication; deterministic given (config.seed, replication)."""
    mech = _build_mechanism(config)
    bids = config.env.true_values  # truthful play throughout
    traces = []
    for t in range(1, config.horizon + 1):
        plan = mech.step(bids, stream_rng(config.seed, replication, t, "csrp"))
        clicks = sample_cascade_clicks(plan.allocation, config.env, config.model,
                                       stream_rng(config.seed, replication, t, "clicks"))
        realized = plan.realized_payments(clicks)
        mech.record_clicks(clicks)
        traces.append(RoundTrace(t=t, allocation=plan.allocation, resampled=plan.resampled,
                                 clicks=clicks, expected_payments=plan.expected_payments,
                                 realized_payments=realized))
    return traces


def run(config: RunConfig) -> list[list[RoundTrace]]:
    """Execute every replication and return the traces in replication order."""
    return [replication_trace(config, r) for r in range(config.replications)]


@dataclass
class ReplicationMetrics:
    """Per-replication regret aggregates (sums over rounds of expected quantities)."""

    revenue_regret: float
    sw_regret: float
    deviation_regret: float


def replication_metrics(config: RunConfig, replication: int) -> ReplicationMetrics:
    """Streaming computation of R_T, R_T^SW and the deviation regret.

    Matches the trace-based regret functions exactly: expected payments and
    welfare never depend on exploitation clicks, so those are not sampled,
    and for mechanisms whose exploitation round is static the per-round
    plan is computed once and weighted by the number of rounds.
    """
    env, model = config.env, config.model
    mech = _build_mechanism(config)
    bids = env.true_values
    p_star_total = float(vcg_expected_payments(env, bids, model).sum())
    theta_star = optimal_allocation(env, bids, env.qualities, model)
    sw_star = social_welfare(theta_star, env, bids, model)

    revenue = sw = dev = 0.0
    t = 1
    while t <= config.tau:
        plan = mech.step(bids, None)
        clicks = sample_cascade_clicks(plan.allocation, env, model,
                                       stream_rng(config.seed, replication, t, "clicks"))
        mech.record_clicks(clicks)
        gap = p_star_total - float(plan.expected_payments.sum())
        revenue += gap
        dev += abs(gap)
        sw += sw_star - social_welfare(plan.allocation, env, bids, model)
        t += 1

    remaining = config.horizon - config.tau
    if remaining and config.mechanism in _STATIC_EXPLOIT:
        plan = mech.step(bids, None)
        gap = p_star_total - float(plan.expected_payments.sum())
        revenue += remaining * gap
        dev += remaining * abs(gap)
        sw += remaining * (sw_star - social_welfare(plan.allocation, env, bids, model))
    else:
        while t <= config.horizon:
            plan = mech.step(bids, stream_rng(config.seed, replication, t, "csrp"))
            gap = p_star_total - float(plan.expected_payments.sum())
            revenue += gap
            dev += abs(gap)
            sw += sw_star - social_welfare(plan.allocation, env, bids, model)
            t += 1
    return ReplicationMetrics(revenue_regret=revenue, sw_regret=sw, deviation_regret=dev)


def run_metrics(config: RunConfig) -> list[ReplicationMetrics]:
    return [replication_metrics(config, r) for r in range(config.replications)]
