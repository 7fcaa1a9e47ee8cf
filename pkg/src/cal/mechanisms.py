"""Payment schemes and learning mechanisms for repeated slot auctions.

The static payment rules (VCG, weighted VCG, Myerson piecewise, the
execution-contingent scheme, and the self-resampling per-click scheme)
are plain functions.  The repeated mechanisms are round-driven state
machines sharing one life cycle:

    plan = mech.step(bids, rng)      # allocation + payment rule for round t
    ... clicks happen ...
    realized = plan.realized_payments(clicks)
    mech.record_clicks(clicks)       # feeds exploration estimates

Learning kinds run a payment-free exploration phase of ``tau`` rounds
that cycles every ad through the displayed slots, then freeze an
upper-confidence quality estimate and exploit it for the remaining
rounds.  Exploration allocations never depend on the bids, which is what
keeps the mechanisms truthful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import (
    optimal_allocation,
    optimal_allocation_excluding,
    sort_allocation,
    sort_order,
)
from .model import (
    POSITION,
    Allocation,
    AuctionEnv,
    CascadeModel,
    ClickRealization,
    ConfigError,
    ImpossibleEventError,
    bids_array,
    cumulative_observation,
    social_welfare,
    social_welfare_excluding,
)

# floor keeps the q-plus divisions in the per-click formulas finite
Q_PLUS_FLOOR = 1e-6
REC_MAX_DEPTH = 64

EXPLORATION = "exploration"
EXPLOITATION = "exploitation"


# ---------------------------------------------------------------------------
# static payment rules
# ---------------------------------------------------------------------------

def _lambda_ext(model: CascadeModel) -> np.ndarray:
    """Lambda_1..Lambda_K followed by the virtual Lambda_{K+1} = 0."""
    return np.append(model.cumulative_lambda(), 0.0)


def _slotwise_vcg(keys: np.ndarray, lam0: np.ndarray, n_slots: int) -> np.ndarray:
    """Per-slot VCG payments under position-dependent externalities.

    The ad in slot m pays the marginal observation probability of every
    lower slot times the expected value of the ad that would climb into it.
    """
    ks = np.sort(keys)[::-1]
    pays = np.zeros(n_slots)
    for m in range(n_slots):
        pays[m] = sum((lam0[j - 1] - lam0[j]) * ks[j] for j in range(m + 1, n_slots + 1))
    return pays


def vcg_expected_payments(env: AuctionEnv, bids, model: CascadeModel) -> np.ndarray:
    """Expected VCG payment of every ad: the externality it imposes on the rest.

    For position-dependent models the welfare-difference definition and the
    per-slot telescoping form are both evaluated and checked against each
    other before returning.
    """
    v = bids_array(bids)
    q = env.qualities
    theta = optimal_allocation(env, v, q, model)
    pays = np.zeros(env.n_ads)
    for i in theta.displayed(env.n_slots):
        theta_wo = optimal_allocation_excluding(int(i), env, v, q, model)
        pays[i] = (social_welfare(theta_wo, env, v, model)
                   - social_welfare_excluding(int(i), theta, env, v, model))
    if model.kind == POSITION:
        slot_pays = _slotwise_vcg(q * v, _lambda_ext(model), env.n_slots)
        by_slot = np.array([pays[theta.ad_at[m]] for m in range(env.n_slots)])
        assert np.allclose(by_slot, slot_pays, atol=1e-9), \
            "welfare-difference and per-slot VCG forms disagree"
        for m in range(env.n_slots):
            pays[theta.ad_at[m]] = slot_pays[m]
    return pays


def vcg_click_payment(i: int, env: AuctionEnv, bids, model: CascadeModel,
                      clicked: bool) -> float:
    """Pay-per-click version of the VCG payment: charged only on ad i's click.

    The per-click amount divides the expected payment by the CTR so the
    click expectation reproduces it exactly.
    """
    if not clicked:
        return 0.0
    v = bids_array(bids)
    theta = optimal_allocation(env, v, env.qualities, model)
    p_star = vcg_expected_payments(env, v, model)[i]
    gam = cumulative_observation(theta, model, env.n_slots)
    ctr = gam[theta.slot_of[i]] * env.qualities[i]
    if ctr == 0.0:
        if p_star == 0.0:
            return 0.0
        raise ImpossibleEventError(f"ad {i} was clicked but has zero CTR")
    return float(p_star / ctr)


def wvcg_expected_payments(env: AuctionEnv, bids, model: CascadeModel,
                           weights) -> np.ndarray:
    """Weighted VCG: allocation maximizes the weighted welfare, payments re-scale by 1/w_i."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (env.n_ads,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ConfigError("weights must be positive finite, one per ad")
    v = bids_array(bids)
    wq = env.qualities * w
    theta = optimal_allocation(env, v, wq, model)
    pays = np.zeros(env.n_ads)
    for i in theta.displayed(env.n_slots):
        i = int(i)
        theta_wo = optimal_allocation_excluding(i, env, v, wq, model)
        diff = (social_welfare(theta_wo, env, v, model, qualities=wq)
                - social_welfare_excluding(i, theta, env, v, model, qualities=wq))
        pays[i] = diff / w[i]
    return pays


def myerson_piecewise_payment(i: int, env: AuctionEnv, bids, qualities,
                              model: CascadeModel) -> float:
    """Exact single-parameter payment z(bid)*bid - integral of z over [0, bid].

    Under a position-dependent model the sort allocation makes the load
    z(u) = Lambda_{rank(u)} * q_i piecewise constant in the ad's own bid,
    with breakpoints where the bid crosses an opponent's key, so the
    integral is a finite sum.  With the zero pivot this equals the VCG
    payment.
    """
    if model.kind != POSITION:
        raise ConfigError("Myerson piecewise payments require a position-dependent model")
    v = bids_array(bids)
    q = np.asarray(qualities, dtype=float)
    lam0 = _lambda_ext(model)
    qi, vi = q[i], v[i]
    if qi == 0.0 or vi == 0.0:
        return 0.0

    others = [(q[j] * v[j], j) for j in range(env.n_ads) if j != i]

    def load(u: float) -> float:
        # rank with the lowest-index-first tie-break of the sort allocation
        rank = sum(1 for key, j in others if key > qi * u or (key == qi * u and j < i))
        return lam0[rank] * qi if rank < env.n_slots else 0.0

    cuts = sorted({key / qi for key, _ in others if 0.0 < key / qi < vi})
    edges = [0.0] + cuts + [vi]
    integral = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        integral += load(0.5 * (lo + hi)) * (hi - lo)
    return float(load(vi) * vi - integral)


def avcg2_click_payments(env: AuctionEnv, bids, model: CascadeModel,
                         clicks: ClickRealization) -> np.ndarray:
    """Execution-contingent payments computable without the prominences.

    Each displayed ad pays, per click at slot m at or below its own, the
    expected value of the ad that replaces slot m once it is removed
    (re-scaled by the clicking ad's quality), minus the clicking ad's own
    bid for slots strictly below.  In expectation over clicks this equals
    the VCG payment even though no Lambda appears in the formula.
    """
    if model.kind != POSITION:
        raise ConfigError("the contingent scheme is defined for position-dependent models")
    v = bids_array(bids)
    q = env.qualities
    k = env.n_slots
    order = sort_order(q * v)
    if np.any(q[order[:k]] == 0.0):
        raise ConfigError("contingent payments divide by displayed qualities; zero found")
    pays = np.zeros(env.n_ads)
    clicked = clicks.clicked
    for s in range(k):
        i = int(order[s])
        total = 0.0
        for m in range(s, k):
            if not clicked[m]:
                continue
            ad_m = int(order[m])
            shifted = int(order[m + 1])  # slot m after removing ad i: next in sort order
            total += q[shifted] * v[shifted] / q[ad_m]
            if m > s:
                total -= v[ad_m]
        pays[i] = total
    return pays


# ---------------------------------------------------------------------------
# canonical self-resampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResampledBids:
    """Per-ad output of the self-resampling step.

    x feeds the allocation, y is the rebate threshold, s marks bids the
    procedure left untouched; x <= y <= bid always holds.
    """

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray


def _rec(u: float, mu: float, rng) -> float:
    # geometric recursion: keep u w.p. 1-mu, else restart below a uniform cut
    val = u
    for _ in range(REC_MAX_DEPTH):
        if rng.random() < 1.0 - mu:
            return val
        val *= rng.random()
    return 0.0


def csrp(bid: float, mu: float, rng) -> tuple[float, float]:
    """One self-resampling draw: (allocation bid x, rebate threshold y).

    With probability 1-mu the bid passes through unchanged; otherwise y is
    uniform below the bid and x recurses further down.  All uniforms are
    drawn as bid-independent fractions so common-random-number replays
    across different bids stay aligned.
    """
    if not (0.0 < mu <= 1.0):
        raise ConfigError(f"mu must lie in (0, 1], got {mu}")
    if bid < 0.0 or not math.isfinite(bid):
        raise ConfigError(f"bid must be finite and non-negative, got {bid}")
    if rng.random() < 1.0 - mu:
        return float(bid), float(bid)
    y = bid * rng.random()
    return _rec(y, mu, rng), y


def randomized_allocate(env: AuctionEnv, bids, qualities, model: CascadeModel,
                        mu: float, rng) -> tuple[Allocation, ResampledBids]:
    """Perturb every bid through csrp, then allocate optimally on the x vector."""
    v = bids_array(bids)
    x = np.empty(env.n_ads)
    y = np.empty(env.n_ads)
    for i in range(env.n_ads):
        x[i], y[i] = csrp(float(v[i]), mu, rng)
    s = x == v
    alloc = optimal_allocation(env, x, qualities, model)
    return alloc, ResampledBids(x=x, y=y, s=s)


def srp_click_payment(i: int, bids, resampled: ResampledBids, mu: float,
                      clicked: bool) -> float:
    """Per-click payment of the self-resampling scheme.

    A resampled ad (y below its bid) receives the 1/mu rebate that makes
    the mechanism's expectation match the Myerson integral payments.
    """
    if not clicked:
        return 0.0
    v = bids_array(bids)[i]
    if resampled.y[i] < v:
        return float(v - v / mu)
    return float(v)


# ---------------------------------------------------------------------------
# repeated mechanisms
# ---------------------------------------------------------------------------

@dataclass
class QualityEstimate:
    """Frozen output of an exploration phase."""

    q_hat: np.ndarray
    eta: float
    q_plus: np.ndarray
    samples: np.ndarray
    confidence: float


@dataclass
class MechanismState:
    kind: str
    phase: str
    t: int
    tau: int
    mu: float | None
    estimate: QualityEstimate | None
    weights: np.ndarray | None


class RoundPlan:
    """Allocation and payment rule for one round."""

    def __init__(self, allocation, expected_payments, click_amounts=None,
                 resampled=None, exploration=False, contingent_fn=None):
        self.allocation = allocation
        self.expected_payments = expected_payments
        self.click_amounts = click_amounts
        self.resampled = resampled
        self.exploration = exploration
        self._contingent_fn = contingent_fn

    def realized_payments(self, clicks: ClickRealization) -> np.ndarray:
        n = self.allocation.n_ads
        if self.exploration:
            return np.zeros(n)
        if self._contingent_fn is not None:
            return self._contingent_fn(clicks)
        pays = np.zeros(n)
        k = len(clicks.clicked)
        for m in range(k):
            if clicks.clicked[m]:
                ad = int(self.allocation.ad_at[m])
                pays[ad] = self.click_amounts[ad]
        return pays


def make_estimate(q_hat, eta, confidence, samples=None) -> QualityEstimate:
    q_hat = np.asarray(q_hat, dtype=float)
    q_plus = np.clip(q_hat + eta, Q_PLUS_FLOOR, 1.0)
    if samples is None:
        samples = np.ones(len(q_hat), dtype=int)
    return QualityEstimate(q_hat=q_hat, eta=float(eta), q_plus=q_plus,
                           samples=np.asarray(samples), confidence=float(confidence))


def frozen_estimate(q_plus, confidence: float = 1.0) -> QualityEstimate:
    """Inject given upper-confidence qualities directly (eta folded in already)."""
    return make_estimate(q_plus, eta=0.0, confidence=confidence)


class Mechanism:
    """Base life cycle shared by every repeated mechanism."""

    kind = "abstract"
    requires_position = False
    explore_step = None  # rotation stride per round; None = no exploration phase

    def __init__(self, env: AuctionEnv, model: CascadeModel, tau: int = 0,
                 delta: float | None = None, mu: float | None = None,
                 estimate: QualityEstimate | None = None):
        model.check_dims(env.n_ads, env.n_slots)
        if self.requires_position and model.kind != POSITION:
            raise ConfigError(f"{self.kind} requires a position-dependent model")
        self.env = env
        self.model = model
        self.delta = delta
        if estimate is not None:
            tau = 0
        self.state = MechanismState(kind=self.kind, phase=self._phase_at(1, tau),
                                    t=0, tau=int(tau), mu=mu, estimate=estimate,
                                    weights=None)
        if estimate is not None:
            self._set_estimate(estimate)
        self._wsum = np.zeros(env.n_ads)
        self._count = np.zeros(env.n_ads, dtype=int)
        self._explore_alloc = None
        self._plan_bids = None
        self._plan = None
        if self.explore_step is None and self.state.tau != 0:
            raise ConfigError(f"{self.kind} has no exploration phase; tau must be 0")
        self._validate()

    def _validate(self):
        pass

    def _phase_at(self, t: int, tau: int) -> str:
        return EXPLORATION if t <= tau else EXPLOITATION

    def _set_estimate(self, estimate: QualityEstimate):
        self.state.estimate = estimate
        q = self.env.qualities
        with np.errstate(divide="ignore"):
            self.state.weights = np.where(q > 0, estimate.q_plus / np.where(q > 0, q, 1.0), np.inf)

    @property
    def estimate(self) -> QualityEstimate | None:
        return self.state.estimate

    # -- exploration -------------------------------------------------------

    def _exploration_allocation(self, t: int) -> Allocation:
        n = self.env.n_ads
        offset = (t * self.explore_step) % n
        return Allocation(np.array([(offset + m) % n for m in range(n)], dtype=np.intp))

    def _sample_weight(self, slot: int, alloc: Allocation) -> float:
        raise NotImplementedError

    def _record_slots(self) -> int:
        return self.env.n_slots

    def _eta(self) -> float:
        raise NotImplementedError

    def record_clicks(self, clicks: ClickRealization) -> None:
        """Feed one exploration round's clicks into the estimator (no-op afterwards)."""
        if self._explore_alloc is None:
            return
        alloc = self._explore_alloc
        self._explore_alloc = None
        for m in range(self._record_slots()):
            ad = int(alloc.ad_at[m])
            w = self._sample_weight(m, alloc)
            self._wsum[ad] += float(clicks.clicked[m]) / w
            self._count[ad] += 1
        if self.state.t == self.state.tau:
            if np.any(self._count == 0):
                raise ConfigError("some ad collected no exploration samples; increase tau")
            q_hat = self._wsum / self._count
            self._set_estimate(make_estimate(q_hat, self._eta(), self.delta, self._count))

    # -- round driver ------------------------------------------------------

    def step(self, bids, rng=None) -> RoundPlan:
        """Produce the allocation and payment rule for the next round."""
        v = bids_array(bids)
        self.state.t += 1
        self.state.phase = self._phase_at(self.state.t, self.state.tau)
        if self.state.phase == EXPLORATION:
            alloc = self._exploration_allocation(self.state.t)
            self._explore_alloc = alloc
            return RoundPlan(alloc, np.zeros(self.env.n_ads), exploration=True)
        if self.state.estimate is None and self.explore_step is not None:
            raise ConfigError("exploitation reached without a quality estimate")
        return self._exploit(v, rng)

    def _exploit(self, bids: np.ndarray, rng) -> RoundPlan:
        raise NotImplementedError

    def _cached(self, bids: np.ndarray, build):
        if self._plan_bids is None or not np.array_equal(self._plan_bids, bids):
            self._plan_bids = bids.copy()
            self._plan = build(bids)
        return self._plan


class OracleVCG(Mechanism):
    """Stateless baseline: exact VCG with pay-per-click collection every round."""

    kind = "oracle-vcg"

    def _exploit(self, bids, rng) -> RoundPlan:
        return self._cached(bids, self._build)

    def _build(self, bids) -> RoundPlan:
        env, model = self.env, self.model
        theta = optimal_allocation(env, bids, env.qualities, model)
        expected = vcg_expected_payments(env, bids, model)
        gam = cumulative_observation(theta, model, env.n_slots)
        amounts = np.zeros(env.n_ads)
        for m in range(env.n_slots):
            ad = int(theta.ad_at[m])
            ctr = gam[m] * env.qualities[ad]
            amounts[ad] = expected[ad] / ctr if ctr > 0 else 0.0
        return RoundPlan(theta, expected, click_amounts=amounts)


class AVCG1(Mechanism):
    """Known prominences, unknown qualities: explore-then-commit weighted VCG.

    Exploration cycles a block of K ads through the displayed slots,
    advancing K positions per round so every ad collects the same number
    of click samples up to one.  Each sample is weighted by 1/Lambda of
    the slot it came from, making the quality estimate unbiased.
    """

    kind = "avcg1"
    requires_position = True

    @property
    def explore_step(self):
        return self.env.n_slots

    def _validate(self):
        if self.state.estimate is None:
            min_tau = math.ceil(self.env.n_ads / self.env.n_slots)
            if self.state.tau < min_tau:
                raise ConfigError(
                    f"tau={self.state.tau} < ceil(N/K)={min_tau}: some ad would never be sampled")
            if self.delta is None or not 0 < self.delta <= 1:
                raise ConfigError("confidence delta in (0, 1] required")
        self._lam = self.model.cumulative_lambda()

    def _sample_weight(self, slot, alloc) -> float:
        return float(self._lam[slot])

    def _eta(self) -> float:
        n, k, tau = self.env.n_ads, self.env.n_slots, self.state.tau
        inv_sq = float(np.sum(1.0 / self._lam ** 2))
        return math.sqrt(inv_sq * (2.0 * n / (k ** 2 * tau)) * math.log(2.0 * n / self.delta))

    def _exploit(self, bids, rng) -> RoundPlan:
        return self._cached(bids, self._build)

    def _build(self, bids) -> RoundPlan:
        env = self.env
        qp = self.state.estimate.q_plus
        keys = qp * bids
        theta = sort_allocation(keys, env.n_slots)
        lam0 = np.append(self._lam, 0.0)
        slot_pays = _slotwise_vcg(keys, lam0, env.n_slots)
        amounts = np.zeros(env.n_ads)
        expected = np.zeros(env.n_ads)
        for m in range(env.n_slots):
            ad = int(theta.ad_at[m])
            denom = lam0[m] * qp[ad]
            amounts[ad] = slot_pays[m] / denom if denom > 0 else 0.0
            expected[ad] = env.qualities[ad] / qp[ad] * slot_pays[m]
        return RoundPlan(theta, expected, click_amounts=amounts)


class AVCG2(Mechanism):
    """Known qualities, unknown prominences: contingent payments, no learning.

    The sort allocation is optimal for every monotone prominence profile,
    and the contingent payments reproduce the VCG payments in expectation,
    so the mechanism has zero expected regret from round one.
    """

    kind = "avcg2"
    requires_position = True

    def _validate(self):
        if self.state.tau != 0:
            raise ConfigError("this mechanism has no exploration phase")

    def _exploit(self, bids, rng) -> RoundPlan:
        return self._cached(bids, self._build)

    def _build(self, bids) -> RoundPlan:
        env, model = self.env, self.model
        order = sort_order(env.qualities * bids)
        if np.any(env.qualities[order[: env.n_slots]] == 0.0):
            raise ConfigError("zero-quality ad would be displayed; contingent payments undefined")
        theta = Allocation.from_displayed(order[: env.n_slots].tolist(), env.n_ads)
        expected = vcg_expected_payments(env, bids, model)
        return RoundPlan(theta, expected,
                         contingent_fn=lambda clicks: avcg2_click_payments(env, bids, model, clicks))


class AVCG2Prime(Mechanism):
    """Known qualities, unknown prominences: self-resampling randomized VCG.

    Every round perturbs the bids through csrp, allocates on the perturbed
    values, and charges the rebate-style per-click payments; truthful in
    expectation over the mechanism's own randomness.
    """

    kind = "avcg2prime"
    requires_position = True

    def _validate(self):
        if self.state.tau != 0:
            raise ConfigError("this mechanism has no exploration phase")
        if self.state.mu is None or not 0 < self.state.mu <= 1:
            raise ConfigError("resampling probability mu in (0, 1] required")
        self._lam = self.model.cumulative_lambda()

    def _exploit(self, bids, rng) -> RoundPlan:
        return _srp_plan(self, bids, self.env.qualities, rng)


def _srp_plan(mech: Mechanism, bids: np.ndarray, alloc_qualities: np.ndarray, rng) -> RoundPlan:
    """Shared exploitation round of the self-resampling mechanisms."""
    env = mech.env
    if rng is None:
        raise ConfigError(f"{mech.kind} needs an RNG each round")
    mu = mech.state.mu
    theta, res = randomized_allocate(env, bids, alloc_qualities, mech.model, mu, rng)
    lam0 = np.append(mech._lam, 0.0)
    amounts = np.zeros(env.n_ads)
    expected = np.zeros(env.n_ads)
    for m in range(env.n_slots):
        ad = int(theta.ad_at[m])
        v = bids[ad]
        amounts[ad] = v - v / mu if res.y[ad] < v else v
        expected[ad] = lam0[m] * env.qualities[ad] * amounts[ad]
    return RoundPlan(theta, expected, click_amounts=amounts, resampled=res)


class AVCG3(Mechanism):
    """Both qualities and prominences unknown: explore, then randomize.

    Exploration rotates the line-up one position per round so the top slot
    (the only one with a known observation probability) sees every ad
    equally often; only those samples feed the estimates.  Exploitation
    re-uses the self-resampling payments on the estimated allocation.
    """

    kind = "avcg3"
    requires_position = True
    explore_step = 1

    def _validate(self):
        if self.state.estimate is None:
            if self.state.tau < self.env.n_ads:
                raise ConfigError(
                    f"tau={self.state.tau} < N={self.env.n_ads}: slot-1 rotation incomplete")
            if self.delta is None or not 0 < self.delta <= 1:
                raise ConfigError("confidence delta in (0, 1] required")
        if self.state.mu is None or not 0 < self.state.mu <= 1:
            raise ConfigError("resampling probability mu in (0, 1] required")
        self._lam = self.model.cumulative_lambda()

    def _record_slots(self) -> int:
        return 1

    def _sample_weight(self, slot, alloc) -> float:
        return 1.0

    def _eta(self) -> float:
        n, tau = self.env.n_ads, self.state.tau
        return math.sqrt((n / tau) * math.log(2.0 * n / self.delta))

    def _exploit(self, bids, rng) -> RoundPlan:
        return _srp_plan(self, bids, self.state.estimate.q_plus, rng)


class PADAVCG(Mechanism):
    """Ad-dependent externalities with known cascade, unknown qualities.

    Exploration mirrors the position-dependent explore-then-commit scheme
    but weights each click sample by the observation probability of its
    slot under that round's allocation.  Exploitation brute-forces the
    estimated-welfare argmax and charges weighted-VCG per-click payments
    built from the estimated welfare differences.
    """

    kind = "pad-avcg"

    @property
    def explore_step(self):
        return self.env.n_slots

    def _validate(self):
        self._gamma_min = self.model.min_observation(self.env.n_ads)
        if self._gamma_min <= 0.0:
            raise ConfigError("cascade reaches some slot with probability zero")
        if self.state.estimate is None:
            min_tau = math.ceil(self.env.n_ads / self.env.n_slots)
            if self.state.tau < min_tau:
                raise ConfigError(
                    f"tau={self.state.tau} < ceil(N/K)={min_tau}: some ad would never be sampled")
            if self.delta is None or not 0 < self.delta <= 1:
                raise ConfigError("confidence delta in (0, 1] required")
        self._gamma_cache: dict[bytes, np.ndarray] = {}

    def _gammas(self, alloc: Allocation) -> np.ndarray:
        key = alloc.ad_at.tobytes()
        if key not in self._gamma_cache:
            self._gamma_cache[key] = cumulative_observation(alloc, self.model, self.env.n_slots)
        return self._gamma_cache[key]

    def _sample_weight(self, slot, alloc) -> float:
        return float(self._gammas(alloc)[slot])

    def _eta(self) -> float:
        n, k, tau = self.env.n_ads, self.env.n_slots, self.state.tau
        return (1.0 / self._gamma_min) * math.sqrt(
            n / (2.0 * k * tau) * math.log(n / self.delta))

    def _exploit(self, bids, rng) -> RoundPlan:
        return self._cached(bids, self._build)

    def _build(self, bids) -> RoundPlan:
        env, model = self.env, self.model
        qp = self.state.estimate.q_plus
        theta = optimal_allocation(env, bids, qp, model)
        gam = cumulative_observation(theta, model, env.n_slots)
        amounts = np.zeros(env.n_ads)
        expected = np.zeros(env.n_ads)
        for m in range(env.n_slots):
            ad = int(theta.ad_at[m])
            theta_wo = optimal_allocation_excluding(ad, env, bids, qp, model)
            num = (social_welfare(theta_wo, env, bids, model, qualities=qp)
                   - social_welfare_excluding(ad, theta, env, bids, model, qualities=qp))
            amounts[ad] = num / (gam[m] * qp[ad])
            expected[ad] = gam[m] * env.qualities[ad] * amounts[ad]
        return RoundPlan(theta, expected, click_amounts=amounts)


MECHANISMS = {cls.kind: cls for cls in
              (OracleVCG, AVCG1, AVCG2, AVCG2Prime, AVCG3, PADAVCG)}


def make_mechanism(kind: str, env: AuctionEnv, model: CascadeModel, *, tau: int = 0,
                   delta: float | None = None, mu: float | None = None,
                   estimate: QualityEstimate | None = None) -> Mechanism:
    if kind not in MECHANISMS:
        raise ConfigError(f"unknown mechanism kind {kind!r}; choose from {sorted(MECHANISMS)}")
    return MECHANISMS[kind](env, model, tau=tau, delta=delta, mu=mu, estimate=estimate)
