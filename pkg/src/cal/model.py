"""Core domain types for multi-slot ad auctions under the cascade click model.

An auction places N ads into K < N slots.  The user scans slots top to
bottom as a Markov chain: after observing the ad in slot m they continue
to slot m+1 with a transition probability that may depend on the slot,
on the ad just seen, or on both.  Every type here is an immutable value;
construction validates dimensions and probability ranges so downstream
code never has to.

Slots and ads are 0-indexed internally.  "Extended" slots K..N-1 exist so
that an allocation is a total bijection between ads and slots; the
observation probability there is hard zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Invalid auction configuration: bad dimensions, probabilities, or parameters."""


class ImpossibleEventError(RuntimeError):
    """A reported realization has probability zero under the current parameters."""


def _as_float_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be finite, got {arr}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _as_prob_vector(values, name: str) -> np.ndarray:
    arr = _as_float_vector(values, name)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ConfigError(f"{name} must lie in [0, 1], got {arr}")
    return arr


@dataclass(frozen=True)
class AuctionEnv:
    """Ground truth of one auction: ad qualities and private values.

    quality q_i is the probability the ad is clicked once observed; the
    value v_i is what the advertiser earns per click, capped by v_max.
    """

    n_ads: int
    n_slots: int
    qualities: np.ndarray
    true_values: np.ndarray
    v_max: float

    def __post_init__(self):
        if self.n_ads < 1 or self.n_slots < 1:
            raise ConfigError("need at least one ad and one slot")
        if self.n_slots >= self.n_ads:
            raise ConfigError(f"K < N required, got K={self.n_slots}, N={self.n_ads}")
        if not (np.isfinite(self.v_max) and self.v_max > 0):
            raise ConfigError(f"v_max must be positive and finite, got {self.v_max}")
        object.__setattr__(self, "qualities", _as_prob_vector(self.qualities, "qualities"))
        object.__setattr__(self, "true_values", _as_float_vector(self.true_values, "true_values"))
        if self.qualities.shape != (self.n_ads,) or self.true_values.shape != (self.n_ads,):
            raise ConfigError("qualities and true_values must both have length N")
        if self.true_values.min() < 0.0 or self.true_values.max() > self.v_max:
            raise ConfigError("values must lie in [0, v_max]")


@dataclass(frozen=True)
class BidProfile:
    """Reported values, one per ad."""

    bids: np.ndarray

    def __post_init__(self):
        arr = _as_float_vector(self.bids, "bids")
        if arr.size and arr.min() < 0.0:
            raise ConfigError("bids must be non-negative")
        object.__setattr__(self, "bids", arr)

    def without(self, i: int) -> np.ndarray:
        """The -i view: every bid except ad i's."""
        return np.delete(self.bids, i)


def bids_array(bids) -> np.ndarray:
    """Accept a BidProfile or a plain vector and return the validated array."""
    if isinstance(bids, BidProfile):
        return bids.bids
    return BidProfile(np.asarray(bids, dtype=float)).bids


POSITION = "position-dependent"
FACTORIZED = "factorized"
GENERAL = "general"


@dataclass(frozen=True)
class CascadeModel:
    """Transition probabilities of the cascade chain.

    Three parameterizations share one observation-probability code path:

    * position-dependent: transition out of slot m is a prominence
      lambda_m, independent of the ad shown there;
    * factorized: prominence times a per-ad continuation, lambda_m * c_i;
    * general: an arbitrary K x N matrix gamma[m, i].

    Only transitions out of slots 0..K-2 ever matter (slot K-1 is the
    last displayed slot), so ``lambdas`` has K-1 entries.
    """

    kind: str
    lambdas: np.ndarray | None = None
    continuations: np.ndarray | None = None
    gamma: np.ndarray | None = None

    @classmethod
    def position_dependent(cls, lambdas) -> "CascadeModel":
        lam = _as_prob_vector(lambdas, "lambdas")
        return cls(kind=POSITION, lambdas=lam)

    @classmethod
    def factorized(cls, lambdas, continuations) -> "CascadeModel":
        lam = _as_prob_vector(lambdas, "lambdas")
        cont = _as_prob_vector(continuations, "continuations")
        return cls(kind=FACTORIZED, lambdas=lam, continuations=cont)

    @classmethod
    def general(cls, gamma) -> "CascadeModel":
        g = np.asarray(gamma, dtype=float)
        if g.ndim != 2:
            raise ConfigError(f"gamma must be a K x N matrix, got shape {g.shape}")
        if not np.all(np.isfinite(g)) or g.min() < 0.0 or g.max() > 1.0:
            raise ConfigError("gamma entries must be probabilities in [0, 1]")
        g = g.copy()
        g.flags.writeable = False
        return cls(kind=GENERAL, gamma=g)

    def __post_init__(self):
        if self.kind not in (POSITION, FACTORIZED, GENERAL):
            raise ConfigError(f"unknown cascade model kind {self.kind!r}")

    @property
    def n_slots(self) -> int:
        """K implied by the stored parameters."""
        if self.kind == GENERAL:
            return self.gamma.shape[0]
        return len(self.lambdas) + 1

    def check_dims(self, n_ads: int, n_slots: int) -> None:
        if self.n_slots != n_slots:
            raise ConfigError(
                f"model built for K={self.n_slots}, auction has K={n_slots}")
        if self.kind == FACTORIZED and len(self.continuations) != n_ads:
            raise ConfigError("continuations must have one entry per ad")
        if self.kind == GENERAL and self.gamma.shape[1] != n_ads:
            raise ConfigError("gamma must have one column per ad")

    def transition(self, slot: int, ad: int) -> float:
        """Probability of moving past ``slot`` (0-based) given ``ad`` is shown there."""
        if self.kind == POSITION:
            return float(self.lambdas[slot])
        if self.kind == FACTORIZED:
            return float(self.lambdas[slot] * self.continuations[ad])
        return float(self.gamma[slot, ad])

    def cumulative_lambda(self) -> np.ndarray:
        """Position-dependent cumulative observation probabilities Lambda_1..Lambda_K.

        Lambda_1 = 1 and Lambda_m is the product of the first m-1 prominences;
        it is allocation-free, which is what makes the sort allocation optimal.
        """
        if self.kind != POSITION:
            raise ConfigError("cumulative_lambda is defined for position-dependent models only")
        return np.concatenate(([1.0], np.cumprod(self.lambdas)))

    def min_observation(self, n_ads: int) -> float:
        """Smallest observation probability over displayed slots and allocations.

        Lambda_min for position-dependent models; for the other variants the
        minimum of Gamma_K over all ways of filling the first K-1 slots with
        distinct ads (brute force; K is small by assumption).
        """
        k = self.n_slots
        if self.kind == POSITION:
            return float(self.cumulative_lambda().min())
        if self.kind == FACTORIZED:
            # product is order-free: the K-1 smallest continuations minimize it
            worst = np.sort(self.continuations)[: k - 1]
            return float(np.prod(self.lambdas) * np.prod(worst)) if k > 1 else 1.0
        best = 1.0
        for ads in itertools.permutations(range(n_ads), k - 1):
            prod = 1.0
            for slot, ad in enumerate(ads):
                prod *= self.gamma[slot, ad]
            best = min(best, prod)
        return float(best)


@dataclass(frozen=True)
class Allocation:
    """Bijection between ads and extended slots.

    ``ad_at[m]`` is the ad in slot m and ``slot_of[i]`` the slot of ad i;
    the two arrays are mutually inverse.  Ads in slots >= K are not
    displayed.
    """

    ad_at: np.ndarray
    slot_of: np.ndarray = field(default=None)

    def __post_init__(self):
        ad_at = np.asarray(self.ad_at, dtype=np.intp)
        n = len(ad_at)
        if sorted(ad_at.tolist()) != list(range(n)):
            raise ConfigError(f"ad_at is not a permutation of 0..{n - 1}: {ad_at}")
        slot_of = np.empty(n, dtype=np.intp)
        slot_of[ad_at] = np.arange(n)
        ad_at = ad_at.copy()
        ad_at.flags.writeable = False
        slot_of.flags.writeable = False
        object.__setattr__(self, "ad_at", ad_at)
        object.__setattr__(self, "slot_of", slot_of)

    @classmethod
    def from_displayed(cls, displayed, n_ads: int) -> "Allocation":
        """Build a full allocation from the displayed prefix.

        Non-displayed ads fill the extended slots in ascending index order,
        a fixed convention that keeps traces reproducible.
        """
        displayed = list(displayed)
        rest = sorted(set(range(n_ads)) - set(displayed))
        return cls(np.array(displayed + rest, dtype=np.intp))

    @property
    def n_ads(self) -> int:
        return len(self.ad_at)

    def displayed(self, n_slots: int) -> np.ndarray:
        return self.ad_at[:n_slots]

    def __eq__(self, other):
        return isinstance(other, Allocation) and np.array_equal(self.ad_at, other.ad_at)

    def __hash__(self):
        return hash(self.ad_at.tobytes())


@dataclass(frozen=True)
class ClickRealization:
    """One round's observation/click outcome for the K displayed slots.

    The observation chain is prefix-closed (slot 1 always observed, a slot
    can only be observed if the one above was) and a click implies the
    slot was observed.
    """

    clicked: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        clicked = np.asarray(self.clicked, dtype=bool).copy()
        observed = np.asarray(self.observed, dtype=bool).copy()
        if clicked.shape != observed.shape or clicked.ndim != 1 or clicked.size < 1:
            raise ConfigError("clicked and observed must be equal-length slot vectors")
        if not observed[0]:
            raise ConfigError("slot 1 is always observed")
        if observed.size > 1 and np.any(observed[1:] & ~observed[:-1]):
            raise ConfigError("observed must be a prefix-closed chain")
        if np.any(clicked & ~observed):
            raise ConfigError("a click requires the slot to be observed")
        clicked.flags.writeable = False
        observed.flags.writeable = False
        object.__setattr__(self, "clicked", clicked)
        object.__setattr__(self, "observed", observed)


def cumulative_observation(alloc: Allocation, model: CascadeModel, n_slots: int) -> np.ndarray:
    """Observation probability of every extended slot under ``alloc``.

    Entry m (0-based) is the probability the user reaches slot m: 1 for the
    top slot, the running product of transition probabilities down to slot
    m for displayed slots, and 0 beyond slot K-1.
    """
    n = alloc.n_ads
    model.check_dims(n, n_slots)
    gam = np.zeros(n)
    gam[0] = 1.0
    for m in range(1, n_slots):
        gam[m] = gam[m - 1] * model.transition(m - 1, int(alloc.ad_at[m - 1]))
    return gam


def social_welfare(alloc: Allocation, env: AuctionEnv, values, model: CascadeModel,
                   qualities=None) -> float:
    """Total expected value of an allocation: sum of Gamma_m * q * value over displayed slots.

    ``values`` may be true values, bids, or anything else per-ad; ``qualities``
    overrides env.qualities (used with estimated qualities).
    """
    q = env.qualities if qualities is None else np.asarray(qualities, dtype=float)
    values = np.asarray(values, dtype=float)
    gam = cumulative_observation(alloc, model, env.n_slots)
    ads = alloc.ad_at[: env.n_slots]
    return float(np.sum(gam[: env.n_slots] * q[ads] * values[ads]))


def social_welfare_excluding(i: int, alloc: Allocation, env: AuctionEnv, values,
                             model: CascadeModel, qualities=None) -> float:
    """Social welfare minus ad i's own term.

    Ad i stays in its slot, so its externality on the ads below is still
    exerted; only its contribution is dropped.
    """
    if not 0 <= i < env.n_ads:
        raise IndexError(f"ad index {i} out of range for N={env.n_ads}")
    q = env.qualities if qualities is None else np.asarray(qualities, dtype=float)
    values = np.asarray(values, dtype=float)
    total = social_welfare(alloc, env, values, model, qualities=q)
    slot = int(alloc.slot_of[i])
    if slot >= env.n_slots:
        return total
    gam = cumulative_observation(alloc, model, env.n_slots)
    return total - float(gam[slot] * q[i] * values[i])
