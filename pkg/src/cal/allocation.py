"""Welfare-maximizing allocation rules and a monotonicity checker.

Two strategies implement the same contract.  Under position-dependent
externalities the observation probabilities do not depend on the
allocation, so sorting ads by expected reported value q_i * bid_i is
optimal.  With ad-dependent externalities the problem loses that
structure and we enumerate every ordered choice of K ads (practical for
K up to ~8; larger instances are out of scope).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import (
    POSITION,
    Allocation,
    AuctionEnv,
    CascadeModel,
    ConfigError,
    bids_array,
    cumulative_observation,
)

SORT = "sort-by-expected-value"
BRUTE_FORCE = "brute-force"


def sort_order(keys: np.ndarray) -> np.ndarray:
    """Ad indices by key descending, ties broken by lowest ad index first."""
    return np.argsort(-np.asarray(keys, dtype=float), kind="stable")


def sort_allocation(keys: np.ndarray, n_slots: int) -> Allocation:
    order = sort_order(keys)
    return Allocation.from_displayed(order[:n_slots].tolist(), len(keys))


def brute_force_allocation(env: AuctionEnv, bids, qualities, model: CascadeModel,
                           exclude: int | None = None) -> Allocation:
    """Exhaustive argmax of Sum_m Gamma_m * q * bid over ordered K-tuples of ads.

    Ties resolve to the lexicographically smallest tuple of ad indices,
    which the enumeration order of itertools.permutations delivers for
    free.  ``exclude`` removes one ad from the candidate pool.
    """
    v = bids_array(bids)
    q = np.asarray(qualities, dtype=float)
    n, k = env.n_ads, env.n_slots
    model.check_dims(n, k)
    candidates = [i for i in range(n) if i != exclude]
    best_sw = -np.inf
    best: tuple[int, ...] | None = None
    for ads in itertools.permutations(candidates, min(k, len(candidates))):
        sw = 0.0
        gam = 1.0
        for slot, ad in enumerate(ads):
            sw += gam * q[ad] * v[ad]
            if slot < k - 1:
                gam *= model.transition(slot, ad)
        if sw > best_sw:
            best_sw = sw
            best = ads
    alloc = Allocation.from_displayed(best, n)
    if exclude is not None:
        # excluded ad parks at the last extended slot
        ad_at = [a for a in alloc.ad_at if a != exclude] + [exclude]
        alloc = Allocation(np.array(ad_at, dtype=np.intp))
    return alloc


@dataclass(frozen=True)
class AllocationSolver:
    """Allocation rule with a fixed deterministic tie-break (lowest ad index first).

    strategy "auto" picks the sort rule for position-dependent models and
    brute force otherwise; the sort rule is never applied to models with
    ad-dependent externalities.
    """

    strategy: str = "auto"

    def resolve(self, model: CascadeModel) -> str:
        if self.strategy == "auto":
            return SORT if model.kind == POSITION else BRUTE_FORCE
        if self.strategy == SORT and model.kind != POSITION:
            raise ConfigError("sort strategy requires a position-dependent model")
        return self.strategy

    def solve(self, env: AuctionEnv, bids, qualities, model: CascadeModel,
              exclude: int | None = None) -> Allocation:
        v = bids_array(bids)
        q = np.asarray(qualities, dtype=float)
        if self.resolve(model) == SORT:
            keys = q * v
            if exclude is None:
                return sort_allocation(keys, env.n_slots)
            order = [i for i in sort_order(keys) if i != exclude]
            displayed = order[: env.n_slots]
            rest = sorted(set(range(env.n_ads)) - set(displayed) - {exclude})
            return Allocation(np.array(displayed + rest + [exclude], dtype=np.intp))
        return brute_force_allocation(env, v, q, model, exclude=exclude)


_DEFAULT_SOLVER = AllocationSolver()


def optimal_allocation(env: AuctionEnv, bids, qualities, model: CascadeModel) -> Allocation:
    """The welfare-maximizing allocation for the given quality vector.

    Passing true qualities realizes the exact rule; passing estimates
    (upper-confidence qualities) realizes the estimated rule used in the
    exploitation phases.
    """
    return _DEFAULT_SOLVER.solve(env, bids, qualities, model)


def optimal_allocation_excluding(i: int, env: AuctionEnv, bids, qualities,
                                 model: CascadeModel) -> Allocation:
    """Optimal allocation of the other N-1 ads; ad i parks at the last extended slot."""
    if not 0 <= i < env.n_ads:
        raise IndexError(f"ad index {i} out of range for N={env.n_ads}")
    return _DEFAULT_SOLVER.solve(env, bids, qualities, model, exclude=i)


def true_ctr(i: int, alloc: Allocation, env: AuctionEnv, model_true: CascadeModel) -> float:
    gam = cumulative_observation(alloc, model_true, env.n_slots)
    return float(gam[alloc.slot_of[i]] * env.qualities[i])


def monotonicity_witness(alloc_fn, env: AuctionEnv, model_estimated: CascadeModel,
                         model_true: CascadeModel, bid_grid, bids=None, qualities=None):
    """Search a bid grid for a violation of allocation monotonicity.

    Returns the first (ad, bid_low, bid_high, ctr_low, ctr_high) with
    bid_low < bid_high whose true CTR *drops* when the ad raises its bid,
    or None if the grid shows no violation (absence of a witness is not a
    proof of monotonicity).  ``alloc_fn`` maps a full bid vector to an
    Allocation; by default it is the optimal rule under the estimated
    model.
    """
    grid = np.asarray(bid_grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ConfigError("bid_grid must be sorted ascending")
    base = env.true_values if bids is None else bids_array(bids)
    q = env.qualities if qualities is None else np.asarray(qualities, dtype=float)
    if alloc_fn is None:
        def alloc_fn(b):
            return optimal_allocation(env, b, q, model_estimated)
    for i in range(env.n_ads):
        ctrs = []
        for b in grid:
            trial = base.copy()
            trial[i] = b
            ctrs.append(true_ctr(i, alloc_fn(trial), env, model_true))
        for lo in range(len(grid)):
            for hi in range(lo + 1, len(grid)):
                if grid[hi] > grid[lo] and ctrs[hi] < ctrs[lo]:
                    return (i, float(grid[lo]), float(grid[hi]), ctrs[lo], ctrs[hi])
    return None
