"""Shared fixtures and independent oracles for the test suite.

The oracles deliberately re-derive quantities through a different code
path than the library: allocations by plain enumeration over full
permutations, observation probabilities by enumerating the cascade
chain, expected payments by summing over click outcomes.
"""

import itertools

import numpy as np
import pytest

from cal import Allocation, AuctionEnv, CascadeModel, social_welfare


def random_instance(rng, n_ads=None, n_slots=None, kind="position-dependent",
                    q_low=0.05, q_high=0.95):
    """A small random auction instance; qualities bounded away from 0."""
    n = int(n_ads if n_ads is not None else rng.integers(3, 7))
    k = int(n_slots if n_slots is not None else rng.integers(1, min(4, n)))
    env = AuctionEnv(
        n_ads=n, n_slots=k,
        qualities=rng.uniform(q_low, q_high, n),
        true_values=rng.uniform(0.05, 1.0, n),
        v_max=1.0,
    )
    if kind == "position-dependent":
        model = CascadeModel.position_dependent(rng.uniform(0.3, 1.0, k - 1))
    elif kind == "factorized":
        model = CascadeModel.factorized(rng.uniform(0.3, 1.0, k - 1),
                                        rng.uniform(0.3, 1.0, n))
    else:
        model = CascadeModel.general(rng.uniform(0.3, 1.0, (k, n)))
    return env, model


def enumerate_best_allocation(env, bids, qualities, model):
    """Oracle allocation: try every full permutation, score via social_welfare."""
    best, best_sw = None, -np.inf
    for perm in itertools.permutations(range(env.n_ads)):
        alloc = Allocation(np.array(perm))
        sw = social_welfare(alloc, env, bids, model, qualities=qualities)
        if sw > best_sw + 1e-15:
            best, best_sw = alloc, sw
    return best, best_sw


def enumerate_cascade_chain(alloc, env, model):
    """All (observed, clicked) outcomes of the cascade chain with probabilities.

    Yields (observed tuple, clicked tuple, probability); the transition out
    of each observed slot and the click at each observed slot are
    independent Bernoulli events.
    """
    k = env.n_slots
    ads = [int(a) for a in alloc.ad_at[:k]]
    outcomes = []

    def walk(slot, prob, observed, clicked):
        # slot is observed here; branch on its click, then on continuation
        q = env.qualities[ads[slot]]
        for click, p_click in ((True, q), (False, 1.0 - q)):
            p1 = prob * p_click
            if p1 == 0.0:
                continue
            obs = observed + (True,)
            cl = clicked + (click,)
            if slot == k - 1:
                outcomes.append((obs, cl, p1))
                continue
            gamma = model.transition(slot, ads[slot])
            if gamma > 0.0:
                walk(slot + 1, p1 * gamma, obs, cl)
            if gamma < 1.0:
                tail = k - slot - 1
                outcomes.append((obs + (False,) * tail, cl + (False,) * tail,
                                 p1 * (1.0 - gamma)))

    walk(0, 1.0, (), ())
    return outcomes


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
