#!/usr/bin/env python3
"""Why the obvious fixes fail: three small counterexamples.

1. Charging through other ads' clicks (needed when the prominences are
   unknown) opens a profitable over-report.
2. The same scheme can hand the auctioneer a round with negative total
   revenue.
3. Allocating on estimated continuation probabilities can make an ad's
   true CTR DROP when it raises its bid, so no payment rule can make
   that allocation truthful.

The built-in `cal verify` re-derives all of these; this script walks
through them slowly.
"""

import numpy as np

from cal import (
    AuctionEnv,
    CascadeModel,
    ClickRealization,
    avcg2_click_payments,
    monotonicity_witness,
)

print("1) execution-contingent payments are not click-proof")
env = AuctionEnv(n_ads=3, n_slots=2, qualities=np.array([0.5, 1.0, 1.0]),
                 true_values=np.array([4.0, 1.0, 0.5]), v_max=4.0)
model = CascadeModel.position_dependent([0.6])
both = ClickRealization(clicked=[True, True], observed=[True, True])
truthful = avcg2_click_payments(env, env.true_values, model, both)[1]
lied = avcg2_click_payments(env, np.array([4.0, 3.0, 0.5]), model, both)[1]
print(f"   ad 2 truthful: pays {truthful:+.2f}; over-reporting 3.0: pays {lied:+.2f}")
print("   the deviation wins whenever both displayed ads get clicked\n")

print("2) ...and the auctioneer can end a round out of pocket")
eps = 0.01
env2 = AuctionEnv(n_ads=3, n_slots=2, qualities=np.array([1.0, 0.5, 1.0]),
                  true_values=np.array([2.0, 1.0, eps]), v_max=2.0)
total = avcg2_click_payments(env2, env2.true_values, model, both).sum()
print(f"   total collected with both clicks: {total:+.4f}  (= 4*eps - 0.5)\n")

print("3) estimated continuations break allocation monotonicity")
env3 = AuctionEnv(n_ads=3, n_slots=2, qualities=np.ones(3),
                  true_values=np.array([0.85, 1.0, 1.4]), v_max=2.0)
estimated = CascadeModel.factorized([1.0], [1.0, 0.9, 0.0])
true_model = CascadeModel.factorized([1.0], [0.89, 0.9, 0.0])
witness = monotonicity_witness(None, env3, estimated, true_model, [1.4, 1.6])
ad, lo, hi, ctr_lo, ctr_hi = witness
print(f"   ad {ad} raises its bid {lo} -> {hi} and its true CTR falls "
      f"{ctr_lo} -> {ctr_hi}")
print("   (the higher bid drags a worse conduit into the slot above it)")
