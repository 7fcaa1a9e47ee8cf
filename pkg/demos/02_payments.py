#!/usr/bin/env python3
"""Three routes to the same payment: welfare differences, per-slot
telescoping, and the single-parameter integral.

The exact-parameter auction charges every displayed ad the externality
it imposes.  This script computes that number three independent ways
and then shows the pay-per-click version whose click-expectation
reproduces it.
"""

import numpy as np

from cal import (
    AuctionEnv,
    CascadeModel,
    myerson_piecewise_payment,
    optimal_allocation,
    vcg_click_payment,
    vcg_expected_payments,
    wvcg_expected_payments,
)

env = AuctionEnv(
    n_ads=5, n_slots=2,
    qualities=np.array([0.35, 0.20, 0.45, 0.15, 0.30]),
    true_values=np.array([0.80, 0.90, 0.40, 0.70, 0.55]),
    v_max=1.0,
)
model = CascadeModel.position_dependent([0.75])
theta = optimal_allocation(env, env.true_values, env.qualities, model)
print("displayed ads (top to bottom):", theta.ad_at[:2])

pays = vcg_expected_payments(env, env.true_values, model)
print("expected payments:", np.round(pays, 6))

print("\nintegral route (piecewise-exact, zero pivot):")
for i in theta.ad_at[:2]:
    direct = myerson_piecewise_payment(int(i), env, env.true_values, env.qualities, model)
    print(f"  ad {i}: {direct:.6f}  (difference {abs(direct - pays[i]):.2e})")

print("\npay-per-click amounts and their click expectations:")
lam = model.cumulative_lambda()
for m, i in enumerate(theta.ad_at[:2]):
    amount = vcg_click_payment(int(i), env, env.true_values, model, clicked=True)
    ctr = lam[m] * env.qualities[i]
    print(f"  ad {i}: charged {amount:.6f} per click; CTR {ctr:.4f}; "
          f"expectation {ctr * amount:.6f} = expected payment")

print("\nweighted variant with unit weights collapses to the same numbers:")
print(" ", np.allclose(wvcg_expected_payments(env, env.true_values, model,
                                              np.ones(5)), pays, atol=1e-12))
