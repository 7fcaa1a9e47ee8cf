#!/usr/bin/env python3
"""Running the learning mechanisms and reading their regret.

One instance, four mechanisms, identical click streams.  The exact
baseline has zero regret by construction; the contingent scheme gets
zero in expectation without learning anything; the explore-then-commit
schemes pay for their exploration up front and may even overshoot the
exact payments afterwards (negative per-round regret is real: an
inflated estimate can charge more than the exact auction would).
"""

import numpy as np

from cal import (
    AuctionEnv,
    CascadeModel,
    RunConfig,
    build_report,
    run,
    tune,
)

rng = np.random.default_rng(7)
N, K, T = 8, 2, 4000
env = AuctionEnv(n_ads=N, n_slots=K,
                 qualities=rng.uniform(0.01, 0.1, N),
                 true_values=rng.uniform(0.0, 1.0, N), v_max=1.0)
model = CascadeModel.position_dependent(np.full(K - 1, 0.8))

tuned1 = tune("T1", T=T, N=N, K=K, min_obs=0.8)
tuned3 = tune("T7", T=T, N=N, K=K)
runs = [
    ("oracle-vcg", {}, None),
    ("avcg2", {}, None),
    ("avcg1", dict(tau=tuned1.tau, delta=tuned1.delta), ("T1", dict(min_obs=0.8))),
    ("avcg3", dict(tau=tuned3.tau, delta=tuned3.delta, mu=tuned3.mu),
     ("T7", dict())),
]

print(f"instance: N={N}, K={K}, T={T}; qualities in "
      f"[{env.qualities.min():.3f}, {env.qualities.max():.3f}]")
print(f"tuned exploration lengths: avcg1 tau={tuned1.tau}, avcg3 tau={tuned3.tau}\n")

for kind, kw, bound_spec in runs:
    cfg = RunConfig(env=env, model=model, mechanism=kind, horizon=T,
                    seed=123, replications=10, **kw)
    traces = run(cfg)
    if bound_spec:
        tid, extra = bound_spec
        report = build_report(traces, env, env.true_values, model, bound_id=tid,
                              T=T, K=K, N=N, v_max=1.0, mu=kw.get("mu"), **extra)
        rel = f" relative={report.relative:+.5f} (bound {report.bound_B:.0f})"
    else:
        report = build_report(traces, env, env.true_values, model)
        rel = ""
    print(f"{kind:12s} R_T={report.R_T:+10.3f}  R_T_SW={report.R_T_SW:8.3f}  "
          f"deviation={report.R_tilde_T:9.3f}{rel}")
