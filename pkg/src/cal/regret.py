"""Regret metrics against the exact-parameter VCG baseline, and the
closed-form guarantees that go with each mechanism.

Three cumulative metrics over a T-round run:

* revenue regret: shortfall of the mechanism's expected payments below
  the VCG payments computed from the true parameters;
* social-welfare regret: welfare gap of the realized allocations, both
  sides evaluated on true parameters;
* deviation regret: per-round absolute payment deviation (penalizes
  overcharging too, which the revenue regret rewards).

``bound`` evaluates each guarantee's printed closed form; ``tune``
returns the matching closed-form (tau, delta, mu).  Identifiers name the
guarantee, its mechanism, and the metric it bounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .mechanisms import vcg_expected_payments
from .model import AuctionEnv, CascadeModel, ConfigError, bids_array, social_welfare
from .allocation import optimal_allocation
from .simulation import RoundTrace

THEOREM_IDS = (
    "T1_AVCG1_rev",
    "T2_AVCG1_sw",
    "T4_AVCG2p_rev",
    "T5_AVCG2p_sw",
    "T7_AVCG3_rev",
    "T7sw_AVCG3_sw",
    "T8_PAD_rev",
    "T9_PAD_sw",
    "T11_deviation",
)

THEOREM_MECHANISM = {
    "T1_AVCG1_rev": "avcg1",
    "T2_AVCG1_sw": "avcg1",
    "T4_AVCG2p_rev": "avcg2prime",
    "T5_AVCG2p_sw": "avcg2prime",
    "T7_AVCG3_rev": "avcg3",
    "T7sw_AVCG3_sw": "avcg3",
    "T8_PAD_rev": "pad-avcg",
    "T9_PAD_sw": "pad-avcg",
    "T11_deviation": "avcg1",
}


def resolve_theorem(name: str) -> str:
    """Accept a full identifier or its short prefix (the token before '_')."""
    if name in THEOREM_IDS:
        return name
    for tid in THEOREM_IDS:
        if tid.split("_")[0] == name:
            return tid
    raise ConfigError(f"unknown theorem id {name!r}; choose from {THEOREM_IDS}")


@dataclass
class RegretReport:
    """Aggregated regret of one configuration, optionally against a bound."""

    per_round_revenue_regret: np.ndarray
    R_T: float
    R_T_SW: float
    R_tilde_T: float
    bound_B: float | None = None
    relative: float | None = None
    bound_id: str | None = None
    stderr: float = 0.0
    warnings: list[str] = field(default_factory=list)


def _as_replications(traces) -> list[list[RoundTrace]]:
    if traces and isinstance(traces[0], RoundTrace):
        return [traces]
    return list(traces)


def revenue_regret(traces, env: AuctionEnv, bids, model: CascadeModel) -> np.ndarray:
    """Per-round expected-payment shortfall vs the exact VCG total.

    Randomized mechanisms contribute their click-expected payments per
    round; averaging those across replications Monte-Carlo-estimates the
    expectation over the mechanism's own randomness.
    """
    reps = _as_replications(traces)
    v = bids_array(bids)
    p_star = float(vcg_expected_payments(env, v, model).sum())
    horizon = len(reps[0])
    totals = np.zeros(horizon)
    for rep in reps:
        totals += np.array([tr.expected_payments.sum() for tr in rep])
    totals /= len(reps)
    return p_star - totals


def sw_regret(traces, env: AuctionEnv, bids, model: CascadeModel) -> float:
    """Cumulative welfare gap of the realized allocations, true parameters throughout."""
    reps = _as_replications(traces)
    v = bids_array(bids)
    theta_star = optimal_allocation(env, v, env.qualities, model)
    sw_star = social_welfare(theta_star, env, v, model)
    horizon = len(reps[0])
    totals = np.zeros(horizon)
    for rep in reps:
        totals += np.array([social_welfare(tr.allocation, env, v, model) for tr in rep])
    totals /= len(reps)
    return float(np.sum(sw_star - totals))


def deviation_regret(traces, env: AuctionEnv, bids, model: CascadeModel) -> float:
    """Sum over rounds of the absolute total-payment deviation from VCG."""
    per_round = revenue_regret(traces, env, bids, model)
    return float(np.abs(per_round).sum())


def build_report(traces, env: AuctionEnv, bids, model: CascadeModel,
                 bound_id: str | None = None, **bound_params) -> RegretReport:
    per_round = revenue_regret(traces, env, bids, model)
    report = RegretReport(
        per_round_revenue_regret=per_round,
        R_T=float(per_round.sum()),
        R_T_SW=sw_regret(traces, env, bids, model),
        R_tilde_T=float(np.abs(per_round).sum()),
    )
    if bound_id is not None:
        report.bound_id = resolve_theorem(bound_id)
        report.warnings = check_constraints(report.bound_id, **bound_params)
        report.bound_B = bound(report.bound_id, **bound_params)
        if report.bound_B > 0:
            report.relative = report.R_T / report.bound_B
    return report


# ---------------------------------------------------------------------------
# closed-form guarantees
# ---------------------------------------------------------------------------

_CBRT = 1.0 / 3.0


def _log_term(x: float, what: str) -> float:
    if x <= 1.0:
        raise ConfigError(f"{what}: logarithm argument {x:.6g} <= 1; bound undefined at these parameters")
    return math.log(x) ** _CBRT


def _need(value, name: str, tid: str) -> float:
    if value is None:
        raise ConfigError(f"bound {tid} requires parameter {name}")
    return float(value)


def bound(tid: str, *, T: int, K: int, N: int, v_max: float,
          min_obs: float | None = None, q_min: float | None = None,
          mu: float | None = None) -> float:
    """Evaluate one guarantee's closed form exactly as printed.

    ``min_obs`` is the smallest displayed-slot observation probability
    (Lambda_min for position-dependent settings, Gamma_min otherwise).
    Parameter-range violations are reported by ``check_constraints``, not
    silently clamped here.
    """
    tid = resolve_theorem(tid)
    if v_max == 0.0:
        return 0.0
    t23, n13, k23 = T ** (2 / 3), N ** _CBRT, K ** (2 / 3)
    if tid == "T1_AVCG1_rev":
        lam = _need(min_obs, "min_obs", tid)
        return (4 * 2 ** _CBRT * v_max * lam ** (-2 / 3) * k23 * t23 * n13
                * _log_term(K ** _CBRT * T ** _CBRT * N ** (2 / 3), tid))
    if tid == "T2_AVCG1_sw":
        lam = _need(min_obs, "min_obs", tid)
        e = math.sqrt(2.0) / lam
        return (4 * v_max * e ** (2 / 3) * k23 * n13 * t23
                * _log_term(2 ** (2 / 3) * lam ** (2 / 3) * N ** (2 / 3) * K ** _CBRT * T ** _CBRT, tid))
    if tid == "T4_AVCG2p_rev":
        return 2 * K ** 2 * _need(mu, "mu", tid) * v_max * T
    if tid == "T5_AVCG2p_sw":
        return K ** 2 * _need(mu, "mu", tid) * v_max * T
    if tid == "T7_AVCG3_rev":
        return 6 * v_max * K * t23 * n13 * _log_term(2 * N ** (2 / 3) * T ** _CBRT, tid)
    if tid == "T7sw_AVCG3_sw":
        return 5 * v_max * K * n13 * t23 * _log_term(N ** (2 / 3) * T ** _CBRT, tid)
    if tid == "T8_PAD_rev":
        gam = _need(min_obs, "min_obs", tid)
        qm = _need(q_min, "q_min", tid)
        lead = 4 * v_max * K ** (4 / 3) * t23 * n13 * 5 ** (2 / 3) / (2 ** _CBRT * gam ** (2 / 3) * qm)
        arg = 2 ** _CBRT * gam ** (2 / 3) * N ** (2 / 3) * T ** _CBRT / (K ** _CBRT * 5 ** (2 / 3))
        return lead * _log_term(arg, tid)
    if tid == "T9_PAD_sw":
        gam = _need(min_obs, "min_obs", tid)
        e = math.sqrt(2.0) / gam
        return (4 * v_max * e ** (2 / 3) * k23 * n13 * t23
                * _log_term(2 ** (2 / 3) * gam ** (-2 / 3) * N ** (2 / 3) * K ** _CBRT * T ** _CBRT, tid))
    if tid == "T11_deviation":
        lam = _need(min_obs, "min_obs", tid)
        qm = _need(q_min, "q_min", tid)
        return (4 * 2 ** _CBRT * v_max * K ** (-_CBRT) * n13 * t23 / (qm * lam ** (2 / 3))
                * _log_term(N ** (2 / 3) * K ** _CBRT * T ** _CBRT, tid))
    raise ConfigError(f"no bound formula wired for {tid}")


def check_constraints(tid: str, *, T: int, K: int, N: int, v_max: float = 1.0,
                      min_obs: float | None = None, q_min: float | None = None,
                      mu: float | None = None) -> list[str]:
    """Parameter-range checks for one guarantee; violations come back as messages."""
    tid = resolve_theorem(tid)
    out = []
    if tid in ("T1_AVCG1_rev", "T11_deviation") and T * K < N:
        out.append(f"{tid}: confidence formula needs T >= N/K (T={T}, N={N}, K={K})")
    if tid in ("T7_AVCG3_rev", "T7sw_AVCG3_sw") and T < N:
        out.append(f"{tid}: confidence formula needs T >= N (T={T}, N={N})")
    if tid == "T7sw_AVCG3_sw" and T * K ** 3 <= N:
        out.append(f"{tid}: resampling rate needs T > N/K^3")
    if tid in ("T4_AVCG2p_rev", "T5_AVCG2p_sw") and mu is not None and not 0 < mu <= 1:
        out.append(f"{tid}: mu must lie in (0, 1], got {mu}")
    if min_obs is not None and not 0 < min_obs <= 1:
        out.append(f"{tid}: min_obs must lie in (0, 1], got {min_obs}")
    if q_min is not None and not 0 < q_min <= 1:
        out.append(f"{tid}: q_min must lie in (0, 1], got {q_min}")
    return out


@dataclass(frozen=True)
class TunedParams:
    tau: int
    delta: float | None
    mu: float | None
    warnings: tuple[str, ...] = ()


def _clamped_delta(raw: float, tid: str) -> tuple[float, list[str]]:
    if raw > 1.0:
        msg = f"{tid}: confidence formula gives delta={raw:.4g} > 1; clamped to 1"
        warnings.warn(msg)
        return 1.0, [msg]
    return raw, []


def tune(tid: str, *, T: int, N: int, K: int | None = None,
         min_obs: float | None = None, alpha: float = 1.5) -> TunedParams:
    """Closed-form (tau, delta, mu) for one guarantee.

    tau is rounded up and floored at the mechanism's minimum exploration
    length (ceil(N/K), or N when only top-slot samples count); delta above
    1 is clamped with a warning.  ``alpha`` sets the resampling rate
    mu = T^-alpha for the guarantee that leaves it free.  K may be omitted
    for the guarantees whose formulas do not involve it.
    """
    tid = resolve_theorem(tid)
    if T < 1:
        raise ConfigError("tune requires T >= 1")

    def need_k() -> int:
        if K is None:
            raise ConfigError(f"tune for {tid} requires K")
        return K

    def finish(tau_raw: float, floor: int, delta, mu, notes) -> TunedParams:
        if not math.isfinite(tau_raw) or tau_raw < 0:
            raise ConfigError(f"{tid}: exploration length formula failed at T={T}, N={N}, K={K}")
        tau = max(int(math.ceil(tau_raw)), floor)
        if tau > T:
            raise ConfigError(
                f"{tid}: tuned exploration length tau={tau} exceeds T={T}; increase T")
        return TunedParams(tau=tau, delta=delta, mu=mu, warnings=tuple(notes))

    def log_cbrt(x: float) -> float:
        if x <= 1.0:
            raise ConfigError(f"{tid}: infeasible T={T} (log argument {x:.4g} <= 1)")
        return math.log(x) ** _CBRT

    if tid in ("T4_AVCG2p_rev", "T5_AVCG2p_sw"):
        return TunedParams(tau=0, delta=None, mu=T ** (-alpha))

    if tid in ("T1_AVCG1_rev", "T11_deviation"):
        k = need_k()
        lam = _need(min_obs, "min_obs", tid)
        delta, notes = _clamped_delta(k ** (-_CBRT) * T ** (-_CBRT) * N ** _CBRT, tid)
        tau_raw = (2 ** _CBRT * k ** (-_CBRT) * T ** (2 / 3) * N ** _CBRT
                   * lam ** (-2 / 3) * log_cbrt(N / delta))
        return finish(tau_raw, math.ceil(N / k), delta, None, notes)

    if tid in ("T2_AVCG1_sw", "T9_PAD_sw"):
        k = need_k()
        e = math.sqrt(2.0) / _need(min_obs, "min_obs", tid)
        delta, notes = _clamped_delta(e ** (2 / 3) * k ** (-_CBRT) * N ** _CBRT * T ** (-_CBRT), tid)
        tau_raw = e ** (2 / 3) * T ** (2 / 3) * N ** _CBRT * k ** (-_CBRT) * log_cbrt(2 * N / delta)
        return finish(tau_raw, math.ceil(N / k), delta, None, notes)

    if tid in ("T7_AVCG3_rev", "T7sw_AVCG3_sw"):
        if tid == "T7_AVCG3_rev":
            mu = N ** (-2 / 3) * T ** (-_CBRT)
            notes = []
        else:
            mu = need_k() ** (-1.0) * N ** _CBRT * T ** (-_CBRT)
            notes = []
            if mu > 1.0:
                notes.append(f"{tid}: resampling formula gives mu={mu:.4g} > 1; clamped to 1")
                warnings.warn(notes[-1])
                mu = 1.0
        delta, dnotes = _clamped_delta(N ** _CBRT * T ** (-_CBRT), tid)
        tau_raw = T ** (2 / 3) * N ** _CBRT * log_cbrt(2 * N / delta)
        return finish(tau_raw, N, delta, mu, notes + dnotes)

    if tid == "T8_PAD_rev":
        k = need_k()
        d = 5.0 / (math.sqrt(2.0) * _need(min_obs, "min_obs", tid))
        delta, notes = _clamped_delta(k ** _CBRT * N ** _CBRT * d ** (2 / 3) * T ** (-_CBRT), tid)
        tau_raw = d ** (2 / 3) * k ** _CBRT * T ** (2 / 3) * N ** _CBRT * log_cbrt(N / delta)
        return finish(tau_raw, math.ceil(N / k), delta, None, notes)

    raise ConfigError(f"no tuning formula wired for {tid}")
