"""Command-line harness: runs, parameter sweeps, bound queries, verification.

Subcommands
    run    --config FILE --out CSV      one configuration, per-round trace CSV
    sweep  --config FILE --axis A --points p1,p2,... --out CSV
                                        summary CSV, one row per (point, replication)
    bounds --theorem ID --T n --N n [--K n] [--lambda-min x | --gamma-min x] ...
                                        closed-form tuning and bound values
    verify [--filter NAME]              re-derives the hard-coded counterexamples

Config files are strict ``key = value`` text; unknown keys are errors.
The environment variable CAL_THREADS caps the sweep worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .allocation import monotonicity_witness
from .mechanisms import (
    AVCG1,
    avcg2_click_payments,
    frozen_estimate,
    vcg_expected_payments,
)
from .model import (
    AuctionEnv,
    CascadeModel,
    ClickRealization,
    ConfigError,
    social_welfare,
)
from .regret import THEOREM_MECHANISM, bound, check_constraints, resolve_theorem, tune
from .simulation import (
    RunConfig,
    replication_metrics,
    replication_trace,
    stream_rng,
)

SUMMARY_HEADER = "axis,value,replication,RT,RT_sw,RT_dev,bound,relative,stderr,seed"
TRACE_HEADER = "replication,t,phase,slots,expected_total,realized_total,sw"
AXES = ("T", "N", "K", "q_min", "mu")
PRESETS = ("paper-posdep", "paper-pad")

KNOWN_KEYS = {
    "horizon", "seed", "replications", "preset", "q_min",
    "mechanism.kind", "mechanism.theorem", "mechanism.tau", "mechanism.delta",
    "mechanism.mu", "mechanism.alpha",
    "env.n_ads", "env.n_slots", "env.v_max", "env.qualities", "env.true_values",
    "model.kind", "model.lambdas", "model.continuations", "model.gamma",
}

_GENERATOR_Q_HIGH = 0.1   # upper edge of the quality generator
_PAD_GAMMA_LOW = 0.5      # transition range of the ad-dependent preset


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Strict key = value parser; '#' starts a comment, unknown keys are errors."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


@dataclass(frozen=True)
class CellSpec:
    """One sweep cell / run configuration in plain-data (picklable) form."""

    horizon: int
    seed: int
    replications: int
    mechanism: str
    theorem: str | None
    tau: object       # "auto" or int
    delta: object     # "auto", None, or float
    mu: object        # "auto", None, or float
    alpha: float
    preset: str | None
    n_ads: int
    n_slots: int
    v_max: float
    q_min: float
    qualities: tuple[float, ...] | None = None
    true_values: tuple[float, ...] | None = None
    model_kind: str | None = None
    lambdas: tuple[float, ...] | None = None
    continuations: tuple[float, ...] | None = None
    gamma: tuple[tuple[float, ...], ...] | None = None


def cell_from_config(cfg: dict[str, str]) -> CellSpec:
    def want(key, default=None):
        return cfg.get(key, default)

    for key in ("horizon", "seed", "mechanism.kind"):
        if key not in cfg:
            raise ConfigError(f"config is missing required key {key!r}")
    preset = want("preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {PRESETS}")

    explicit_keys = [k for k in ("env.qualities", "env.true_values", "model.kind") if k in cfg]
    if preset and explicit_keys:
        raise ConfigError(f"preset {preset} conflicts with explicit keys {explicit_keys}")
    if not preset and len(explicit_keys) != 3:
        raise ConfigError("either a preset or explicit env.qualities, env.true_values "
                          "and model.kind must be given")

    n_ads = int(want("env.n_ads", 0) or (len(_floats(cfg["env.qualities"])) if not preset else 0))
    if "env.n_ads" in cfg:
        n_ads = int(cfg["env.n_ads"])
    n_slots = int(want("env.n_slots", 0))
    if not preset and "env.n_slots" not in cfg:
        raise ConfigError("env.n_slots is required")
    if preset and ("env.n_ads" not in cfg or "env.n_slots" not in cfg):
        raise ConfigError("preset mode requires env.n_ads and env.n_slots")

    theorem = want("mechanism.theorem")
    if theorem is not None:
        theorem = resolve_theorem(theorem)

    def knob(key):
        val = want(key)
        if val is None:
            return "auto" if theorem else None
        return val if val == "auto" else float(val)

    gamma = None
    if "model.gamma" in cfg:
        gamma = tuple(_floats(row) for row in cfg["model.gamma"].split(";"))

    spec = CellSpec(
        horizon=int(cfg["horizon"]),
        seed=int(cfg["seed"]),
        replications=int(want("replications", "100")),  # benchmark default
        mechanism=cfg["mechanism.kind"],
        theorem=theorem,
        tau=knob("mechanism.tau"),
        delta=knob("mechanism.delta"),
        mu=knob("mechanism.mu"),
        alpha=float(want("mechanism.alpha", "1.5")),
        preset=preset,
        n_ads=n_ads,
        n_slots=n_slots,
        v_max=float(want("env.v_max", "1.0")),
        q_min=float(want("q_min", "0.01")),
        qualities=_floats(cfg["env.qualities"]) if "env.qualities" in cfg else None,
        true_values=_floats(cfg["env.true_values"]) if "env.true_values" in cfg else None,
        model_kind=want("model.kind"),
        lambdas=_floats(cfg["model.lambdas"]) if "model.lambdas" in cfg else None,
        continuations=_floats(cfg["model.continuations"]) if "model.continuations" in cfg else None,
        gamma=gamma,
    )
    if spec.preset and not spec.q_min < _GENERATOR_Q_HIGH:
        raise ConfigError(f"q_min must stay below the generator's upper edge {_GENERATOR_Q_HIGH}")
    return spec


# ---------------------------------------------------------------------------
# instances and tuned parameters per cell
# ---------------------------------------------------------------------------

def _preset_lambdas(n_slots: int) -> np.ndarray:
    # constant prominence chosen so the last displayed slot keeps 0.8 observation
    if n_slots == 1:
        return np.array([])
    return np.full(n_slots - 1, 0.8 ** (1.0 / (n_slots - 1)))


def nominal_min_obs(cell: CellSpec) -> float:
    if cell.preset == "paper-posdep":
        return 0.8 if cell.n_slots > 1 else 1.0
    if cell.preset == "paper-pad":
        return _PAD_GAMMA_LOW ** (cell.n_slots - 1)
    return explicit_model(cell).min_observation(cell.n_ads)


def nominal_q_min(cell: CellSpec) -> float:
    if cell.preset:
        return cell.q_min
    return float(min(cell.qualities))


def explicit_model(cell: CellSpec) -> CascadeModel:
    kind = cell.model_kind
    if kind in ("position-dependent", "position"):
        return CascadeModel.position_dependent(cell.lambdas or ())
    if kind == "factorized":
        if cell.lambdas is None or cell.continuations is None:
            raise ConfigError("factorized model needs model.lambdas and model.continuations")
        return CascadeModel.factorized(cell.lambdas, cell.continuations)
    if kind == "general":
        if cell.gamma is None:
            raise ConfigError("general model needs model.gamma")
        return CascadeModel.general(np.array(cell.gamma))
    raise ConfigError(f"unknown model.kind {kind!r}")


def instance_for(cell: CellSpec, replication: int) -> tuple[AuctionEnv, CascadeModel]:
    """The (env, model) a replication runs on; presets redraw per replication."""
    if not cell.preset:
        env = AuctionEnv(n_ads=cell.n_ads, n_slots=cell.n_slots,
                         qualities=np.array(cell.qualities),
                         true_values=np.array(cell.true_values), v_max=cell.v_max)
        return env, explicit_model(cell)
    rng = stream_rng(cell.seed, replication, 0, "instance")
    q = rng.uniform(cell.q_min, _GENERATOR_Q_HIGH, cell.n_ads)
    v = rng.uniform(0.0, cell.v_max, cell.n_ads)
    env = AuctionEnv(n_ads=cell.n_ads, n_slots=cell.n_slots, qualities=q,
                     true_values=v, v_max=cell.v_max)
    if cell.preset == "paper-posdep":
        model = CascadeModel.position_dependent(_preset_lambdas(cell.n_slots))
    else:
        gamma = rng.uniform(_PAD_GAMMA_LOW, 1.0, (cell.n_slots, cell.n_ads))
        model = CascadeModel.general(gamma)
    return env, model


@dataclass(frozen=True)
class ResolvedParams:
    tau: int
    delta: float | None
    mu: float | None
    warnings: tuple[str, ...]


_MU_MECHANISMS = {"avcg2prime", "avcg3"}


def resolve_params(cell: CellSpec) -> ResolvedParams:
    """Turn 'auto' knobs into numbers via the cell's theorem tuning."""
    needs_tuning = "auto" in (cell.tau, cell.delta, cell.mu)
    tuned = None
    notes: tuple[str, ...] = ()
    if needs_tuning:
        if cell.theorem is None:
            raise ConfigError("mechanism.theorem is required to tune 'auto' parameters")
        tuned = tune(cell.theorem, T=cell.horizon, N=cell.n_ads, K=cell.n_slots,
                     min_obs=nominal_min_obs(cell), alpha=cell.alpha)
        notes = tuned.warnings

    def pick(raw, tuned_value):
        return tuned_value if raw == "auto" else raw

    tau = pick(cell.tau, tuned.tau if tuned else None)
    delta = pick(cell.delta, tuned.delta if tuned else None)
    mu = pick(cell.mu, tuned.mu if tuned else None)
    if mu is None and cell.mechanism in _MU_MECHANISMS:
        raise ConfigError(f"{cell.mechanism} needs mechanism.mu "
                          f"(theorem {cell.theorem} does not tune it)")
    return ResolvedParams(tau=int(tau or 0), delta=delta, mu=mu, warnings=notes)


def cell_bound(cell: CellSpec, params: ResolvedParams) -> tuple[float, list[str]]:
    if cell.theorem is None:
        raise ConfigError("a bound column needs mechanism.theorem")
    kwargs = dict(T=cell.horizon, K=cell.n_slots, N=cell.n_ads, v_max=cell.v_max,
                  min_obs=nominal_min_obs(cell), q_min=nominal_q_min(cell), mu=params.mu)
    return bound(cell.theorem, **kwargs), check_constraints(cell.theorem, **kwargs)


def _run_config(cell: CellSpec, params: ResolvedParams, env, model) -> RunConfig:
    return RunConfig(env=env, model=model, mechanism=cell.mechanism,
                     horizon=cell.horizon, seed=cell.seed, replications=1,
                     tau=params.tau, delta=params.delta, mu=params.mu)


def _metrics_worker(cell: CellSpec, params: ResolvedParams, replication: int):
    env, model = instance_for(cell, replication)
    m = replication_metrics(_run_config(cell, params, env, model), replication)
    return m.revenue_regret, m.sw_regret, m.deviation_regret


def worker_count() -> int:
    raw = os.environ.get("CAL_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# sweeps and CSV
# ---------------------------------------------------------------------------

def apply_axis(cell: CellSpec, axis: str, value: float) -> CellSpec:
    if axis == "T":
        return replace(cell, horizon=int(value))
    if axis == "N":
        return replace(cell, n_ads=int(value))
    if axis == "K":
        return replace(cell, n_slots=int(value))
    if axis == "q_min":
        if not cell.preset:
            raise ConfigError("the q_min axis requires a preset instance generator")
        return replace(cell, q_min=float(value))
    if axis == "mu":
        return replace(cell, mu=float(value))
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {AXES}")


def sweep(cell: CellSpec, axis: str, points) -> list[tuple]:
    """Run every (point, replication) cell and return summary rows."""
    points = [float(p) for p in points]
    if not points or any(b <= a for a, b in zip(points, points[1:])):
        raise ConfigError("sweep points must be non-empty and strictly increasing")
    if axis in ("N", "K") and cell.preset is None:
        raise ConfigError(f"the {axis} axis requires a preset instance generator")
    rows = []
    workers = worker_count()
    for value in points:
        cell_v = apply_axis(cell, axis, value)
        params = resolve_params(cell_v)
        b_val, _ = cell_bound(cell_v, params)
        reps = range(cell_v.replications)
        if workers > 1 and cell_v.replications > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                metrics = list(pool.map(_metrics_worker, [cell_v] * cell_v.replications,
                                        [params] * cell_v.replications, reps))
        else:
            metrics = [_metrics_worker(cell_v, params, r) for r in reps]
        rts = np.array([m[0] for m in metrics])
        se = float(rts.std(ddof=1) / math.sqrt(len(rts))) if len(rts) > 1 else 0.0
        for r, (rt, sw, dev) in enumerate(metrics):
            rows.append((axis, value, r, rt, sw, dev, b_val,
                         rt / b_val if b_val > 0 else float("nan"), se, cell_v.seed))
    return rows


def emit_csv(rows, path) -> None:
    """Summary CSV: pinned header, 17 significant digits, sorted rows."""
    rows = sorted(rows, key=lambda row: (row[1], row[2]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for axis, value, rep, rt, sw, dev, b_val, rel, se, seed in rows:
            fh.write(",".join([
                str(axis), _fmt(value), str(int(rep)), _fmt(rt), _fmt(sw), _fmt(dev),
                _fmt(b_val), _fmt(rel), _fmt(se), str(int(seed)),
            ]) + "\n")


def read_summary_csv(path) -> list[tuple]:
    """Inverse of emit_csv; floats round-trip exactly at 17 significant digits."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != SUMMARY_HEADER:
            raise ConfigError(f"unexpected summary header {header!r}")
        rows = []
        for line in fh:
            axis, value, rep, rt, sw, dev, b_val, rel, se, seed = line.strip().split(",")
            rows.append((axis, float(value), int(rep), float(rt), float(sw), float(dev),
                         float(b_val), float(rel), float(se), int(seed)))
    return rows


def write_trace_csv(cell: CellSpec, params: ResolvedParams, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRACE_HEADER + "\n")
        for r in range(cell.replications):
            env, model = instance_for(cell, r)
            config = _run_config(cell, params, env, model)
            bids = env.true_values
            for tr in replication_trace(config, r):
                phase = "exploration" if tr.t <= params.tau else "exploitation"
                slots = "|".join(str(int(a)) for a in tr.allocation.displayed(env.n_slots))
                fh.write(",".join([
                    str(r), str(tr.t), phase, slots,
                    _fmt(tr.expected_payments.sum()), _fmt(tr.realized_payments.sum()),
                    _fmt(social_welfare(tr.allocation, env, bids, model)),
                ]) + "\n")


# ---------------------------------------------------------------------------
# verification suite (the hard counterexamples, re-derived exactly)
# ---------------------------------------------------------------------------

def _check_single_slot_baseline():
    env = AuctionEnv(n_ads=3, n_slots=1, qualities=np.array([0.1, 0.2, 0.3]),
                     true_values=np.array([1.0, 1.0, 1.0]), v_max=1.0)
    model = CascadeModel.position_dependent([])
    p_star = vcg_expected_payments(env, env.true_values, model)
    ok = abs(p_star[2] - 0.2) <= 1e-12 and abs(p_star[0]) <= 1e-12 and abs(p_star[1]) <= 1e-12
    mech = AVCG1(env, model, estimate=frozen_estimate([0.1, 0.29, 0.3]))
    plan = mech.step(env.true_values)
    p_hat = plan.expected_payments
    ok &= abs(p_hat[2] - 0.29) <= 1e-12
    regret = p_star.sum() - p_hat.sum()
    ok &= abs(regret - (-0.09)) <= 1e-12
    return ok, (f"exact payment {p_star[2]:.6g}, estimated payment {p_hat[2]:.6g}, "
                f"per-round regret {regret:+.6g}")


def _check_contingent_not_dsic():
    env = AuctionEnv(n_ads=3, n_slots=2, qualities=np.array([0.5, 1.0, 1.0]),
                     true_values=np.array([4.0, 1.0, 0.5]), v_max=4.0)
    model = CascadeModel.position_dependent([0.5])
    clicks = ClickRealization(clicked=[True, True], observed=[True, True])
    truthful = avcg2_click_payments(env, env.true_values, model, clicks)[1]
    deviated = avcg2_click_payments(env, np.array([4.0, 3.0, 0.5]), model, clicks)[1]
    ok = truthful == 0.5 and deviated == -1.0
    return ok, f"payment 0.5 truthful vs {deviated:+g} after over-reporting"


def _check_contingent_not_wbb():
    eps = 0.01
    env = AuctionEnv(n_ads=3, n_slots=2, qualities=np.array([1.0, 0.5, 1.0]),
                     true_values=np.array([2.0, 1.0, eps]), v_max=2.0)
    model = CascadeModel.position_dependent([0.5])
    clicks = ClickRealization(clicked=[True, True], observed=[True, True])
    pays = avcg2_click_payments(env, env.true_values, model, clicks)
    total = pays.sum()
    # per-ad amounts are bitwise exact; the total only up to summation order
    ok = (pays[0] == 2 * eps - 0.5 and pays[1] == 2 * eps and pays[2] == 0.0
          and abs(total - (4 * eps - 0.5)) <= 1e-15 and total < 0.0)
    return ok, f"auctioneer total {total:+.6g} < 0 with both displayed ads clicked"


def _check_nonmonotone_ctr():
    env = AuctionEnv(n_ads=3, n_slots=2, qualities=np.ones(3),
                     true_values=np.array([0.85, 1.0, 1.4]), v_max=2.0)
    estimated = CascadeModel.factorized([1.0], [1.0, 0.9, 0.0])
    true_model = CascadeModel.factorized([1.0], [0.89, 0.9, 0.0])
    witness = monotonicity_witness(None, env, estimated, true_model, [1.4, 1.6])
    ok = witness == (2, 1.4, 1.6, 0.9, 0.89)
    return ok, f"witness {witness}: CTR drops 0.9 -> 0.89 as the bid rises 1.4 -> 1.6"


VERIFY_CHECKS = {
    "single-slot-vcg-baseline": _check_single_slot_baseline,
    "contingent-not-dsic": _check_contingent_not_dsic,
    "contingent-not-wbb": _check_contingent_not_wbb,
    "estimated-ctr-non-monotone": _check_nonmonotone_ctr,
}


def run_verify(filter_name: str | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    names = [n for n in VERIFY_CHECKS if filter_name is None or filter_name in n]
    if not names:
        print(f"no verification check matches {filter_name!r}", file=out)
        return 2
    failures = 0
    for name in names:
        ok, detail = VERIFY_CHECKS[name]()
        status = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        print(f"{status} {name}: {detail}", file=out)
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _load_cell(path) -> CellSpec:
    with open(path, encoding="utf-8") as fh:
        return cell_from_config(parse_config_text(fh.read()))


def _cmd_run(args) -> int:
    cell = _load_cell(args.config)
    params = resolve_params(cell)
    write_trace_csv(cell, params, args.out)
    print(f"wrote {cell.replications} replication(s) x {cell.horizon} rounds to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    cell = _load_cell(args.config)
    points = [float(tok) for tok in args.points.split(",") if tok.strip()]
    rows = sweep(cell, args.axis, points)
    emit_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_bounds(args) -> int:
    tid = resolve_theorem(args.theorem)
    min_obs = args.lambda_min if args.lambda_min is not None else args.gamma_min
    print(f"theorem = {tid}")
    print(f"mechanism = {THEOREM_MECHANISM[tid]}")
    tuned = tune(tid, T=args.T, N=args.N, K=args.K, min_obs=min_obs, alpha=args.alpha)
    print(f"tau = {tuned.tau}")
    if tuned.delta is not None:
        print(f"delta = {tuned.delta:.10g}")
    if tuned.mu is not None:
        print(f"mu = {tuned.mu:.10g}")
    for note in tuned.warnings:
        print(f"warning: {note}")
    if args.K is not None:
        kwargs = dict(T=args.T, K=args.K, N=args.N, v_max=args.v_max,
                      min_obs=min_obs, q_min=args.q_min, mu=args.mu or tuned.mu)
        try:
            print(f"bound = {bound(tid, **kwargs):.10g}")
        except ConfigError as exc:
            print(f"bound unavailable: {exc}")
        for note in check_constraints(tid, **kwargs):
            print(f"warning: {note}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cal", description="cascade auction lab: simulate, sweep, verify")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configuration, write a trace CSV")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one axis, write a summary CSV")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True, choices=AXES)
    p_sweep.add_argument("--points", required=True, help="comma-separated, strictly increasing")
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_bounds = sub.add_parser("bounds", help="print closed-form tuning and bound values")
    p_bounds.add_argument("--theorem", required=True)
    p_bounds.add_argument("--T", type=int, required=True)
    p_bounds.add_argument("--N", type=int, required=True)
    p_bounds.add_argument("--K", type=int)
    p_bounds.add_argument("--lambda-min", type=float, dest="lambda_min")
    p_bounds.add_argument("--gamma-min", type=float, dest="gamma_min")
    p_bounds.add_argument("--q-min", type=float, dest="q_min")
    p_bounds.add_argument("--mu", type=float)
    p_bounds.add_argument("--v-max", type=float, dest="v_max", default=1.0)
    p_bounds.add_argument("--alpha", type=float, default=1.5)
    p_bounds.set_defaults(fn=_cmd_bounds)

    p_verify = sub.add_parser("verify", help="re-derive the counterexample suite")
    p_verify.add_argument("--filter")
    p_verify.set_defaults(fn=lambda args: run_verify(args.filter))

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
