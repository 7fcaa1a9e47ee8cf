"""Click sampling and the repeated-auction driver."""

import numpy as np
import pytest

from cal import (
    AVCG1,
    Allocation,
    AuctionEnv,
    CascadeModel,
    ClickRealization,
    ConfigError,
    RunConfig,
    deviation_regret,
    revenue_regret,
    run,
    run_metrics,
    sample_cascade_clicks,
    stream_rng,
    sw_regret,
    vcg_expected_payments,
)
from cal.simulation import replication_metrics, replication_trace


def make_env(q, v, k):
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    return AuctionEnv(n_ads=len(q), n_slots=k, qualities=q, true_values=v,
                      v_max=max(1.0, float(v.max())))


POSDEP = CascadeModel.position_dependent([0.8])


class TestClickSampling:
    def test_zero_quality_never_clicks(self, rng):
        env = make_env([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], 2)
        alloc = Allocation(np.arange(3))
        for _ in range(50):
            clicks = sample_cascade_clicks(alloc, env, POSDEP, rng)
            assert not clicks.clicked.any()

    def test_certain_chain_clicks_everything(self, rng):
        env = make_env([1.0] * 4, [1.0] * 4, 3)
        model = CascadeModel.position_dependent([1.0, 1.0])
        alloc = Allocation(np.arange(4))
        clicks = sample_cascade_clicks(alloc, env, model, rng)
        assert clicks.observed.all() and clicks.clicked.all()

    def test_second_slot_click_rate(self, rng):
        env = make_env([1.0, 1.0, 0.5], [1.0, 1.0, 1.0], 2)
        alloc = Allocation(np.arange(3))
        hits = sum(sample_cascade_clicks(alloc, env, POSDEP, rng).clicked[1]
                   for _ in range(100_000))
        assert hits / 100_000 == pytest.approx(0.8, abs=0.01)

    def test_realization_is_valid_chain(self, rng):
        env = make_env([0.5, 0.4, 0.6, 0.2], [1.0] * 4, 3)
        model = CascadeModel.general(rng.uniform(0.2, 0.9, (3, 4)))
        for _ in range(200):
            clicks = sample_cascade_clicks(Allocation(rng.permutation(4)), env, model, rng)
            assert isinstance(clicks, ClickRealization)  # constructor re-validates


class TestRunContracts:
    ENV = make_env([0.3, 0.2, 0.5, 0.1], [0.8, 0.9, 0.4, 0.7], 2)

    def test_oracle_rounds_identical(self):
        cfg = RunConfig(env=self.ENV, model=POSDEP, mechanism="oracle-vcg",
                        horizon=10, seed=5)
        (rep,) = run(cfg)
        p_star = vcg_expected_payments(self.ENV, self.ENV.true_values, POSDEP)
        for tr in rep:
            assert np.array_equal(tr.expected_payments, p_star)
            assert tr.allocation == rep[0].allocation

    def test_pure_exploration_pays_nothing(self):
        cfg = RunConfig(env=self.ENV, model=POSDEP, mechanism="avcg1",
                        horizon=6, seed=5, tau=6, delta=0.5)
        (rep,) = run(cfg)
        for tr in rep:
            assert np.all(tr.expected_payments == 0.0)
            assert np.all(tr.realized_payments == 0.0)

    def test_bitwise_determinism(self):
        cfg = RunConfig(env=self.ENV, model=POSDEP, mechanism="avcg3",
                        horizon=15, seed=77, replications=2, tau=4, delta=0.3, mu=0.2)
        a, b = run(cfg), run(cfg)
        for rep_a, rep_b in zip(a, b):
            for ta, tb in zip(rep_a, rep_b):
                assert ta.allocation == tb.allocation
                assert np.array_equal(ta.clicks.clicked, tb.clicks.clicked)
                assert np.array_equal(ta.expected_payments, tb.expected_payments)
                assert np.array_equal(ta.realized_payments, tb.realized_payments)

    def test_seed_isolation_across_replication_counts(self):
        cfg1 = RunConfig(env=self.ENV, model=POSDEP, mechanism="avcg1",
                         horizon=12, seed=9, replications=1, tau=4, delta=0.3)
        cfg3 = RunConfig(env=self.ENV, model=POSDEP, mechanism="avcg1",
                         horizon=12, seed=9, replications=3, tau=4, delta=0.3)
        solo = run(cfg1)[0]
        trio = run(cfg3)[0]
        for ta, tb in zip(solo, trio):
            assert np.array_equal(ta.expected_payments, tb.expected_payments)
            assert np.array_equal(ta.clicks.clicked, tb.clicks.clicked)

    def test_horizon_below_tau_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig(env=self.ENV, model=POSDEP, mechanism="avcg1",
                      horizon=3, seed=1, tau=5, delta=0.5)

    def test_stream_purposes_are_independent(self):
        a = stream_rng(1, 0, 5, "clicks").random(4)
        b = stream_rng(1, 0, 5, "csrp").random(4)
        assert not np.array_equal(a, b)
        assert np.array_equal(a, stream_rng(1, 0, 5, "clicks").random(4))


class TestExplorationCoverage:
    def test_displayed_sample_counts_within_unit_band(self):
        env = make_env([0.5] * 10, [1.0] * 10, 3)
        model = CascadeModel.position_dependent([0.9, 0.8])
        for tau in (4, 10, 17, 30):
            cfg = RunConfig(env=env, model=model, mechanism="avcg1",
                            horizon=tau, seed=2, tau=tau, delta=0.5)
            (rep,) = run(cfg)
            counts = np.zeros(10, dtype=int)
            for tr in rep:
                for ad in tr.allocation.displayed(3):
                    counts[ad] += 1
            assert counts.min() >= (3 * tau) // 10
            assert counts.max() <= -((-3 * tau) // 10)

    def test_top_slot_counts_within_unit_band(self):
        env = make_env([0.5] * 7, [1.0] * 7, 2)
        model = CascadeModel.position_dependent([0.9])
        for tau in (7, 11, 21):
            cfg = RunConfig(env=env, model=model, mechanism="avcg3",
                            horizon=tau, seed=2, tau=tau, delta=0.5, mu=0.5)
            (rep,) = run(cfg)
            top = np.zeros(7, dtype=int)
            for tr in rep:
                top[int(tr.allocation.ad_at[0])] += 1
            assert top.min() >= tau // 7
            assert top.max() <= -((-tau) // 7)


class TestEstimatorUnbiasedness:
    def test_mechanism_estimate_equals_manual_recomputation(self):
        # one replication, exact pipeline equality against a by-hand tally
        env = make_env([0.31, 0.62, 0.18, 0.47], [1.0] * 4, 2)
        model = CascadeModel.position_dependent([0.7])
        cfg = RunConfig(env=env, model=model, mechanism="avcg1",
                        horizon=50, seed=31, tau=50, delta=0.5)
        (rep,) = run(cfg)
        lam = model.cumulative_lambda()
        wsum = np.zeros(4)
        count = np.zeros(4)
        for tr in rep:
            for m in range(2):
                ad = int(tr.allocation.ad_at[m])
                wsum[ad] += tr.clicks.clicked[m] / lam[m]
                count[ad] += 1
        mech = AVCG1(env, model, tau=50, delta=0.5)
        for tr in rep:
            mech.step(env.true_values)
            mech.record_clicks(tr.clicks)
        assert np.allclose(mech.estimate.q_hat, wsum / count, atol=1e-12)

    def test_mean_estimate_within_three_standard_errors(self, rng):
        # distributional replica of a 200-round exploration, 10^4 replications:
        # ad i occupies slot s a fixed number of times; the weighted click
        # average is a scaled binomial mixture
        env = make_env([0.31, 0.62, 0.18, 0.47], [1.0] * 4, 2)
        model = CascadeModel.position_dependent([0.7])
        tau, reps = 200, 10_000
        lam = model.cumulative_lambda()
        n_slots_per_ad = np.zeros((4, 2), dtype=int)
        cfg = RunConfig(env=env, model=model, mechanism="avcg1",
                        horizon=tau, seed=1, tau=tau, delta=0.5)
        (rep,) = run(cfg)
        for tr in rep:
            for m in range(2):
                n_slots_per_ad[int(tr.allocation.ad_at[m]), m] += 1
        for i in range(4):
            total = n_slots_per_ad[i].sum()
            draws = np.zeros(reps)
            for m in range(2):
                n = n_slots_per_ad[i, m]
                if n:
                    p = lam[m] * env.qualities[i]
                    draws += rng.binomial(n, p, size=reps) / lam[m]
            q_hat = draws / total
            se = q_hat.std(ddof=1) / np.sqrt(reps)
            assert abs(q_hat.mean() - env.qualities[i]) <= 3 * se + 1e-12


class TestMetricsEquivalence:
    ENV = make_env([0.3, 0.2, 0.5, 0.1, 0.4], [0.8, 0.9, 0.4, 0.7, 0.5], 2)

    @pytest.mark.parametrize("kind,kw", [
        ("oracle-vcg", {}),
        ("avcg2", {}),
        ("avcg1", dict(tau=8, delta=0.2)),
        ("avcg2prime", dict(mu=0.25)),
        ("avcg3", dict(tau=8, delta=0.2, mu=0.25)),
    ])
    def test_streaming_matches_trace_metrics(self, kind, kw):
        cfg = RunConfig(env=self.ENV, model=POSDEP, mechanism=kind,
                        horizon=20, seed=13, replications=2, **kw)
        for r in range(2):
            rep = [replication_trace(cfg, r)]
            m = replication_metrics(cfg, r)
            assert revenue_regret(rep, self.ENV, self.ENV.true_values, POSDEP).sum() \
                == pytest.approx(m.revenue_regret, abs=1e-12)
            assert sw_regret(rep, self.ENV, self.ENV.true_values, POSDEP) \
                == pytest.approx(m.sw_regret, abs=1e-12)
            assert deviation_regret(rep, self.ENV, self.ENV.true_values, POSDEP) \
                == pytest.approx(m.deviation_regret, abs=1e-12)

    def test_pad_streaming_matches_trace(self, rng):
        env = make_env([0.4, 0.3, 0.5, 0.2], [0.9, 0.8, 0.5, 0.6], 2)
        model = CascadeModel.general(rng.uniform(0.4, 0.95, (2, 4)))
        cfg = RunConfig(env=env, model=model, mechanism="pad-avcg",
                        horizon=15, seed=21, tau=6, delta=0.3)
        rep = [replication_trace(cfg, 0)]
        m = replication_metrics(cfg, 0)
        assert revenue_regret(rep, env, env.true_values, model).sum() \
            == pytest.approx(m.revenue_regret, abs=1e-12)
        assert run_metrics(cfg)[0].revenue_regret == pytest.approx(m.revenue_regret)
