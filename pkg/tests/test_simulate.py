"""Monte Carlo oracle: determinism, unbiasedness, coupling, time accounting."""

import dataclasses

import numpy as np
import pytest

from pipegate.metrics import MetricsError, RateTriple, precision_at_prevalence
from pipegate.simulate import (
    VERDICT_INCONCLUSIVE,
    SimConfig,
    compare,
    run_augmented,
    run_baseline,
    survivor_precision_probe,
)

VDP_RATES = RateTriple(tpr=0.95, fpr=0.16)


def make_config(**overrides):
    base = dict(
        pi=0.38,
        n=20_000,
        delta_n=1200,
        screener=VDP_RATES,
        tau_m=156.0,
        tau_v=600.0,
        trials=50,
        seed=42,
    )
    base.update(overrides)
    return SimConfig(**base)


class TestDeterminism:
    def test_identical_seed_identical_outcome(self):
        cfg = make_config()
        assert compare(cfg) == compare(cfg)

    def test_worker_count_does_not_change_results(self):
        cfg = make_config()
        assert compare(cfg, workers=1) == compare(cfg, workers=4)
        probe1 = survivor_precision_probe(cfg, workers=1)
        probe8 = survivor_precision_probe(cfg, workers=8)
        assert probe1 == probe8

    def test_different_seeds_differ(self):
        a = compare(make_config(seed=1))
        b = compare(make_config(seed=2))
        assert a.baseline_tp.mean != b.baseline_tp.mean

    def test_baseline_and_augmented_streams_independent(self):
        cfg = make_config(delta_n=0, tau_m=0.0, screener=RateTriple(tpr=1.0, fpr=1.0))
        base = run_baseline(cfg)
        aug = run_augmented(cfg)
        # pass-through screener over the same n: per-trial TPs come from
        # different streams, so they should not be identical trial by trial
        assert not np.array_equal(base.tp, aug.tp)


class TestBaseline:
    def test_tp_mean_matches_binomial_expectation(self):
        cfg = make_config(n=100_000, trials=100, validator=RateTriple(tpr=1.0, fpr=0.0))
        base = run_baseline(cfg)
        stat = base.tp_stat()
        assert abs(stat.mean - 38_000) <= 3 * stat.se

    def test_zero_recall_validator(self):
        cfg = make_config(validator=RateTriple(tpr=0.0, fpr=0.0))
        base = run_baseline(cfg)
        assert np.all(base.tp == 0)

    def test_time_is_deterministic(self):
        cfg = make_config(n=100_000, tau_v=9.17)
        base = run_baseline(cfg)
        assert np.all(base.time == 100_000 * 9.17)
        assert base.time_stat().se == 0.0


class TestAugmented:
    def test_means_match_expectations(self):
        cfg = make_config(n=100_000, delta_n=0, trials=100)
        aug = run_augmented(cfg)
        tp_stat, surv_stat = aug.tp_stat(), aug.survivors_stat()
        assert abs(tp_stat.mean - 36_100) <= 3 * tp_stat.se
        assert abs(surv_stat.mean - 46_020) <= 3 * surv_stat.se

    def test_free_perfect_screener_beats_baseline(self):
        cfg = make_config(delta_n=0, tau_m=0.0, screener=RateTriple(tpr=1.0, fpr=0.0))
        base = run_baseline(cfg)
        aug = run_augmented(cfg)
        assert abs(aug.tp_stat().mean - base.tp_stat().mean) <= 3 * np.hypot(
            aug.tp_stat().se, base.tp_stat().se
        )
        assert np.all(aug.time <= base.time)

    def test_pass_through_screener(self):
        cfg = make_config(screener=RateTriple(tpr=1.0, fpr=1.0))
        aug = run_augmented(cfg)
        m = cfg.n_total
        assert np.all(aug.survivors == m)
        assert np.all(aug.time == (cfg.tau_m + cfg.tau_v) * m)

    def test_time_accounting_identity(self):
        cfg = make_config()
        aug = run_augmented(cfg)
        expected = cfg.tau_m * cfg.n_total + cfg.tau_v * aug.survivors
        np.testing.assert_array_equal(aug.time, expected)

    def test_monotone_coupling_in_screener_tpr(self):
        # common random numbers: a better screener never loses a TP
        lo = run_augmented(make_config(screener=RateTriple(tpr=0.6, fpr=0.16)))
        hi = run_augmented(make_config(screener=RateTriple(tpr=0.9, fpr=0.16)))
        assert np.all(hi.tp >= lo.tp)
        assert np.all(hi.good_survivors >= lo.good_survivors)


class TestCompare:
    def test_convenient_scenario(self):
        # analytic margins are wide: tau_v=600 far above the 4.6 min floor
        cfg = make_config(n=100_000, delta_n=6000, trials=100, tau_v=600.0)
        outcome = compare(cfg)
        assert outcome.verdict == "convenient"

    def test_fast_validator_not_convenient(self):
        cfg = make_config(tau_v=27.04)
        outcome = compare(cfg)
        assert outcome.verdict == "not-convenient"

    def test_boundary_config_inconclusive(self):
        # dn at the exact throughput boundary and tau_m at the tight time
        # budget: both margins are zero by construction
        r_m = VDP_RATES.tpr
        dn_ratio = 1 / r_m - 1
        n = 50_000
        p_cons = precision_at_prevalence(VDP_RATES.tpr, VDP_RATES.fpr, 0.38)
        tau_v = 600.0
        tau_m = tau_v * (1 / (1 + dn_ratio) - (r_m / p_cons) * 0.38)
        cfg = make_config(n=n, delta_n=int(round(n * dn_ratio)), tau_m=tau_m, tau_v=tau_v)
        outcome = compare(cfg)
        assert outcome.verdict == VERDICT_INCONCLUSIVE

    def test_trials_recorded(self):
        outcome = compare(make_config(trials=13))
        assert outcome.trials == 13


class TestSurvivorPrecisionProbe:
    def test_matches_prevalence_consistent_precision(self):
        cfg = make_config(n=100_000, trials=100)
        stat = survivor_precision_probe(cfg)
        expected = precision_at_prevalence(0.95, 0.16, 0.38)
        assert expected == pytest.approx(0.784, abs=5e-4)
        assert abs(stat.mean - expected) <= 3 * stat.se

    def test_zero_fpr_gives_perfect_precision(self):
        cfg = make_config(screener=RateTriple(tpr=0.9, fpr=0.0))
        stat = survivor_precision_probe(cfg)
        assert stat.mean == 1.0
        assert stat.se == 0.0

    def test_uninformative_screener_precision_equals_prevalence(self):
        cfg = make_config(n=100_000, screener=RateTriple(tpr=0.5, fpr=0.5), trials=100)
        stat = survivor_precision_probe(cfg)
        assert abs(stat.mean - 0.38) <= 3 * stat.se


class TestConfigValidation:
    def test_bad_values_rejected(self):
        with pytest.raises(MetricsError):
            make_config(pi=0.0)
        with pytest.raises(MetricsError):
            make_config(n=0)
        with pytest.raises(MetricsError):
            make_config(delta_n=-1)
        with pytest.raises(MetricsError):
            make_config(trials=0)
        with pytest.raises(MetricsError):
            make_config(seed=-1)
        with pytest.raises(MetricsError):
            make_config(precision_mode="whatever")

    def test_config_is_frozen(self):
        cfg = make_config()
        with pytest.raises(dataclasses.FrozenInstanceError):
            cfg.pi = 0.5
