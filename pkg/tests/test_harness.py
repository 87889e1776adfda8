import math

import numpy as np
import numpy.testing as npt
import pytest

from blindrx.harness import (ConfusionMatrix, TrialConfig, confusion, draw_channel,
                             make_trial_stream, run_trial, sweep, trial_rng)
from blindrx.waveform import TABLE_ORDER, ModClass


class TestTrials:
    def test_deterministic(self):
        cfg = TrialConfig(snr_db=7.0)
        a = run_trial(ModClass.QAM16, cfg, 11)
        b = run_trial(ModClass.QAM16, cfg, 11)
        assert a.label is b.label and a.features == b.features

    def test_seed_depends_on_all_keys(self):
        draws = {float(trial_rng(m, c, i).random()) for m in (0, 1) for c in TABLE_ORDER
                 for i in (0, 1)}
        assert len(draws) == 20

    def test_channel_ranges(self):
        rng = np.random.default_rng(0)
        ps = [draw_channel(rng, 10.0) for _ in range(4000)]
        fo = np.array([p.fo_T for p in ps])
        eps = np.array([p.epsilon for p in ps])
        th = np.array([p.theta for p in ps])
        c0 = np.array([p.c0 for p in ps])
        assert fo.min() >= -0.2 and fo.max() <= 0.2
        assert eps.min() >= -0.5 and eps.max() <= 0.5
        assert th.min() >= -math.pi and th.max() <= math.pi
        assert np.mean(np.abs(c0) ** 2) == pytest.approx(1.0, abs=0.06)
        assert abs(np.mean(c0)) < 0.05

    def test_common_random_numbers(self):
        cfg = TrialConfig()
        _, p5 = make_trial_stream(ModClass.PSK8, cfg, 4, 5.0)
        _, p10 = make_trial_stream(ModClass.PSK8, cfg, 4, 10.0)
        assert (p5.c0, p5.fo_T, p5.theta, p5.epsilon) == (p10.c0, p10.fo_T, p10.theta, p10.epsilon)

    def test_normalized_stream(self):
        y, p = make_trial_stream(ModClass.AM, TrialConfig(snr_db=10.0), 0)
        assert y.normalized and y.power() == pytest.approx(1.0)
        assert y.sps is None and len(y) == 8000

    def test_psk8_10db(self):
        cfg = TrialConfig(snr_db=10.0)
        assert all(run_trial(ModClass.PSK8, cfg, i).label is ModClass.PSK8 for i in range(20))


class TestConfusion:
    def test_one_trial_per_row(self):
        m = confusion(TrialConfig(n_trials=1))
        npt.assert_array_equal(m.counts.sum(axis=1) + m.no_decision, np.ones(5))

    def test_rows_sum_to_100(self):
        m = confusion(TrialConfig(n_trials=20, snr_db=3.0))
        for row, n in zip(m.rates, m.counts.sum(axis=1)):
            if n:
                assert row.sum() == pytest.approx(100.0, abs=0.01)

    def test_noiseless_diagonal(self):
        m = confusion(TrialConfig(n_trials=200, snr_db=math.inf),
                      classes=TABLE_ORDER[:4])
        for c in TABLE_ORDER[:4]:
            assert m.rate(c, c) == 100.0

    def test_worker_independence(self):
        cfg = TrialConfig(n_trials=150, snr_db=4.0, seed=9)
        a = sweep(cfg, [4.0, 8.0], workers=1)
        b = sweep(cfg, [4.0, 8.0], workers=3)
        for (sa, ma), (sb, mb) in zip(a, b):
            assert sa == sb and ma.to_csv() == mb.to_csv()
            assert ma.to_dict() == mb.to_dict()

    def test_single_point_sweep_is_confusion(self):
        cfg = TrialConfig(n_trials=30, snr_db=6.0)
        assert sweep(cfg, [6.0])[0][1].to_csv() == confusion(cfg).to_csv()

    def test_empty_sweep(self):
        with pytest.raises(ValueError):
            sweep(TrialConfig(n_trials=1), [])

    def test_csv_layout(self):
        m = ConfusionMatrix()
        m.counts[0, 0] = 3
        m.counts[0, 4] = 1
        lines = m.to_csv().splitlines()
        assert lines[0] == "true,PSK2,PSK4,PSK8,QAM16,AM,n,no_decision"
        assert lines[1] == "PSK2,75.00,0.00,0.00,0.00,25.00,4,0"

    def test_config_roundtrip(self):
        cfg = TrialConfig(n_symbols=500, snr_db=math.inf, n_trials=3, seed=4)
        assert TrialConfig.from_dict(cfg.to_dict()) == cfg

    def test_bad_trials(self):
        with pytest.raises(ValueError):
            TrialConfig(n_trials=0)


class TestTrends:
    """16-QAM accuracy should grow with SNR and record length (full-scale Monte Carlo)."""

    def test_qam16_improves_with_snr(self, table_sweep):
        q = ModClass.QAM16
        assert table_sweep[10.0].rate(q, q) > table_sweep[5.0].rate(q, q)

    @pytest.mark.slow
    def test_qam16_improves_with_more_symbols(self, table_sweep):
        q = ModClass.QAM16
        long = confusion(TrialConfig(n_symbols=4000, n_trials=2000, snr_db=5.0, seed=2024),
                         workers=None, classes=(q,))
        assert long.rate(q, q) >= table_sweep[5.0].rate(q, q) + 10.0
