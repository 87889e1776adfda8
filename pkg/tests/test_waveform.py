import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from blindrx.waveform import (AmMessage, ChannelParams, IqStream, ModClass, PulseShape,
                              apply_channel, fractional_delay, make_constellation, normalize,
                              rrc_taps, shape_symbols, synth_am, synth_linear)

from conftest import DIGITAL


def rrc_by_integration(t, rolloff):
    """Inverse Fourier transform of sqrt(raised-cosine spectrum), T = 1."""
    f1, f2 = (1 - rolloff) / 2, (1 + rolloff) / 2

    def amp(f):
        if f <= f1:
            return 1.0
        return math.sqrt(0.5 * (1 + math.cos(math.pi / rolloff * (f - f1))))

    flat = integrate.quad(lambda f: math.cos(2 * math.pi * f * t), 0, f1)[0]
    roll = integrate.quad(lambda f: amp(f) * math.cos(2 * math.pi * f * t), f1, f2, limit=200)[0]
    return 2 * (flat + roll)


class TestConstellation:
    def test_psk2(self):
        npt.assert_array_equal(np.sort(make_constellation(ModClass.PSK2).points.real), [-1, 1])
        assert np.all(make_constellation(ModClass.PSK2).points.imag == 0)

    def test_qam16_moments(self):
        grid = np.array([complex(a, b) for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)])
        grid /= math.sqrt(10)
        pts = make_constellation(ModClass.QAM16).points
        npt.assert_allclose(np.sort_complex(pts), np.sort_complex(grid), atol=1e-15)
        assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-12)
        assert np.mean(pts ** 4).real == pytest.approx(-0.68, abs=1e-12)

    def test_psk8_moments(self):
        pts = make_constellation(ModClass.PSK8).points
        assert len(pts) == 8
        assert abs(np.mean(pts ** 2)) < 1e-12
        assert abs(np.mean(pts ** 4)) < 1e-12

    @pytest.mark.parametrize("cls", DIGITAL)
    def test_unit_power_zero_mean(self, cls):
        pts = make_constellation(cls).points
        assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0)
        assert abs(np.mean(pts)) < 1e-12

    def test_am_rejected(self):
        with pytest.raises(ValueError, match="analog class has no constellation"):
            make_constellation(ModClass.AM)

    @pytest.mark.parametrize("name,cls", [("bpsk", ModClass.PSK2), ("16-QAM", ModClass.QAM16),
                                          ("psk8", ModClass.PSK8), ("am", ModClass.AM)])
    def test_parse(self, name, cls):
        assert ModClass.parse(name) is cls


class TestPulse:
    @pytest.mark.parametrize("rolloff", [0.25, 0.5, 1.0])
    def test_matches_spectral_integral(self, rolloff):
        taps = rrc_taps(rolloff, 4, 8)
        t = (np.arange(len(taps)) - (len(taps) - 1) / 2) / 8
        ref = np.array([rrc_by_integration(ti, rolloff) for ti in t])
        npt.assert_allclose(taps, ref, atol=1e-6)

    def test_energy(self, tx_pulse):
        assert np.sum(tx_pulse.taps ** 2) == pytest.approx(8.0, rel=0.01)

    def test_nyquist_after_matched_filter(self, tx_pulse):
        rc = np.convolve(tx_pulse.taps, tx_pulse.matched_taps)
        c = len(rc) // 2
        assert rc[c] == pytest.approx(1.0, abs=1e-9)
        others = rc[c % 8::8]
        others = np.delete(others, c // 8)
        assert np.max(np.abs(others)) < 0.01

    def test_bad_rolloff(self):
        with pytest.raises(ValueError):
            rrc_taps(0.0, 4, 8)


class TestSynthesis:
    def test_length_and_power(self):
        x = synth_linear(ModClass.PSK2, 1000, PulseShape(), seed=1)
        assert len(x) == 8000
        assert x.power() == pytest.approx(1.0, rel=0.05)

    def test_ramp_up_matches_direct_convolution(self):
        pulse = PulseShape(0.5, 4, 8)
        x, syms = synth_linear(ModClass.PSK4, 4, pulse, seed=9, return_symbols=True)
        ref = np.zeros(32, dtype=complex)
        for n in range(32):
            for i, s in enumerate(syms):
                k = n - 8 * i
                if 0 <= k < len(pulse.taps):
                    ref[n] += s * pulse.taps[k]
        npt.assert_allclose(x.samples, ref, atol=1e-12)
        # first span/2 symbols are transient: the peak of symbol 0 is at sample 16
        assert np.abs(x.samples[0]) < 0.1 * np.abs(x.samples[16])

    def test_deterministic(self):
        a = synth_linear(ModClass.QAM16, 200, seed=5)
        b = synth_linear(ModClass.QAM16, 200, seed=5)
        assert a.samples.tobytes() == b.samples.tobytes()

    def test_am_constant(self):
        npt.assert_array_equal(synth_am(AmMessage(Ka=0.0), 50).samples, np.ones(50))

    def test_am_single_tone_extremes(self):
        x = synth_am(AmMessage(Ka=0.5, tones=((0.01, 1.0, 0.0),)), 1000).samples.real
        assert x.min() == pytest.approx(0.5, abs=1e-9)
        assert x.max() == pytest.approx(1.5, abs=1e-9)

    def test_am_multitone_oracle(self):
        msg = AmMessage()
        n = np.arange(4000)
        ref = 1 + 0.5 * sum(a * np.cos(2 * np.pi * f * n + p) for f, a, p in msg.tones)
        npt.assert_allclose(synth_am(msg, 4000).samples.real, ref, atol=1e-12)

    def test_overmodulation(self):
        with pytest.raises(ValueError, match="overmodulation"):
            AmMessage(Ka=1.2)


class TestChannel:
    def test_identity(self):
        x = synth_linear(ModClass.PSK4, 100, seed=1)
        y = apply_channel(x, ChannelParams())
        npt.assert_array_equal(y.samples, x.samples)

    def test_snr_calibration(self):
        x = IqStream(np.exp(2j * np.pi * 0.01 * np.arange(20000)), sps=8)
        p = ChannelParams(snr_db=5.0)
        y = apply_channel(x, p, seed=3)
        noise = y.samples - x.samples
        assert np.var(noise) == pytest.approx(10 ** -0.5, rel=0.01)
        assert p.noise_var == pytest.approx(y.noise_var)

    def test_unit_modulus_gain(self):
        x = synth_linear(ModClass.QAM16, 200, seed=2)
        y = apply_channel(x, ChannelParams(c0=np.exp(1j * np.pi / 3), fo_T=0.1, theta=0.3))
        npt.assert_allclose(np.abs(y.samples), np.abs(x.samples), atol=1e-12)

    def test_epsilon_range(self):
        with pytest.raises(ValueError):
            apply_channel(synth_linear(ModClass.PSK2, 50), ChannelParams(epsilon=0.6))

    def test_integer_delay_is_shift(self):
        x = np.arange(1, 21, dtype=complex)
        npt.assert_allclose(fractional_delay(x, 3.0), np.r_[0, 0, 0, x[:-3]])

    def test_fractional_delay_of_bandlimited_tone(self):
        n = np.arange(400)
        x = np.exp(2j * np.pi * 0.05 * n)
        y = fractional_delay(x, 2.4)
        ref = np.exp(2j * np.pi * 0.05 * (n - 2.4))
        npt.assert_allclose(y[20:-20], ref[20:-20], atol=2e-3)

    def test_shape_symbols_linear(self, tx_pulse):
        a = np.array([1, -1, 1j, 0.5], dtype=complex)
        b = np.array([0, 2, -1, 1j], dtype=complex)
        npt.assert_allclose(shape_symbols(a + b, tx_pulse),
                            shape_symbols(a, tx_pulse) + shape_symbols(b, tx_pulse), atol=1e-12)


class TestNormalize:
    def test_constant(self):
        y, scale = normalize(IqStream(np.full(10, 2.0 + 0j)))
        npt.assert_allclose(y.samples, 1.0)
        assert scale == pytest.approx(0.5)

    def test_idempotent(self):
        y, _ = normalize(synth_linear(ModClass.PSK8, 300, seed=4))
        z, _ = normalize(y)
        npt.assert_allclose(z.samples, y.samples, atol=1e-12)

    def test_noise_var_rescaled(self):
        x = synth_linear(ModClass.PSK2, 300, seed=4)
        y = apply_channel(x, ChannelParams(c0=3.0, snr_db=10.0), seed=1)
        z, scale = normalize(y)
        assert z.noise_var == pytest.approx(y.noise_var * scale ** 2)

    def test_errors(self):
        with pytest.raises(ValueError):
            normalize(IqStream(np.zeros(5)))
        with pytest.raises(ValueError):
            normalize(IqStream(np.zeros(0)))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
                    min_size=1, max_size=64).filter(lambda v: any(abs(z) > 1e-3 for z in v)))
    def test_unit_power(self, values):
        y, _ = normalize(IqStream(np.array(values)))
        assert y.power() == pytest.approx(1.0, abs=1e-9)
