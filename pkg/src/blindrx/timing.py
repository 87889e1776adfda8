"""Matched filtering and feedforward (square-law) symbol timing."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .waveform import DEFAULT_SPS, IqStream, PulseShape

MIN_SYMBOLS = 100


class InsufficientSymbols(ValueError):
    pass


@dataclass(frozen=True)
class TimingEstimate:
    epsilon_hat: float
    best_phase: int
    X_m: complex
    sps: int


@dataclass
class SymbolSequence:
    symbols: np.ndarray
    source_phase: int | None = None
    noise_var: float = 0.0

    def __len__(self) -> int:
        return len(self.symbols)


def matched_filter(y: IqStream, pulse: PulseShape | None = None) -> IqStream:
    """Convolve with the receive RRC, delay-compensated, same length as input.

    Taps are scaled for unit symbol amplitude, so the noise variance becomes
    ``noise_var * sum(taps**2)``.
    """
    if pulse is None:
        pulse = PulseShape.receive(sps=y.sps or DEFAULT_SPS)
    taps = pulse.matched_taps
    r = np.convolve(y.samples, taps, mode="same")
    return y.with_samples(r, sps=y.sps or pulse.sps, noise_var=y.noise_var * float(np.sum(taps**2)))


def _round_half_toward_zero(x: float) -> int:
    return int(math.copysign(math.ceil(abs(x) - 0.5), x))


def estimate_timing(r: IqStream, sps: int | None = None, n_symbols: int | None = None) -> TimingEstimate:
    """Timing offset from the symbol-rate line of ``|r|^2``.

    ``X_m = sum_{i<P N} |r_i|^2 exp(-j 2 pi i / P)`` and
    ``eps_hat = -arg(X_m) / (2 pi)`` in [-0.5, 0.5).
    """
    P = sps or r.sps or DEFAULT_SPS
    if P < 4:
        raise ValueError("timing estimation needs at least 4 samples per symbol")
    n_avail = len(r) // P
    N = n_avail if n_symbols is None else n_symbols
    if N < 1 or P * N > len(r):
        raise ValueError(f"need {P * N} samples, stream has {len(r)}")
    i = np.arange(P * N)
    X_m = complex(np.sum(np.abs(r.samples[: P * N]) ** 2 * np.exp(-2j * np.pi * i / P)))
    if abs(X_m) < 1e-12:
        raise ValueError("no timing tone")
    eps = -np.angle(X_m) / (2 * np.pi)
    eps = (eps + 0.5) % 1.0 - 0.5
    phase = _round_half_toward_zero(eps * P) % P
    return TimingEstimate(epsilon_hat=float(eps), best_phase=phase, X_m=X_m, sps=P)


def extract_symbols(r: IqStream, est: TimingEstimate, span: int = 4) -> SymbolSequence:
    """Every P-th sample from ``best_phase``, minus ``span/2`` symbols per edge."""
    d = r.samples[est.best_phase:: est.sps]
    trim = span // 2
    d = d[trim: len(d) - trim] if trim else d
    if len(d) < MIN_SYMBOLS:
        raise InsufficientSymbols(f"insufficient symbols ({len(d)} < {MIN_SYMBOLS})")
    return SymbolSequence(d.copy(), source_phase=est.best_phase, noise_var=r.noise_var)
