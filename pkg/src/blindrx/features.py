"""Differential processing and noise-compensated moment features.

With ``d_i = A s_i + n_i`` and known noise variance ``sigma2`` the
compensated features recover the symbol moments::

    m42  = (M42,d - 4 (M21,d - s2) s2 - 2 s2^2) / (M21,d - s2)^2
    m20dp = |M20,d_dp| / (M21,d - s2)^2
    m40dp = |M40,d_dp| / (M21,d - s2)^4
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .waveform import Constellation, ModClass

MIN_SYMBOLS = 100
DENOMINATOR_FLOOR = 0.05

# (M42, |M20 dp|, |M40 dp|) for unit-power alphabets
ALPHABET_MOMENTS = {
    ModClass.PSK2: (1.0, 1.0, 1.0),
    ModClass.PSK4: (1.0, 0.0, 1.0),
    ModClass.PSK8: (1.0, 0.0, 0.0),
    ModClass.QAM16: (1.32, 0.0, 0.4624),
}


class CompensationError(ValueError):
    pass


def _as_array(d) -> np.ndarray:
    return np.asarray(getattr(d, "symbols", d), dtype=np.complex128)


def differential(d) -> np.ndarray:
    """Lag-one conjugate product ``d[i] * conj(d[i-1])``."""
    x = _as_array(d)
    if len(x) < 2:
        raise ValueError("differential needs at least two symbols")
    return x[1:] * np.conj(x[:-1])


@dataclass(frozen=True)
class RawMoments:
    m21: float
    m42: float
    m20dp: complex
    m40dp: complex
    n: int


def raw_moments(d) -> RawMoments:
    x = _as_array(d)
    if len(x) < MIN_SYMBOLS:
        raise ValueError(f"need at least {MIN_SYMBOLS} symbols, got {len(x)}")
    p = np.abs(x) ** 2
    dp = differential(x)
    dp2 = dp * dp
    return RawMoments(
        m21=float(np.mean(p)),
        m42=float(np.mean(p * p)),
        m20dp=complex(np.mean(dp2)),
        m40dp=complex(np.mean(dp2 * dp2)),
        n=len(x),
    )


@dataclass(frozen=True)
class FeatureVector:
    m42: float
    m20dp: float
    m40dp: float
    m21d: float
    n_symbols: int
    noise_var: float

    def to_dict(self) -> dict:
        return asdict(self)


def compensate(raw: RawMoments, sigma2: float) -> FeatureVector:
    """Remove the noise contribution from the raw moments.

    Raises CompensationError when ``M21,d - sigma2 <= 5% of M21,d``.
    """
    signal_power = raw.m21 - sigma2
    if not signal_power > DENOMINATOR_FLOOR * raw.m21:
        raise CompensationError("SNR too low for compensation")
    m42 = (raw.m42 - 4.0 * signal_power * sigma2 - 2.0 * sigma2**2) / signal_power**2
    return FeatureVector(
        m42=float(m42),
        m20dp=float(abs(raw.m20dp) / signal_power**2),
        m40dp=float(abs(raw.m40dp) / signal_power**4),
        m21d=raw.m21,
        n_symbols=raw.n,
        noise_var=float(sigma2),
    )


def extract_features(d, sigma2: float | None = None) -> FeatureVector:
    if sigma2 is None:
        sigma2 = getattr(d, "noise_var", 0.0)
    return compensate(raw_moments(d), sigma2)


def alphabet_features(constellation: Constellation) -> tuple[float, float, float]:
    """Exact (M42, |M20 dp|, |M40 dp|) by enumerating all ordered symbol pairs."""
    p = constellation.points
    m42 = float(np.mean(np.abs(p) ** 4))
    dp = (p[:, None] * np.conj(p[None, :])).ravel()
    return m42, float(abs(np.mean(dp**2))), float(abs(np.mean(dp**4)))
