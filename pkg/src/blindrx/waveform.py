"""Transmit-side signal generation and the flat-fading channel.

Digital classes are pulse shaped with a root-raised-cosine filter; AM is a
real envelope ``1 + Ka * m(n)`` built from a small multitone message.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_SPS = 8
DEFAULT_ROLLOFF = 0.5
TX_SPAN = 8
RX_SPAN = 4


class ModClass(enum.Enum):
    AM = "AM"
    PSK2 = "PSK2"
    PSK4 = "PSK4"
    PSK8 = "PSK8"
    QAM16 = "QAM16"

    @property
    def is_digital(self) -> bool:
        return self is not ModClass.AM

    @classmethod
    def parse(cls, name: str) -> "ModClass":
        key = name.strip().upper().replace("-", "").replace("_", "")
        aliases = {"BPSK": "PSK2", "QPSK": "PSK4", "2PSK": "PSK2", "4PSK": "PSK4",
                   "8PSK": "PSK8", "16QAM": "QAM16"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown modulation class {name!r}") from None


# Row/column order of the confusion tables (C1..C5).
TABLE_ORDER = (ModClass.PSK2, ModClass.PSK4, ModClass.PSK8, ModClass.QAM16, ModClass.AM)


@dataclass(frozen=True)
class Constellation:
    points: np.ndarray
    mod_class: ModClass

    def __len__(self) -> int:
        return len(self.points)


def make_constellation(mod_class: ModClass) -> Constellation:
    """Unit-power, zero-mean alphabet for a digital class."""
    if mod_class is ModClass.AM:
        raise ValueError("analog class has no constellation")
    if mod_class is ModClass.QAM16:
        levels = np.array([-3.0, -1.0, 1.0, 3.0])
        pts = (levels[:, None] + 1j * levels[None, :]).ravel() / math.sqrt(10.0)
    else:
        m = {ModClass.PSK2: 2, ModClass.PSK4: 4, ModClass.PSK8: 8}[mod_class]
        pts = np.exp(2j * np.pi * np.arange(m) / m)
        # exact values on the axes keep PSK2 real
        pts = np.where(np.abs(pts.imag) < 1e-15, pts.real + 0j, pts)
    return Constellation(points=pts.astype(np.complex128), mod_class=mod_class)


def rrc_taps(rolloff: float, span: int, sps: int) -> np.ndarray:
    """Sampled root-raised-cosine impulse response.

    Normalized so that the continuous pulse has unit energy per symbol
    period; the sampled taps therefore satisfy ``sum(taps**2) ~= sps``.
    """
    if not 0.0 < rolloff <= 1.0:
        raise ValueError("rolloff must lie in (0, 1]")
    n_taps = span * sps + 1
    t = (np.arange(n_taps) - (n_taps - 1) / 2) / sps
    taps = np.empty(n_taps)
    r = rolloff
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 - r + 4.0 * r / np.pi
        elif abs(abs(ti) - 1.0 / (4.0 * r)) < 1e-9:
            taps[i] = (r / math.sqrt(2.0)) * (
                (1.0 + 2.0 / np.pi) * math.sin(np.pi / (4.0 * r))
                + (1.0 - 2.0 / np.pi) * math.cos(np.pi / (4.0 * r))
            )
        else:
            num = math.sin(np.pi * ti * (1.0 - r)) + 4.0 * r * ti * math.cos(np.pi * ti * (1.0 + r))
            den = np.pi * ti * (1.0 - (4.0 * r * ti) ** 2)
            taps[i] = num / den
    return taps


@dataclass(frozen=True)
class PulseShape:
    rolloff: float = DEFAULT_ROLLOFF
    span: int = TX_SPAN
    sps: int = DEFAULT_SPS
    taps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.span < 1 or self.sps < 1:
            raise ValueError("span and sps must be positive")
        object.__setattr__(self, "taps", rrc_taps(self.rolloff, self.span, self.sps))

    @property
    def matched_taps(self) -> np.ndarray:
        """Receive taps scaled so a matched symbol comes out with unit amplitude."""
        return self.taps / np.sum(self.taps**2)

    @classmethod
    def receive(cls, rolloff: float = DEFAULT_ROLLOFF, sps: int = DEFAULT_SPS) -> "PulseShape":
        return cls(rolloff=rolloff, span=RX_SPAN, sps=sps)


@dataclass
class IqStream:
    """Complex baseband samples plus the metadata the receiver needs.

    ``sps`` is None for AM streams. ``noise_var`` tracks the per-sample
    noise variance through scaling and filtering.
    """

    samples: np.ndarray
    sample_period: float = 1.0
    sps: int | None = None
    normalized: bool = False
    noise_var: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)

    def __len__(self) -> int:
        return len(self.samples)

    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    def with_samples(self, samples: np.ndarray, **changes) -> "IqStream":
        return replace(self, samples=samples, **changes)


@dataclass
class ChannelParams:
    c0: complex = 1.0 + 0.0j
    fo_T: float = 0.0
    theta: float = 0.0
    epsilon: float = 0.0
    snr_db: float = math.inf
    noise_var: float | None = None

    def to_dict(self) -> dict:
        return {
            "c0": [float(np.real(self.c0)), float(np.imag(self.c0))],
            "fo_T": float(self.fo_T),
            "theta": float(self.theta),
            "epsilon": float(self.epsilon),
            "snr_db": None if math.isinf(self.snr_db) else float(self.snr_db),
            "noise_var": None if self.noise_var is None else float(self.noise_var),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelParams":
        c0 = d.get("c0", [1.0, 0.0])
        if isinstance(c0, (list, tuple)):
            c0 = complex(c0[0], c0[1])
        snr = d.get("snr_db")
        return cls(
            c0=complex(c0),
            fo_T=float(d.get("fo_T", 0.0)),
            theta=float(d.get("theta", 0.0)),
            epsilon=float(d.get("epsilon", 0.0)),
            snr_db=math.inf if snr is None else float(snr),
            noise_var=d.get("noise_var"),
        )


@dataclass(frozen=True)
class AmMessage:
    """Multitone message ``m(n) = sum a_i cos(2 pi f_i n + phi_i)``.

    Frequencies are in cycles/sample. The default tones are harmonics of the
    lowest one so a one-period moving average removes all of them.
    """

    Ka: float = 0.5
    tones: tuple = ((0.004, 0.5, 0.0), (0.012, 0.3, 0.7), (0.020, 0.2, 1.9))

    def __post_init__(self):
        if not 0.0 <= self.Ka <= 1.0:
            raise ValueError(f"overmodulation: Ka={self.Ka} must lie in [0, 1]")
        if sum(abs(a) for _, a, _ in self.tones) > 1.0 + 1e-12:
            raise ValueError("overmodulation: tone amplitudes must sum to at most 1")

    @property
    def lowest_frequency(self) -> float:
        return min(f for f, _, _ in self.tones) if self.tones else 0.0

    def samples(self, n_samples: int) -> np.ndarray:
        n = np.arange(n_samples)
        m = np.zeros(n_samples)
        for f, a, phi in self.tones:
            m += a * np.cos(2 * np.pi * f * n + phi)
        return m


def random_symbols(mod_class: ModClass, n_symbols: int, rng: np.random.Generator) -> np.ndarray:
    pts = make_constellation(mod_class).points
    return pts[rng.integers(0, len(pts), n_symbols)]


def shape_symbols(symbols: np.ndarray, pulse: PulseShape) -> np.ndarray:
    """Impulse train through the transmit filter, first ``len*sps`` samples.

    The leading ``span/2`` symbol periods are the filter ramp-up.
    """
    n = len(symbols)
    up = np.zeros(n * pulse.sps, dtype=np.complex128)
    up[:: pulse.sps] = symbols
    return np.convolve(up, pulse.taps)[: n * pulse.sps]


def synth_linear(mod_class: ModClass, n_symbols: int, pulse: PulseShape | None = None,
                 seed=None, return_symbols: bool = False):
    """Oversampled, pulse-shaped waveform with i.i.d. uniform symbols."""
    pulse = pulse or PulseShape()
    if not mod_class.is_digital:
        raise ValueError("synth_linear needs a digital class")
    if n_symbols < pulse.span:
        raise ValueError("n_symbols must be at least the pulse span")
    rng = np.random.default_rng(seed)
    symbols = random_symbols(mod_class, n_symbols, rng)
    stream = IqStream(shape_symbols(symbols, pulse), sps=pulse.sps)
    return (stream, symbols) if return_symbols else stream


def synth_am(msg: AmMessage, n_samples: int) -> IqStream:
    envelope = 1.0 + msg.Ka * msg.samples(n_samples)
    if n_samples and envelope.min() <= 0.0:
        raise ValueError("overmodulation: envelope crosses zero")
    return IqStream(envelope.astype(np.complex128), sps=None)


def fractional_delay(x: np.ndarray, delay: float, half_width: int = 8) -> np.ndarray:
    """Delay by ``delay`` samples with a Hann-windowed sinc (2*half_width taps).

    Length is preserved; vacated samples are zero.
    """
    n0 = math.floor(delay)
    mu = delay - n0
    y = np.asarray(x, dtype=np.complex128)
    if mu > 1e-12:
        k = np.arange(-half_width + 1, half_width + 1)
        t = k - mu
        taps = np.sinc(t) * 0.5 * (1.0 + np.cos(np.pi * t / half_width))
        taps /= taps.sum()
        # y[n] = sum_k taps[k] x[n - k], k from -half_width+1
        y = np.convolve(y, taps)[half_width - 1: half_width - 1 + len(y)]
    if n0 > 0:
        y = np.concatenate([np.zeros(min(n0, len(y)), np.complex128), y[: max(len(y) - n0, 0)]])
    elif n0 < 0:
        y = np.concatenate([y[-n0:], np.zeros(min(-n0, len(y)), np.complex128)])
    return y


def apply_channel(x: IqStream, params: ChannelParams, seed=None) -> IqStream:
    """Fractional delay, complex gain, CFO, phase, then AWGN at ``params.snr_db``.

    The noise is scaled to the exact target variance so the realized SNR
    equals the requested one. The variance is written to both
    ``params.noise_var`` and the returned stream.
    """
    if abs(params.epsilon) > 0.5:
        raise ValueError("epsilon must lie in [-0.5, 0.5]")
    sps = x.sps or DEFAULT_SPS
    s = fractional_delay(x.samples, params.epsilon * sps)
    n = np.arange(len(s))
    s = params.c0 * s * np.exp(1j * (2 * np.pi * (params.fo_T / sps) * n + params.theta))

    if math.isinf(params.snr_db) and params.snr_db > 0:
        noise_var = 0.0
        y = s
    else:
        noise_var = float(np.var(s)) / 10.0 ** (params.snr_db / 10.0)
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(len(s)) + 1j * rng.standard_normal(len(s))
        noise *= math.sqrt(noise_var / np.var(noise))
        y = s + noise
    params.noise_var = noise_var
    return x.with_samples(y, normalized=False, noise_var=noise_var)


def normalize(y: IqStream) -> tuple[IqStream, float]:
    """Scale to unit mean power. Returns the stream and the applied gain."""
    if len(y) == 0:
        raise ValueError("cannot normalize an empty stream")
    p = y.power()
    if p == 0.0:
        raise ValueError("cannot normalize an all-zero stream")
    scale = 1.0 / math.sqrt(p)
    out = y.with_samples(y.samples * scale, normalized=True, noise_var=y.noise_var * scale**2)
    return out, scale
