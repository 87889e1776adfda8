"""Blind AM / BPSK receiver.

Stage 1 reuses the cycle-frequency count to pick AM or BPSK. AM goes
through an envelope detector. BPSK goes matched filter -> Gardner timing
loop -> Costas loop -> SFD/header framing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import firwin

from . import loops
from .classifier import ClassifierThresholds
from .cyclo import CycleCount, count_cycle_frequencies
from .timing import SymbolSequence, matched_filter
from .waveform import (DEFAULT_ROLLOFF, DEFAULT_SPS, AmMessage, IqStream, PulseShape, normalize,
                       shape_symbols)

DEFAULT_DC_WINDOW = int(round(1.0 / AmMessage().lowest_frequency))


@dataclass(frozen=True)
class LoopConfig:
    gardner_bw: float = 0.01
    costas_bw: float = 0.1
    damping: float = 0.707
    rolloff: float = DEFAULT_ROLLOFF

    def __post_init__(self):
        for name in ("gardner_bw", "costas_bw"):
            bw = getattr(self, name)
            if not 0.0 < bw < 0.5:
                raise ValueError(f"{name} must lie in (0, 0.5)")
        if self.damping <= 0:
            raise ValueError("damping must be positive")


def loop_gains(bandwidth: float, damping: float, detector_gain: float) -> tuple[float, float]:
    """Proportional and integral gains of a second-order PI loop.

    ``bandwidth`` is the noise bandwidth normalized to the update rate.
    """
    theta = bandwidth / (damping + 1.0 / (4.0 * damping))
    den = 1.0 + 2.0 * damping * theta + theta**2
    return (4.0 * damping * theta / den / detector_gain,
            4.0 * theta**2 / den / detector_gain)


def raised_cosine(t: np.ndarray, rolloff: float) -> np.ndarray:
    """Raised-cosine pulse, t in symbol periods."""
    t = np.asarray(t, dtype=float)
    den = 1.0 - (2.0 * rolloff * t) ** 2
    sing = np.abs(den) < 1e-10
    safe = np.where(sing, 1.0, den)
    p = np.sinc(t) * np.cos(np.pi * rolloff * t) / safe
    return np.where(sing, (np.pi / 4.0) * np.sinc(1.0 / (2.0 * rolloff)), p)


def gardner_gain(rolloff: float, sps: float) -> float:
    """Slope of the Gardner S-curve per sample of timing error (unit BPSK)."""
    n = np.arange(-30, 31)

    def s_curve(delta):
        return np.sum((raised_cosine(n + delta, rolloff) - raised_cosine(n - 1 + delta, rolloff))
                      * raised_cosine(n - 0.5 + delta, rolloff))

    h = 1e-4
    return float((s_curve(h) - s_curve(-h)) / (2 * h)) / sps


@dataclass
class SyncedSymbols(SymbolSequence):
    errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    track: np.ndarray = field(default_factory=lambda: np.zeros(0))
    freq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = True


def _converged(errors: np.ndarray, window: int = 100) -> bool:
    if len(errors) < 2 * window + 1:
        return True
    early = np.var(errors[1: window + 1])
    late = np.var(errors[window + 1: 2 * window + 1])
    return bool(late <= 1.25 * early + 1e-12)


def gardner_loop(r: IqStream, config: LoopConfig = LoopConfig()) -> SyncedSymbols:
    """Closed-loop symbol timing on a matched-filtered stream."""
    sps = r.sps or DEFAULT_SPS
    if sps < 2:
        raise ValueError("Gardner loop needs at least 2 samples per symbol")
    power = np.mean(np.abs(r.samples) ** 2)
    agc = 1.0 / math.sqrt(power / (1.0 - config.rolloff / 4.0)) if power > 0 else 1.0
    k1, k2 = loop_gains(config.gardner_bw, config.damping, gardner_gain(config.rolloff, sps))
    syms, times, errs = loops.gardner_core(r.samples * agc, float(sps), k1, k2, float(sps))
    return SyncedSymbols(syms, source_phase=None, noise_var=r.noise_var * agc**2,
                         errors=errs, track=times, converged=_converged(errs))


def costas_loop(d, config: LoopConfig = LoopConfig()) -> SyncedSymbols:
    """BPSK carrier phase/frequency tracking, one update per symbol.

    The output keeps the inherent 180 degree ambiguity.
    """
    x = np.asarray(getattr(d, "symbols", d), dtype=np.complex128)
    rms = math.sqrt(np.mean(np.abs(x) ** 2)) if len(x) else 0.0
    if rms > 0:
        x = x / rms
    k1, k2 = loop_gains(config.costas_bw, config.damping, 1.0)
    out, phase, freq, errs = loops.costas_core(x, k1, k2)
    return SyncedSymbols(out, errors=errs, track=phase, freq=freq, converged=_converged(errs))


def envelope_detect(y, dc_window: int | None = None) -> np.ndarray:
    """``|y|`` minus its running mean over ``dc_window`` samples."""
    x = y.samples if isinstance(y, IqStream) else np.asarray(y)
    env = np.abs(x)
    if len(env) == 0:
        return env
    w = min(dc_window or DEFAULT_DC_WINDOW, len(env))
    return env - uniform_filter1d(env, size=w, mode="reflect")


def audio_lowpass(x: np.ndarray, cutoff: float, numtaps: int = 257) -> np.ndarray:
    """Zero-delay linear-phase FIR low-pass, cutoff in cycles/sample."""
    taps = firwin(numtaps, cutoff, fs=1.0)
    return np.convolve(x, taps, mode="same")


@dataclass(frozen=True)
class FrameFormat:
    preamble_bits: int = 64
    sfd: int = 0xF3A5
    sfd_bits: int = 16
    header_bits: int = 16
    sfd_min_matches: int = 14
    guard_bits: int = 16
    max_payload: int = 4096

    def preamble(self) -> np.ndarray:
        return (np.arange(self.preamble_bits) % 2 == 0).astype(np.uint8)

    def sfd_array(self) -> np.ndarray:
        return int_to_bits(self.sfd, self.sfd_bits)

    def build(self, payload: bytes) -> np.ndarray:
        if len(payload) >= 2**self.header_bits or len(payload) > self.max_payload:
            raise ValueError("payload too long for the header")
        return np.concatenate([
            self.preamble(),
            self.sfd_array(),
            int_to_bits(len(payload), self.header_bits),
            bytes_to_bits(payload),
        ])

    def sfd_margin(self) -> int:
        """Minimum Hamming distance of the SFD (either polarity) to any
        SFD-length window of an alternating preamble."""
        sfd = self.sfd_array()
        alt = (np.arange(self.preamble_bits + self.sfd_bits) % 2).astype(np.uint8)
        best = self.sfd_bits
        for pol in (0, 1):
            for shift in (0, 1):
                ref = alt[shift: shift + self.sfd_bits]
                best = min(best, int(np.sum((sfd ^ pol) != ref)))
        return best


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


def bytes_to_bits(data: bytes) -> np.ndarray:
    if not data:
        return np.zeros(0, dtype=np.uint8)
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def bits_to_bytes(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


@dataclass
class DemodOutput:
    kind: str
    am_samples: np.ndarray | None = None
    bits: np.ndarray | None = None
    sfd_found: bool = False
    header_ok: bool = False
    payload_length: int | None = None
    inverted: bool = False
    metrics: dict = field(default_factory=dict)
    cycles: CycleCount | None = None

    @property
    def payload(self) -> bytes:
        if self.bits is None or len(self.bits) % 8:
            return b""
        return bits_to_bytes(self.bits)

    def summary(self) -> dict:
        d = {"kind": self.kind, "metrics": self.metrics}
        if self.cycles is not None:
            d["cycles"] = self.cycles.to_dict()
        if self.kind == "bpsk_packet":
            d.update(sfd_found=self.sfd_found, header_ok=self.header_ok,
                     payload_length=self.payload_length, inverted=self.inverted,
                     payload_hex=self.payload.hex() if self.header_ok else None)
        else:
            d["n_audio_samples"] = 0 if self.am_samples is None else len(self.am_samples)
        return d


def frame_detect(d, fmt: FrameFormat = FrameFormat()) -> DemodOutput:
    """Hard decisions, SFD search in both polarities, header and payload parse.

    An SFD hit needs ``sfd_min_matches`` agreeing bits and a preamble tail of
    ``guard_bits`` with at most one error just before it.
    """
    x = np.asarray(getattr(d, "symbols", d), dtype=np.complex128)
    bits = (x.real > 0).astype(np.uint8)
    out = DemodOutput(kind="bpsk_packet")
    n = len(bits)
    L, g = fmt.sfd_bits, fmt.guard_bits
    if n < L + g:
        return out
    sfd = fmt.sfd_array()
    tail = fmt.preamble()[-g:]
    win = np.lib.stride_tricks.sliding_window_view(bits, L)[g:]
    guards = np.lib.stride_tricks.sliding_window_view(bits, g)[: len(win)]
    best = None
    for pol in (0, 1):
        sfd_p, tail_p = sfd ^ pol, tail ^ pol
        hits = np.flatnonzero((np.sum(win == sfd_p, axis=1) >= fmt.sfd_min_matches)
                              & (np.sum(guards == tail_p, axis=1) >= g - 1))
        if len(hits) and (best is None or hits[0] + g < best[0]):
            best = (int(hits[0]) + g, pol)
    if best is None:
        return out
    k, pol = best
    out.sfd_found = True
    out.inverted = bool(pol)
    body = bits[k + L:] ^ pol
    if len(body) < fmt.header_bits:
        return out
    length = bits_to_int(body[: fmt.header_bits])
    out.payload_length = length
    payload = body[fmt.header_bits: fmt.header_bits + 8 * length]
    out.header_ok = length <= fmt.max_payload and len(payload) == 8 * length
    out.bits = payload.astype(np.uint8)
    out.metrics["sfd_index"] = k
    return out


def modulate_packet(payload: bytes, fmt: FrameFormat = FrameFormat(), pulse: PulseShape | None = None,
                    lead_symbols: int = 128, tail_symbols: int = 128, seed=None) -> IqStream:
    """BPSK waveform of one frame between random filler symbols (bit 1 -> +1)."""
    pulse = pulse or PulseShape()
    rng = np.random.default_rng(seed)
    bits = np.concatenate([rng.integers(0, 2, lead_symbols), fmt.build(payload),
                           rng.integers(0, 2, tail_symbols)])
    symbols = 2.0 * bits.astype(float) - 1.0
    return IqStream(shape_symbols(symbols.astype(np.complex128), pulse), sps=pulse.sps)


def receive(y: IqStream, config: LoopConfig = LoopConfig(), fmt: FrameFormat = FrameFormat(),
            thresholds: ClassifierThresholds = ClassifierThresholds(),
            rx_pulse: PulseShape | None = None, dc_window: int | None = None,
            audio_cutoff: float | None = 0.04) -> DemodOutput:
    """Classify once (AM vs BPSK), then demodulate with the matching chain."""
    if not y.normalized:
        y, _ = normalize(y)
    cycles = count_cycle_frequencies(y, thresholds.pre_threshold, thresholds.gamma, thresholds.L_s)
    if cycles.count > 0:
        audio = envelope_detect(y, dc_window)
        if audio_cutoff:
            audio = audio_lowpass(audio, audio_cutoff)
        return DemodOutput(kind="am_audio", am_samples=audio, cycles=cycles)

    sps = y.sps or DEFAULT_SPS
    r = matched_filter(y, rx_pulse or PulseShape.receive(config.rolloff, sps))
    timed = gardner_loop(r, config)
    carrier = costas_loop(timed, config)
    out = frame_detect(carrier, fmt)
    out.cycles = cycles
    late = slice(len(carrier.errors) // 2, None)
    out.metrics.update(
        backend=loops.BACKEND,
        n_symbols=len(carrier),
        gardner_converged=timed.converged,
        gardner_error_rms=float(np.sqrt(np.mean(timed.errors[late] ** 2))) if len(timed.errors) else None,
        costas_error_rms=float(np.sqrt(np.mean(carrier.errors[late] ** 2))) if len(carrier.errors) else None,
        costas_freq=float(carrier.freq[-1] / (2 * np.pi)) if len(carrier.freq) else None,
    )
    return out
