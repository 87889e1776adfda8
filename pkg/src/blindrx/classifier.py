"""Four-stage decision tree: cycle count, then M20 dp, M42, M40 dp."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .cyclo import GAMMA, L_S, PRE_THRESHOLD, CycleCount, count_cycle_frequencies
from .features import CompensationError, FeatureVector, extract_features
from .timing import InsufficientSymbols, estimate_timing, extract_symbols, matched_filter
from .waveform import RX_SPAN, IqStream, ModClass, PulseShape, normalize


@dataclass(frozen=True)
class ClassifierThresholds:
    t_m20dp: float = 0.5
    t_m42: float = 1.155
    t_m40dp: float = 0.5
    gamma: float = GAMMA
    pre_threshold: float = PRE_THRESHOLD
    L_s: int = L_S

    def __post_init__(self):
        for name in ("t_m20dp", "t_m42", "t_m40dp", "gamma", "pre_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 1.0 < self.t_m42 < 1.32:
            raise ValueError("t_m42 must separate PSK (1.0) from 16-QAM (1.32)")
        if self.L_s < 1 or self.L_s % 2 == 0:
            raise ValueError("L_s must be a positive odd integer")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StageStep:
    stage: int
    branch: str
    value: float


@dataclass
class ClassDecision:
    label: ModClass | None
    trace: list = field(default_factory=list)
    features: FeatureVector | None = None
    cycles: CycleCount | None = None
    reason: str | None = None

    @property
    def no_decision(self) -> bool:
        return self.label is None

    def to_dict(self) -> dict:
        return {
            "label": None if self.label is None else self.label.value,
            "no_decision": self.no_decision,
            "reason": self.reason,
            "trace": [asdict(s) for s in self.trace],
            "features": None if self.features is None else self.features.to_dict(),
            "cycles": None if self.cycles is None else self.cycles.to_dict(),
        }


def classify_features(count: int, f: FeatureVector | None,
                      thresholds: ClassifierThresholds = ClassifierThresholds()) -> ClassDecision:
    trace = []
    if count > 0:
        trace.append(StageStep(1, "AM", float(count)))
        return ClassDecision(ModClass.AM, trace, f)
    trace.append(StageStep(1, "digital", 0.0))
    if f is None:
        raise ValueError("digital branch needs a feature vector")
    if f.m20dp >= thresholds.t_m20dp:
        trace.append(StageStep(2, "PSK2", f.m20dp))
        return ClassDecision(ModClass.PSK2, trace, f)
    trace.append(StageStep(2, "not PSK2", f.m20dp))
    if f.m42 >= thresholds.t_m42:
        trace.append(StageStep(3, "QAM16", f.m42))
        return ClassDecision(ModClass.QAM16, trace, f)
    trace.append(StageStep(3, "PSK4/PSK8", f.m42))
    if f.m40dp > thresholds.t_m40dp:
        trace.append(StageStep(4, "PSK4", f.m40dp))
        return ClassDecision(ModClass.PSK4, trace, f)
    trace.append(StageStep(4, "PSK8", f.m40dp))
    return ClassDecision(ModClass.PSK8, trace, f)


def symbol_features(y: IqStream, rx_pulse: PulseShape | None = None) -> FeatureVector:
    """Matched filter, timing extraction and compensated features of a stream."""
    r = matched_filter(y, rx_pulse)
    est = estimate_timing(r)
    span = rx_pulse.span if rx_pulse is not None else RX_SPAN
    d = extract_symbols(r, est, span=span)
    return extract_features(d, d.noise_var)


def classify(y: IqStream, sigma2: float | None = None,
             thresholds: ClassifierThresholds = ClassifierThresholds(),
             rx_pulse: PulseShape | None = None) -> ClassDecision:
    """Classify a received stream.

    ``sigma2`` is the per-sample noise variance of ``y`` (defaults to
    ``y.noise_var``). Unnormalized input is normalized first and ``sigma2``
    rescaled with it. Degenerate inputs return a decision with ``label=None``.
    """
    if sigma2 is not None:
        y = y.with_samples(y.samples, noise_var=float(sigma2))
    if not y.normalized:
        y, _ = normalize(y)
    cycles = count_cycle_frequencies(y, thresholds.pre_threshold, thresholds.gamma, thresholds.L_s)
    if cycles.count > 0:
        decision = classify_features(cycles.count, None, thresholds)
        decision.cycles = cycles
        return decision
    try:
        f = symbol_features(y, rx_pulse)
    except (CompensationError, InsufficientSymbols, ValueError) as exc:
        return ClassDecision(None, [StageStep(1, "digital", 0.0)], None, cycles, str(exc))
    decision = classify_features(0, f, thresholds)
    decision.cycles = cycles
    return decision
