"""Blind modulation classification and a two-class software receiver.

Cyclic-mean detection separates AM from linear digital modulations, moment
features split 2/4/8-PSK and 16-QAM, and a Gardner/Costas chain demodulates
AM or 2-PSK frames.
"""
from .classifier import ClassDecision, ClassifierThresholds, classify, classify_features
from .cyclo import count_cycle_frequencies, cyclic_mean, dg_statistic
from .features import ALPHABET_MOMENTS, FeatureVector, extract_features
from .harness import ConfusionMatrix, TrialConfig, confusion, run_trial, sweep
from .receiver import FrameFormat, LoopConfig, receive
from .timing import estimate_timing, extract_symbols, matched_filter
from .waveform import (AmMessage, ChannelParams, IqStream, ModClass, PulseShape, apply_channel,
                       normalize, synth_am, synth_linear)

__version__ = "0.1.0"

__all__ = [
    "ALPHABET_MOMENTS", "AmMessage", "ChannelParams", "ClassDecision", "ClassifierThresholds", "ConfusionMatrix",
    "FeatureVector", "FrameFormat", "IqStream", "LoopConfig", "ModClass", "PulseShape",
    "TrialConfig", "apply_channel", "classify", "classify_features", "confusion",
    "count_cycle_frequencies", "cyclic_mean", "dg_statistic", "estimate_timing", "extract_features",
    "extract_symbols", "matched_filter", "normalize", "receive", "run_trial", "sweep", "synth_am",
    "synth_linear",
]
