"""Randomized classification trials and confusion matrices.

Every trial draws its own channel (c0 ~ CN(0,1), fo*T ~ U[-0.2, 0.2],
eps ~ U[-0.5, 0.5], theta ~ U[-pi, pi]) from a seed derived from
``(master seed, class, trial index)`` only, so sweeps over SNR share random
numbers and results do not depend on worker count.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .classifier import ClassDecision, ClassifierThresholds, classify
from .waveform import (DEFAULT_ROLLOFF, DEFAULT_SPS, RX_SPAN, TABLE_ORDER, TX_SPAN, AmMessage,
                       ChannelParams, ModClass, PulseShape, apply_channel, normalize,
                       synth_am, synth_linear)


@dataclass(frozen=True)
class TrialConfig:
    n_symbols: int = 1000
    snr_db: float = 10.0
    n_trials: int = 2000
    seed: int = 0
    thresholds: ClassifierThresholds = field(default_factory=ClassifierThresholds)
    rolloff: float = DEFAULT_ROLLOFF
    sps: int = DEFAULT_SPS
    tx_span: int = TX_SPAN
    rx_span: int = RX_SPAN
    am: AmMessage = field(default_factory=AmMessage)

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["am"] = {"Ka": self.am.Ka, "tones": [list(t) for t in self.am.tones]}
        d["snr_db"] = None if math.isinf(self.snr_db) else self.snr_db
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialConfig":
        d = dict(d)
        if "thresholds" in d and isinstance(d["thresholds"], dict):
            d["thresholds"] = ClassifierThresholds(**d["thresholds"])
        if "am" in d and isinstance(d["am"], dict):
            am = d["am"]
            d["am"] = AmMessage(Ka=am.get("Ka", 0.5),
                                tones=tuple(tuple(t) for t in am.get("tones", AmMessage().tones)))
        if d.get("snr_db", 0.0) is None:
            d["snr_db"] = math.inf
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


def trial_rng(master: int, mod_class: ModClass, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master), TABLE_ORDER.index(mod_class), int(index)]))


def draw_channel(rng: np.random.Generator, snr_db: float) -> ChannelParams:
    c0 = complex(rng.standard_normal(), rng.standard_normal()) / math.sqrt(2.0)
    return ChannelParams(
        c0=c0,
        fo_T=float(rng.uniform(-0.2, 0.2)),
        theta=float(rng.uniform(-math.pi, math.pi)),
        epsilon=float(rng.uniform(-0.5, 0.5)),
        snr_db=snr_db,
    )


def make_trial_stream(mod_class: ModClass, cfg: TrialConfig, index: int, snr_db: float | None = None):
    """Synthesize, channel and normalize one realization. Returns (stream, params)."""
    snr = cfg.snr_db if snr_db is None else snr_db
    rng = trial_rng(cfg.seed, mod_class, index)
    params = draw_channel(rng, snr)
    sym_seed, noise_seed = rng.integers(0, 2**63, 2)
    if mod_class is ModClass.AM:
        x = synth_am(cfg.am, cfg.n_symbols * cfg.sps)
    else:
        pulse = PulseShape(cfg.rolloff, cfg.tx_span, cfg.sps)
        x = synth_linear(mod_class, cfg.n_symbols, pulse, seed=int(sym_seed))
    # AM has no symbol clock but shares the sample rate, so eps and fo*T use cfg.sps
    y = apply_channel(x.with_samples(x.samples, sps=cfg.sps), params, seed=int(noise_seed))
    y.sps = x.sps
    y, _ = normalize(y)
    return y, params


def run_trial(mod_class: ModClass, cfg: TrialConfig, index: int, snr_db: float | None = None) -> ClassDecision:
    y, _ = make_trial_stream(mod_class, cfg, index, snr_db)
    rx = PulseShape(cfg.rolloff, cfg.rx_span, cfg.sps)
    if y.sps is None:
        y.sps = cfg.sps  # the classifier assumes the symbol rate is known
    return classify(y, y.noise_var, cfg.thresholds, rx)


@dataclass
class ConfusionMatrix:
    labels: tuple = TABLE_ORDER
    counts: np.ndarray = field(default_factory=lambda: np.zeros((5, 5), dtype=np.int64))
    no_decision: np.ndarray = field(default_factory=lambda: np.zeros(5, dtype=np.int64))

    @property
    def rates(self) -> np.ndarray:
        tot = self.counts.sum(axis=1, keepdims=True)
        return np.where(tot > 0, 100.0 * self.counts / np.maximum(tot, 1), 0.0)

    def rate(self, true: ModClass, decided: ModClass) -> float:
        return float(self.rates[self.labels.index(true), self.labels.index(decided)])

    def add(self, true: ModClass, decision: ClassDecision):
        i = self.labels.index(true)
        if decision.label is None:
            self.no_decision[i] += 1
        else:
            self.counts[i, self.labels.index(decision.label)] += 1

    def merge(self, other: "ConfusionMatrix"):
        self.counts += other.counts
        self.no_decision += other.no_decision

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true"] + [c.value for c in self.labels] + ["n", "no_decision"])
        rates = self.rates
        for i, c in enumerate(self.labels):
            w.writerow([c.value] + [f"{v:.2f}" for v in rates[i]]
                       + [int(self.counts[i].sum()), int(self.no_decision[i])])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "labels": [c.value for c in self.labels],
            "counts": self.counts.tolist(),
            "rates": [[round(float(v), 4) for v in row] for row in self.rates],
            "no_decision": self.no_decision.tolist(),
        }

    def format_table(self) -> str:
        head = "      " + "".join(f"{c.value:>8}" for c in self.labels)
        rows = [head]
        for i, c in enumerate(self.labels):
            rows.append(f"{c.value:<6}" + "".join(f"{v:8.2f}" for v in self.rates[i]))
        return "\n".join(rows)


def _run_chunk(args) -> tuple:
    mod_class, cfg, indices, snrs = args
    out = []
    for snr in snrs:
        counts = np.zeros(5, dtype=np.int64)
        nd = 0
        for i in indices:
            d = run_trial(mod_class, cfg, i, snr)
            if d.label is None:
                nd += 1
            else:
                counts[TABLE_ORDER.index(d.label)] += 1
        out.append((counts, nd))
    return mod_class, out


def _tasks(cfg: TrialConfig, snrs, classes, chunk: int):
    for c in classes:
        for start in range(0, cfg.n_trials, chunk):
            yield (c, cfg, range(start, min(start + chunk, cfg.n_trials)), tuple(snrs))


def sweep(cfg: TrialConfig, snr_list, workers: int | None = 1,
          classes=TABLE_ORDER) -> list[tuple[float, ConfusionMatrix]]:
    """One confusion matrix per SNR, sharing trial seeds across SNRs."""
    snrs = [float(s) for s in snr_list]
    if not snrs:
        raise ValueError("snr list must not be empty")
    mats = [ConfusionMatrix() for _ in snrs]
    tasks = list(_tasks(cfg, snrs, classes, chunk=max(1, min(100, cfg.n_trials))))
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, tasks))
    else:
        results = [_run_chunk(t) for t in tasks]
    for mod_class, per_snr in results:
        i = TABLE_ORDER.index(mod_class)
        for m, (counts, nd) in zip(mats, per_snr):
            m.counts[i] += counts
            m.no_decision[i] += nd
    return list(zip(snrs, mats))


def confusion(cfg: TrialConfig, workers: int | None = 1, classes=TABLE_ORDER) -> ConfusionMatrix:
    return sweep(cfg, [cfg.snr_db], workers, classes)[0][1]


def with_snr(cfg: TrialConfig, snr_db: float) -> TrialConfig:
    return replace(cfg, snr_db=snr_db)
