"""Interleaved float64 I/Q files with a JSON sidecar.

``<stem>.iq`` holds little-endian ``I0 Q0 I1 Q1 ...`` doubles; ``<stem>.json``
holds sample_period, sps, class, channel parameters, seed and noise_var.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .waveform import ChannelParams, IqStream

_DTYPE = np.dtype("<f8")


def _paths(path) -> tuple[Path, Path]:
    p = Path(path)
    if p.suffix in (".iq", ".json"):
        p = p.with_suffix("")
    return p.with_suffix(".iq"), p.with_suffix(".json")


def write_iq(path, stream: IqStream, *, mod_class: str | None = None,
             channel: ChannelParams | None = None, seed=None, extra: dict | None = None) -> Path:
    iq_path, meta_path = _paths(path)
    iq_path.parent.mkdir(parents=True, exist_ok=True)
    inter = np.empty(2 * len(stream), dtype=_DTYPE)
    inter[0::2] = stream.samples.real
    inter[1::2] = stream.samples.imag
    inter.tofile(iq_path)
    meta = {
        "format": "iq-f64le-interleaved",
        "n_samples": len(stream),
        "sample_period": stream.sample_period,
        "sps": stream.sps,
        "normalized": stream.normalized,
        "noise_var": stream.noise_var,
        "class": mod_class,
        "channel": channel.to_dict() if channel is not None else None,
        "seed": seed,
    }
    if extra:
        meta.update(extra)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return iq_path


def read_iq(path) -> tuple[IqStream, dict]:
    """Load a stream and its sidecar. Raises ValueError on malformed input."""
    iq_path, meta_path = _paths(path)
    try:
        meta = json.loads(meta_path.read_text())
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ValueError(f"{meta_path}: bad JSON sidecar ({exc})") from exc
    raw = iq_path.read_bytes()
    if len(raw) % (2 * _DTYPE.itemsize):
        raise ValueError(f"{iq_path}: {len(raw)} bytes is not a whole number of I/Q pairs")
    data = np.frombuffer(raw, dtype=_DTYPE)
    n = len(data) // 2
    expected = meta.get("n_samples")
    if expected is not None and expected != n:
        raise ValueError(f"{iq_path}: sidecar says {expected} samples, file has {n}")
    stream = IqStream(
        data[0::2] + 1j * data[1::2],
        sample_period=float(meta.get("sample_period", 1.0)),
        sps=meta.get("sps"),
        normalized=bool(meta.get("normalized", False)),
        noise_var=float(meta.get("noise_var") or 0.0),
    )
    return stream, meta
