"""Reference implementations of the per-sample loops (no compiled code)."""
from __future__ import annotations

import math

import numpy as np


def _interp(x, t: float) -> complex:
    # piecewise-parabolic Farrow interpolator, alpha = 1/2, basepoint floor(t)
    m = int(math.floor(t))
    mu = t - m
    a = 0.5 * mu * mu - 0.5 * mu
    return (a * x[m + 2]
            + (-0.5 * mu * mu + 1.5 * mu) * x[m + 1]
            + (-0.5 * mu * mu - 0.5 * mu + 1.0) * x[m]
            + a * x[m - 1])


def gardner_core(r, sps: float, k1: float, k2: float, t0: float):
    """Gardner loop over an oversampled stream.

    Returns (symbols, strobe_times, ted_errors) as numpy arrays.
    """
    x = np.asarray(r, dtype=np.complex128).tolist()
    n = len(x)
    half = 0.5 * sps
    limit = 0.5 * sps
    t = t0
    integ = 0.0
    prev = 0j
    have_prev = False
    syms, times, errs = [], [], []
    while t + 2.0 < n - 1 and t - half >= 1.0:
        xk = _interp(x, t)
        xm = _interp(x, t - half)
        if have_prev:
            e = (xk.real - prev.real) * xm.real + (xk.imag - prev.imag) * xm.imag
            integ += k2 * e
            v = k1 * e + integ
            if v > limit:
                v = limit
            elif v < -limit:
                v = -limit
        else:
            e = 0.0
            v = 0.0
        syms.append(xk)
        times.append(t)
        errs.append(e)
        prev = xk
        have_prev = True
        t += sps - v
    return (np.array(syms, dtype=np.complex128), np.array(times, dtype=np.float64),
            np.array(errs, dtype=np.float64))


def costas_core(d, k1: float, k2: float):
    """BPSK Costas loop, one update per symbol.

    Returns (derotated, nco_phase, nco_freq, phase_errors).
    """
    x = np.asarray(d, dtype=np.complex128).tolist()
    n = len(x)
    out = [0j] * n
    phases = [0.0] * n
    freqs = [0.0] * n
    errs = [0.0] * n
    phi = 0.0
    integ = 0.0
    for k in range(n):
        z = x[k] * complex(math.cos(phi), -math.sin(phi))
        e = z.imag if z.real >= 0.0 else -z.imag
        out[k] = z
        phases[k] = phi
        errs[k] = e
        integ += k2 * e
        freqs[k] = integ
        phi += k1 * e + integ
    return (np.array(out, dtype=np.complex128), np.array(phases), np.array(freqs), np.array(errs))
