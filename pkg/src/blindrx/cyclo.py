"""First-order cyclic means and the Dandawate-Giannakis presence test.

The cyclic mean at alpha is ``(1/K) sum y[i] exp(-j 2 pi alpha i)``; on the
grid ``alpha = k/K`` this is the length-K DFT divided by K. The presence
test compares ``J = K m Q^{-1} m^T`` (m = [Re, Im] of the cyclic mean)
against a chi-square(2) threshold, with the 2x2 covariance estimated by
smoothing the periodogram over ``L_s`` bins around alpha.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .waveform import IqStream

GAMMA = 15.202  # chi2(2) upper tail 5e-4
L_S = 61
PRE_THRESHOLD = 0.05


class DegenerateCovariance(ValueError):
    def __init__(self, alpha: float):
        super().__init__(f"degenerate covariance at alpha={alpha:.6g}")
        self.alpha = alpha


def _samples(y) -> np.ndarray:
    return y.samples if isinstance(y, IqStream) else np.asarray(y, dtype=np.complex128)


@dataclass
class CyclicMeanScan:
    alphas: np.ndarray  # fft order, values in [-0.5, 0.5)
    values: np.ndarray
    K: int

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass
class CycleTestResult:
    alpha: float
    J: float
    gamma: float
    is_cycle: bool
    Q: np.ndarray = field(repr=False)
    L_s: int

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "J": self.J, "gamma": self.gamma,
                "is_cycle": self.is_cycle, "L_s": self.L_s, "Q": self.Q.tolist()}


@dataclass
class CycleCount:
    count: int
    alphas: list
    tests: list
    n_survivors: int
    n_degenerate: int = 0

    def to_dict(self) -> dict:
        return {"count": self.count, "alphas": [float(a) for a in self.alphas],
                "n_survivors": self.n_survivors, "n_degenerate": self.n_degenerate}


def cyclic_mean(y, alpha: float) -> complex:
    x = _samples(y)
    i = np.arange(len(x))
    return complex(np.mean(x * np.exp(-2j * np.pi * alpha * i)))


def cyclic_mean_scan(y) -> CyclicMeanScan:
    x = _samples(y)
    K = len(x)
    return CyclicMeanScan(alphas=np.fft.fftfreq(K), values=np.fft.fft(x) / K, K=K)


def _covariance(F_plus: np.ndarray, F_minus: np.ndarray, K: int, L_s: int):
    """Q20, Q21 from DFT values at alpha + s/K and alpha - s/K (last axis = s)."""
    Q20 = np.sum(F_plus * F_minus, axis=-1) / (L_s * K)
    Q21 = np.sum(np.abs(F_plus) ** 2, axis=-1) / (L_s * K)
    q00 = np.real((Q20 + Q21) / 2)
    q01 = np.imag((Q20 - Q21) / 2)
    q10 = np.imag((Q20 + Q21) / 2)
    q11 = np.real((Q21 - Q20) / 2)
    return q00, q01, q10, q11


def _quadratic_form(m: np.ndarray, K: int, q00, q01, q10, q11):
    det = q00 * q11 - q01 * q10
    trace = q00 + q11
    ok = np.isfinite(det) & (trace > 0) & (det > 1e-12 * trace**2)
    safe = np.where(ok, det, 1.0)
    a, b = m.real, m.imag
    # [a b] inv(Q) [a b]^T with inv(Q) = [[q11, -q01], [-q10, q00]] / det
    J = K * (a * a * q11 - a * b * (q01 + q10) + b * b * q00) / safe
    return np.where(ok, J, np.nan), ok


def _check_window(L_s: int, K: int):
    if L_s < 1 or L_s % 2 == 0:
        raise ValueError("L_s must be a positive odd integer")
    if L_s >= K:
        raise ValueError("L_s must be shorter than the record")


def dg_statistic(y, alpha: float, L_s: int = L_S, gamma: float = GAMMA) -> CycleTestResult:
    """Presence test for a single candidate cycle frequency.

    Raises DegenerateCovariance when the covariance estimate is singular.
    """
    x = _samples(y)
    K = len(x)
    _check_window(L_s, K)
    half = (L_s - 1) // 2
    s = np.arange(-half, half + 1)
    i = np.arange(K)
    k_float = alpha * K
    if abs(k_float - round(k_float)) < 1e-9:
        Y = np.fft.fft(x)
        b = int(round(k_float)) % K
        F_plus, F_minus = Y[(b + s) % K], Y[(b - s) % K]
        m = Y[b] / K
    else:
        F_plus = np.exp(-2j * np.pi * np.outer(alpha + s / K, i)) @ x
        F_minus = F_plus[::-1]
        m = F_plus[half] / K
    q = _covariance(F_plus, F_minus, K, L_s)
    J, ok = _quadratic_form(np.asarray(m), K, *q)
    if not ok:
        raise DegenerateCovariance(alpha)
    J = float(J)
    Q = np.array([[q[0], q[1]], [q[2], q[3]]], dtype=float)
    return CycleTestResult(alpha=float(alpha), J=J, gamma=gamma, is_cycle=J > gamma, Q=Q, L_s=L_s)


def _grid_tests(x: np.ndarray, bins: np.ndarray, L_s: int):
    K = len(x)
    Y = np.fft.fft(x)
    half = (L_s - 1) // 2
    s = np.arange(-half, half + 1)
    F_plus = Y[(bins[:, None] + s[None, :]) % K]
    F_minus = Y[(bins[:, None] - s[None, :]) % K]
    q = _covariance(F_plus, F_minus, K, L_s)
    J, ok = _quadratic_form(Y[bins] / K, K, *q)
    Q = np.stack([np.stack([q[0], q[1]], -1), np.stack([q[2], q[3]], -1)], -2)
    return J, ok, Q


def dg_statistics(y, bins=None, L_s: int = L_S) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized test statistic on DFT grid bins (all bins by default).

    Returns ``(J, ok)``; J is NaN where the covariance is degenerate.
    """
    x = _samples(y)
    K = len(x)
    _check_window(L_s, K)
    bins = np.arange(K) if bins is None else np.asarray(bins, dtype=int) % K
    J, ok, _ = _grid_tests(x, bins, L_s)
    return J, ok


def _merge_adjacent(bins: np.ndarray, J: np.ndarray, K: int) -> list[int]:
    """Collapse runs of neighbouring bins (circularly) to their max-J member."""
    if len(bins) == 0:
        return []
    order = np.argsort(bins)
    bins, J = bins[order], J[order]
    groups = [[0]]
    for idx in range(1, len(bins)):
        if bins[idx] - bins[idx - 1] <= 1:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    if len(groups) > 1 and bins[0] == 0 and bins[-1] == K - 1:
        groups[0] = groups.pop() + groups[0]
    return [int(bins[max(g, key=lambda i: J[i])]) for g in groups]


def count_cycle_frequencies(y, pre_threshold: float = PRE_THRESHOLD, gamma: float = GAMMA,
                            L_s: int = L_S) -> CycleCount:
    """Count first-order cycle frequencies of a power-normalized stream.

    Only grid bins whose cyclic-mean power ``|m|^2`` exceeds ``pre_threshold``
    are tested. Confirmed bins within one bin of each other count once.
    """
    scan = cyclic_mean_scan(y)
    K = scan.K
    survivors = np.flatnonzero(np.abs(scan.values) ** 2 > pre_threshold)
    if len(survivors) == 0:
        return CycleCount(0, [], [], 0)
    _check_window(L_s, K)
    J, ok, Q = _grid_tests(_samples(y), survivors, L_s)
    tests = [
        CycleTestResult(alpha=float(scan.alphas[b]), J=float(j), gamma=gamma,
                        is_cycle=bool(j > gamma), Q=q, L_s=L_s)
        for b, j, good, q in zip(survivors, J, ok, Q) if good
    ]
    hit = ok & (np.nan_to_num(J, nan=-np.inf) > gamma)
    reps = _merge_adjacent(survivors[hit], J[hit], K)
    alphas = sorted(float(scan.alphas[b]) for b in reps)
    tests.sort(key=lambda t: t.alpha)
    return CycleCount(len(alphas), alphas, tests, len(survivors), int(np.sum(~ok)))


def scan_table(y, pre_threshold: float = PRE_THRESHOLD, gamma: float = GAMMA,
               L_s: int = L_S) -> list[dict]:
    """Per-bin diagnostic rows (alpha, |m|, J, survivor, is_cycle), sorted by alpha."""
    scan = cyclic_mean_scan(y)
    J, ok = dg_statistics(y, None, L_s)
    surv = np.abs(scan.values) ** 2 > pre_threshold
    rows = []
    for b in np.argsort(scan.alphas, kind="stable"):
        rows.append({
            "alpha": float(scan.alphas[b]),
            "magnitude": float(np.abs(scan.values[b])),
            "J": float(J[b]) if ok[b] else float("nan"),
            "survivor": bool(surv[b]),
            "is_cycle": bool(surv[b] and ok[b] and J[b] > gamma),
        })
    return rows
