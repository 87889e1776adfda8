# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-sample loops; must match blindrx._loops_py exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, cos, sin

cnp.import_array()


cdef inline double complex _interp(const double complex[:] x, double t) noexcept nogil:
    cdef Py_ssize_t m = <Py_ssize_t>floor(t)
    cdef double mu = t - m
    cdef double a = 0.5 * mu * mu - 0.5 * mu
    return (a * x[m + 2]
            + (-0.5 * mu * mu + 1.5 * mu) * x[m + 1]
            + (-0.5 * mu * mu - 0.5 * mu + 1.0) * x[m]
            + a * x[m - 1])


def gardner_core(r, double sps, double k1, double k2, double t0):
    cdef const double complex[:] x = np.ascontiguousarray(r, dtype=np.complex128)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t cap = <Py_ssize_t>(n / sps) + 4
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] syms = np.empty(cap, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] times = np.empty(cap, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] errs = np.empty(cap, dtype=np.float64)
    cdef double half = 0.5 * sps
    cdef double limit = 0.5 * sps
    cdef double t = t0
    cdef double integ = 0.0
    cdef double e, v
    cdef double complex prev = 0
    cdef double complex xk, xm
    cdef bint have_prev = False
    cdef Py_ssize_t count = 0
    while t + 2.0 < n - 1 and t - half >= 1.0:
        if count >= cap:
            cap *= 2
            syms = np.resize(syms, cap)
            times = np.resize(times, cap)
            errs = np.resize(errs, cap)
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
        syms[count] = xk
        times[count] = t
        errs[count] = e
        count += 1
        prev = xk
        have_prev = True
        t += sps - v
    return syms[:count].copy(), times[:count].copy(), errs[:count].copy()


def costas_core(d, double k1, double k2):
    cdef const double complex[:] x = np.ascontiguousarray(d, dtype=np.complex128)
    cdef Py_ssize_t n = x.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] phases = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] freqs = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] errs = np.empty(n, dtype=np.float64)
    cdef double phi = 0.0
    cdef double integ = 0.0
    cdef double e, c, s, zr, zi
    cdef Py_ssize_t k
    for k in range(n):
        c = cos(phi)
        s = sin(phi)
        # x * (c - j s)
        zr = x[k].real * c + x[k].imag * s
        zi = x[k].imag * c - x[k].real * s
        e = zi if zr >= 0.0 else -zi
        out[k] = zr + 1j * zi
        phases[k] = phi
        errs[k] = e
        integ += k2 * e
        freqs[k] = integ
        phi += k1 * e + integ
    return out, phases, freqs, errs
