# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: collective dipole sum and coincidence folding.

Contracts mirror lgi_echo._kernels._fallback exactly; see that module
for parameter documentation.  fold_coincidences must be integer-exact
against the fallback, so bin indices are computed with the same IEEE
double operations (add, divide, floor).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, floor

cnp.import_array()

BACKEND_NAME = "compiled"


def dipole_intensity(weights_sq, detunings, times):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(weights_sq, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.ascontiguousarray(detunings, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t n_atoms = d.shape[0]
    cdef Py_ssize_t n_times = t.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n_times, dtype=np.float64)
    cdef Py_ssize_t i, j
    cdef double two_pi = 6.283185307179586476925287
    cdef double re, im, phase, omega
    with nogil:
        for i in range(n_times):
            re = 0.0
            im = 0.0
            omega = two_pi * t[i]
            for j in range(n_atoms):
                phase = omega * d[j]
                re += w[j] * cos(phase)
                im += w[j] * sin(phase)
            out[i] = re * re + im * im
    return out


def fold_coincidences(click_trials, click_times, heralds, double period,
                      double bin_width, Py_ssize_t n_bins, Py_ssize_t max_lag):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] trials = np.ascontiguousarray(click_trials, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] times = np.ascontiguousarray(click_times, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] her = np.ascontiguousarray(heralds, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(n_bins, dtype=np.int64)
    cdef Py_ssize_t n_clicks = trials.shape[0]
    cdef Py_ssize_t k, m, idx
    cdef cnp.int64_t trial
    cdef double delay
    with nogil:
        for k in range(n_clicks):
            trial = trials[k]
            for m in range(max_lag + 1):
                if trial - m < 0:
                    break
                if her[trial - m] == 0:
                    continue
                delay = times[k] + m * period
                idx = <Py_ssize_t>floor(delay / bin_width)
                if 0 <= idx < n_bins:
                    out[idx] += 1
    return out
