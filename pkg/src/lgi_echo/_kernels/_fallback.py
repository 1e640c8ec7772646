"""Pure-numpy implementations of the hot kernels.

These are the reference semantics; the compiled extension in _core.pyx
reimplements the same contracts.  fold_coincidences is integer-exact in
both backends.  dipole_intensity may differ between backends at the
level of floating-point rounding in sin/cos, so callers compare it with
tolerances, never bit-by-bit.
"""

import numpy as np

BACKEND_NAME = "fallback"

# Cap on the size of the (times x atoms) phase block materialized at
# once; keeps peak memory near 64 MB for double precision.
_BLOCK_ELEMENTS = 1 << 22


def dipole_intensity(weights_sq, detunings, times):
    """Squared magnitude of the collective dipole sum.

    I(t) = | sum_j w_j^2 exp(i 2 pi delta_j t) |^2

    Parameters
    ----------
    weights_sq : (n_atoms,) float64, per-atom absorption weights w_j^2
    detunings : (n_atoms,) float64, per-atom detunings in Hz
    times : (n_times,) float64, evaluation times in seconds

    Returns
    -------
    (n_times,) float64 intensity, unnormalized.
    """
    weights_sq = np.ascontiguousarray(weights_sq, dtype=np.float64)
    detunings = np.ascontiguousarray(detunings, dtype=np.float64)
    times = np.ascontiguousarray(times, dtype=np.float64)
    n_atoms = detunings.shape[0]
    out = np.empty(times.shape[0], dtype=np.float64)
    step = max(1, _BLOCK_ELEMENTS // max(n_atoms, 1))
    two_pi = 2.0 * np.pi
    for start in range(0, times.shape[0], step):
        t = times[start:start + step]
        phase = two_pi * np.outer(t, detunings)
        re = np.cos(phase) @ weights_sq
        im = np.sin(phase) @ weights_sq
        out[start:start + t.shape[0]] = re * re + im * im
    return out


def fold_coincidences(click_trials, click_times, heralds, period, bin_width,
                      n_bins, max_lag):
    """Histogram click-herald delays folded over trial boundaries.

    A click at in-trial time t in trial i coincides with the herald of
    trial i - m (m = 0 .. max_lag) at delay t + m * period.  Delays are
    binned as floor(delay / bin_width); out-of-range bins are dropped.

    Parameters
    ----------
    click_trials : (n_clicks,) int64 trial index of each click
    click_times : (n_clicks,) float64 in-trial detection time, seconds
    heralds : (n_trials,) uint8, 1 where the trial produced a herald
    period : float, trial repetition period in seconds
    bin_width : float, histogram bin width in seconds
    n_bins : int, number of bins starting at delay 0
    max_lag : int, how many earlier trials a click is paired with

    Returns
    -------
    (n_bins,) int64 counts.
    """
    click_trials = np.ascontiguousarray(click_trials, dtype=np.int64)
    click_times = np.ascontiguousarray(click_times, dtype=np.float64)
    heralds = np.ascontiguousarray(heralds, dtype=np.uint8)
    out = np.zeros(n_bins, dtype=np.int64)
    for m in range(max_lag + 1):
        if m == 0:
            sel = heralds[click_trials] != 0
        else:
            sel = (click_trials >= m) & (heralds[np.maximum(click_trials - m, 0)] != 0)
        if not np.any(sel):
            continue
        delay = click_times[sel] + m * period
        idx = np.floor(delay / bin_width).astype(np.int64)
        ok = (idx >= 0) & (idx < n_bins)
        out += np.bincount(idx[ok], minlength=n_bins).astype(np.int64)
    return out
