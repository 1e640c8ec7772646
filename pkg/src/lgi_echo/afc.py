"""Comb-structured atomic ensemble: spectrum sampling, Monte-Carlo
dipole-sum echo emission, and polarization retrieval from the dual comb.

A memory prepared with absorption teeth at spacing ``periodicity_delta``
re-emits an absorbed photon as a collective echo at multiples of
1/periodicity_delta.  Two such combs, one per polarization and offset by
a relative detuning, imprint a linearly growing phase between the H and
V components of a stored photon; that phase is what the rest of the
package measures.

Frequencies are Hz and times are seconds everywhere in this module;
CSV export converts times to ns.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._kernels import dipole_intensity
from ._rng import STREAM_ENSEMBLE, stream
from .errors import ConfigurationError, DomainError, InvariantViolation
from .quantum import PolarState

# FWHM = 2 sqrt(2 ln 2) sigma for a Gaussian line
_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

# FWHM of the sinc^2 echo of a flat spectral envelope of width B is
# about 0.886/B; half of it bounds "near a revival".
_ECHO_FWHM_FACTOR = 0.886

# times-per-task granularity for parallel dipole sums
_TRACE_SLICE = 256


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CombSpec:
    """Parameters of one prepared comb.

    periodicity_delta: tooth spacing in Hz (echo at 1/periodicity_delta)
    tooth_fwhm: full width at half maximum of one Gaussian tooth, Hz
    bandwidth: flat spectral envelope width, Hz
    optical_depth: peak absorption depth of the teeth
    background_depth: residual absorption between teeth
    center_offset: rigid shift of the whole comb, Hz (0 for the H comb,
        the relative detuning for the V comb)
    """

    periodicity_delta: float
    tooth_fwhm: float
    bandwidth: float
    optical_depth: float = 8.0
    background_depth: float = 0.05
    center_offset: float = 0.0

    def __post_init__(self):
        if self.periodicity_delta <= 0.0:
            raise ConfigurationError("periodicity_delta must be positive")
        if not 0.0 <= self.tooth_fwhm < self.periodicity_delta:
            raise ConfigurationError(
                "tooth_fwhm must satisfy 0 <= fwhm < periodicity_delta "
                f"(got {self.tooth_fwhm} vs {self.periodicity_delta})"
            )
        if self.bandwidth < self.periodicity_delta:
            raise ConfigurationError("bandwidth must be >= periodicity_delta")
        if not self.optical_depth > self.background_depth >= 0.0:
            raise ConfigurationError(
                "need optical_depth > background_depth >= 0, got "
                f"{self.optical_depth} and {self.background_depth}"
            )

    def tooth_count(self) -> int:
        return 2 * int(self.bandwidth / 2.0 // self.periodicity_delta) + 1

    def finesse(self) -> float:
        if self.tooth_fwhm == 0.0:
            return math.inf
        return self.periodicity_delta / self.tooth_fwhm


@dataclass(frozen=True, eq=False)
class AtomEnsemble:
    """Monte-Carlo sample of the comb: one entry per contributing ion.

    weights are emission amplitudes c_j with the forward phase-matched
    spatial factor absorbed; sum of squared weights is 1 within 1e-9.
    """

    detunings: np.ndarray
    weights: np.ndarray
    tooth_indices: np.ndarray
    count: int

    def __post_init__(self):
        det = np.asarray(self.detunings, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        idx = np.asarray(self.tooth_indices, dtype=np.int64)
        if not (det.shape == w.shape == idx.shape == (self.count,)):
            raise InvariantViolation("ensemble arrays must all have length count")
        if np.any(w < 0.0):
            raise InvariantViolation("weights must be non-negative")
        total = float(np.sum(w * w))
        if abs(total - 1.0) > 1e-9:
            raise InvariantViolation(f"sum of squared weights is {total}, expected 1")
        object.__setattr__(self, "detunings", det)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "tooth_indices", idx)


@dataclass(frozen=True, eq=False)
class EchoTrace:
    """Binned re-emission intensity, normalized to the t=0 bin.

    times are bin centers with uniform spacing bin_width.
    """

    times: np.ndarray
    intensity: np.ndarray
    bin_width: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        i = np.asarray(self.intensity, dtype=np.float64)
        if t.shape != i.shape or t.ndim != 1 or t.size < 2:
            raise InvariantViolation("times and intensity must be equal-length 1-D arrays")
        if np.any(i < 0.0):
            raise InvariantViolation("intensities must be non-negative")
        steps = np.diff(t)
        if np.any(steps <= 0.0) or np.max(np.abs(steps - self.bin_width)) > 1e-12 * max(
            1.0, abs(self.bin_width)
        ):
            raise InvariantViolation("times must increase uniformly by bin_width")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "intensity", i)

    def to_csv(self, path, header_comment: str = "") -> None:
        """Write `time_ns,intensity` rows; optional leading comment line."""
        lines = []
        if header_comment:
            lines.append(f"# {header_comment}")
        lines.append("time_ns,intensity")
        for t, i in zip(self.times, self.intensity):
            lines.append(f"{t * 1e9:.6f},{i:.9e}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_ensemble(spec: CombSpec, n_atoms: int, seed: int) -> AtomEnsemble:
    """Draw ion detunings from the comb spectral density.

    Gaussian teeth of width tooth_fwhm at spacing periodicity_delta
    under a flat envelope of width bandwidth, shifted by center_offset.
    A fraction background_depth/(optical_depth + background_depth) of
    ions sits in the flat inter-tooth background.  Deterministic for a
    fixed (spec, seed).
    """
    if n_atoms < 1:
        raise DomainError(f"n_atoms must be >= 1, got {n_atoms}")
    rng = stream(seed, STREAM_ENSEMBLE)
    delta = spec.periodicity_delta
    m_max = int(spec.bandwidth / 2.0 // delta)
    sigma = spec.tooth_fwhm * _FWHM_TO_SIGMA

    m = rng.integers(-m_max, m_max + 1, size=n_atoms)
    eps = rng.normal(0.0, sigma, size=n_atoms) if sigma > 0.0 else np.zeros(n_atoms)
    # keep every ion attributable to its tooth
    np.clip(eps, -delta / 2.0, delta / 2.0, out=eps)
    detunings = spec.center_offset + m * delta + eps

    bg_fraction = spec.background_depth / (spec.optical_depth + spec.background_depth)
    is_bg = rng.random(n_atoms) < bg_fraction
    bg_det = rng.uniform(-spec.bandwidth / 2.0, spec.bandwidth / 2.0, size=n_atoms)
    if np.any(is_bg):
        detunings = np.where(is_bg, spec.center_offset + bg_det, detunings)
        m = np.where(is_bg, np.rint(bg_det / delta).astype(np.int64), m)

    weights = np.full(n_atoms, 1.0 / math.sqrt(n_atoms))
    return AtomEnsemble(detunings, weights, m.astype(np.int64), n_atoms)


# ---------------------------------------------------------------------------
# echo emission
# ---------------------------------------------------------------------------

def echo_trace(ensemble: AtomEnsemble, t_max: float, bin_width: float,
               workers: int = 1) -> EchoTrace:
    """Collective re-emission intensity |sum_j w_j^2 exp(i2pi delta_j t)|^2.

    Evaluated at bin centers and normalized so the t=0 bin reads 1.
    With workers > 1 the time axis is split into fixed slices whose
    results are concatenated in order, so output is identical for any
    worker count.
    """
    if ensemble.count < 1:
        raise DomainError("cannot compute an echo from an empty ensemble")
    if bin_width <= 0.0:
        raise DomainError(f"bin_width must be positive, got {bin_width}")
    if t_max < bin_width:
        raise DomainError("t_max must cover at least one bin")
    n_bins = int(round(t_max / bin_width))
    times = (np.arange(n_bins) + 0.5) * bin_width
    w_sq = ensemble.weights * ensemble.weights

    if workers <= 1 or n_bins <= _TRACE_SLICE:
        intensity = dipole_intensity(w_sq, ensemble.detunings, times)
    else:
        slices = [
            slice(s, min(s + _TRACE_SLICE, n_bins))
            for s in range(0, n_bins, _TRACE_SLICE)
        ]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(
                    lambda sl: dipole_intensity(w_sq, ensemble.detunings, times[sl]),
                    slices,
                )
            )
        intensity = np.concatenate(parts)

    intensity = intensity / intensity[0]
    return EchoTrace(times, intensity, bin_width)


def trace_peak(trace: EchoTrace, t_lo: float, t_hi: float):
    """(time, intensity) of the highest bin with center in [t_lo, t_hi]."""
    sel = (trace.times >= t_lo) & (trace.times <= t_hi)
    if not np.any(sel):
        raise DomainError("window contains no bins")
    idx = np.argmax(np.where(sel, trace.intensity, -np.inf))
    return float(trace.times[idx]), float(trace.intensity[idx])


def trace_fwhm(trace: EchoTrace, t_peak: float) -> float:
    """Full width at half maximum of the local peak nearest t_peak.

    Half-maximum crossings are located by linear interpolation between
    neighboring bins.
    """
    i0 = int(np.argmin(np.abs(trace.times - t_peak)))
    # climb to the local maximum
    while 0 < i0 < trace.times.size - 1:
        if trace.intensity[i0 + 1] > trace.intensity[i0]:
            i0 += 1
        elif trace.intensity[i0 - 1] > trace.intensity[i0]:
            i0 -= 1
        else:
            break
    half = trace.intensity[i0] / 2.0

    def cross(direction):
        j = i0
        while 0 <= j + direction < trace.times.size and trace.intensity[j + direction] > half:
            j += direction
        k = j + direction
        if k < 0 or k >= trace.times.size:
            raise DomainError("half-maximum crossing is outside the trace")
        y0, y1 = trace.intensity[j], trace.intensity[k]
        frac = (y0 - half) / (y0 - y1)
        return trace.times[j] + frac * (trace.times[k] - trace.times[j])

    return float(cross(+1) - cross(-1))


def echo_efficiency(spec: CombSpec, storage_time: float, prefactor: float = 0.15,
                    n_atoms: int = 20000, seed: int = 7) -> float:
    """Retrieval efficiency at a comb revival.

    The comb-dephasing factor is the Monte-Carlo dipole intensity at
    storage_time relative to an ideal zero-width-tooth comb (for which
    the revival intensity is exactly 1); the configurable prefactor
    absorbs optical depth and geometry.  If storage_time is not near a
    revival k/periodicity_delta the near-zero off-peak value is still
    returned, with a warning.
    """
    if storage_time <= 0.0 or not math.isfinite(storage_time):
        raise DomainError(f"storage_time must be positive, got {storage_time}")
    if not 0.0 < prefactor <= 1.0:
        raise DomainError(f"prefactor must be in (0, 1], got {prefactor}")
    k = round(storage_time * spec.periodicity_delta)
    half_echo = 0.5 * _ECHO_FWHM_FACTOR / spec.bandwidth
    if k < 1 or abs(storage_time - k / spec.periodicity_delta) > half_echo:
        warnings.warn(
            f"storage time {storage_time * 1e9:.2f} ns is not near a comb revival; "
            "returning the off-peak intensity",
            stacklevel=2,
        )
    ensemble = sample_ensemble(spec, n_atoms, seed)
    w_sq = ensemble.weights * ensemble.weights
    factor = float(
        dipole_intensity(w_sq, ensemble.detunings, np.array([storage_time]))[0]
    )
    return prefactor * min(max(factor, 0.0), 1.0)


# ---------------------------------------------------------------------------
# polarization retrieval
# ---------------------------------------------------------------------------

def retrieve_polarization(state: PolarState, delta: float, storage_time: float,
                          phase_plate: float = 0.0) -> PolarState:
    """Phase evolution imprinted by the detuned comb pair.

    The V comb is offset by ``delta`` relative to the H comb, so after
    ``storage_time`` the V amplitude has advanced by
    2*pi*delta*storage_time (plus any phase-plate offset).
    """
    if storage_time < 0.0 or not math.isfinite(storage_time):
        raise DomainError(f"storage_time must be >= 0, got {storage_time}")
    s = state.to_basis("HV")
    phase = 2.0 * math.pi * delta * storage_time + phase_plate
    return PolarState(s.amp0, s.amp1 * np.exp(1j * phase), "HV")


def min_contributing_ions(comb_bandwidth: float, homogeneous_linewidth: float) -> int:
    """Lower bound on distinct ions participating in the collective mode."""
    if comb_bandwidth <= 0.0 or homogeneous_linewidth <= 0.0:
        raise DomainError("bandwidth and linewidth must both be positive")
    return math.ceil(comb_bandwidth / homogeneous_linewidth)
