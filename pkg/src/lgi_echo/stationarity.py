"""Stationarity checks behind the two-time correlation analysis.

Two assumptions make the dichotomic K functionals meaningful: the
conditional probabilities Q_ij(t, t+tau) must depend on tau only
(time-translation invariance), and the evolution must be Markovian
(monotonically shrinking trace distance).  This module provides the
counting-statistics estimators and hypothesis tests for both, plus the
assembly of noisy LGI reports with propagated error bars.
"""

import json
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.stats import chi2 as chi2_dist

from .errors import DomainError, InvariantViolation
from ._rng import stream, STREAM_BOOTSTRAP, STREAM_COUNTS
from .lgi import ExcitationState, LgiReport, conditional_probability
from .quantum import (
    Channel,
    DensityMatrix,
    PolarState,
    apply_channel,
    born_probability,
    trace_distance,
)
from .tomography import (
    default_bases,
    linear_inversion,
    mle_reconstruct,
    simulate_tomography,
    TomographyData,
)

# Families plotted in the invariance scan: (initial, final, tau).
# Two of them sit exactly on a probability boundary (Q = 0 or 1 at
# tau = 100 ns for delta = 5 MHz), which is intentional: the test must
# cope with zero-variance rows.
DEFAULT_FAMILIES = (
    ("D", "A", 100e-9),
    ("D", "D", 33.3e-9),
    ("A", "A", 66.7e-9),
    ("A", "A", 100e-9),
)


# ---------------------------------------------------------------------------
# counting estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountPair:
    """Click counts for one projective outcome and its complement."""

    n_target: int
    n_complement: int

    def __post_init__(self):
        for name in ("n_target", "n_complement"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvariantViolation(f"{name} must be a non-negative integer, got {v}")

    @property
    def total(self) -> int:
        return self.n_target + self.n_complement


def estimate_q(counts: CountPair) -> Tuple[float, float]:
    """Point estimate and binomial sigma of a conditional probability.

    q_hat = n_t / (n_t + n_c), sigma = sqrt(n_t * n_c / total^3).
    sigma is the raw propagated value and is 0.0 at the boundaries;
    see k_with_sigma for the Wilson substitution used downstream.
    """
    total = counts.total
    if total < 1:
        raise DomainError("cannot estimate a probability from zero counts")
    q_hat = counts.n_target / total
    sigma = math.sqrt(counts.n_target * counts.n_complement / total**3)
    return q_hat, sigma


def wilson_half_width(n_success: int, total: int, z: float = 1.0) -> float:
    """Half-width of the Wilson score interval at z standard scores.

    Stays strictly positive at the n_success = 0 or total boundaries,
    unlike the naive binomial sigma.
    """
    if total < 1:
        raise DomainError("wilson_half_width needs total >= 1")
    if not 0 <= n_success <= total:
        raise DomainError(f"n_success={n_success} outside [0, {total}]")
    q = n_success / total
    denom = 1.0 + z**2 / total
    return (z * math.sqrt(q * (1.0 - q) / total + z**2 / (4.0 * total**2))) / denom


def k_with_sigma(counts_t: CountPair, counts_2t: CountPair,
                 t: float = float("nan")) -> LgiReport:
    """Assemble a noisy LGI report from click counts at t and 2t.

    K = 2 q_hat - 1 per time, sigma_K = 2 sigma_q.  When a count pair
    sits on the boundary (sigma_q = 0) the Wilson half-width replaces
    it so the report never claims infinite significance; the flag
    sigma_boundary_adjusted records the substitution.
    """
    q_t, s_t = estimate_q(counts_t)
    q_2t, s_2t = estimate_q(counts_2t)
    adjusted = False
    if s_t == 0.0:
        s_t = wilson_half_width(counts_t.n_target, counts_t.total)
        adjusted = True
    if s_2t == 0.0:
        s_2t = wilson_half_width(counts_2t.n_target, counts_2t.total)
        adjusted = True
    return LgiReport.from_correlations(
        t,
        k_t=2.0 * q_t - 1.0,
        k_2t=2.0 * q_2t - 1.0,
        sigma_k_t=2.0 * s_t,
        sigma_k_2t=2.0 * s_2t,
        sigma_boundary_adjusted=adjusted,
    )


# ---------------------------------------------------------------------------
# time-translation invariance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InvarianceReport:
    """Chi-square homogeneity test of Q_hat across probe times.

    grid holds (t, tau) pairs row-major (family-major), estimates and
    sigmas the matching per-point values.  dof counts (points - 1) per
    family, summed over families.
    """

    grid: Tuple[Tuple[float, float], ...]
    estimates: Tuple[float, ...]
    sigmas: Tuple[float, ...]
    chi2: float
    dof: int
    p_value: float
    alpha: float
    passed: bool

    def __post_init__(self):
        if not (len(self.grid) == len(self.estimates) == len(self.sigmas)):
            raise InvariantViolation("grid, estimates and sigmas must align")
        if self.chi2 < 0.0:
            raise InvariantViolation(f"chi2 must be >= 0, got {self.chi2}")
        if not 0.0 <= self.p_value <= 1.0:
            raise InvariantViolation(f"p_value={self.p_value} outside [0, 1]")
        if self.passed != (self.p_value >= self.alpha):
            raise InvariantViolation("passed must equal (p_value >= alpha)")

    def to_dict(self) -> dict:
        return {
            "grid_ns": [[t * 1e9, tau * 1e9] for t, tau in self.grid],
            "estimates": list(self.estimates),
            "sigmas": list(self.sigmas),
            "chi2": self.chi2,
            "dof": self.dof,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self, path, header_comment: str = "") -> None:
        """Write `tau_ns,t_ns,q_hat,sigma` rows; optional comment line."""
        lines = []
        if header_comment:
            lines.append(f"# {header_comment}")
        lines.append("tau_ns,t_ns,q_hat,sigma")
        for (t, tau), q, s in zip(self.grid, self.estimates, self.sigmas):
            lines.append(f"{tau * 1e9:.6f},{t * 1e9:.6f},{q:.9f},{s:.9f}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def simulate_q_grid(ex: ExcitationState, families, ts,
                    counts_per_point: int, seed: int):
    """Binomial click counts for each (family, probe time) grid point.

    families is a sequence of (i, j, tau) label triples; the returned
    arrays have shape (len(families), len(ts)).  Deterministic per seed.
    """
    if counts_per_point < 1:
        raise DomainError("counts_per_point must be >= 1")
    ts = np.asarray(ts, dtype=np.float64)
    rng = stream(seed, STREAM_COUNTS)
    n_target = np.empty((len(families), ts.size), dtype=np.int64)
    for k, (i, j, tau) in enumerate(families):
        q_row = np.array(
            [conditional_probability(ex, i, j, t, t + tau) for t in ts]
        )
        n_target[k] = rng.binomial(counts_per_point, q_row)
    n_complement = counts_per_point - n_target
    return n_target, n_complement


def invariance_test(taus, ts, n_target, n_complement,
                    alpha: float = 0.05) -> InvarianceReport:
    """Pooled-mean chi-square test of t-independence, one term per family.

    Under time-translation invariance every row of the count grid is a
    homogeneous binomial sample, so sum_t (q_hat - q_bar)^2 / var_t with
    the pooled q_bar is chi-square with (len(ts) - 1) dof per family.
    Zero-variance rows (pooled mean exactly 0 or 1) carry no information
    and contribute 0 to the statistic while keeping the nominal dof,
    which can only make the test conservative.
    """
    taus = np.asarray(taus, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    n_t = np.asarray(n_target, dtype=np.float64)
    n_c = np.asarray(n_complement, dtype=np.float64)
    if taus.ndim != 1 or taus.size < 1:
        raise DomainError("need at least one tau family")
    if ts.ndim != 1 or ts.size < 2:
        raise DomainError("need at least two probe times per family")
    if n_t.shape != (taus.size, ts.size) or n_c.shape != n_t.shape:
        raise DomainError(
            f"count grids must have shape {(taus.size, ts.size)}, "
            f"got {n_t.shape} and {n_c.shape}"
        )
    if np.any(n_t < 0) or np.any(n_c < 0):
        raise DomainError("counts must be non-negative")
    totals = n_t + n_c
    if np.any(totals < 1):
        raise DomainError("every grid point needs at least one count")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha={alpha} outside (0, 1)")

    q_hat = n_t / totals
    sigma = np.sqrt(n_t * n_c / totals**3)
    chi2 = 0.0
    for k in range(taus.size):
        q_bar = n_t[k].sum() / totals[k].sum()
        if 0.0 < q_bar < 1.0:
            var = q_bar * (1.0 - q_bar) / totals[k]
            chi2 += float(np.sum((q_hat[k] - q_bar) ** 2 / var))
    dof = int(taus.size * (ts.size - 1))
    p_value = float(chi2_dist.sf(chi2, dof))
    grid = tuple((float(t), float(tau)) for tau in taus for t in ts)
    return InvarianceReport(
        grid=grid,
        estimates=tuple(float(v) for v in q_hat.ravel()),
        sigmas=tuple(float(v) for v in sigma.ravel()),
        chi2=float(chi2),
        dof=dof,
        p_value=p_value,
        alpha=alpha,
        passed=bool(p_value >= alpha),
    )


# ---------------------------------------------------------------------------
# Markovianity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    """Trace-distance monotonicity verdict over a time sequence."""

    times: Tuple[float, ...]
    distances: Tuple[float, ...]
    max_increase: float
    threshold: float
    passed: bool
    sigmas: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if len(self.times) != len(self.distances):
            raise InvariantViolation("times and distances must align")
        if self.sigmas is not None and len(self.sigmas) != len(self.times):
            raise InvariantViolation("sigmas must align with times")
        for d in self.distances:
            if not -1e-9 <= d <= 1.0 + 1e-9:
                raise InvariantViolation(f"trace distance {d} outside [0, 1]")
        if self.threshold < 0.0:
            raise InvariantViolation("threshold must be >= 0")
        if self.passed != (self.max_increase <= self.threshold):
            raise InvariantViolation("passed must equal (max_increase <= threshold)")

    def to_dict(self) -> dict:
        return {
            "times_ns": [t * 1e9 for t in self.times],
            "distances": list(self.distances),
            "max_increase": self.max_increase,
            "threshold": self.threshold,
            "passed": self.passed,
            "sigmas": None if self.sigmas is None else list(self.sigmas),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def default_state_pair() -> Tuple[DensityMatrix, DensityMatrix]:
    """The antipodal H+V / H-V pair, which starts at trace distance 1."""
    inv = 1.0 / math.sqrt(2.0)
    plus = PolarState(inv, inv, basis="HV")
    minus = PolarState(inv, -inv, basis="HV")
    return plus.density(), minus.density()


def monotonicity_check(times, distances, threshold: float = 1e-12,
                       sigmas=None) -> MonotonicityReport:
    """Pure bookkeeping: largest step increase of a distance sequence."""
    times = tuple(float(t) for t in times)
    distances = tuple(float(d) for d in distances)
    if len(times) < 2:
        raise DomainError("need at least two time points")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise DomainError("times must be strictly increasing")
    max_increase = max(b - a for a, b in zip(distances, distances[1:]))
    return MonotonicityReport(
        times=times,
        distances=distances,
        max_increase=float(max_increase),
        threshold=float(threshold),
        passed=bool(max_increase <= threshold),
        sigmas=None if sigmas is None else tuple(float(s) for s in sigmas),
    )


def _bootstrap_distance_sigmas(rhos_a, rhos_b, shots: int, seed: int,
                               n_reps: int) -> Tuple[float, ...]:
    """Parametric-bootstrap sigma of the reconstructed trace distance.

    Replicate counts are redrawn from the fitted states and inverted with
    the fast projected linear inversion; the MLE point estimate and the
    replicate spread agree to the relevant accuracy at these shot counts.
    """
    rng = stream(seed, STREAM_BOOTSTRAP)
    bases = default_bases()
    probs_a = [
        np.array([born_probability(r, b) for b in bases]) for r in rhos_a
    ]
    probs_b = [
        np.array([born_probability(r, b) for b in bases]) for r in rhos_b
    ]
    n_times = len(rhos_a)
    reps = np.empty((n_reps, n_times))
    for r in range(n_reps):
        for k in range(n_times):
            counts_a = rng.binomial(shots, probs_a[k]).astype(np.float64)
            counts_b = rng.binomial(shots, probs_b[k]).astype(np.float64)
            rho_a = linear_inversion(TomographyData(shots, counts_a))
            rho_b = linear_inversion(TomographyData(shots, counts_b))
            reps[r, k] = trace_distance(rho_a, rho_b)
    return tuple(float(s) for s in reps.std(axis=0, ddof=1))


def markovianity_test(state_a: DensityMatrix, state_b: DensityMatrix,
                      channel: Channel, times, use_tomography: bool = False,
                      shots: int = 10**5, seed: int = 0,
                      n_bootstrap: int = 48) -> MonotonicityReport:
    """Trace-distance contractivity check between two evolving states.

    Exact mode propagates the channel analytically and demands
    monotonicity to within 1e-12.  Tomographic mode reconstructs both
    states from simulated counts at every time, so the threshold is
    3x the worst-case step sigma from a parametric bootstrap: the claim
    is monotone decrease within error bars, not of the noise itself.
    """
    times = tuple(float(t) for t in times)
    if len(times) < 3:
        raise DomainError("need at least three time points")
    if any(t < 0.0 for t in times):
        raise DomainError("times must be >= 0")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise DomainError("times must be strictly increasing")

    evolved_a = [apply_channel(channel, state_a, t) for t in times]
    evolved_b = [apply_channel(channel, state_b, t) for t in times]

    if not use_tomography:
        distances = [trace_distance(a, b) for a, b in zip(evolved_a, evolved_b)]
        return monotonicity_check(times, distances, threshold=1e-12)

    fitted_a = []
    fitted_b = []
    for k in range(len(times)):
        data_a = simulate_tomography(evolved_a[k], shots, seed, stream_index=2 * k)
        data_b = simulate_tomography(evolved_b[k], shots, seed, stream_index=2 * k + 1)
        fitted_a.append(mle_reconstruct(data_a).rho)
        fitted_b.append(mle_reconstruct(data_b).rho)
    distances = [trace_distance(a, b) for a, b in zip(fitted_a, fitted_b)]
    sigmas = _bootstrap_distance_sigmas(fitted_a, fitted_b, shots, seed, n_bootstrap)
    step_sigmas = [
        math.sqrt(s1**2 + s2**2) for s1, s2 in zip(sigmas, sigmas[1:])
    ]
    threshold = 3.0 * max(step_sigmas)
    return monotonicity_check(times, distances, threshold=threshold, sigmas=sigmas)
