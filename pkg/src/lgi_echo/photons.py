"""Heralded-photon source, memory round trip and coincidence analysis.

Simulates the full counting experiment: a pulsed pair source heralds
single photons, the signal photon is stored in the comb pair and
retrieved at an echo order, a polarization analyzer projects it, and
detectors with dark counts and broadband readout background produce
timestamped clicks.  Coincidence histograms fold the clicks against
the heralds over neighbouring trial periods; the cross-correlation
g2 compares the zero-lag window with satellite windows one or more
periods away.

Trials are generated in fixed-size chunks with per-chunk random
streams, so any worker partition of the trial range produces the same
clicks; noise clicks come from dedicated global streams.  Only trials
inside a herald neighbourhood can contribute to the histogram, so the
per-trial work outside those windows is a single occupancy scan.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .afc import CombSpec, echo_efficiency, retrieve_polarization
from .errors import ConfigurationError, DomainError, InvariantViolation, UndefinedEstimateError
from .lgi import ExcitationState
from .quantum import PolarState, born_probability
from ._kernels import fold_coincidences
from ._rng import stream, STREAM_FATES, STREAM_NOISE, STREAM_PIPELINE

# Trials per generation chunk.  Fixed: chunk boundaries define the
# random streams, so changing this reshuffles every simulated run.
_CHUNK = 1 << 18

# Trial-space block size for folding very long runs without holding a
# dense herald mask over the whole run.
_FOLD_BLOCK = 1 << 22

# Coincidence window widths (transmitted pulse / retrieved echo).
TRANSMITTED_WINDOW = 2e-9
RETRIEVED_WINDOW = 10e-9

_DIAGONAL = PolarState(1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0), "HV")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SourceParams:
    """Pair source, transmission chain and detector parameters."""

    pair_probability: float
    heralding_efficiency: float = 1.0
    transmission_signal: float = 1.0
    detector_efficiency: float = 1.0
    dark_rate: float = 0.0
    background_rate: float = 0.0
    trial_period: float = 400e-9
    trials_per_cycle: int = 25000
    cycle_rate: float = 40.0
    statistics: str = "bernoulli"
    extinction_ratio: float = 1000.0

    def __post_init__(self):
        for name in ("pair_probability", "heralding_efficiency",
                     "transmission_signal", "detector_efficiency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name}={v} outside [0, 1]")
        for name in ("dark_rate", "background_rate"):
            if getattr(self, name) < 0.0:
                raise ConfigurationError(f"{name} must be >= 0")
        if self.trial_period <= 0.0:
            raise ConfigurationError("trial_period must be positive")
        if self.trials_per_cycle < 1:
            raise ConfigurationError("trials_per_cycle must be >= 1")
        if self.cycle_rate <= 0.0:
            raise ConfigurationError("cycle_rate must be positive")
        if self.statistics not in ("bernoulli", "thermal"):
            raise ConfigurationError(
                f"statistics must be 'bernoulli' or 'thermal', got {self.statistics!r}"
            )
        if self.extinction_ratio <= 0.0:
            raise ConfigurationError("extinction_ratio must be positive")


@dataclass(frozen=True)
class MemoryConfig:
    """Comb pair plus the delocalized-excitation parameters.

    Both combs must share the grating period; their relative detuning
    is carried by the excitation.  efficiency_override (one value per
    echo order) and transmission_override bypass the comb physics for
    idealized runs.  decay_time adds an exp(-t/decay_time) factor to
    the retrieval efficiency standing in for slow dephasing processes
    the comb model does not resolve; 0 disables it.
    """

    comb_h: CombSpec
    comb_v: CombSpec
    excitation: ExcitationState
    storage_time: float
    input_polarization: PolarState = _DIAGONAL
    photon_fwhm: float = 5e-9
    decay_time: float = 0.0
    retrieval_prefactor: float = 0.15
    efficiency_override: Optional[Tuple[float, ...]] = None
    transmission_override: Optional[float] = None

    def __post_init__(self):
        a, b = self.comb_h, self.comb_v
        if (a.periodicity_delta != b.periodicity_delta
                or a.tooth_fwhm != b.tooth_fwhm
                or a.bandwidth != b.bandwidth
                or a.optical_depth != b.optical_depth
                or a.background_depth != b.background_depth):
            raise ConfigurationError(
                "comb_h and comb_v must match in everything but center_offset"
            )
        offset = b.center_offset - a.center_offset
        if offset != 0.0 and abs(offset - self.excitation.detuning) > 1e-6:
            raise ConfigurationError(
                f"comb offset {offset} Hz contradicts excitation detuning "
                f"{self.excitation.detuning} Hz"
            )
        if self.storage_time <= 0.0:
            raise ConfigurationError("storage_time must be positive")
        delta = a.periodicity_delta
        order = round(self.storage_time * delta)
        if order < 1 or abs(self.storage_time - order / delta) > 0.05 / delta:
            raise ConfigurationError(
                f"storage_time {self.storage_time} is not close to an echo "
                f"order of the {delta} Hz comb"
            )
        if self.photon_fwhm <= 0.0:
            raise ConfigurationError("photon_fwhm must be positive")
        if self.decay_time < 0.0:
            raise ConfigurationError("decay_time must be >= 0")
        if not 0.0 < self.retrieval_prefactor <= 1.0:
            raise ConfigurationError("retrieval_prefactor must be in (0, 1]")
        if self.efficiency_override is not None:
            if len(self.efficiency_override) < 1 or any(
                not 0.0 <= e <= 1.0 for e in self.efficiency_override
            ):
                raise ConfigurationError("efficiency overrides must lie in [0, 1]")
        if self.transmission_override is not None:
            if not 0.0 <= self.transmission_override <= 1.0:
                raise ConfigurationError("transmission_override must lie in [0, 1]")

    @property
    def signal_order(self) -> int:
        return round(self.storage_time * self.comb_h.periodicity_delta)


def paper_source() -> SourceParams:
    """Source and detection chain at the published working point."""
    return SourceParams(
        pair_probability=2e-3,
        heralding_efficiency=0.10,
        transmission_signal=0.23,
        detector_efficiency=0.35,
        dark_rate=50.0,
        background_rate=5e3,
        trial_period=400e-9,
        trials_per_cycle=25000,
        cycle_rate=40.0,
    )


def paper_memory(storage_time: float = 125e-9, delta: float = 5e6,
                 phase0: float = 0.0,
                 input_polarization: PolarState = _DIAGONAL) -> MemoryConfig:
    """Comb pair at the published working point for a given echo time.

    The grating period is programmed so the first echo order lands at
    storage_time (finesse held fixed); the two combs are offset by
    delta around the photon carrier.
    """
    if storage_time <= 0.0:
        raise ConfigurationError("storage_time must be positive")
    grating = 1.0 / storage_time
    comb = CombSpec(
        periodicity_delta=grating,
        tooth_fwhm=grating / 4.0,
        bandwidth=100e6,
        optical_depth=8.0,
        background_depth=0.05,
    )
    return MemoryConfig(
        comb_h=replace(comb, center_offset=-delta / 2.0),
        comb_v=replace(comb, center_offset=+delta / 2.0),
        excitation=ExcitationState(detuning=delta, phase0=phase0),
        storage_time=storage_time,
        input_polarization=input_polarization,
        decay_time=150e-9,
    )


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """Click-herald delay histogram folded over trial periods.

    Bin b covers delays [b, b+1) * bin_width; delays span the signal
    period plus noise_periods satellite periods.  category_counts
    records how many histogram entries each click source contributed,
    so their sum equals the histogram total exactly.
    """

    bin_width: float
    counts: np.ndarray
    signal_window: Tuple[float, float]
    noise_window: Tuple[float, float]
    period: float
    noise_periods: int
    n_heralds: int
    n_trials: int
    category_counts: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or c.size < 1:
            raise InvariantViolation("counts must be a non-empty 1-D array")
        if np.any(c < 0):
            raise InvariantViolation("counts must be non-negative")
        if self.bin_width <= 0.0 or self.period <= 0.0:
            raise InvariantViolation("bin_width and period must be positive")
        if self.noise_periods < 1:
            raise InvariantViolation("noise_periods must be >= 1")
        for name in ("signal_window", "noise_window"):
            lo, hi = getattr(self, name)
            if not hi > lo:
                raise InvariantViolation(f"{name} must have positive width")
        s_lo, s_hi = self.signal_window
        n_lo, n_hi = self.noise_window
        if s_hi > n_lo and n_hi > s_lo:
            raise InvariantViolation("signal and noise windows must be disjoint")
        if self.n_heralds < 0 or self.n_trials < 1:
            raise InvariantViolation("n_heralds must be >= 0 and n_trials >= 1")
        object.__setattr__(self, "counts", c)

    def total(self) -> int:
        return int(self.counts.sum())

    def window_counts(self, window: Tuple[float, float]) -> int:
        """Total counts in [start, end); the bounds snap to bin edges."""
        i0 = max(0, int(round(window[0] / self.bin_width)))
        i1 = min(self.counts.size, int(round(window[1] / self.bin_width)))
        if i1 <= i0:
            return 0
        return int(self.counts[i0:i1].sum())

    def to_csv(self, path, header_comment: str = "") -> None:
        """Write `bin_start_ns,count` rows; optional leading comment."""
        lines = []
        if header_comment:
            lines.append(f"# {header_comment}")
        lines.append("bin_start_ns,count")
        for b, n in enumerate(self.counts):
            lines.append(f"{b * self.bin_width * 1e9:.6f},{int(n)}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class G2Result:
    """Window-normalized cross-correlation between herald and signal."""

    g2: float
    sigma: float
    n_peak: int
    n_offset: int

    def __post_init__(self):
        if self.g2 < 0.0 or self.sigma < 0.0:
            raise InvariantViolation("g2 and sigma must be >= 0")
        if self.n_peak < 0 or self.n_offset < 0:
            raise InvariantViolation("window counts must be >= 0")

    def to_dict(self) -> dict:
        return {
            "g2": self.g2,
            "sigma": self.sigma,
            "n_peak": self.n_peak,
            "n_offset": self.n_offset,
        }

    def to_json(self) -> str:
        import json

        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# derived physics
# ---------------------------------------------------------------------------

def _comb_transmission(spec: CombSpec) -> float:
    """Spectral average of exp(-depth) over one grating period."""
    delta = spec.periodicity_delta
    omega = (np.arange(2048) + 0.5) / 2048.0 * delta - delta / 2.0
    depth = np.zeros_like(omega)
    if spec.tooth_fwhm > 0.0:
        sig = spec.tooth_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        for m in range(-6, 7):
            depth += np.exp(-0.5 * ((omega - m * delta) / sig) ** 2)
    else:
        # zero-width teeth absorb a measure-zero slice
        depth[:] = 0.0
    trans = np.exp(-spec.optical_depth * depth).mean()
    return float(trans * math.exp(-spec.background_depth))


def _echo_orders(memory: MemoryConfig, period: float) -> Tuple[int, ...]:
    delta = memory.comb_h.periodicity_delta
    highest = min(3, int(math.floor(period * delta)))
    highest = max(highest, memory.signal_order)
    return tuple(range(1, highest + 1))


def _echo_efficiencies(memory: MemoryConfig, orders) -> Tuple[float, ...]:
    if memory.efficiency_override is not None:
        if len(memory.efficiency_override) < len(orders):
            raise ConfigurationError(
                f"need {len(orders)} efficiency overrides, "
                f"got {len(memory.efficiency_override)}"
            )
        return tuple(memory.efficiency_override[: len(orders)])
    delta = memory.comb_h.periodicity_delta
    effs = []
    for k in orders:
        t_k = k / delta
        eff = echo_efficiency(memory.comb_h, t_k, prefactor=memory.retrieval_prefactor)
        if memory.decay_time > 0.0:
            eff *= math.exp(-t_k / memory.decay_time)
        effs.append(eff)
    return tuple(effs)


def _with_extinction(p: float, ratio: float) -> float:
    # crossed-polarizer leakage: blocked light passes at 1/(1+ratio)
    eps = 1.0 / (1.0 + ratio)
    return (1.0 - eps) * p + eps * (1.0 - p)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def _scan_chunk(source: SourceParams, seed: int, base_index: int, chunk: int,
                start: int, size: int):
    """Pair occupancy and heralds for one trial chunk."""
    rng = stream(seed, STREAM_PIPELINE, base_index | chunk)
    p = source.pair_probability
    if source.statistics == "bernoulli":
        mult = (rng.random(size) < p).astype(np.int64)
    else:
        if p == 0.0:
            mult = np.zeros(size, dtype=np.int64)
        else:
            # thermal occupancy: geometric on {0, 1, ...} with mean p
            mult = rng.geometric(1.0 / (1.0 + p), size).astype(np.int64) - 1
            np.clip(mult, 0, 16, out=mult)
    local = np.nonzero(mult)[0]
    mult = mult[local]
    p_herald = 1.0 - (1.0 - source.heralding_efficiency) ** mult
    heralded = rng.random(local.size) < p_herald
    trials = start + local
    return trials, mult, trials[heralded]


def _fate_chunk(seed: int, base_index: int, chunk: int, trials, mult,
                cum_probs, centers, sigmas, period: float):
    """Category and click time for each photon of the chunk's trials."""
    rng = stream(seed, STREAM_FATES, base_index | chunk)
    photon_trials = np.repeat(trials, mult)
    u = rng.random(photon_trials.size)
    cat = np.searchsorted(cum_probs, u, side="right")
    clicked = cat < centers.size
    cat = cat[clicked]
    click_trials = photon_trials[clicked]
    times = rng.normal(centers[cat], sigmas[cat])
    # Lower bound strictly positive: mass pinned at exactly 0.0 would sit
    # on a histogram bin boundary and fold inconsistently across periods.
    np.clip(times, 1e-12, period * (1.0 - 1e-12), out=times)
    return click_trials, times, cat


def _fold_all(click_trials, click_times, herald_trials, n_trials: int,
              period: float, bin_width: float, n_bins: int, max_lag: int):
    """Fold clicks against heralds, blocking the trial space as needed."""
    if click_trials.size == 0 or herald_trials.size == 0:
        return np.zeros(n_bins, dtype=np.int64)
    if n_trials <= _FOLD_BLOCK:
        mask = np.zeros(n_trials, dtype=np.uint8)
        mask[herald_trials] = 1
        return fold_coincidences(
            click_trials, click_times, mask, period, bin_width, n_bins, max_lag
        )
    order = np.argsort(click_trials, kind="stable")
    trials_sorted = click_trials[order]
    times_sorted = click_times[order]
    out = np.zeros(n_bins, dtype=np.int64)
    for b0 in range(0, n_trials, _FOLD_BLOCK):
        b1 = min(b0 + _FOLD_BLOCK, n_trials)
        lo = np.searchsorted(trials_sorted, b0, side="left")
        hi = np.searchsorted(trials_sorted, b1, side="left")
        if hi == lo:
            continue
        base = max(0, b0 - max_lag)
        h_lo = np.searchsorted(herald_trials, base, side="left")
        h_hi = np.searchsorted(herald_trials, b1, side="left")
        mask = np.zeros(b1 - base, dtype=np.uint8)
        mask[herald_trials[h_lo:h_hi] - base] = 1
        out += fold_coincidences(
            trials_sorted[lo:hi] - base,
            times_sorted[lo:hi],
            mask,
            period,
            bin_width,
            n_bins,
            max_lag,
        )
    return out


def simulate_run(source: SourceParams, memory: Optional[MemoryConfig],
                 analyzer: Optional[PolarState], duration_trials: int,
                 seed: int, bin_width: float = 2e-9, noise_periods: int = 8,
                 workers: int = 1, run_index: int = 0) -> CoincidenceHistogram:
    """End-to-end counting simulation of one configuration.

    memory=None sends every signal photon down the transmitted path;
    analyzer=None removes the polarizer.  The histogram covers
    (noise_periods + 1) trial periods of click-herald delay.
    """
    if duration_trials < 1:
        raise DomainError("duration_trials must be >= 1")
    if noise_periods < 1:
        raise DomainError("noise_periods must be >= 1")
    if workers < 1:
        raise DomainError("workers must be >= 1")
    if not 0 <= run_index < 2048:
        raise DomainError("run_index must be in [0, 2048)")
    base_index = run_index << 21
    n_chunks = (duration_trials + _CHUNK - 1) // _CHUNK
    if n_chunks > (1 << 21):
        raise DomainError("duration_trials exceeds the supported run size")
    period = source.trial_period

    # --- per-photon fate table ---------------------------------------
    eta_chain = source.transmission_signal * source.detector_efficiency
    if memory is None:
        transmission = 1.0
        orders = ()
        effs = ()
        centers = [0.0]
    else:
        if memory.transmission_override is not None:
            transmission = memory.transmission_override
        else:
            transmission = _comb_transmission(memory.comb_h)
        orders = _echo_orders(memory, period)
        effs = _echo_efficiencies(memory, orders)
        if transmission + sum(effs) > 1.0 + 1e-9:
            raise ConfigurationError(
                "transmitted plus retrieved probability exceeds 1"
            )
        delta = memory.comb_h.periodicity_delta
        centers = [0.0] + [k / delta for k in orders]

    if analyzer is None:
        p_polar = [1.0] * (1 + len(orders))
    else:
        if memory is None:
            p_polar = [_with_extinction(1.0, source.extinction_ratio)]
        else:
            probs = [born_probability(memory.input_polarization, analyzer)]
            for k in orders:
                retrieved = retrieve_polarization(
                    memory.input_polarization,
                    memory.excitation.detuning,
                    k / memory.comb_h.periodicity_delta,
                    phase_plate=memory.excitation.phase0,
                )
                probs.append(born_probability(retrieved, analyzer))
            p_polar = [_with_extinction(p, source.extinction_ratio) for p in probs]

    path_probs = [transmission] + list(effs)
    click_probs = np.array(
        [pp * eta_chain * pol for pp, pol in zip(path_probs, p_polar)]
    )
    cum_probs = np.cumsum(click_probs)

    if memory is None:
        sigma_in = 5e-9 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        sigmas = np.array([sigma_in])
    else:
        sigma_in = memory.photon_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        echo_fwhm = 0.886 / memory.comb_h.bandwidth
        sigma_echo = math.hypot(sigma_in, echo_fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0))))
        sigmas = np.array([sigma_in] + [sigma_echo] * len(orders))
    centers = np.array(centers)

    # --- pass 1: occupancy scan ---------------------------------------
    def scan(c):
        start = c * _CHUNK
        size = min(_CHUNK, duration_trials - start)
        return _scan_chunk(source, seed, base_index, c, start, size)

    if workers == 1:
        scanned = [scan(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scanned = list(pool.map(scan, range(n_chunks)))
    pair_trials = np.concatenate([s[0] for s in scanned])
    pair_mult = np.concatenate([s[1] for s in scanned])
    real_heralds = np.concatenate([s[2] for s in scanned])

    # --- global noise streams -----------------------------------------
    rng_noise = stream(seed, STREAM_NOISE, run_index)
    lam = duration_trials * period * source.dark_rate
    n_false = rng_noise.poisson(lam)
    false_heralds = np.sort(rng_noise.integers(0, duration_trials, n_false))
    n_dark = rng_noise.poisson(lam)
    dark_trials = rng_noise.integers(0, duration_trials, n_dark)
    dark_times = rng_noise.random(n_dark) * period
    n_bg = rng_noise.poisson(duration_trials * period * source.background_rate)
    bg_trials = rng_noise.integers(0, duration_trials, n_bg)
    bg_times = rng_noise.random(n_bg) * period

    heralds = np.unique(np.concatenate([real_heralds, false_heralds]))

    # --- pass 2: fates inside herald neighbourhoods --------------------
    if heralds.size and pair_trials.size:
        pos = np.searchsorted(heralds, pair_trials - noise_periods, side="left")
        near = heralds[np.minimum(pos, heralds.size - 1)]
        active = (pos < heralds.size) & (near <= pair_trials)
    else:
        active = np.zeros(pair_trials.size, dtype=bool)
    act_trials = pair_trials[active]
    act_mult = pair_mult[active]
    act_chunk = act_trials // _CHUNK

    def fates(c):
        sel = act_chunk == c
        return _fate_chunk(
            seed, base_index, c, act_trials[sel], act_mult[sel],
            cum_probs, centers, sigmas, period,
        )

    chunk_ids = np.unique(act_chunk)
    if workers == 1:
        fated = [fates(c) for c in chunk_ids]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fated = list(pool.map(fates, chunk_ids))
    if fated:
        sig_trials = np.concatenate([f[0] for f in fated])
        sig_times = np.concatenate([f[1] for f in fated])
        sig_cats = np.concatenate([f[2] for f in fated])
    else:
        sig_trials = np.empty(0, dtype=np.int64)
        sig_times = np.empty(0)
        sig_cats = np.empty(0, dtype=np.int64)

    # --- fold per category ---------------------------------------------
    n_bins = int(round((noise_periods + 1) * period / bin_width))
    labels = ["transmitted"] + [f"echo{k}" for k in orders] + ["dark", "background"]
    per_cat = []
    total = np.zeros(n_bins, dtype=np.int64)
    for idx in range(1 + len(orders)):
        sel = sig_cats == idx
        h = _fold_all(sig_trials[sel], sig_times[sel], heralds,
                      duration_trials, period, bin_width, n_bins, noise_periods)
        per_cat.append(int(h.sum()))
        total += h
    for trials, times in ((dark_trials, dark_times), (bg_trials, bg_times)):
        h = _fold_all(trials, times, heralds, duration_trials, period,
                      bin_width, n_bins, noise_periods)
        per_cat.append(int(h.sum()))
        total += h

    if memory is None:
        sig_center = 0.0
        half = TRANSMITTED_WINDOW / 2.0
        signal_window = (0.0, TRANSMITTED_WINDOW)
    else:
        sig_center = memory.storage_time
        half = RETRIEVED_WINDOW / 2.0
        signal_window = (sig_center - half, sig_center + half)
    noise_window = (signal_window[0] + period, signal_window[1] + period)

    return CoincidenceHistogram(
        bin_width=bin_width,
        counts=total,
        signal_window=signal_window,
        noise_window=noise_window,
        period=period,
        noise_periods=noise_periods,
        n_heralds=int(heralds.size),
        n_trials=duration_trials,
        category_counts=tuple(zip(labels, per_cat)),
    )


# ---------------------------------------------------------------------------
# correlation estimators
# ---------------------------------------------------------------------------

def g2_cross(hist: CoincidenceHistogram) -> G2Result:
    """Cross-correlation from the signal window vs satellite windows.

    g2 is the ratio of window-normalized rates; satellite windows are
    the noise window repeated at multiples of the trial period.  The
    Poisson error is g2 * sqrt(1/n_peak + 1/n_offset).
    """
    n_peak = hist.window_counts(hist.signal_window)
    w_sig = hist.signal_window[1] - hist.signal_window[0]
    w_noise = hist.noise_window[1] - hist.noise_window[0]
    n_offset = 0
    for m in range(hist.noise_periods):
        shift = m * hist.period
        n_offset += hist.window_counts(
            (hist.noise_window[0] + shift, hist.noise_window[1] + shift)
        )
    if n_offset == 0:
        raise UndefinedEstimateError(
            "no counts in the offset windows; integrate more trials "
            "before estimating g2"
        )
    rate_peak = n_peak / w_sig
    rate_offset = n_offset / (w_noise * hist.noise_periods)
    g2 = rate_peak / rate_offset
    if n_peak == 0:
        return G2Result(0.0, 0.0, 0, int(n_offset))
    sigma = g2 * math.sqrt(1.0 / n_peak + 1.0 / n_offset)
    return G2Result(float(g2), float(sigma), int(n_peak), int(n_offset))


def heralded_autocorr_bound(g2_si: float, bound_fn=None) -> float:
    """Upper bound on the heralded signal autocorrelation.

    The default rule 4/x is monotone decreasing and crosses 1 (the
    single-photon boundary) at g2_si = 4.
    """
    if not g2_si > 0.0:
        raise DomainError(f"g2_si must be positive, got {g2_si}")
    if bound_fn is None:
        bound_fn = lambda x: 4.0 / x
    return float(bound_fn(g2_si))


def g2_vs_storage(source: SourceParams, memory: MemoryConfig,
                  storage_times: Sequence[float], seed: int,
                  duration_trials: int, analyzer: Optional[PolarState] = None,
                  bin_width: float = 2e-9, noise_periods: int = 8,
                  workers: int = 1) -> Tuple[G2Result, ...]:
    """One g2 estimate per storage time, reprogramming the comb period.

    storage_time 0 means the transmitted (no memory) configuration;
    other times move the first echo order to that delay by setting the
    grating period to 1/t at fixed finesse.
    """
    results = []
    for i, t in enumerate(storage_times):
        if t == 0.0:
            mem_t = None
        elif t == memory.storage_time:
            mem_t = memory
        else:
            if t <= 0.0:
                raise DomainError("storage times must be >= 0")
            old = memory.comb_h.periodicity_delta
            scale = (1.0 / t) / old
            comb_h = replace(
                memory.comb_h,
                periodicity_delta=1.0 / t,
                tooth_fwhm=memory.comb_h.tooth_fwhm * scale,
            )
            comb_v = replace(
                memory.comb_v,
                periodicity_delta=1.0 / t,
                tooth_fwhm=memory.comb_v.tooth_fwhm * scale,
            )
            mem_t = replace(memory, comb_h=comb_h, comb_v=comb_v, storage_time=t)
        hist = simulate_run(
            source, mem_t, analyzer, duration_trials, seed,
            bin_width=bin_width, noise_periods=noise_periods,
            workers=workers, run_index=i,
        )
        results.append(g2_cross(hist))
    return tuple(results)
