"""Comb sampling, echo emission, retrieval efficiency and polarization."""

import math

import numpy as np
import pytest

from lgi_echo.afc import (
    AtomEnsemble,
    CombSpec,
    EchoTrace,
    echo_efficiency,
    echo_trace,
    min_contributing_ions,
    retrieve_polarization,
    sample_ensemble,
    trace_fwhm,
    trace_peak,
)
from lgi_echo.errors import ConfigurationError, DomainError, InvariantViolation
from lgi_echo.quantum import PolarState, born_probability

MHZ = 1e6
NS = 1e-9

PAPER_COMB = CombSpec(periodicity_delta=8 * MHZ, tooth_fwhm=2 * MHZ, bandwidth=100 * MHZ)


def gaussian_dephasing_intensity(fwhm, delta, k):
    """Closed-form echo intensity factor for Gaussian teeth.

    The k-th revival amplitude is the characteristic function of the
    tooth profile at t = k/delta; squared it is
    exp(-pi^2 k^2 / (2 ln 2 F^2)) with finesse F = delta/fwhm.
    """
    if fwhm == 0.0:
        return 1.0
    finesse = delta / fwhm
    return math.exp(-math.pi**2 * k**2 / (2.0 * math.log(2.0) * finesse**2))


# ---------------------------------------------------------------------------
# spec validation
# ---------------------------------------------------------------------------

class TestCombSpec:
    def test_unresolvable_teeth_rejected(self):
        with pytest.raises(ConfigurationError):
            CombSpec(periodicity_delta=8 * MHZ, tooth_fwhm=9 * MHZ, bandwidth=100 * MHZ)

    def test_narrow_envelope_rejected(self):
        with pytest.raises(ConfigurationError):
            CombSpec(periodicity_delta=8 * MHZ, tooth_fwhm=2 * MHZ, bandwidth=4 * MHZ)

    def test_background_must_stay_below_depth(self):
        with pytest.raises(ConfigurationError):
            CombSpec(8 * MHZ, 2 * MHZ, 100 * MHZ, optical_depth=0.04, background_depth=0.05)

    def test_paper_comb_counts_13_teeth(self):
        assert PAPER_COMB.tooth_count() == 13
        assert PAPER_COMB.finesse() == pytest.approx(4.0)


# ---------------------------------------------------------------------------
# ensemble sampling
# ---------------------------------------------------------------------------

class TestSampleEnsemble:
    def test_determinism(self):
        a = sample_ensemble(PAPER_COMB, 5000, seed=1)
        b = sample_ensemble(PAPER_COMB, 5000, seed=1)
        assert np.array_equal(a.detunings, b.detunings)
        assert np.array_equal(a.tooth_indices, b.tooth_indices)
        c = sample_ensemble(PAPER_COMB, 5000, seed=2)
        assert not np.array_equal(a.detunings, c.detunings)

    def test_weight_normalization(self):
        ens = sample_ensemble(PAPER_COMB, 12345, seed=3)
        assert abs(np.sum(ens.weights**2) - 1.0) < 1e-9

    def test_comb_structure_visible_in_histogram(self):
        ens = sample_ensemble(PAPER_COMB, 10000, seed=1)
        counts, edges = np.histogram(
            ens.detunings, bins=np.arange(-52 * MHZ, 52.5 * MHZ, MHZ)
        )
        centers = 0.5 * (edges[:-1] + edges[1:])
        # occupied bins cluster on the teeth
        hot = centers[counts > 0.25 * counts.max()]
        clusters = np.split(hot, np.where(np.diff(hot) > 2 * MHZ)[0] + 1)
        assert len(clusters) >= 12
        cluster_centers = np.array([c.mean() for c in clusters])
        spacing = np.diff(cluster_centers)
        assert np.all(np.abs(spacing - 8 * MHZ) < 1.5 * MHZ)

    def test_degenerate_single_tooth(self):
        spec = CombSpec(periodicity_delta=8 * MHZ, tooth_fwhm=2 * MHZ, bandwidth=8 * MHZ,
                        background_depth=0.0)
        ens = sample_ensemble(spec, 2000, seed=4)
        assert np.all(ens.tooth_indices == ens.tooth_indices[0])

    def test_detunings_stay_attached_to_teeth(self):
        ens = sample_ensemble(PAPER_COMB, 20000, seed=9)
        centers = ens.tooth_indices * PAPER_COMB.periodicity_delta + PAPER_COMB.center_offset
        assert np.all(np.abs(ens.detunings - centers) <= PAPER_COMB.bandwidth / 2)

    def test_offset_shifts_spectrum(self):
        shifted = CombSpec(8 * MHZ, 2 * MHZ, 100 * MHZ, center_offset=5 * MHZ)
        a = sample_ensemble(PAPER_COMB, 3000, seed=6)
        b = sample_ensemble(shifted, 3000, seed=6)
        assert np.allclose(b.detunings - a.detunings, 5 * MHZ)

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            sample_ensemble(PAPER_COMB, 0, seed=1)
        with pytest.raises(InvariantViolation):
            AtomEnsemble(np.zeros(3), np.ones(3), np.zeros(3, dtype=int), 3)


# ---------------------------------------------------------------------------
# echo trace
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def trace():
    ens = sample_ensemble(PAPER_COMB, 10000, seed=1)
    return echo_trace(ens, t_max=300 * NS, bin_width=2 * NS)


class TestEchoTrace:
    def test_normalized_at_zero(self, trace):
        assert trace.intensity[0] == pytest.approx(1.0)

    def test_first_echo_in_125ns_bin(self, trace):
        t_pk, _ = trace_peak(trace, 50 * NS, 200 * NS)
        assert int(t_pk // (2 * NS)) == int(125 * NS // (2 * NS))

    def test_second_order_echo_smaller(self, trace):
        _, i1 = trace_peak(trace, 110 * NS, 140 * NS)
        t2, i2 = trace_peak(trace, 235 * NS, 265 * NS)
        assert abs(t2 - 250 * NS) <= 2 * NS
        assert 0 < i2 < i1

    def test_echo_fwhm_near_10ns(self, trace):
        width = trace_fwhm(trace, 125 * NS)
        assert 7 * NS <= width <= 13 * NS

    def test_single_tooth_never_revives(self):
        spec = CombSpec(8 * MHZ, 2 * MHZ, 8 * MHZ, background_depth=0.0)
        ens = sample_ensemble(spec, 20000, seed=2)
        tr = echo_trace(ens, t_max=500 * NS, bin_width=10 * NS)
        # free-induction decay: no structure beyond Monte-Carlo jitter
        assert np.all(np.diff(tr.intensity) < 0.02)
        assert tr.intensity[-1] < 0.05

    def test_worker_count_does_not_change_bits(self):
        ens = sample_ensemble(PAPER_COMB, 4000, seed=5)
        t1 = echo_trace(ens, 300 * NS, 0.5 * NS, workers=1)
        t4 = echo_trace(ens, 300 * NS, 0.5 * NS, workers=4)
        assert np.array_equal(t1.intensity, t4.intensity)

    def test_empty_and_bad_bins_rejected(self):
        ens = sample_ensemble(PAPER_COMB, 10, seed=1)
        with pytest.raises(DomainError):
            echo_trace(ens, 100 * NS, 0.0)
        with pytest.raises(DomainError):
            echo_trace(ens, 1 * NS, 2 * NS)

    def test_convergence_in_atom_number(self):
        peaks = []
        for n in (1000, 10000, 100000):
            ens = sample_ensemble(PAPER_COMB, n, seed=11)
            tr = echo_trace(ens, 132 * NS, 2 * NS)
            peaks.append(trace_peak(tr, 115 * NS, 135 * NS)[1])
        assert abs(peaks[2] - peaks[1]) / peaks[2] < 0.05

    def test_csv_export(self, trace, tmp_path):
        path = tmp_path / "trace.csv"
        trace.to_csv(path, header_comment="lgi-echo test")
        lines = path.read_text().splitlines()
        assert lines[0] == "# lgi-echo test"
        assert lines[1] == "time_ns,intensity"
        first = lines[2].split(",")
        assert float(first[0]) == pytest.approx(1.0)  # first bin center, ns
        assert float(first[1]) == pytest.approx(1.0)
        assert len(lines) == 2 + trace.times.size


# ---------------------------------------------------------------------------
# efficiency
# ---------------------------------------------------------------------------

class TestEchoEfficiency:
    def test_ideal_comb_gives_prefactor(self):
        spec = CombSpec(8 * MHZ, 0.0, 100 * MHZ, background_depth=0.0)
        eff = echo_efficiency(spec, 125 * NS, prefactor=0.15)
        assert eff == pytest.approx(0.15, abs=1e-9)

    def test_second_echo_weaker(self):
        e1 = echo_efficiency(PAPER_COMB, 125 * NS)
        e2 = echo_efficiency(PAPER_COMB, 250 * NS)
        assert 0 < e2 < e1

    def test_matches_gaussian_dephasing_oracle(self):
        # frozen oracle values: F=8 -> 0.894723, F=4 -> 0.640848
        for fwhm, expected in ((1 * MHZ, 0.894723), (2 * MHZ, 0.640848)):
            spec = CombSpec(8 * MHZ, fwhm, 100 * MHZ, background_depth=0.0)
            assert expected == pytest.approx(
                gaussian_dephasing_intensity(fwhm, 8 * MHZ, 1), abs=1e-6
            )
            eff = echo_efficiency(spec, 125 * NS, prefactor=1.0, n_atoms=200000)
            assert eff == pytest.approx(expected, abs=0.02)

    def test_doubling_tooth_width_reduces_efficiency(self):
        narrow = CombSpec(8 * MHZ, 1 * MHZ, 100 * MHZ)
        wide = CombSpec(8 * MHZ, 2 * MHZ, 100 * MHZ)
        assert echo_efficiency(wide, 125 * NS) < echo_efficiency(narrow, 125 * NS)

    def test_off_peak_warns_and_returns_small(self):
        with pytest.warns(UserWarning, match="not near a comb revival"):
            eff = echo_efficiency(PAPER_COMB, 60 * NS, prefactor=0.15)
        assert eff < 0.02

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            echo_efficiency(PAPER_COMB, -1 * NS)
        with pytest.raises(DomainError):
            echo_efficiency(PAPER_COMB, 125 * NS, prefactor=0.0)


# ---------------------------------------------------------------------------
# polarization retrieval
# ---------------------------------------------------------------------------

class TestRetrievePolarization:
    def test_zero_detuning_is_identity(self):
        s = PolarState.hv_circular()
        out = retrieve_polarization(s, 0.0, 125 * NS)
        assert abs(out.amp0 - s.amp0) < 1e-15
        assert abs(out.amp1 - s.amp1) < 1e-15

    def test_half_cycle_flips_to_h_minus_v(self):
        out = retrieve_polarization(PolarState.hv_diagonal(), 4 * MHZ, 125 * NS)
        target = PolarState.normalized(1.0, -1.0)
        assert born_probability(out, target) == pytest.approx(1.0, abs=1e-12)

    def test_paper_detuning_overlap(self):
        # 5 MHz, 125 ns: phase 1.25 pi, overlap with H-V is (1+cos(pi/4))/2
        out = retrieve_polarization(PolarState.hv_diagonal(), 5 * MHZ, 125 * NS)
        target = PolarState.normalized(1.0, -1.0)
        expected = (1.0 + math.cos(math.pi / 4)) / 2.0
        assert expected == pytest.approx(0.853553, abs=1e-6)
        assert born_probability(out, target) == pytest.approx(expected, abs=1e-12)

    def test_phase_plate_offsets_phase(self):
        a = retrieve_polarization(PolarState.hv_diagonal(), 4 * MHZ, 125 * NS, phase_plate=np.pi)
        b = PolarState.hv_diagonal()
        assert born_probability(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_phase_linearity(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            v = rng.normal(size=4)
            s = PolarState.normalized(complex(v[0], v[1]), complex(v[2], v[3]))
            t1, t2 = rng.uniform(0, 300 * NS, size=2)
            combined = retrieve_polarization(s, 5 * MHZ, t1 + t2)
            chained = retrieve_polarization(
                retrieve_polarization(s, 5 * MHZ, t1), 5 * MHZ, t2
            )
            assert abs(combined.amp0 - chained.amp0) < 1e-12
            assert abs(combined.amp1 - chained.amp1) < 1e-12

    def test_norm_preserved(self):
        out = retrieve_polarization(PolarState.hv_circular(), 5 * MHZ, 77 * NS, 0.3)
        assert abs(abs(out.amp0) ** 2 + abs(out.amp1) ** 2 - 1.0) < 1e-12

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            retrieve_polarization(PolarState.h(), 5 * MHZ, -1 * NS)


class TestMinContributingIons:
    @pytest.mark.parametrize(
        "bandwidth,linewidth,expected",
        [(100 * MHZ, 11e3, 9091), (5e4, 5e4, 1), (1e9, 1e3, 10**6)],
    )
    def test_examples(self, bandwidth, linewidth, expected):
        assert min_contributing_ions(bandwidth, linewidth) == expected

    def test_domain(self):
        with pytest.raises(DomainError):
            min_contributing_ions(0.0, 1.0)
