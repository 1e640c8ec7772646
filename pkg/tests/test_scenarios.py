"""End-to-end scenario runs: artifacts, metrics, determinism, reports."""

import json
import os

import pytest

from lgi_echo import __version__
from lgi_echo.config import parse_config
from lgi_echo.errors import DomainError, InvariantViolation
from lgi_echo.scenarios import RunReport, emit_report, run_scenario
from lgi_echo.stationarity import DEFAULT_FAMILIES

DIGEST = "0" * 64


def run(tmp_path, doc, subdir="out"):
    doc = dict(doc)
    doc.setdefault("output", {})
    doc["output"] = dict(doc["output"], directory=str(tmp_path / subdir))
    return run_scenario(parse_config(json.dumps(doc)))


def read(report, name):
    for path in report.outputs:
        if os.path.basename(path) == name:
            with open(path) as fh:
                return fh.read()
    raise AssertionError(f"{name} not among outputs {report.outputs}")


def csv_rows(text):
    return [line.split(",") for line in text.splitlines()[2:]]


# ---------------------------------------------------------------------------
# report container
# ---------------------------------------------------------------------------

class TestRunReport:
    def make(self, **kw):
        base = dict(scenario="lgi_envelope", seed=0, digest=DIGEST,
                    wall_time=1.0, outputs=(), metrics=(("a", 1),))
        base.update(kw)
        return RunReport(**base)

    def test_unknown_scenario(self):
        with pytest.raises(InvariantViolation, match="unknown scenario"):
            self.make(scenario="nope")

    def test_negative_wall_time(self):
        with pytest.raises(InvariantViolation, match="wall_time"):
            self.make(wall_time=-0.1)

    def test_bad_digest(self):
        with pytest.raises(InvariantViolation, match="digest"):
            self.make(digest="abc")

    def test_metric_lookup(self):
        rep = self.make(metrics=(("x", 2.0), ("y", "ok")))
        assert rep.metric("y") == "ok"
        with pytest.raises(KeyError):
            rep.metric("z")

    def test_to_dict_keys(self):
        d = self.make().to_dict()
        assert set(d) == {"scenario", "seed", "digest", "wall_time_s",
                          "outputs", "metrics"}


# ---------------------------------------------------------------------------
# lgi_envelope
# ---------------------------------------------------------------------------

class TestLgiEnvelope:
    def test_exact_mode_metrics(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope"})
        assert rep.metric("k_plus_min") == pytest.approx(-1.5, abs=1e-9)
        assert rep.metric("t_plus_min_ns") == pytest.approx(200.0 / 3, abs=1e-6)
        assert rep.metric("k_minus_min") == pytest.approx(-1.5, abs=1e-9)
        assert rep.metric("t_minus_min_ns") == pytest.approx(100.0 / 3, abs=1e-6)
        assert rep.metric("verdict") == "VIOLATION"
        assert rep.metric("violation_significance") is None

    def test_exact_mode_no_violation_at_full_beat(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope",
                             "statistics": {"probe_time": 200e-9}})
        assert rep.metric("k_minus_probe") == pytest.approx(-1.0, abs=1e-12)
        assert rep.metric("verdict") == "NO VIOLATION"

    def test_sampled_mode(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope", "defaults": "paper",
                             "statistics": {"seed": 1}})
        assert rep.metric("probe_time_ns") == pytest.approx(62.5)
        assert 0.03 <= rep.metric("sigma_plus_probe") <= 0.15
        assert rep.metric("violation_significance") > 4.0
        assert rep.metric("verdict") == "VIOLATION"

    def test_csv_shape_and_header(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope",
                             "statistics": {"seed": 5}})
        text = read(rep, "envelope.csv")
        lines = text.splitlines()
        assert lines[0] == f"# lgi-echo v{__version__} scenario=lgi_envelope seed=5"
        assert lines[1].startswith("t_ns,k_t,k_2t,k_minus,k_plus")
        assert len(lines) == 2 + 48


# ---------------------------------------------------------------------------
# stationarity_grid
# ---------------------------------------------------------------------------

class TestStationarityGrid:
    def test_exact_mode(self, tmp_path):
        rep = run(tmp_path, {"scenario": "stationarity_grid"})
        assert rep.metric("mode") == "exact"
        assert rep.metric("max_t_dependence") <= 1e-12
        assert rep.metric("p_value") == 1.0
        assert rep.metric("passed") is True
        rows = csv_rows(read(rep, "grid.csv"))
        assert len(rows) == len(DEFAULT_FAMILIES) * 10
        assert all(r[3] == "0.0" for r in rows)

    def test_sampled_mode(self, tmp_path):
        rep = run(tmp_path, {"scenario": "stationarity_grid",
                             "statistics": {"counts_per_point": 400,
                                            "seed": 2}})
        assert rep.metric("mode") == "sampled"
        assert rep.metric("dof") == len(DEFAULT_FAMILIES) * 9
        assert 0.0 < rep.metric("p_value") <= 1.0
        assert rep.metric("passed") is True
        rows = csv_rows(read(rep, "grid.csv"))
        assert len(rows) == len(DEFAULT_FAMILIES) * 10
        # saturated families sit at q_hat exactly 0 or 1 and get a zero
        # binomial sigma; interior cells must carry a finite error bar
        for r in rows:
            q, s = float(r[2]), float(r[3])
            assert (s > 0.0) == (0.0 < q < 1.0)
        assert any(float(r[3]) > 0.0 for r in rows)


# ---------------------------------------------------------------------------
# markovianity
# ---------------------------------------------------------------------------

class TestMarkovianity:
    def test_exact_mode_distances_contract(self, tmp_path):
        rep = run(tmp_path, {"scenario": "markovianity"})
        assert rep.metric("mode") == "exact"
        assert rep.metric("passed") is True
        rows = csv_rows(read(rep, "distance.csv"))
        dists = [float(r[1]) for r in rows]
        assert all(a > b for a, b in zip(dists, dists[1:]))
        assert all(r[2] == "0.0" for r in rows)

    def test_tomographic_mode(self, tmp_path):
        rep = run(tmp_path, {"scenario": "markovianity",
                             "statistics": {"shots_per_basis": 50_000,
                                            "n_bootstrap": 24}})
        assert rep.metric("mode") == "tomographic"
        assert rep.metric("initial_distance") > 0.95
        assert rep.metric("final_distance") < rep.metric("initial_distance")
        assert rep.metric("max_increase") <= rep.metric("threshold")
        assert rep.metric("passed") is True


# ---------------------------------------------------------------------------
# g2_vs_storage
# ---------------------------------------------------------------------------

class TestG2VsStorage:
    def test_ideal_chain_small_run(self, tmp_path):
        rep = run(tmp_path, {"scenario": "g2_vs_storage",
                             "statistics": {"trials": 3_000_000, "seed": 6}})
        assert rep.metric("all_nonclassical") is True
        assert rep.metric("g2_transmitted") > 100.0
        assert rep.metric("autocorr_bound") < 0.05
        rows = csv_rows(read(rep, "g2.csv"))
        assert [r[0] for r in rows] == ["0.000000", "50.000000",
                                        "125.000000", "250.000000"]
        assert all(int(r[3]) > 0 for r in rows)


# ---------------------------------------------------------------------------
# echo_trace
# ---------------------------------------------------------------------------

class TestEchoTrace:
    def test_echo_metrics(self, tmp_path):
        rep = run(tmp_path, {"scenario": "echo_trace"})
        assert rep.metric("echo_time_ns") == pytest.approx(125.0, abs=2.0)
        assert rep.metric("echo_fwhm_ns") == pytest.approx(10.0, abs=3.0)
        assert rep.metric("second_echo_time_ns") == pytest.approx(250.0, abs=2.0)
        assert rep.metric("second_echo_ratio") < 1.0
        text = read(rep, "trace.csv")
        assert text.splitlines()[1] == "time_ns,intensity"


# ---------------------------------------------------------------------------
# tomography_demo
# ---------------------------------------------------------------------------

class TestTomographyDemo:
    def test_exact_mode_recovers_truth(self, tmp_path):
        rep = run(tmp_path, {"scenario": "tomography_demo"})
        assert rep.metric("mode") == "exact"
        assert rep.metric("trace_distance_to_truth") <= 1e-9
        assert rep.metric("psd") is True
        assert rep.metric("converged") is True

    def test_sampled_mode_artifacts(self, tmp_path):
        rep = run(tmp_path, {"scenario": "tomography_demo",
                             "statistics": {"shots_per_basis": 20_000,
                                            "seed": 4}})
        assert rep.metric("mode") == "sampled"
        assert rep.metric("trace_distance_to_truth") < 0.05
        counts = csv_rows(read(rep, "counts.csv"))
        assert [r[0] for r in counts] == ["H", "V", "H+iV", "H+V"]
        assert all(r[1] == "20000" for r in counts)
        recon = json.loads(read(rep, "reconstruction.json"))
        assert json.loads(read(rep, "summary.json"))["metrics"]["psd"] is True
        assert recon  # parsed non-empty document


# ---------------------------------------------------------------------------
# output handling
# ---------------------------------------------------------------------------

class TestOutputs:
    def test_format_csv_only(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope",
                             "output": {"format": "csv"}})
        names = sorted(os.path.basename(p) for p in rep.outputs)
        assert names == ["envelope.csv"]

    def test_format_json_only(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope",
                             "output": {"format": "json"}})
        names = sorted(os.path.basename(p) for p in rep.outputs)
        assert names == ["summary.json"]

    def test_format_both(self, tmp_path):
        rep = run(tmp_path, {"scenario": "tomography_demo"})
        names = sorted(os.path.basename(p) for p in rep.outputs)
        assert names == ["counts.csv", "reconstruction.json", "summary.json"]

    def test_summary_has_no_wall_time(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope"})
        summary = json.loads(read(rep, "summary.json"))
        assert set(summary) == {"scenario", "seed", "digest", "metrics"}
        assert summary["digest"] == rep.digest

    def test_same_seed_byte_identical(self, tmp_path):
        doc = {"scenario": "lgi_envelope", "defaults": "paper",
               "statistics": {"seed": 3}}
        a = run(tmp_path, doc, subdir="a")
        b = run(tmp_path, doc, subdir="b")
        assert a.digest == b.digest
        assert read(a, "envelope.csv") == read(b, "envelope.csv")
        assert read(a, "summary.json") == read(b, "summary.json")

    def test_different_seed_differs(self, tmp_path):
        base = {"scenario": "lgi_envelope", "defaults": "paper"}
        a = run(tmp_path, dict(base, statistics={"seed": 3}), subdir="a")
        b = run(tmp_path, dict(base, statistics={"seed": 4}), subdir="b")
        assert a.digest != b.digest
        assert read(a, "envelope.csv") != read(b, "envelope.csv")

    def test_workers_do_not_change_bytes(self, tmp_path):
        doc = {"scenario": "g2_vs_storage",
               "statistics": {"trials": 2_000_000, "seed": 6}}
        a = run(tmp_path, dict(doc, statistics=dict(doc["statistics"],
                                                    workers=1)), subdir="a")
        b = run(tmp_path, dict(doc, statistics=dict(doc["statistics"],
                                                    workers=3)), subdir="b")
        assert read(a, "g2.csv") == read(b, "g2.csv")
        assert read(a, "summary.json") == read(b, "summary.json")

    def test_failure_removes_partial_outputs(self, tmp_path):
        out = tmp_path / "out"
        blocker = out / "summary.json"
        blocker.mkdir(parents=True)
        doc = {"scenario": "lgi_envelope",
               "output": {"directory": str(out)}}
        with pytest.raises(OSError):
            run_scenario(parse_config(json.dumps(doc)))
        assert sorted(os.listdir(out)) == ["summary.json"]


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------

class TestEmitReport:
    def test_json_round_trip(self, tmp_path):
        rep = run(tmp_path, {"scenario": "echo_trace"})
        doc = json.loads(emit_report(rep, "json"))
        assert doc == rep.to_dict()

    def test_text_carries_same_numbers(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope", "defaults": "paper"})
        text = emit_report(rep, "text")
        doc = json.loads(emit_report(rep, "json"))
        parsed = {}
        for line in text.splitlines():
            if line.startswith("  ") and ": " in line:
                name, value = line.strip().split(": ", 1)
                parsed[name] = json.loads(value)
        assert parsed == doc["metrics"]
        assert f"digest: {rep.digest}" in text

    def test_text_verdict_line_violation(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope", "defaults": "paper",
                             "statistics": {"seed": 1}})
        last = emit_report(rep, "text").strip().splitlines()[-1]
        assert last.startswith("VIOLATION: k_plus=")
        assert "sigma=" in last and "significance=" in last

    def test_text_verdict_line_no_violation(self, tmp_path):
        rep = run(tmp_path, {"scenario": "lgi_envelope",
                             "statistics": {"probe_time": 200e-9}})
        assert emit_report(rep, "text").strip().splitlines()[-1] == "NO VIOLATION"

    def test_no_verdict_for_other_scenarios(self, tmp_path):
        rep = run(tmp_path, {"scenario": "echo_trace"})
        last = emit_report(rep, "text").strip().splitlines()[-1]
        assert last.startswith("  second_echo_ratio")

    def test_bad_format_rejected(self, tmp_path):
        rep = run(tmp_path, {"scenario": "echo_trace"})
        with pytest.raises(DomainError, match="format"):
            emit_report(rep, "yaml")
