"""Scenario configuration documents: parsing, defaults, canonical form.

A configuration is a single JSON object with optional sections
`physics`, `source`, `statistics` and `output` plus a `scenario` name.
`"defaults": "paper"` switches the base values of the source and the
statistics sections to the published working point (lossy detection
chain, dark and background rates, sampled counts); without it the base
is an ideal noiseless chain and exact closed-form statistics.  Physics
defaults are the published memory parameters in both cases.

Every section key must name a known field; unknown keys are rejected
with their full path.  The canonical serialization is key-sorted JSON,
and its SHA-256 digest identifies a run configuration.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

from .afc import CombSpec
from .errors import ConfigurationError
from .lgi import ExcitationState
from .photons import MemoryConfig, SourceParams, paper_source
from .quantum import Channel

SCENARIOS = (
    "lgi_envelope",
    "stationarity_grid",
    "markovianity",
    "g2_vs_storage",
    "echo_trace",
    "tomography_demo",
)

OUTPUT_FORMATS = ("csv", "json", "both")


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicsConfig:
    """Memory, excitation and channel parameters (published defaults)."""

    detuning: float = 5e6
    grating_delta: float = 8e6
    bandwidth: float = 100e6
    tooth_fwhm: float = 2e6
    optical_depth: float = 8.0
    background_depth: float = 0.05
    phase0: float = 0.0
    storage_time: float = 125e-9
    photon_fwhm: float = 5e-9
    decay_time: float = 150e-9
    retrieval_prefactor: float = 0.15
    channel_kind: str = "dephasing"
    channel_rate: float = 2e6
    n_atoms: int = 10000

    def __post_init__(self):
        for name in ("detuning", "grating_delta", "bandwidth", "tooth_fwhm",
                     "storage_time", "photon_fwhm"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"physics.{name} must be positive")
        if self.n_atoms < 2:
            raise ConfigurationError("physics.n_atoms must be >= 2")
        # constructing the derived objects runs their own validation
        self.excitation()
        self.channel()
        self.comb_pair()

    def excitation(self) -> ExcitationState:
        return ExcitationState(detuning=self.detuning, phase0=self.phase0)

    def channel(self) -> Channel:
        try:
            return Channel(kind=self.channel_kind, rate=self.channel_rate)
        except Exception as exc:
            raise ConfigurationError(f"physics.channel_kind/rate: {exc}") from exc

    def comb_pair(self):
        """H and V combs offset by +-detuning/2 around the carrier."""
        def comb(offset):
            return CombSpec(
                periodicity_delta=self.grating_delta,
                tooth_fwhm=self.tooth_fwhm,
                bandwidth=self.bandwidth,
                optical_depth=self.optical_depth,
                background_depth=self.background_depth,
                center_offset=offset,
            )

        try:
            return comb(-self.detuning / 2.0), comb(self.detuning / 2.0)
        except Exception as exc:
            raise ConfigurationError(f"physics comb parameters: {exc}") from exc

    def memory(self) -> MemoryConfig:
        comb_h, comb_v = self.comb_pair()
        try:
            return MemoryConfig(
                comb_h=comb_h,
                comb_v=comb_v,
                excitation=self.excitation(),
                storage_time=self.storage_time,
                photon_fwhm=self.photon_fwhm,
                decay_time=self.decay_time,
                retrieval_prefactor=self.retrieval_prefactor,
            )
        except Exception as exc:
            raise ConfigurationError(f"physics memory parameters: {exc}") from exc


@dataclass(frozen=True)
class StatisticsConfig:
    """Sample sizes and seeding.

    counts_per_point and shots_per_basis equal to 0 select the exact
    (noiseless) mode of the scenarios that support one.
    """

    seed: int = 0
    counts_per_point: int = 0
    shots_per_basis: int = 0
    trials: int = 600_000_000
    n_bootstrap: int = 48
    workers: int = 1
    probe_time: float = 62.5e-9

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigurationError("statistics.seed must be >= 0")
        for name in ("counts_per_point", "shots_per_basis", "n_bootstrap"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"statistics.{name} must be >= 0")
        if self.trials < 1:
            raise ConfigurationError("statistics.trials must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("statistics.workers must be >= 1")
        if self.probe_time < 0.0:
            raise ConfigurationError("statistics.probe_time must be >= 0")


# Counts per grid point that put the k_plus error bar at the published
# 0.07: sigma scales as ~1.98/sqrt(N) at the 62.5 ns probe.
PAPER_COUNTS_PER_POINT = 800

PAPER_SHOTS_PER_BASIS = 100_000


def paper_statistics() -> StatisticsConfig:
    return StatisticsConfig(
        counts_per_point=PAPER_COUNTS_PER_POINT,
        shots_per_basis=PAPER_SHOTS_PER_BASIS,
    )


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    format: str = "both"

    def __post_init__(self):
        if not self.directory:
            raise ConfigurationError("output.directory must be non-empty")
        if self.format not in OUTPUT_FORMATS:
            raise ConfigurationError(
                f"output.format must be one of {OUTPUT_FORMATS}, got {self.format!r}"
            )

    @property
    def write_csv(self) -> bool:
        return self.format in ("csv", "both")

    @property
    def write_json(self) -> bool:
        return self.format in ("json", "both")


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated configuration for one scenario run."""

    scenario: str
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    source: SourceParams = field(default_factory=paper_source)
    statistics: StatisticsConfig = field(default_factory=StatisticsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(
                f"scenario must be one of {SCENARIOS}, got {self.scenario!r}"
            )

    def to_document(self) -> dict:
        return {
            "scenario": self.scenario,
            "physics": asdict(self.physics),
            "source": asdict(self.source),
            "statistics": asdict(self.statistics),
            "output": asdict(self.output),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=2) + "\n"

    def digest(self) -> str:
        """SHA-256 over the result-determining part of the document.

        Where the files land (output section) and how the work is split
        (statistics.workers) must not change a single output byte, so
        they are excluded: equal digests promise byte-identical
        artifacts.
        """
        doc = self.to_document()
        del doc["output"]
        doc["statistics"] = {k: v for k, v in doc["statistics"].items()
                             if k != "workers"}
        compact = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(compact.encode()).hexdigest()


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_SECTION_TYPES = {
    "physics": PhysicsConfig,
    "source": SourceParams,
    "statistics": StatisticsConfig,
    "output": OutputConfig,
}


def _check_value(path: str, value, annotation):
    # json gives bool for true/false; bool is an int subclass, so test
    # it first to keep flags out of numeric fields
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path} must be a number, got {value!r}")
        return float(value)
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{path} must be an integer, got {value!r}")
        return value
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{path} must be a string, got {value!r}")
        return value
    raise ConfigurationError(f"{path} cannot be set from a configuration file")


def _build_section(cls, base, section: dict, name: str):
    if not isinstance(section, dict):
        raise ConfigurationError(f"section {name!r} must be an object")
    known = {f.name: f.type for f in fields(cls)}
    updates = {}
    for key, value in section.items():
        if key not in known:
            raise ConfigurationError(f"unknown key {name}.{key}")
        updates[key] = _check_value(f"{name}.{key}", value, known[key])
    if not updates:
        return base
    try:
        return replace(base, **updates)
    except Exception as exc:
        raise ConfigurationError(f"section {name!r}: {exc}") from exc


def parse_config(text: str, scenario: Optional[str] = None) -> ScenarioConfig:
    """Parse and validate a configuration document.

    `scenario` (e.g. the CLI positional) overrides the document's own
    scenario key.  Unknown keys anywhere are rejected by full path.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("configuration must be a JSON object")

    known_top = {"defaults", "scenario"} | set(_SECTION_TYPES)
    for key in doc:
        if key not in known_top:
            raise ConfigurationError(f"unknown key {key}")

    preset = doc.get("defaults")
    if preset not in (None, "paper"):
        raise ConfigurationError(
            f"defaults must be 'paper' when present, got {preset!r}"
        )
    if preset == "paper":
        bases = {
            "physics": PhysicsConfig(),
            "source": paper_source(),
            "statistics": paper_statistics(),
            "output": OutputConfig(),
        }
    else:
        bases = {
            "physics": PhysicsConfig(),
            "source": SourceParams(pair_probability=2e-3),
            "statistics": StatisticsConfig(),
            "output": OutputConfig(),
        }

    sections = {}
    for name, cls in _SECTION_TYPES.items():
        sections[name] = _build_section(cls, bases[name], doc.get(name, {}), name)

    chosen = scenario if scenario is not None else doc.get("scenario")
    if chosen is None:
        raise ConfigurationError("no scenario named (document key or CLI argument)")
    if not isinstance(chosen, str):
        raise ConfigurationError(f"scenario must be a string, got {chosen!r}")
    return ScenarioConfig(scenario=chosen, **sections)


def default_document(scenario: str = "lgi_envelope") -> str:
    """Canonical JSON of the paper-preset configuration."""
    config = ScenarioConfig(
        scenario=scenario,
        physics=PhysicsConfig(),
        source=paper_source(),
        statistics=paper_statistics(),
        output=OutputConfig(),
    )
    return config.canonical_json()
