"""lgi-echo: desk-scale simulator and analysis harness for a photonic
qubit stored as a delocalized excitation shared by two detuned
atomic-frequency-comb memories.

The package covers the full chain of the experiment it models:
heralded single-photon generation, comb storage and echo retrieval,
the beating between the two memories, Leggett-Garg correlators built
from projective D/A measurements, time-translation-invariance and
monotonicity (Markovianity) checks, and polarization tomography.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DomainError,
    InvariantViolation,
    LgiEchoError,
    UndefinedEstimateError,
)

__all__ = [
    "__version__",
    "LgiEchoError",
    "InvariantViolation",
    "DomainError",
    "ConfigurationError",
    "UndefinedEstimateError",
]
