"""Simulation toolkit for cheat-sensitive single-photon weak coin flipping."""

from .adversary import alice_x_attack, bob_optimal_attack, interest, sweep_alice
from .errors import ConfigError, DegenerateError, DomainError, NumericalError, WcfError
from .optics import (
    InterferenceModel,
    PathEfficiencies,
    Reflectivities,
    detection_probabilities,
    effective_visibility,
)
from .protocol import (
    ChannelModel,
    Outcome,
    OutcomeDistribution,
    classify_outcome,
    honest_outcomes,
    honest_reflectivities,
    metrics,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelModel",
    "ConfigError",
    "DegenerateError",
    "DomainError",
    "InterferenceModel",
    "NumericalError",
    "Outcome",
    "OutcomeDistribution",
    "PathEfficiencies",
    "Reflectivities",
    "WcfError",
    "alice_x_attack",
    "bob_optimal_attack",
    "classify_outcome",
    "detection_probabilities",
    "effective_visibility",
    "honest_outcomes",
    "honest_reflectivities",
    "interest",
    "metrics",
    "sweep_alice",
]
