"""Honest-protocol logic: outcomes, honest parameters, channel losses and metrics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import DegenerateError, DomainError
from .optics import (
    CLAMP_TOL,
    PathEfficiencies,
    Reflectivities,
    check_unit,
    clamp_unit,
)

#: Natural-log attenuation of one VOA per km of simulated fibre.
ATTENUATION_PER_KM = 0.02


class Outcome(str, enum.Enum):
    ALICE_WINS = "alice_wins"
    BOB_WINS = "bob_wins"
    ALICE_SANCTIONED = "alice_sanctioned"
    BOB_SANCTIONED = "bob_sanctioned"
    ABORT = "abort"


@dataclass(frozen=True)
class OutcomeDistribution:
    p_alice_wins: float
    p_bob_wins: float
    p_alice_sanctioned: float
    p_bob_sanctioned: float
    p_abort: float

    SUM_TOL = 1e-9

    def __post_init__(self):
        for name in self.field_names():
            object.__setattr__(self, name, clamp_unit(name, getattr(self, name)))
        total = sum(self.as_tuple())
        if abs(total - 1.0) > self.SUM_TOL:
            raise DomainError(f"outcome probabilities sum to {total!r}, not 1")

    @classmethod
    def from_partial(
        cls, alice_wins: float, bob_wins: float, alice_sanctioned: float, bob_sanctioned: float
    ) -> "OutcomeDistribution":
        """Fill in the abort probability as the remainder."""
        rest = 1.0 - (alice_wins + bob_wins + alice_sanctioned + bob_sanctioned)
        return cls(alice_wins, bob_wins, alice_sanctioned, bob_sanctioned, rest)

    @staticmethod
    def field_names() -> tuple[str, ...]:
        return (
            "p_alice_wins",
            "p_bob_wins",
            "p_alice_sanctioned",
            "p_bob_sanctioned",
            "p_abort",
        )

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in self.field_names())

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.field_names(), self.as_tuple()))

    def __getitem__(self, outcome: Outcome) -> float:
        return getattr(self, "p_" + Outcome(outcome).value)


@dataclass(frozen=True)
class ChannelModel:
    """Simulated distance: every VOA on a path multiplies it by exp(-a L)."""

    distance_km: float = 0.0
    attenuation_per_km: float = ATTENUATION_PER_KM
    voa_count_per_path: dict = field(
        default_factory=lambda: {name: 1 for name in PathEfficiencies.names()}
    )

    def __post_init__(self):
        if not (math.isfinite(self.distance_km) and self.distance_km >= 0):
            raise DomainError(f"distance_km={self.distance_km!r} must be >= 0")
        if not (math.isfinite(self.attenuation_per_km) and self.attenuation_per_km >= 0):
            raise DomainError(f"attenuation_per_km={self.attenuation_per_km!r} must be >= 0")
        known = set(PathEfficiencies.names())
        for name, count in self.voa_count_per_path.items():
            if name not in known:
                raise DomainError(f"unknown path {name!r} in voa_count_per_path")
            if int(count) != count or count < 0:
                raise DomainError(f"voa count for {name} must be a non-negative integer")

    def transmission(self) -> float:
        return math.exp(-self.attenuation_per_km * self.distance_km)


@dataclass(frozen=True)
class Metrics:
    fairness: float
    correctness: float


def classify_outcome(b: int, a: int | None = None, v1: int | None = None, v2: int | None = None) -> Outcome:
    """Map the announced bit and the verification clicks to an outcome."""
    if b not in (0, 1):
        raise DomainError(f"b must be 0 or 1, got {b!r}")
    if b == 0:
        if a is not None or v1 not in (0, 1) or v2 not in (0, 1):
            raise DomainError("b=0 requires v1, v2 in {0, 1} and no a flag")
        if v2:
            return Outcome.ALICE_SANCTIONED
        return Outcome.ALICE_WINS if v1 else Outcome.ABORT
    if a not in (0, 1) or v1 is not None or v2 is not None:
        raise DomainError("b=1 requires a in {0, 1} and no v1/v2 flags")
    return Outcome.BOB_SANCTIONED if a else Outcome.BOB_WINS


def honest_reflectivities(eff: PathEfficiencies, visibility: float) -> Reflectivities:
    """Reflectivities balancing the arms (z = 1/2) and equalising the wins."""
    v = check_unit("visibility", visibility)
    if eff.eta_b_v1 <= 0.0 or eff.eta_b_y <= 0.0:
        raise DegenerateError("honest reflectivities need eta_b_v1 > 0 and eta_b_y > 0")
    x = 1.0 / (1.0 + eff.eta_a_v1 / eff.eta_b_v1 + eff.eta_a_v1 / eff.eta_b_y * (1.0 + v))
    y = 1.0 / (1.0 + eff.eta_b_v1 / eff.eta_b_y * (1.0 + v))
    return Reflectivities(x, y, 0.5)


def apply_channel(eff: PathEfficiencies, channel: ChannelModel) -> PathEfficiencies:
    t = channel.transmission()
    counts = channel.voa_count_per_path
    return eff.scaled({name: t ** counts.get(name, 0) for name in PathEfficiencies.names()})


def honest_outcomes(eff: PathEfficiencies, visibility: float) -> OutcomeDistribution:
    """Closed-form outcome distribution for two honest parties at zero slow phase.

    Dark counts and double pairs are neglected, so Bob is never sanctioned.
    """
    refl = honest_reflectivities(eff, visibility)
    win = refl.x * eff.eta_a_v1 * (1.0 + visibility)
    alice_sanctioned = refl.x * eff.eta_a_v2 * (1.0 - visibility)
    return OutcomeDistribution.from_partial(win, win, alice_sanctioned, 0.0)


def _win_sum(dist: OutcomeDistribution) -> float:
    total = dist.p_alice_wins + dist.p_bob_wins
    if total <= 0.0:
        raise DegenerateError("both winning probabilities are zero")
    return total


def fairness(dist: OutcomeDistribution) -> float:
    return 1.0 - abs((dist.p_alice_wins - dist.p_bob_wins) / _win_sum(dist))


def correctness(dist: OutcomeDistribution) -> float:
    # not clamped: adversarial distributions may give C < 0
    return 1.0 - (dist.p_alice_sanctioned + dist.p_bob_sanctioned) / _win_sum(dist)


def metrics(dist: OutcomeDistribution) -> Metrics:
    return Metrics(fairness(dist), correctness(dist))


def balanced_reflectivities() -> Reflectivities:
    """Lossless reflectivities that also equalise the optimal cheating gains."""
    r = 1.0 / math.sqrt(2.0)
    return Reflectivities(1.0 - r, r, 2.0 - math.sqrt(2.0))


@dataclass(frozen=True)
class CalibrationProbes:
    """Probabilities measured to read back the reflectivities.

    ``p_da``: switch forced to 1, click in D_A.
    ``p_db``: click in D_B.
    ``p_v1_blocked`` / ``p_v2_blocked``: Bob's arm blocked, switch forced to 0.
    """

    p_da: float
    p_db: float
    p_v1_blocked: float
    p_v2_blocked: float


def calibration_probes(refl: Reflectivities, eff: PathEfficiencies) -> CalibrationProbes:
    x, y, z = refl.x, refl.y, refl.z
    return CalibrationProbes(
        p_da=x * eff.eta_a_s,
        p_db=(1 - x) * (1 - y) * eff.eta_b_y,
        p_v1_blocked=x * z * eff.eta_a_v1,
        p_v2_blocked=x * (1 - z) * eff.eta_a_v2,
    )


def _estimate(name: str, value: float) -> float:
    try:
        return clamp_unit(name, value, tol=1e-9)
    except DomainError as exc:
        raise DomainError(f"inferred reflectivity out of range: {exc}") from None


def estimate_x(p_da: float, eff: PathEfficiencies) -> float:
    if eff.eta_a_s <= 0.0:
        raise DegenerateError("estimating x needs eta_a_s > 0")
    return _estimate("x", p_da / eff.eta_a_s)


def estimate_y(p_db: float, x: float, eff: PathEfficiencies) -> float:
    """Invert the D_B click probability ``(1-x)(1-y) eta_b_y``."""
    if x >= 1.0:
        raise DegenerateError("x = 1 leaves no light in Bob's arm; y is unobservable")
    if eff.eta_b_y <= 0.0:
        raise DegenerateError("estimating y needs eta_b_y > 0")
    return _estimate("y", 1.0 - p_db / ((1.0 - x) * eff.eta_b_y))


def estimate_z(
    p_v1_blocked: float,
    x: float,
    eff: PathEfficiencies,
    p_v2_blocked: float | None = None,
    agreement_tol: float = 1e-6,
) -> float:
    if x <= 0.0:
        raise DegenerateError("x = 0 leaves Alice's arm dark; z is unobservable")
    if eff.eta_a_v1 <= 0.0:
        raise DegenerateError("estimating z needs eta_a_v1 > 0")
    z = _estimate("z", p_v1_blocked / (x * eff.eta_a_v1))
    if p_v2_blocked is not None:
        if eff.eta_a_v2 <= 0.0:
            raise DegenerateError("the V2 estimate of z needs eta_a_v2 > 0")
        z2 = _estimate("z", 1.0 - p_v2_blocked / (x * eff.eta_a_v2))
        if abs(z2 - z) > agreement_tol:
            raise DomainError(f"V1 and V2 estimates of z disagree ({z!r} vs {z2!r})")
    return z


def estimate_reflectivities(
    p_da: float,
    p_db: float,
    p_v1_blocked: float,
    eff: PathEfficiencies,
    p_v2_blocked: float | None = None,
    agreement_tol: float = 1e-6,
) -> Reflectivities:
    """Invert the calibration probes into (x, y, z).

    When ``p_v2_blocked`` is given, the z value it implies must agree with
    the V1-based one to ``agreement_tol``.
    """
    x = estimate_x(p_da, eff)
    y = estimate_y(p_db, x, eff)
    z = estimate_z(p_v1_blocked, x, eff, p_v2_blocked, agreement_tol)
    return Reflectivities(x, y, z)


__all__ = [
    "ATTENUATION_PER_KM",
    "CLAMP_TOL",
    "CalibrationProbes",
    "ChannelModel",
    "Metrics",
    "Outcome",
    "OutcomeDistribution",
    "apply_channel",
    "balanced_reflectivities",
    "calibration_probes",
    "classify_outcome",
    "correctness",
    "estimate_reflectivities",
    "estimate_x",
    "estimate_y",
    "estimate_z",
    "fairness",
    "honest_outcomes",
    "honest_reflectivities",
    "metrics",
]
