"""Cheating strategies and the deterrent-weighted interest functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, DomainError
from .optics import PathEfficiencies, check_unit
from .protocol import OutcomeDistribution, fairness, honest_reflectivities

#: Default number of evenly spaced x values in an Alice sweep over [0, 1].
DEFAULT_X_POINTS = 200


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if not (math.isfinite(delta) and delta >= 0.0):
        raise DomainError(f"deterrent factor delta={delta!r} must be >= 0")
    return delta


def bob_optimal_attack(eff: PathEfficiencies, visibility: float) -> OutcomeDistribution:
    """Bob always claims b=1; he is caught when Alice's own detector clicks."""
    refl = honest_reflectivities(eff, visibility)
    caught = refl.x * eff.eta_a_s
    return OutcomeDistribution(0.0, 1.0 - caught, 0.0, caught, 0.0)


def _alice_terms(x, y_h: float, eff: PathEfficiencies, visibility: float):
    x = np.asarray(x, dtype=float)
    wins = 0.5 * (
        x * eff.eta_a_v1
        + (1 - x) * y_h * eff.eta_b_v1
        + 2 * visibility * np.sqrt(x * (1 - x) * y_h * eff.eta_a_v1 * eff.eta_b_v1)
    )
    sanctioned = 0.5 * (
        x * eff.eta_a_v2
        + (1 - x) * y_h * eff.eta_b_v2
        - 2 * visibility * np.sqrt(x * (1 - x) * y_h * eff.eta_a_v2 * eff.eta_b_v2)
    )
    bob_wins = (1 - x) * (1 - y_h) * eff.eta_b_y
    return wins, sanctioned, bob_wins


def alice_x_attack(x: float, eff: PathEfficiencies, visibility: float) -> OutcomeDistribution:
    """Alice raises her reflectivity to ``x`` while Bob keeps y_h and z = 1/2."""
    x = check_unit("x", x)
    y_h = honest_reflectivities(eff, visibility).y
    wins, sanctioned, bob_wins = _alice_terms(x, y_h, eff, visibility)
    return OutcomeDistribution.from_partial(float(wins), float(bob_wins), float(sanctioned), 0.0)


def _interest(gain: float, loss: float, penalty: float, delta: float) -> float:
    denom = gain + loss + delta * penalty
    if denom <= 0.0:
        raise DegenerateError("interest denominator vanishes")
    return (gain - loss - delta * penalty) / denom


def interest(dist: OutcomeDistribution, delta: float) -> float:
    """Alice's interest in cheating for deterrent factor ``delta``; lies in [-1, 1]."""
    return _interest(dist.p_alice_wins, dist.p_bob_wins, dist.p_alice_sanctioned, _check_delta(delta))


def bob_interest(dist: OutcomeDistribution, delta: float) -> float:
    """Mirror of :func:`interest` with the roles of Alice and Bob swapped."""
    return _interest(dist.p_bob_wins, dist.p_alice_wins, dist.p_bob_sanctioned, _check_delta(delta))


def sanction_by_win_transfer(dist: OutcomeDistribution, delta: float) -> OutcomeDistribution:
    """Hand the win to Bob with probability ``delta`` whenever Alice is caught."""
    delta = _check_delta(delta)
    if delta > 1.0:
        raise DomainError(f"win-transfer sanction needs delta in [0, 1], got {delta!r}")
    moved = delta * dist.p_alice_sanctioned
    return OutcomeDistribution(
        dist.p_alice_wins,
        dist.p_bob_wins + moved,
        dist.p_alice_sanctioned - moved,
        dist.p_bob_sanctioned,
        dist.p_abort,
    )


def fairness_under_sanction(dist: OutcomeDistribution, delta: float) -> float:
    """Fairness after the win-transfer sanction; equals ``1 - |interest(dist, delta)|``."""
    return fairness(sanction_by_win_transfer(dist, delta))


@dataclass(frozen=True)
class AliceSweep:
    """Outcome probabilities and interest curves of an x-attack sweep."""

    x: np.ndarray
    p_alice_wins: np.ndarray
    p_alice_sanctioned: np.ndarray
    p_bob_wins: np.ndarray
    deltas: tuple[float, ...]
    interest: np.ndarray  # shape (len(deltas), len(x))

    @property
    def resolution(self) -> float:
        return float(np.max(np.diff(self.x))) if self.x.size > 1 else 0.0

    def argmax_wins(self) -> float:
        return float(self.x[np.argmax(self.p_alice_wins)])

    def argmax_interest(self) -> np.ndarray:
        return self.x[np.argmax(self.interest, axis=1)]


def x_grid(num: int = DEFAULT_X_POINTS, start: float = 0.0, stop: float = 1.0) -> np.ndarray:
    if num < 2:
        raise DomainError("an x grid needs at least two points")
    check_unit("start", start)
    check_unit("stop", stop)
    return np.linspace(start, stop, num)


def sweep_alice(
    eff: PathEfficiencies,
    visibility: float,
    xs=None,
    deltas=(0.0, 0.5, 1.0, 2.0),
) -> AliceSweep:
    """Evaluate the x-attack over a grid of reflectivities and deterrent factors."""
    xs = x_grid() if xs is None else np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or np.any((xs < 0) | (xs > 1)):
        raise DomainError("x values must be a non-empty 1-d sequence in [0, 1]")
    deltas = tuple(_check_delta(d) for d in deltas)
    y_h = honest_reflectivities(eff, visibility).y
    wins, sanctioned, bob_wins = _alice_terms(xs, y_h, eff, visibility)
    rows = []
    for d in deltas:
        denom = wins + bob_wins + d * sanctioned
        if np.any(denom <= 0):
            raise DegenerateError("interest denominator vanishes on the x grid")
        rows.append((wins - bob_wins - d * sanctioned) / denom)
    return AliceSweep(
        x=xs,
        p_alice_wins=wins,
        p_alice_sanctioned=sanctioned,
        p_bob_wins=bob_wins,
        deltas=deltas,
        interest=np.array(rows).reshape(len(deltas), xs.size),
    )
