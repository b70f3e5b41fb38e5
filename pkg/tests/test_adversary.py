import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcfsim.adversary import (
    alice_x_attack,
    bob_interest,
    bob_optimal_attack,
    fairness_under_sanction,
    interest,
    sanction_by_win_transfer,
    sweep_alice,
    x_grid,
)
from wcfsim.errors import DegenerateError, DomainError
from wcfsim.optics import PathEfficiencies
from wcfsim.protocol import OutcomeDistribution, honest_outcomes, honest_reflectivities

REFERENCE = PathEfficiencies.reference_setup()
positive_unit = st.floats(0.01, 1.0)
factorised = st.builds(
    PathEfficiencies.from_components,
    positive_unit, positive_unit, positive_unit, positive_unit, positive_unit, positive_unit,
)


@st.composite
def distributions(draw):
    w = np.array([draw(st.floats(0.0, 1.0)) for _ in range(5)])
    w[0] += 1e-3
    return OutcomeDistribution(*(w / w.sum()))


def test_bob_attack_values():
    dist = bob_optimal_attack(REFERENCE, 0.96)
    assert dist.p_bob_sanctioned == pytest.approx(0.08400689509886591, abs=1e-15)
    assert dist.p_bob_wins + dist.p_bob_sanctioned == pytest.approx(1.0, abs=1e-15)
    blind = PathEfficiencies(**{**REFERENCE.as_dict(), "eta_a_s": 0.0})
    assert bob_optimal_attack(blind, 0.96).p_bob_wins == 1.0


@settings(max_examples=200, deadline=None)
@given(factorised, st.floats(0.0, 1.0))
def test_alice_at_honest_x_is_honest(eff, v):
    x_h = honest_reflectivities(eff, v).x
    cheat = alice_x_attack(x_h, eff, v)
    honest = honest_outcomes(eff, v)
    assert cheat.as_tuple() == pytest.approx(honest.as_tuple(), abs=1e-12)


def test_alice_at_honest_x_reference_setup():
    x_h = honest_reflectivities(REFERENCE, 0.96).x
    cheat = alice_x_attack(x_h, REFERENCE, 0.96)
    honest = honest_outcomes(REFERENCE, 0.96)
    assert cheat.p_alice_wins == pytest.approx(honest.p_alice_wins, abs=1e-15)
    assert cheat.p_bob_wins == pytest.approx(honest.p_bob_wins, abs=1e-15)
    assert cheat.p_alice_sanctioned == pytest.approx(honest.p_alice_sanctioned, rel=2e-3)


def test_alice_attack_extremes():
    full = alice_x_attack(1.0, REFERENCE, 0.96)
    assert full.p_bob_wins == 0.0
    assert full.p_alice_wins == pytest.approx(REFERENCE.eta_a_v1 / 2)
    with pytest.raises(DomainError):
        alice_x_attack(1.2, REFERENCE, 0.96)


@settings(max_examples=500, deadline=None)
@given(distributions(), st.floats(0.0, 1.0))
def test_fairness_interest_identity(dist, delta):
    assert fairness_under_sanction(dist, delta) == pytest.approx(
        1 - abs(interest(dist, delta)), abs=1e-12
    )
    assert -1.0 <= interest(dist, delta) <= 1.0


@settings(max_examples=200, deadline=None)
@given(distributions(), st.floats(0.0, 5.0))
def test_bob_interest_mirrors_alice(dist, delta):
    swapped = OutcomeDistribution(
        dist.p_bob_wins, dist.p_alice_wins, dist.p_bob_sanctioned, dist.p_alice_sanctioned, dist.p_abort
    )
    assert bob_interest(dist, delta) == pytest.approx(interest(swapped, delta), abs=1e-15)


def test_delta_validation():
    dist = honest_outcomes(REFERENCE, 0.96)
    with pytest.raises(DomainError):
        interest(dist, -0.5)
    with pytest.raises(DomainError):
        sanction_by_win_transfer(dist, 1.5)
    with pytest.raises(DegenerateError):
        interest(OutcomeDistribution(0, 0, 0, 0, 1), 1.0)


def test_honest_interest_is_small_and_negative():
    dist = honest_outcomes(REFERENCE, 0.96)
    assert interest(dist, 0.0) == 0.0
    assert interest(dist, 1.0) < 0.0


def test_sweep_shapes_and_consistency():
    xs = x_grid(51)
    sweep = sweep_alice(REFERENCE, 0.96, xs, deltas=(0.0, 1.0))
    assert sweep.interest.shape == (2, 51)
    assert sweep.resolution == pytest.approx(0.02)
    for i in (0, 17, 50):
        point = alice_x_attack(xs[i], REFERENCE, 0.96)
        assert sweep.p_alice_wins[i] == pytest.approx(point.p_alice_wins, abs=1e-15)
        assert sweep.interest[1, i] == pytest.approx(interest(point, 1.0), abs=1e-12)
    with pytest.raises(DomainError):
        sweep_alice(REFERENCE, 0.96, [0.5, 1.5])
    with pytest.raises(DomainError):
        x_grid(1)
