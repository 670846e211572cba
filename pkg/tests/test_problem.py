import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rydberg_parity.problem import (
    InteractionTerm, Problem, ProblemError, ProblemSizeError,
    all_configurations, brute_force_ground_states, energy, random_two_body,
)


def test_energy_examples():
    assert energy(Problem.from_dict({(0, 1): 1.0}, 2), (1, 1)) == 1
    assert energy(Problem(3, ()), (1, -1, 1)) == 0
    assert energy(Problem.from_dict({(0, 1, 2): 2.0}, 3), (1, -1, 1)) == -2


def test_energy_length_mismatch():
    with pytest.raises(ProblemError):
        energy(Problem(3, ()), (1, 1))


def test_term_validation():
    with pytest.raises(ProblemError):
        InteractionTerm((1, 0), 1.0)
    with pytest.raises(ProblemError):
        Problem(2, (InteractionTerm((0, 2), 1.0),))
    with pytest.raises(ProblemError):
        Problem(2, (InteractionTerm((0, 1), 1.0), InteractionTerm((0, 1), 2.0)))


def test_brute_force_examples():
    e, s = brute_force_ground_states(Problem.from_dict({(0,): 1.0}, 1))
    assert e == -1 and s == [(-1,)]
    e, s = brute_force_ground_states(Problem.from_dict({(0, 1): -1.0}, 2))
    assert e == -1 and set(s) == {(1, 1), (-1, -1)}


def test_brute_force_size_limit():
    with pytest.raises(ProblemSizeError):
        brute_force_ground_states(Problem(30, ()))


def test_brute_force_matches_energy_scan():
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = random_two_body(4, rng)
        e, winners = brute_force_ground_states(p)
        scan = [energy(p, s) for s in itertools.product((1, -1), repeat=4)]
        assert e == min(scan)
        assert len(winners) == sum(abs(v - e) < 1e-12 for v in scan)
        assert all(energy(p, s) == e for s in winners)


def test_all_configurations_shape():
    c = all_configurations(3)
    assert c.shape == (8, 3)
    assert len({tuple(r) for r in c}) == 8


def test_json_round_trip():
    p = Problem.from_dict({(0, 1): 0.5, (1, 2, 3): -1.25, (2,): 3.0}, 4)
    assert Problem.loads(p.dumps()) == p


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_even_order_flip_symmetry(n, seed):
    p = random_two_body(n, np.random.default_rng(seed), "gaussian")
    for s in all_configurations(n)[:8]:
        assert energy(p, s) == pytest.approx(energy(p, -s), abs=1e-12)
