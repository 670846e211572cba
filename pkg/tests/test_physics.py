import numpy as np
import pytest

from rydberg_parity.compensation import free_triangle_shift
from rydberg_parity.gadgets import GADGETS, two_body_gadget
from rydberg_parity.layout import Atom, AtomLayout, Physics, gadget_layout
from rydberg_parity.mwis import GraphSizeError
from rydberg_parity.physics import (
    GeometryError, all_state_energies, diagonal_energy, physical_ground_state, spectrum,
    violating_states_minimum,
)
from rydberg_parity.placement import free_triangle_layout

UNIT = Physics(d=1.0, c6=1.0)


def atoms(*specs, physics=UNIT):
    return AtomLayout(tuple(Atom(pos, w, "parity", "m") for pos, w in specs), physics)


def test_diagonal_energy_examples():
    assert diagonal_energy(atoms(((0.0, 0.0), 2.0)), [0]) == 0
    assert diagonal_energy(atoms(((0.0, 0.0), 2.0)), [1]) == -2
    two = atoms(((0.0, 0.0), 0.0), ((2.0, 0.0), 0.0))
    assert diagonal_energy(two, [1, 1]) == pytest.approx(1 / 64, abs=1e-15)


def test_coincident_atoms():
    with pytest.raises(GeometryError):
        diagonal_energy(atoms(((0.0, 0.0), 1.0), ((0.0, 0.0), 1.0)), [1, 1])


def test_free_triangle_split():
    lay = free_triangle_layout()
    rep = spectrum(lay)
    top = rep.energies[rep.manifold]
    assert len(top) == 4
    c = free_triangle_shift(lay.physics.d, lay.physics.c6)
    # |ABC> sits c_a above the three single-auxiliary states
    assert top.max() - top.min() == pytest.approx(c, abs=1e-12)
    abc = rep.states[rep.manifold][np.argmax(top)]
    assert sorted(np.flatnonzero(abc)) == sorted(lay.modules[0].corners.values())


def test_empty_layout():
    rep = spectrum(AtomLayout(()))
    assert rep.w_max == 0 and rep.delta_g == np.inf


def test_cap():
    lay = atoms(*[((3.0 * k, 0.0), 1.0) for k in range(45)])
    with pytest.raises(GraphSizeError):
        spectrum(lay)


def test_zero_c6_is_weight_spectrum():
    lay = free_triangle_layout(Physics(c6=0.0))
    rep = spectrum(lay)
    assert np.allclose(rep.energies, -rep.weights)
    assert rep.delta_s == 0


def test_ground_state_avoids_positive_field():
    lay = free_triangle_layout()
    lab = next(iter(lay.representatives))
    k = lay.representatives[lab]
    state, _ = physical_ground_state(lay.with_fields({lab: 0.05}))
    assert not state[k]
    assert state.astype(float) @ lay.weights() == 3


def test_negative_detunings_give_empty_state():
    lay = atoms(((0.0, 0.0), -1.0), ((3.0, 0.0), -2.0))
    state, e = physical_ground_state(lay)
    assert not state.any() and e == 0


def test_two_body_ground_state():
    lay = gadget_layout(two_body_gadget())
    state, _ = physical_ground_state(lay)
    on = {lay.atoms[i].role for i in np.flatnonzero(state)}
    ids = [v.id for v in two_body_gadget().vertices]
    chosen = {ids[i] for i in np.flatnonzero(state)}
    assert chosen in ({"A", "B"}, {"c"})


@pytest.mark.parametrize("name", sorted(GADGETS))
def test_violating_states_above_lower_classes(name):
    lay = gadget_layout(GADGETS[name]())
    rep = spectrum(lay)
    bound = rep.energies[rep.classes <= 2].max()
    assert violating_states_minimum(lay) > bound


def test_exhaustive_energies_cover_independent_sets():
    lay = free_triangle_layout()
    occ, e = all_state_energies(lay)
    assert occ.shape == (64, 6)
    rep = spectrum(lay)
    assert e.min() == pytest.approx(rep.energies.min())


def test_csv_format():
    text = spectrum(free_triangle_layout()).to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "state,weight_class,energy"
    es = [float(l.split(",")[2]) for l in lines[1:]]
    assert es == sorted(es)
    assert lines[1].split(",")[1] == "W_max"
    absolute = spectrum(free_triangle_layout(Physics.from_ratio(alpha=2.0))).to_csv(absolute=True)
    assert float(absolute.splitlines()[1].split(",")[2]) == pytest.approx(2 * es[0], rel=1e-12)
