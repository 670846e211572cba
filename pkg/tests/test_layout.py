import itertools
from dataclasses import replace

import numpy as np
import pytest

from rydberg_parity.gadgets import three_body_gadget
from rydberg_parity.layout import (
    Atom, AtomLayout, LayoutError, LinkSpec, Physics, blockade_graph, gadget_layout, validate,
)
from rydberg_parity.mwis import mwis_solve
from rydberg_parity.parity import ParityConstraint, ParityLayout, ParityQubit, check_constraints, lhz_encode
from rydberg_parity.placement import (
    Assembler, PlacementConfig, PlacementError, RoutingError, decompose, triangle_positions, free_triangle_layout, hexdist,
    mlm_layout, module_link_layout, place, route_link,
)
from rydberg_parity.problem import Problem


def pair(dist):
    return AtomLayout((Atom((0.0, 0.0), 1.0, "parity", "m"), Atom((dist, 0.0), 1.0, "parity", "m")))


def test_blockade_pairs():
    assert blockade_graph(pair(2.0)).edges == frozenset()
    assert blockade_graph(pair(1.0)).edges == {(0, 1)}


def test_triangle_edges():
    lay = gadget_layout(three_body_gadget())
    assert len(blockade_graph(lay).edges) == 9
    assert blockade_graph(lay).edges == lay.intended_edges()


def test_validate_pass_and_window():
    lay = free_triangle_layout()
    assert validate(lay).ok
    bad = lay.with_physics(replace(lay.physics, rb=2.0))
    report = validate(bad)
    assert not report.ok and any(v.startswith("window") for v in report.violations)


def test_validate_guard_and_spacing():
    weak = free_triangle_layout(Physics.from_ratio(2.0))
    assert any(v.startswith("guard") for v in validate(weak).violations)
    assert any(v.startswith("spacing") for v in validate(pair(0.5)).violations)


def test_validate_even_link():
    atoms = tuple(Atom((float(k), 0.0), 1.0, "link", "L0") for k in range(4))
    lay = AtomLayout(atoms, links=(LinkSpec((0, 1, 2, 3), "x"),))
    report = validate(lay)
    assert any("link parity" in v for v in report.violations)


def test_fields_and_shifts():
    lay = free_triangle_layout()
    lab = next(iter(lay.representatives))
    k = lay.representatives[lab]
    f = lay.with_fields({lab: 0.25})
    assert f.atoms[k].detuning == pytest.approx(lay.atoms[k].weight - 0.25)
    s = f.with_shifts({0: 0.1}).with_shifts({0: 0.1})
    assert s.atoms[0].shift == pytest.approx(0.2)
    assert s.cleared().detunings().tolist() == lay.weights().tolist()
    with pytest.raises(LayoutError):
        lay.with_fields({(7, 9): 1.0})
    with pytest.raises(LayoutError):
        lay.with_shifts({99: 1.0})


def test_json_round_trip():
    lay = mlm_layout(5).with_shifts({3: 0.125})
    assert AtomLayout.loads(lay.dumps()) == lay
    tri = place(lhz_encode(full(3)))
    lab = next(iter(tri.representatives))
    tri = tri.with_fields({lab: -0.5})
    assert AtomLayout.loads(tri.dumps()) == tri


# ---------------------------------------------------------------- placement


def full(n):
    return Problem.from_dict({(a, b): 1.0 for a, b in itertools.combinations(range(n), 2)}, n)


def test_single_triangle_placement():
    lay = place(lhz_encode(full(3)))
    tpl = gadget_layout(three_body_gadget())
    assert len(lay.atoms) == 6 and not lay.links
    assert sorted(a.weight for a in lay.atoms) == sorted(a.weight for a in tpl.atoms)
    assert len(blockade_graph(lay).edges) == 9
    assert validate(lay).ok


def two_triangles():
    q = [ParityQubit(lab, 0.0, lab) for lab in [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]]
    c = [ParityConstraint(((0, 1), (0, 2), (1, 2)), 1), ParityConstraint(((1, 2), (1, 3), (2, 3)), 1)]
    return ParityLayout(tuple(q), tuple(c))


def test_two_triangles_sharing_one_qubit():
    parity = two_triangles()
    lay = place(parity, PlacementConfig(crosstalk_weight=0.0))
    assert len(lay.atoms) == 13
    assert [l.length for l in lay.links] == [3]
    assert validate(lay).ok
    _assert_weight_balance(lay, parity)


def _assert_weight_balance(lay, parity):
    _, sets = mwis_solve(blockade_graph(lay))
    labels = parity.labels
    seen = set()
    for s in sets:
        for link in lay.links:
            assert (link.atoms[0] in s) == (link.atoms[-1] in s)
        bits = tuple(int(lay.representatives[lab] in s) for lab in labels)
        assert check_constraints(bits, parity.constraints, labels)[0]
        seen.add(bits)
    total = sum(check_constraints(b, parity.constraints, labels)[0]
                for b in itertools.product((0, 1), repeat=len(labels)))
    assert len(sets) == len(seen) == total


def test_n4_reference_placement():
    parity = lhz_encode(full(4))
    lay = place(parity)
    assert sorted(m.kind for m in lay.modules) == ["rhombic", "three_body", "three_body"]
    assert len(lay.atoms) <= 30
    assert all(l.length % 2 == 1 for l in lay.links)
    assert validate(lay).ok
    _assert_weight_balance(lay, parity)


def test_decompose_n4():
    kinds = sorted(p.kind for p in decompose(lhz_encode(full(4))))
    assert kinds == ["rhombic", "three_body", "three_body"]
    unfused = sorted(p.kind for p in decompose(lhz_encode(full(4)), fuse_rhombi=False))
    assert unfused == ["three_body"] * 4


def test_placement_config_validation():
    with pytest.raises(PlacementError):
        PlacementConfig(link_length=4)
    with pytest.raises(PlacementError):
        PlacementConfig(link_length=7, max_link_length=5)


def test_route_link_parity_and_induced():
    path = route_link((0, 0), (4, 0), 5, {(0, 0), (4, 0)})
    assert path is not None and len(path) == 3
    chain = [(0, 0), *path, (4, 0)]
    for a, b in itertools.combinations(range(len(chain)), 2):
        assert (hexdist(chain[a], chain[b]) == 1) == (b == a + 1)
    assert route_link((0, 0), (4, 0), 5, {(0, 0), (4, 0), (2, 0), (2, -1), (1, 1), (3, -1)}) is None


def test_assembler_rejects_even_link():
    asm = Assembler(Physics())
    asm.add_module("three_body", triangle_positions(), {"A": "A", "B": "B", "C": "C"})
    with pytest.raises(RoutingError):
        asm.add_link("A", 0, 1, [(5.0, 5.0), (6.0, 5.0)])


def test_module_link_layout_counts():
    lay = module_link_layout(5)
    assert len(lay.atoms) == 6 + 4
    assert lay.links[0].length == 5
    assert validate(lay).ok
    with pytest.raises(LayoutError):
        module_link_layout(4)


def test_mlm_layout_counts():
    lay = mlm_layout(3)
    assert len(lay.atoms) == 13
    assert validate(lay).ok
