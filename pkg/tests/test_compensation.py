import math

import numpy as np
import pytest

from oracles import zoom_minimax
from rydberg_parity import compensation as comp
from rydberg_parity.compensation import (
    CompensationError, CompensationShifts, SolverError, aleph, aleph_infinity, apply,
    free_triangle_shift, k1_program, k2_program, k2_standard, local_cross_compensate,
    minimax_compensate, mlm_global_compensate, mlm_groups, module_link_shifts, opposite_aux,
)
from rydberg_parity.physics import spectrum
from rydberg_parity.placement import free_triangle_layout, mlm_layout, module_link_layout, two_arm_module_layout


def test_free_triangle_value_and_scaling():
    assert free_triangle_shift(1.0, 1.0) == pytest.approx(17 / 1728, abs=1e-12)
    assert free_triangle_shift(2.0, 1.0) == pytest.approx(free_triangle_shift(1.0, 1.0) / 64, rel=1e-12)


def test_free_triangle_degenerate():
    lay = free_triangle_layout()
    sh = comp.compensate(lay, "free")
    assert set(sh.shifts.values()) == {free_triangle_shift(1.0, 8.0)}
    assert spectrum(apply(lay, sh)).delta_s < 1e-10


@pytest.mark.parametrize("length", [3, 5, 7])
def test_module_link_degenerate_and_asymmetric(length):
    lay = module_link_layout(length, corner="C")
    sh = module_link_shifts(lay)
    assert spectrum(apply(lay, sh)).delta_s < 1e-10
    m = lay.modules[0]
    c = {name: sh.shifts[opposite_aux(m, m.corners[name])] for name in "ABC"}
    assert c["A"] == pytest.approx(c["B"], abs=1e-12)
    assert abs(c["A"] - c["C"]) > 1e-4


def test_module_link_far_limit():
    sh = module_link_shifts(module_link_layout(3, gap=200.0))
    assert np.allclose(list(sh.shifts.values()), free_triangle_shift(1.0, 8.0), atol=1e-12)


def test_reference_energy_unchanged():
    lay = mlm_layout(5)
    base = spectrum(lay)
    for scheme in ("local", "global"):
        shifted = apply(lay, comp.compensate(lay, scheme))
        sysm = comp.manifold_system(shifted)
        ref_before = comp.manifold_system(lay).energies[comp.manifold_system(lay).reference]
        assert sysm.energies[sysm.reference] == pytest.approx(ref_before, abs=1e-12)
    assert base.manifold.sum() == 8


def test_minimax_zero():
    c, v = minimax_compensate(np.zeros(3), np.eye(3))
    assert v == 0 and np.allclose(c, 0)


def test_minimax_k1_at_one():
    c, v = minimax_compensate(*k1_program(1.0))
    assert v == pytest.approx(1 / 3, abs=1e-9)
    assert np.allclose(c, [-2 / 3, -2 / 3], atol=1e-9)


@pytest.mark.parametrize("r", [-1.0, 0.0, 0.5, 1.0, 2.0, 3.5])
def test_minimax_k2_closed_form(r):
    c, v = minimax_compensate(*k2_program(r))
    assert v == pytest.approx(abs(1 - r) / 2, abs=1e-9)
    assert k2_standard(c, r) == pytest.approx(v, abs=1e-9)
    # summing the four constraints bounds every solution from below
    assert v >= abs(2 - 2 * r) / 4 - 1e-12


@pytest.mark.parametrize("seed", range(6))
def test_minimax_is_lower_bound(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 4))
    inc = rng.integers(0, 2, (6, k)).astype(float)
    off = rng.normal(0, 1, 6)
    _, v = minimax_compensate(off, inc)
    g, _ = zoom_minimax(off, inc, lo=-4, hi=4, steps=(0.1, 0.01, 1e-3), half=12)
    assert v <= g + 1e-9
    assert g <= v + 5e-3


def test_minimax_limits():
    with pytest.raises(SolverError):
        minimax_compensate(np.zeros(3), np.zeros((3, 13)))
    with pytest.raises(SolverError):
        minimax_compensate(np.zeros(3), np.zeros((4, 2)))


def test_aleph_values():
    assert aleph(3, 1.0, 1.0) == pytest.approx(1 / 64, abs=1e-15)
    assert aleph_infinity(1.0, 1.0) == pytest.approx(math.pi**6 / 60480, abs=1e-12)
    vals = [aleph(l) for l in range(3, 43, 2)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < aleph_infinity()
    for l in range(3, 43, 2):
        k = (l - 1) / 2
        assert aleph_infinity() - aleph(l) < (1 / 64) * (1 / 5) * k**-5
    with pytest.raises(CompensationError):
        aleph(4)


def test_two_arm_corrections():
    lay = two_arm_module_layout(3)
    full = local_cross_compensate(lay)
    bare = local_cross_compensate(lay, cross=False)
    m = lay.modules[0]
    x = {name: opposite_aux(m, m.corners[name]) for name in "ABC"}
    a = aleph_infinity(1.0, 8.0)
    assert full.shifts[x["A"]] - bare.shifts[x["A"]] == pytest.approx(-a, abs=1e-12)
    assert full.shifts[x["B"]] - bare.shifts[x["B"]] == pytest.approx(-a / 2, abs=1e-12)
    assert full.shifts[x["C"]] - bare.shifts[x["C"]] == pytest.approx(-a / 2, abs=1e-12)


def test_local_without_arms_is_free():
    sh = local_cross_compensate(free_triangle_layout())
    assert np.allclose(list(sh.shifts.values()), free_triangle_shift(1.0, 8.0), atol=1e-12)


@pytest.mark.parametrize("length", [3, 5, 7, 9])
def test_mlm_global(length):
    lay = mlm_layout(length)
    sysm = mlm_groups(lay)
    assert len(sysm.states) == 8
    sh = mlm_global_compensate(lay)
    after = comp.max_deviation(apply(lay, sh))
    off = sysm.energies - sysm.energies[sysm.reference]
    _, opt = minimax_compensate(off, sysm.incidence())
    assert after == pytest.approx(opt, abs=1e-9)
    none = spectrum(lay).delta_s
    glob = spectrum(apply(lay, sh)).delta_s
    loc = spectrum(apply(lay, comp.compensate(lay, "local"))).delta_s
    assert glob < none and glob <= loc <= none


def test_local_converges_to_global():
    d = []
    for length in (3, 5, 7, 9):
        lay = mlm_layout(length)
        g = mlm_global_compensate(lay)
        l = comp.compensate(lay, "local")
        d.append(max(abs(g.shifts[k] - l.shifts.get(k, 0.0)) for k in g.shifts))
    assert all(b < a for a, b in zip(d, d[1:]))


def test_measured_aleph_straight_link():
    lay = mlm_layout(7)
    assert comp.link_aleph(lay, lay.links[0].atoms) == pytest.approx(aleph(7, 1.0, 8.0), rel=1e-12)


def test_apply_and_json():
    lay = free_triangle_layout()
    assert apply(lay, CompensationShifts()) == lay
    with pytest.raises(CompensationError):
        apply(lay, CompensationShifts({42: 1.0}))
    sh = comp.compensate(lay, "free")
    assert CompensationShifts.from_json_dict(sh.to_json_dict()) == sh
    with pytest.raises(CompensationError):
        comp.compensate(lay, "magic")
