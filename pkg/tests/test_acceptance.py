"""Acceptance criteria 1-10; each test prints one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from oracles import exhaustive_mwis, grid_minimax, zoom_minimax
from rydberg_parity import compensation as comp
from rydberg_parity import experiments as exp
from rydberg_parity.gadgets import GADGETS
from rydberg_parity.mwis import WeightedGraph, mwis_solve
from rydberg_parity.parity import lhz_encode
from rydberg_parity.physics import spectrum
from rydberg_parity.placement import free_triangle_layout, mlm_layout, module_link_layout


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return emit


def test_01_gadget_bijections(report):
    want = {"two_body": (2, 2), "three_body": (4, 3), "four_body": (8, 6),
            "tetrahedron": (8, None), "twin_three_body_3d": (4, None)}
    parts, ok = [], True
    for name, (count, weight) in want.items():
        t = time.perf_counter()
        g = GADGETS[name]()
        cat = g.catalog()
        errors = g.bijection_errors()
        dt = time.perf_counter() - t
        good = len(cat.maximizers) == count and not errors and dt < 1.0
        good &= weight is None or cat.w_max == pytest.approx(weight * g.alpha)
        ok &= good
        parts.append(f"{name}={len(cat.maximizers)}@{cat.w_max:g} ({dt * 1e3:.0f} ms)")
    assert report(1, ok, ", ".join(parts))


def test_02_free_triangle(report):
    lay = free_triangle_layout()
    sh = comp.compensate(lay, "free")
    rep = spectrum(comp.apply(lay, sh))
    top = rep.energies[rep.manifold]
    spread = top.max() - top.min()
    c_unit = comp.free_triangle_shift(1.0, 1.0)
    ok = len(top) == 4 and spread < 1e-10 * lay.physics.alpha and abs(c_unit - 17 / 1728) < 1e-12
    assert report(2, ok, f"spread={spread:.2e} alpha, c_a(d=1,C6=1)={c_unit:.12f} vs 17/1728={17 / 1728:.12f}")


def test_03_module_link(report):
    parts, ok = [], True
    for l in (3, 5, 7):
        lay = module_link_layout(l, corner="C")
        sh = comp.module_link_shifts(lay)
        spread = spectrum(comp.apply(lay, sh)).delta_s
        m = lay.modules[0]
        c = {k: sh.shifts[comp.opposite_aux(m, m.corners[k])] for k in "ABC"}
        sym = abs(c["A"] - c["B"]) < 1e-12 and abs(c["A"] - c["C"]) > 1e-6
        ok &= spread < 1e-10 and sym
        parts.append(f"l={l}: spread={spread:.1e}, c_a=c_b={c['A']:.6f}, c_c={c['C']:.6f}")
    assert report(3, ok, "; ".join(parts))


def test_04_mlm_study(report):
    t = time.perf_counter()
    rows = exp.link_length_study((3, 5, 7, 9), ("none", "local", "global"))
    dt = time.perf_counter() - t
    by = {(r.length, r.scheme): r for r in rows}
    ls = (3, 5, 7, 9)
    order = all(by[l, "global"].spread <= by[l, "local"].spread <= by[l, "none"].spread for l in ls)
    diff = [abs(by[l, "local"].spread - by[l, "global"].spread) for l in ls]
    mono = all(b < a for a, b in zip(diff, diff[1:]))
    gap = min(r.gap for r in rows)
    ok = order and mono and gap > 0.1 and dt < 60
    table = ", ".join(f"l={l}: {by[l, 'none'].spread:.4f}/{by[l, 'local'].spread:.2e}/{by[l, 'global'].spread:.2e}"
                      for l in ls)
    assert report(4, ok, f"spread none/local/global {table}; |local-global|={['%.1e' % d for d in diff]}; "
                         f"min gap={gap:.3f} alpha; {dt:.1f} s")


def test_05_minimax_oracles(report):
    rs = (-1.0, 0.0, 0.5, 1.0, 2.0)
    ok, flagged, parts = True, [], []
    for r in rs:
        g2, _ = zoom_minimax(*comp.k2_program(r))
        g1, _ = grid_minimax(*comp.k1_program(r))
        _, lp1 = comp.minimax_compensate(*comp.k1_program(r))
        ok &= abs(g2 - abs(1 - r) / 2) < 2e-3
        ok &= abs(g1 - abs(2 - r) / 3) < 2e-3 and abs(lp1 - abs(2 - r) / 3) < 1e-9
        if abs(g1 - abs(1 - r) / 2) >= 2e-3:
            flagged.append(r)
        parts.append(f"R={r:g}: K2={g2:.4f} K1={g1:.4f}")
    note = (f"K1 optimum is |2-R|/3; printed |1-R|/2 disagrees at R={flagged} (flagged, documented)"
            if flagged else "K1 agrees with |1-R|/2")
    assert report(5, ok, "; ".join(parts) + "; " + note)


def test_06_aleph(report):
    inf = comp.aleph_infinity(1.0, 1.0)
    d41 = abs(comp.aleph(41, 1.0, 1.0) - inf)
    closed = abs(inf - math.pi**6 / 60480)
    ok = d41 < 1e-9 and closed < 1e-12
    assert report(6, ok, f"|aleph_41 - aleph_inf|={d41:.2e}, |aleph_inf - pi^6/60480|={closed:.1e}")


def test_07_reference_spectrum(report):
    t = time.perf_counter()
    lay = exp.reference_layout()
    rep = spectrum(lay, cap=40)
    dt = time.perf_counter() - t
    a = lay.physics.alpha
    ds, dg = rep.delta_s / a, rep.delta_g / a
    ok = ds <= 0.05 and dg >= 0.2 and dg / ds >= 5 and dt < 300
    assert report(7, ok, f"{len(lay.atoms)} atoms, {len(rep)} states: delta_s={ds:.4f} alpha, "
                         f"delta_g={dg:.4f} alpha, ratio={dg / ds:.1f}; {dt:.1f} s")


def test_08_end_to_end(report):
    prepared, scale, verdicts = exp.faithfulness_study(60, seed=2024)
    wins = sum(v.match for v in verdicts)
    mismatches = [v.summary() for v in verdicts if not v.match]
    for m in mismatches:
        print(m)
    frac = wins / len(verdicts)
    ok = len(verdicts) >= 50 and frac >= 0.95
    assert report(8, ok, f"{wins}/{len(verdicts)} matched ({frac:.1%}) at field scale {scale:.4f} alpha "
                         f"in window ({prepared.delta_s:.4f}, {prepared.delta_g:.4f}); {len(mismatches)} mismatches logged")


def test_09_solver_oracle(report):
    rng = np.random.default_rng(99)
    bad = 0
    sizes = []
    for _ in range(100):
        n = int(rng.integers(1, 21))
        p = rng.uniform(0.1, 0.6)
        edges = frozenset((i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p)
        w = tuple(float(x) for x in rng.integers(1, 5, n))
        g = WeightedGraph(n, edges, w)
        best, sets = mwis_solve(g)
        obest, osets = exhaustive_mwis(n, edges, w)
        bad += not (best == obest and set(sets) == osets)
        sizes.append(n)
    assert report(9, bad == 0, f"100 graphs, {min(sizes)}-{max(sizes)} vertices, {bad} disagreements")


def test_10_field_sweep(report, reference):
    t = time.perf_counter()
    cfg = exp.SweepConfig(tuple(np.logspace(-3, 0, 13)), samples=200, distribution="gaussian", seed=0)
    res = exp.field_sweep(reference.layout, cfg, table=reference.table)
    dt = time.perf_counter() - t
    s, e = res.sigmas, res.mean_energy_diff
    k = int(np.argmin(e))
    lo, hi = reference.delta_s / reference.layout.physics.alpha, reference.delta_g / reference.layout.physics.alpha
    inside = lo <= s[k] <= hi
    rising = e[0] > e[k] and e[-1] > e[k]
    ok = inside and rising and dt < 600
    assert report(10, ok, f"minimum {e[k]:.2e} at sigma={s[k]:.3g} in ({lo:.3g}, {hi:.3g}); "
                          f"ends {e[0]:.2e} / {e[-1]:.2e}; {dt:.1f} s")
