"""Detuning compensation of van der Waals tails within the MWIS manifold.

Shifts are energy offsets per occupied atom: a shift ``c`` on atom ``i`` adds
``c * n_i`` to the diagonal energy, i.e. lowers the detuning by ``c``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .layout import AtomLayout, LayoutError, ModuleSpec
from .mwis import WeightedGraph, mwis_solve
from .physics import interaction_matrix, spectrum, state_energies, tail_energies

SCHEMES = ("none", "free", "ml", "local", "global")


class CompensationError(ValueError):
    pass


class SolverError(CompensationError):
    pass


@dataclass(frozen=True)
class CompensationShifts:
    shifts: dict[int, float] = field(default_factory=dict)
    scheme: str = "none"

    def __add__(self, other: "CompensationShifts") -> "CompensationShifts":
        out = dict(self.shifts)
        for k, v in other.shifts.items():
            out[k] = out.get(k, 0.0) + v
        return CompensationShifts(out, self.scheme if self.scheme == other.scheme else "mixed")

    def to_json_dict(self) -> dict:
        return {
            "shifts": [{"atom": int(k), "c": float(v)} for k, v in sorted(self.shifts.items())],
            "scheme": self.scheme,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CompensationShifts":
        try:
            return cls({int(s["atom"]): float(s["c"]) for s in doc["shifts"]}, doc.get("scheme", "none"))
        except (KeyError, TypeError) as exc:
            raise CompensationError(f"shifts document missing field {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def apply(layout: AtomLayout, shifts: CompensationShifts) -> AtomLayout:
    """Add the shifts to the atoms; geometry untouched."""
    try:
        return layout.with_shifts(shifts.shifts)
    except LayoutError as exc:
        raise CompensationError(str(exc)) from None


# ---------------------------------------------------------------- closed forms


def free_triangle_shift(d: float = 1.0, c6: float = 1.0) -> float:
    """Tail energy of ``|ABC>`` above ``|Aa>`` on the lone side-2d triangle."""
    return c6 * (3 * (2 * d) ** -6 - (math.sqrt(3) * d) ** -6)


def aleph(length: int, d: float = 1.0, c6: float = 1.0) -> float:
    """Tail energy of the ``rgr...r`` link pattern above ``grg...g``."""
    if length < 3 or length % 2 == 0:
        raise CompensationError(f"link length must be odd and >= 3, got {length}")
    k = np.arange(1, (length - 1) // 2 + 1, dtype=float)
    return float(c6 / d**6 * np.sum((2 * k) ** -6.0))


def aleph_infinity(d: float = 1.0, c6: float = 1.0) -> float:
    return c6 / (2 * d) ** 6 * math.pi**6 / 945


# ---------------------------------------------------------------- minimax


def minimax_compensate(offsets: Sequence[float], incidence: np.ndarray):
    """Minimize ``max_s |offsets[s] + incidence[s] @ c|`` over shifts ``c``.

    Solved as the linear program: minimize ``t`` subject to
    ``-t <= offsets + incidence @ c <= t``. Among optimal shift vectors the
    one of smallest l1 norm is returned.

    Returns
    -------
    (ndarray, float)
        Shifts per node and the optimal max-residual.
    """
    e = np.asarray(offsets, dtype=float)
    a = np.asarray(incidence, dtype=float)
    if a.ndim != 2 or a.shape[0] != e.shape[0]:
        raise SolverError("incidence must be states x nodes")
    m, k = a.shape
    if k > 12 or m > 64:
        raise SolverError(f"minimax limited to 12 nodes and 64 states, got {k} and {m}")
    if m == 0:
        return np.zeros(k), 0.0
    scale = max(1.0, float(np.abs(e).max()))
    e = e / scale
    # variables: c (k, free), t
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    a_ub = np.vstack([np.hstack([a, -np.ones((m, 1))]), np.hstack([-a, -np.ones((m, 1))])])
    b_ub = np.concatenate([-e, e])
    bounds = [(None, None)] * k + [(0, None)]
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverError(f"minimax LP failed: {res.message}")
    t = res.x[-1]
    # second stage: smallest |c| at the optimum
    cost2 = np.concatenate([np.zeros(k), np.ones(k)])
    a2 = np.vstack([
        np.hstack([a, np.zeros((m, k))]),
        np.hstack([-a, np.zeros((m, k))]),
        np.hstack([np.eye(k), -np.eye(k)]),
        np.hstack([-np.eye(k), -np.eye(k)]),
    ])
    slack = t * (1 + 1e-9)
    b2 = np.concatenate([slack - e, slack + e, np.zeros(2 * k)])
    res2 = linprog(cost2, A_ub=a2, b_ub=b2, bounds=[(None, None)] * k + [(0, None)] * k, method="highs")
    e_abs = np.asarray(offsets, dtype=float)

    def score(c):
        return float(np.abs(e_abs + a @ (c * scale)).max())

    c = res.x[:k]
    if res2.status == 0 and score(res2.x[:k]) <= score(c) + 1e-12 * scale:
        c = res2.x[:k]
    c = c * scale
    return c, score(c / scale)


def k1_standard(x, r: float) -> float:
    x1, x2 = x
    return max(abs(1 + x1), abs(1 + x2), abs(r + x1 + x2))


def k2_standard(x, r: float) -> float:
    x1, x2, x3, x4 = x
    return max(abs(1 + x1 + x4), abs(1 + x2 + x3), abs(r + x1 + x3), abs(r + x2 + x4))


def k1_program(r: float):
    """Group-1 standard form as offsets/incidence for :func:`minimax_compensate`."""
    return np.array([1.0, 1.0, r]), np.array([[1, 0], [0, 1], [1, 1]], dtype=float)


def k2_program(r: float):
    return (
        np.array([1.0, 1.0, r, r]),
        np.array([[1, 0, 0, 1], [0, 1, 1, 0], [1, 0, 1, 0], [0, 1, 0, 1]], dtype=float),
    )


# ---------------------------------------------------------------- module-local machinery


def _module_states(layout: AtomLayout, module: ModuleSpec) -> list[frozenset[int]]:
    """MWIS states of a module on its own (base weights, template edges)."""
    atoms = list(module.atoms)
    ix = {a: k for k, a in enumerate(atoms)}
    graph = WeightedGraph(
        len(atoms),
        frozenset((ix[u], ix[v]) for u, v in module.edges),
        module.base_weights,
    )
    _, sets = mwis_solve(graph)
    return [frozenset(atoms[k] for k in s) for s in sets]


def _arms(layout: AtomLayout, module: ModuleSpec):
    """Links leaving the module, each oriented to start at the module's corner."""
    corners = set(module.corners.values())
    seen = set()
    out = []
    for link in layout.links:
        for end, other in ((link.atoms[0], link.atoms[-1]), (link.atoms[-1], link.atoms[0])):
            if end in corners and id(link) not in seen:
                seen.add(id(link))
                out.append(link.atoms if end == link.atoms[0] else tuple(reversed(link.atoms)))
    return out


def _extend(state: frozenset[int], arms) -> set[int]:
    out = set(state)
    for arm in arms:
        start = 0 if arm[0] in state else 1
        out.update(arm[start::2])
    return out


@dataclass
class ModuleSystem:
    """A module with its arms, the module MWIS states extended along the arms."""

    module: ModuleSpec
    atoms: list[int]
    states: list[set[int]]
    reference: int
    energies: np.ndarray
    off_sync: np.ndarray
    arm_lengths: list[int]
    aux: list[int]

    def incidence(self) -> np.ndarray:
        return np.array([[float(x in s) for x in self.aux] for s in self.states])


def module_system(layout: AtomLayout, module: ModuleSpec) -> ModuleSystem:
    """Tail energies of the module-plus-arms states, neighbours' modules ignored."""
    arms = _arms(layout, module)
    states = [_extend(s, arms) for s in _module_states(layout, module)]
    aux = sorted(module.aux_atoms)
    refs = [k for k, s in enumerate(states) if not any(x in s for x in aux)]
    if len(refs) != 1:
        raise CompensationError(f"module {module.id}: expected one reference state, found {len(refs)}")
    ref = refs[0]
    atoms = sorted(set(module.atoms).union(*[set(a) for a in arms]))
    v = interaction_matrix(layout)
    occ = np.zeros((len(states), len(layout.atoms)))
    for k, s in enumerate(states):
        occ[k, list(s)] = 1.0
    sub = np.zeros_like(v)
    sub[np.ix_(atoms, atoms)] = v[np.ix_(atoms, atoms)]
    energies = tail_energies(layout, occ, sub)
    off = np.array([sum((arm[0] in s) != (arm[0] in states[ref]) for arm in arms) for s in states])
    return ModuleSystem(module, atoms, states, ref, energies, off, [len(a) for a in arms], aux)


def module_link_shifts(layout: AtomLayout, module_id: str | None = None,
                       strict: bool = True) -> CompensationShifts:
    """Shifts that make the module-plus-arms states exactly degenerate.

    Each shift is ``E_ref - E_x`` for the state marked by compensation node x.
    With ``strict`` every non-reference state must be flagged by exactly one
    node of its own.
    """
    module = layout.modules[0] if module_id is None else layout.module(module_id)
    sysm = module_system(layout, module)
    return _solve_local(sysm, np.zeros(len(sysm.states)), strict, "ml")


def _solve_local(sysm: ModuleSystem, correction: np.ndarray, strict: bool, scheme: str):
    inc = sysm.incidence()
    target = sysm.energies[sysm.reference] - sysm.energies - correction
    keep = [k for k in range(len(sysm.states)) if k != sysm.reference]
    a = inc[keep]
    b = target[keep]
    if strict and not (np.all(a.sum(1) == 1) and len(set(map(tuple, a))) == len(keep)):
        raise CompensationError(
            f"module {sysm.module.id}: states are not flagged by unique single compensation nodes"
        )
    c, *_ = np.linalg.lstsq(a, b, rcond=None)
    if not np.allclose(a @ c, b, atol=1e-12 * max(1.0, np.abs(b).max())):
        c, _ = minimax_compensate(-b, a)
    return CompensationShifts({x: float(v) for x, v in zip(sysm.aux, c) if v != 0.0}, scheme)


def link_aleph(layout: AtomLayout, atoms: Sequence[int]) -> float:
    """Tail energy of the corner-occupied pattern of a link minus the other one."""
    v = interaction_matrix(layout)
    atoms = list(atoms)
    sub = v[np.ix_(atoms, atoms)]
    def e(idx):
        return float(sub[np.ix_(idx, idx)].sum() / 2)
    return e(list(range(0, len(atoms), 2))) - e(list(range(1, len(atoms), 2)))


def free_module_shifts(layout: AtomLayout) -> CompensationShifts:
    """Every triangle module gets the lone-triangle shift on its auxiliaries."""
    ph = layout.physics
    c = free_triangle_shift(ph.d, ph.c6)
    out = {}
    for m in layout.modules:
        if m.kind != "three_body":
            raise CompensationError(f"free shifts only defined for triangles, not {m.kind}")
        for x in m.aux_atoms:
            out[x] = out.get(x, 0.0) + c
    return CompensationShifts(out, "free")


def local_cross_compensate(layout: AtomLayout, aleph_mode: str = "infinity",
                           cross: bool = True) -> CompensationShifts:
    """Module-by-module compensation with the off-sync link correction.

    For every module, the module-plus-arms states are balanced against the
    reference; a state whose link pattern is off-sync with the reference on
    ``k`` arms is pulled down by ``k * aleph / 2``, the part of the link tail
    difference that the neighbouring module accounts for a second time.
    ``aleph_mode`` is ``"infinity"``, ``"finite"`` (per-arm length) or
    ``"measured"`` (tail difference of the actual, possibly bent, link).
    """
    ph = layout.physics
    total = CompensationShifts({}, "local")
    for module in layout.modules:
        sysm = module_system(layout, module)
        if cross and sysm.arm_lengths:
            if aleph_mode == "infinity":
                per_arm = [aleph_infinity(ph.d, ph.c6)] * len(sysm.arm_lengths)
            elif aleph_mode == "finite":
                per_arm = [aleph(l, ph.d, ph.c6) for l in sysm.arm_lengths]
            elif aleph_mode == "measured":
                per_arm = [link_aleph(layout, arm) for arm in _arms(layout, module)]
            else:
                raise CompensationError(f"unknown aleph mode {aleph_mode!r}")
            arms = _arms(layout, module)
            ref = sysm.states[sysm.reference]
            # the doubly counted link tail moves by -aleph when leaving an
            # occupied-corner reference, +aleph when leaving an empty one
            corr = np.array([
                sum((0.5 * al if arm[0] in ref else -0.5 * al)
                    for arm, al in zip(arms, per_arm) if (arm[0] in s) != (arm[0] in ref))
                for s in sysm.states
            ])
        else:
            corr = np.zeros(len(sysm.states))
        total = total + _solve_local(sysm, corr, strict=False, scheme="local")
    return CompensationShifts(total.shifts, "local")


# ---------------------------------------------------------------- global schemes


@dataclass
class ManifoldSystem:
    """The MWIS manifold of a layout fragment with its reference and groups."""

    states: np.ndarray
    energies: np.ndarray
    reference: int
    nodes: list[int]
    groups: dict[str, list[int]]

    def incidence(self) -> np.ndarray:
        return self.states[:, self.nodes].astype(float)


def manifold_system(layout: AtomLayout, nodes: Sequence[int] | None = None) -> ManifoldSystem:
    """Maximum-weight states of the whole layout and their total energies."""
    spec = spectrum(layout)
    states = spec.manifold_states()
    energies = spec.energies[spec.manifold]
    if nodes is None:
        nodes = sorted(x for m in layout.modules for x in m.aux_atoms)
    nodes = list(nodes)
    refs = [k for k, s in enumerate(states) if not s[nodes].any()]
    if len(refs) != 1:
        raise CompensationError(f"expected a unique reference state, found {len(refs)}")
    return ManifoldSystem(states, energies, refs[0], nodes, {})


def opposite_aux(module: ModuleSpec, corner_atom: int) -> int:
    """Auxiliary of a triangle module not blockaded by ``corner_atom``."""
    touching = {v for e in module.edges for v in e if corner_atom in e}
    cands = [x for x in module.aux_atoms if x not in touching]
    if len(cands) != 1:
        raise CompensationError(f"module {module.id}: no unique auxiliary opposite atom {corner_atom}")
    return cands[0]


def mlm_groups(layout: AtomLayout) -> ManifoldSystem:
    """Reference, Group 1 (``{c, x}`` excitations) and Group 2 of a module-link-module system."""
    if len(layout.modules) != 2 or len(layout.links) != 1:
        raise CompensationError("MLM system needs exactly two modules and one link")
    link = layout.links[0]
    m1, m2 = layout.modules
    corner1 = link.atoms[0] if link.atoms[0] in m1.atoms else link.atoms[-1]
    corner2 = link.atoms[-1] if corner1 == link.atoms[0] else link.atoms[0]
    s1 = [opposite_aux(m1, corner1), opposite_aux(m2, corner2)]
    s2 = [x for x in list(m1.aux_atoms) + list(m2.aux_atoms) if x not in s1]
    sysm = manifold_system(layout, s1 + s2)
    g1, g2 = [], []
    for k, s in enumerate(sysm.states):
        if k == sysm.reference:
            continue
        if s[s2].any():
            if s[s1].any():
                raise CompensationError("manifold state excites both compensation groups")
            g2.append(k)
        else:
            g1.append(k)
    if len(g1) != 3 or len(g2) != 4:
        raise CompensationError(f"group sizes {len(g1)}, {len(g2)}; expected 3 and 4")
    sysm.groups = {"s1": s1, "s2": s2, "group1": g1, "group2": g2}
    return sysm


def mlm_global_compensate(layout: AtomLayout) -> CompensationShifts:
    """Symmetric optimal shifts for two triangles joined by one link.

    Group 1: ``c_c = c_x = -(E + E_cx - 2 E_r) / 3`` with ``E`` the common
    energy of the single-excitation states. Group 2: one common shift
    ``-(E_1 + E_2 - 2 E_r) / 4`` on ``a, b, y, z``.
    """
    sysm = mlm_groups(layout.cleared())
    e_r = sysm.energies[sysm.reference]
    s1 = sysm.groups["s1"]
    singles = [k for k in sysm.groups["group1"] if sysm.states[k][s1].sum() == 1]
    double = [k for k in sysm.groups["group1"] if sysm.states[k][s1].sum() == 2]
    e_single = float(np.mean(sysm.energies[singles]))
    e_cx = float(sysm.energies[double[0]])
    c1 = -(e_single + e_cx - 2 * e_r) / 3
    e12 = float(np.sum(sysm.energies[sysm.groups["group2"]])) / 2  # E_1 + E_2
    c2 = -(e12 - 2 * e_r) / 4
    shifts = {x: c1 for x in s1}
    shifts.update({x: c2 for x in sysm.groups["s2"]})
    return CompensationShifts(shifts, "global")


def global_minimax_compensate(layout: AtomLayout) -> CompensationShifts:
    """Minimax-optimal shifts on all auxiliaries against the whole manifold."""
    sysm = manifold_system(layout.cleared())
    offsets = sysm.energies - sysm.energies[sysm.reference]
    c, _ = minimax_compensate(offsets, sysm.incidence())
    return CompensationShifts({x: float(v) for x, v in zip(sysm.nodes, c)}, "global")


def max_deviation(layout: AtomLayout, nodes: Sequence[int] | None = None) -> float:
    """``max_s |E_s - E_ref|`` over the manifold, the minimax objective."""
    sysm = manifold_system(layout, nodes)
    return float(np.abs(sysm.energies - sysm.energies[sysm.reference]).max())


def compensate(layout: AtomLayout, scheme: str = "local", **kw) -> CompensationShifts:
    """Shifts for a named scheme, computed on the layout with fields and shifts cleared."""
    base = layout.cleared()
    if scheme == "none":
        return CompensationShifts({}, "none")
    if scheme == "free":
        return free_module_shifts(base)
    if scheme == "ml":
        return local_cross_compensate(base, cross=False)
    if scheme == "local":
        return local_cross_compensate(base, **kw)
    if scheme == "global":
        if len(base.modules) == 2 and len(base.links) == 1 and all(m.kind == "three_body" for m in base.modules):
            return mlm_global_compensate(base)
        return global_minimax_compensate(base)
    raise CompensationError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
