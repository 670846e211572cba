"""Placing parity layouts as gadget modules joined by copying links.

Planar placements use the triangular lattice of spacing ``d``: every template
atom and link atom sits on a lattice site, so lattice neighbours are exactly
the blockaded pairs for any ``r_B`` in ``(d, sqrt(3) d)``. Links are induced
lattice paths of odd length between module corners.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gadgets import (
    AUXILIARY,
    LINK,
    PARITY,
    RHOMBUS_AXIAL,
    RHOMBUS_WEIGHTS,
    TRIANGLE_AXIAL,
    axial_to_xy,
)
from .layout import Atom, AtomLayout, LayoutError, LinkSpec, ModuleSpec, Physics
from .parity import ParityLayout


class PlacementError(LayoutError):
    pass


class RoutingError(PlacementError):
    pass


@dataclass(frozen=True)
class PlacementConfig:
    link_length: int = 3
    max_link_length: int = 9
    clearance: int = 2
    fuse_rhombi: bool = True
    crosstalk_weight: float = 1000.0

    def __post_init__(self):
        if self.link_length < 3 or self.link_length % 2 == 0:
            raise PlacementError(f"default link length must be odd and >= 3, got {self.link_length}")
        if self.max_link_length < self.link_length:
            raise PlacementError("max_link_length below link_length")


# ---------------------------------------------------------------- templates

TEMPLATES = {
    "three_body": {
        "axial": TRIANGLE_AXIAL,
        "weights": {k: (1 if k.isupper() else 2) for k in TRIANGLE_AXIAL},
        "corners": ("A", "B", "C"),
    },
    "rhombic": {
        "axial": RHOMBUS_AXIAL,
        "weights": RHOMBUS_WEIGHTS,
        "corners": ("P", "Q", "R", "S"),
    },
}


def _template_edges(axial: dict) -> set[tuple[str, str]]:
    names = list(axial)
    return {
        (a, b) for a, b in itertools.combinations(names, 2) if hexdist(axial[a], axial[b]) == 1
    }


# ---------------------------------------------------------------- lattice

NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))


def hexdist(a, b) -> int:
    dq, dr = a[0] - b[0], a[1] - b[1]
    return (abs(dq) + abs(dr) + abs(dq + dr)) // 2


def _rotate(qr, k):
    q, r = qr
    for _ in range(k % 6):
        q, r = -r, q + r
    return q, r


def _orient(qr, k, flip):
    q, r = qr
    if flip:
        q, r = r, q
    return _rotate((q, r), k)


def _ring(center, radius):
    out = []
    for dq in range(-radius, radius + 1):
        for dr in range(-radius, radius + 1):
            site = (center[0] + dq, center[1] + dr)
            if hexdist(site, center) == radius:
                out.append(site)
    return out


def _step(site, n):
    return (int(site[0] + n[0]), int(site[1] + n[1]))


def route_link(u, v, length: int, occupied: set, max_nodes: int = 200000):
    """Interior sites of an induced lattice path of ``length`` atoms from ``u`` to ``v``.

    Interior sites touch no occupied site other than their own corner, and no
    other path site except their chain neighbours. Returns ``None`` when no
    such path exists (within ``max_nodes`` search steps).
    """
    k = length - 2
    if k < 1 or hexdist(u, v) < 2 or hexdist(u, v) > k + 1:
        return None
    budget = [max_nodes]

    def touching(site):
        return {o for o in (_step(site, n) for n in NEIGHBOURS) if o in occupied}

    path: list = []

    def dfs(site, i):
        budget[0] -= 1
        if budget[0] < 0:
            return False
        if site in occupied:
            return False
        allowed = set()
        if i == 0:
            allowed.add(u)
        if i == k - 1:
            allowed.add(v)
        t = touching(site)
        if not t <= allowed or (i == 0 and u not in t) or (i == k - 1 and v not in t):
            return False
        if any(hexdist(site, p) <= 1 for p in path[:-1]):
            return False
        if path and hexdist(site, path[-1]) != 1:
            return False
        if site in path:
            return False
        if hexdist(site, v) > k - i:
            return False
        path.append(site)
        if i == k - 1:
            return True
        nxt = sorted(
            (_step(site, n) for n in NEIGHBOURS), key=lambda s: hexdist(s, v)
        )
        for s in nxt:
            if dfs(s, i + 1):
                return True
        path.pop()
        return False

    for n in sorted(NEIGHBOURS, key=lambda n: hexdist(_step(u, n), v)):
        if dfs(_step(u, n), 0):
            return list(path)
        path.clear()
    return None


# ---------------------------------------------------------------- decomposition


@dataclass
class _ModulePlan:
    kind: str
    variables: dict  # template corner name -> variable


def decompose(layout: ParityLayout, fuse_rhombi: bool = True) -> list[_ModulePlan]:
    """Split constraints into triangle modules, fusing edge-sharing pairs into rhombi.

    A four-body constraint ``A+B+C+D = 0`` becomes triangles ``(A, B, e)`` and
    ``(e, C, D)`` with a fresh variable ``e``. The pairing is chosen to share
    sides with three-body constraints where possible, then same-column pairs.
    """
    pos = {q.label: q.pos for q in layout.qubits}
    threes = [set(c.members) for c in layout.constraints if len(c.members) == 3]
    triangles: list[tuple] = []
    n_aux = 0
    for c in layout.constraints:
        if len(c.members) == 3:
            triangles.append(tuple(c.members))
            continue
        a, b, cc, dd = c.members
        options = [((a, b), (cc, dd)), ((a, cc), (b, dd)), ((a, dd), (b, cc))]

        def score(opt):
            shared = sum(any(set(p) <= t for t in threes) for p in opt)
            column = sum(
                pos.get(p[0]) is not None and pos.get(p[1]) is not None and pos[p[0]][1] == pos[p[1]][1]
                for p in opt
            )
            return (shared, column)

        best = max(options, key=score)
        e = ("aux", n_aux)
        n_aux += 1
        triangles.append((best[0][0], best[0][1], e))
        triangles.append((e, best[1][0], best[1][1]))

    plans: list[_ModulePlan] = []
    used = set()
    for i, ti in enumerate(triangles):
        if i in used:
            continue
        partner = None
        if fuse_rhombi:
            for j in range(i + 1, len(triangles)):
                if j not in used and len(set(ti) & set(triangles[j])) == 2:
                    partner = j
                    break
        if partner is None:
            plans.append(_ModulePlan("three_body", dict(zip("ABC", ti))))
            used.add(i)
            continue
        tj = triangles[partner]
        shared = [x for x in ti if x in tj]
        r = next(x for x in ti if x not in shared)
        s = next(x for x in tj if x not in shared)
        plans.append(_ModulePlan("rhombic", {"P": shared[0], "Q": shared[1], "R": r, "S": s}))
        used |= {i, partner}
    return plans


# ---------------------------------------------------------------- assembly


class Assembler:
    """Collects modules and links, then assigns weights and representatives."""

    def __init__(self, physics: Physics):
        self.physics = physics
        self.pos: list[tuple[float, ...]] = []
        self.roles: list[str] = []
        self.module_of: list[str] = []
        self.labels: list = []
        self.base: list[float] = []
        self.modules: list[ModuleSpec] = []
        self.links: list[LinkSpec] = []

    def add_module(self, kind: str, positions: dict, variables: dict, mid: str | None = None) -> ModuleSpec:
        """``positions`` maps template vertex names to coordinates (units of d)."""
        tpl = TEMPLATES[kind]
        mid = mid or f"M{len(self.modules)}"
        index = {}
        for name in tpl["axial"]:
            index[name] = len(self.pos)
            self.pos.append(tuple(float(x) for x in positions[name]))
            is_corner = name in tpl["corners"]
            var = variables.get(name) if is_corner else None
            self.roles.append(PARITY if is_corner else AUXILIARY)
            self.module_of.append(mid)
            self.labels.append(var if is_corner and _is_label(var) else None)
            self.base.append(tpl["weights"][name] * self.physics.alpha)
        edges = frozenset(
            (min(index[a], index[b]), max(index[a], index[b])) for a, b in _template_edges(tpl["axial"])
        )
        spec = ModuleSpec(
            mid,
            kind,
            tuple(index.values()),
            {variables[c]: index[c] for c in tpl["corners"]},
            tuple(tpl["weights"][n] * self.physics.alpha for n in tpl["axial"]),
            edges,
        )
        self.modules.append(spec)
        return spec

    def add_link(self, variable, u: int, v: int, interior: Sequence[Sequence[float]]) -> LinkSpec:
        if len(interior) % 2 == 0:
            raise RoutingError(
                f"link for {variable} would have even length {len(interior) + 2}"
            )
        lid = f"L{len(self.links)}"
        ids = []
        for p in interior:
            ids.append(len(self.pos))
            self.pos.append(tuple(float(x) for x in p))
            self.roles.append(LINK)
            self.module_of.append(lid)
            self.labels.append(None)
            self.base.append(2 * self.physics.alpha)
        link = LinkSpec((u, *ids, v), variable)
        self.links.append(link)
        return link

    def build(self) -> AtomLayout:
        weights = list(self.base)
        for link in self.links:
            weights[link.atoms[0]] += self.physics.alpha
            weights[link.atoms[-1]] += self.physics.alpha
        reps = {}
        for k, lab in enumerate(self.labels):
            if lab is not None and lab not in reps:
                reps[lab] = k
        atoms = tuple(
            Atom(p, w, role, mod, lab)
            for p, w, role, mod, lab in zip(self.pos, weights, self.roles, self.module_of, self.labels)
        )
        return AtomLayout(atoms, self.physics, tuple(self.modules), tuple(self.links), reps)


def _is_label(var) -> bool:
    return isinstance(var, tuple) and all(isinstance(x, (int, np.integer)) for x in var)


# ---------------------------------------------------------------- lattice placer


def place(layout: ParityLayout, cfg: PlacementConfig | None = None,
          physics: Physics | None = None) -> AtomLayout:
    """Place every constraint as a lattice module and route copying links.

    Modules are placed in breadth-first order over shared variables. Each new
    module is tried in all twelve lattice orientations with its first linked
    corner on rings around the partner corner; a bounded backtracking search
    keeps the placement with the fewest link atoms.
    """
    cfg = cfg or PlacementConfig()
    physics = physics or Physics()
    plans = decompose(layout, cfg.fuse_rhombi)
    if not plans:
        raise PlacementError("parity layout has no constraints to place")
    order = _placement_order(plans)
    best = _search(plans, order, cfg)
    if best is None:
        raise PlacementError(
            f"could not place modules {[(p.kind, p.variables) for p in plans]} "
            f"with links up to length {cfg.max_link_length}"
        )
    placed, routes = best

    asm = Assembler(physics)
    atom_at = {}
    for pi in sorted(placed):
        plan = plans[pi]
        positions = {n: axial_to_xy(*s) for n, s in placed[pi].items()}
        spec = asm.add_module(plan.kind, positions, plan.variables, f"M{pi}")
        tpl_names = list(TEMPLATES[plan.kind]["axial"])
        for name, idx in zip(tpl_names, spec.atoms):
            atom_at[placed[pi][name]] = idx
    for var, su, sv, interior in routes:
        asm.add_link(var, atom_at[su], atom_at[sv], [axial_to_xy(*s) for s in interior])
    return asm.build()


def _search(plans, order, cfg, per_level: int = 24, max_nodes: int = 4000):
    """Depth-first placement keeping the solution with the fewest link atoms."""
    best = [None, math.inf]
    nodes = [0]

    def rec(depth, occupied, placed, arms, routes, cost):
        if cost >= best[1]:
            return
        if depth == len(order):
            total = cost + cfg.crosstalk_weight * crosstalk(plans, placed, routes)
            if total < best[1]:
                best[0] = (dict(placed), list(routes))
                best[1] = total
            return
        nodes[0] += 1
        if nodes[0] > max_nodes:
            return
        pi = order[depth]
        plan = plans[pi]
        wanted = []
        for cname in TEMPLATES[plan.kind]["corners"]:
            var = plan.variables[cname]
            partners = [
                site
                for qj, sites in placed.items()
                for on, site in sites.items()
                if on in TEMPLATES[plans[qj].kind]["corners"] and plans[qj].variables[on] == var
            ]
            if partners:
                partners.sort(key=lambda s: arms.get(s, 0))
                wanted.append((cname, var, partners[0]))
        for sites, new_routes in itertools.islice(_candidates(plan, wanted, occupied, cfg), per_level):
            add = sum(len(r[3]) for r in new_routes)
            occ = set(occupied) | set(sites.values())
            arms2 = dict(arms)
            for _, su, sv, interior in new_routes:
                occ |= set(interior)
                arms2[su] = arms2.get(su, 0) + 1
                arms2[sv] = arms2.get(sv, 0) + 1
            placed[pi] = sites
            rec(depth + 1, occ, placed, arms2, routes + new_routes, cost + add)
            del placed[pi]
            if best[1] == _lower_bound(plans, order, cfg) and cfg.crosstalk_weight == 0:
                return

    rec(0, set(), {}, {}, [], 0)
    return best[0]


def crosstalk(plans, placed, routes) -> float:
    """Sum of ``r^-6`` (units of d) over pairs that no module system covers.

    A module system is a module together with every link leaving it, far
    corner included. Tails between such pairs are what module-level
    compensation takes into account; everything else is crosstalk.
    """
    systems = {pi: set(sites.values()) for pi, sites in placed.items()}
    owner = {}
    for pi, sites in placed.items():
        for site in sites.values():
            owner[site] = pi
    for _, su, sv, interior in routes:
        arm = {su, sv, *interior}
        for end in (su, sv):
            systems[owner[end]] |= arm
    sites = sorted(set().union(*systems.values()))
    member = {site: {pi for pi, sysm in systems.items() if site in sysm} for site in sites}
    xy = np.array([axial_to_xy(*site) for site in sites])
    total = 0.0
    for i, j in itertools.combinations(range(len(sites)), 2):
        if member[sites[i]] & member[sites[j]]:
            continue
        total += float(((xy[i] - xy[j]) ** 2).sum()) ** -3
    return total


def _lower_bound(plans, order, cfg):
    """Link atoms needed if every shared variable used one default-length link."""
    count = {}
    for p in plans:
        for c in TEMPLATES[p.kind]["corners"]:
            count[p.variables[c]] = count.get(p.variables[c], 0) + 1
    return sum((k - 1) * (cfg.link_length - 2) for k in count.values())


def _placement_order(plans):
    order = [0]
    seen = {0}
    while len(order) < len(plans):
        frontier = [
            j for j in range(len(plans))
            if j not in seen
            and any(set(plans[j].variables.values()) & set(plans[i].variables.values()) for i in order)
        ]
        j = frontier[0] if frontier else next(j for j in range(len(plans)) if j not in seen)
        order.append(j)
        seen.add(j)
    return order


def _candidates(plan, wanted, occupied, cfg):
    """Yield feasible ``(sites, routes)`` for one module, most compact first."""
    tpl = TEMPLATES[plan.kind]
    axial = tpl["axial"]
    if not occupied:
        yield {n: tuple(qr) for n, qr in axial.items()}, []
        return
    if not wanted:
        # disconnected component: park it to the right of everything
        qmax = max(s[0] for s in occupied) + 4 + cfg.clearance
        yield {n: (qr[0] + qmax, qr[1]) for n, qr in axial.items()}, []
        return

    lengths = list(range(cfg.link_length, cfg.max_link_length + 1, 2))
    candidates = []
    first_c, _, first_p = wanted[0]
    for k, flip in itertools.product(range(6), (False, True)):
        oriented = {n: _orient(qr, k, flip) for n, qr in axial.items()}
        for l0 in lengths:
            for target in _ring(first_p, l0 - 1):
                off = (target[0] - oriented[first_c][0], target[1] - oriented[first_c][1])
                sites = {n: (q + off[0], r + off[1]) for n, (q, r) in oriented.items()}
                if any(min(hexdist(s, o) for o in occupied) < cfg.clearance for s in sites.values()):
                    continue
                spans = [hexdist(sites[c], p) for c, _, p in wanted]
                if any(sp < 2 or sp > cfg.max_link_length - 1 for sp in spans):
                    continue
                compact = sum(abs(q) + abs(r) for q, r in sites.values())
                candidates.append((sum(spans), compact, k, flip, sites))
    candidates.sort(key=lambda c: c[:4])
    seen = set()
    for _, _, _, _, sites in candidates:
        key = tuple(sorted(sites.values()))
        if key in seen:
            continue
        seen.add(key)
        occ = set(occupied) | set(sites.values())
        routes = []
        for cname, var, partner in wanted:
            su = sites[cname]
            found = None
            for length in lengths:
                found = route_link(partner, su, length, occ)
                if found is not None:
                    break
            if found is None:
                break
            occ |= set(found)
            routes.append((var, partner, su, found))
        else:
            yield sites, routes


# ---------------------------------------------------------------- reference constructions


def triangle_positions(center=(0.0, 0.0), angle: float = 0.0, flip: bool = False) -> dict:
    """Side-2 triangle template rotated by ``angle`` about its centroid."""
    raw = {n: np.array(axial_to_xy(*qr)) for n, qr in TRIANGLE_AXIAL.items()}
    centroid = (raw["A"] + raw["B"] + raw["C"]) / 3
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    out = {}
    for n, p in raw.items():
        v = p - centroid
        if flip:
            v = v * np.array([-1.0, 1.0])
        out[n] = tuple(rot @ v + np.asarray(center))
    return out


def _corner_axis(pos, corner):
    centroid = (np.array(pos["A"]) + np.array(pos["B"]) + np.array(pos["C"])) / 3
    axis = np.array(pos[corner]) - centroid
    return axis / np.linalg.norm(axis)


def free_triangle_layout(physics: Physics | None = None) -> AtomLayout:
    physics = physics or Physics()
    asm = Assembler(physics)
    asm.add_module("three_body", triangle_positions(), {"A": (0, 1), "B": (0, 2), "C": (1, 2)})
    return asm.build()


def _straight(start, axis, count, step=1.0):
    return [tuple(np.asarray(start) + axis * step * (k + 1)) for k in range(count)]


def module_link_layout(length: int, physics: Physics | None = None, corner: str = "C",
                       gap: float | None = None) -> AtomLayout:
    """One triangle with a straight link of ``length`` atoms leaving ``corner``.

    The link runs along the corner's bisector; its far end is a lone atom
    playing the partner module's corner. ``gap`` displaces the whole link along
    the axis (units of d) to study the detached limit.
    """
    if length < 3 or length % 2 == 0:
        raise LayoutError(f"link length must be odd and >= 3, got {length}")
    physics = physics or Physics()
    pos = triangle_positions()
    axis = _corner_axis(pos, corner)
    asm = Assembler(physics)
    m = asm.add_module("three_body", pos, {"A": "A", "B": "B", "C": "C"})
    start = np.asarray(pos[corner]) + (axis * gap if gap else 0.0)
    pts = _straight(start, axis, length - 1)
    interior, far = pts[:-1], pts[-1]
    # far corner stands in for the partner module
    k = len(asm.pos)
    asm.pos.append(far)
    asm.roles.append(PARITY)
    asm.module_of.append("far")
    asm.labels.append(None)
    asm.base.append(physics.alpha)
    if gap:
        for p in interior:
            asm.pos.append(p)
            asm.roles.append(LINK)
            asm.module_of.append("L0")
            asm.labels.append(None)
            asm.base.append(2 * physics.alpha)
        lay = asm.build()
        return lay
    link = asm.add_link(corner, m.corners[corner], k, interior)
    del link
    return asm.build()


def mlm_layout(length: int, physics: Physics | None = None) -> AtomLayout:
    """Two triangles joined corner C to corner X by a straight odd link.

    The second module is the point reflection of the first through the link
    midpoint, so ``x, y, z`` mirror ``c, a, b``... in the sense ``C -> X``,
    ``A -> Y``, ``B -> Z``.
    """
    if length < 3 or length % 2 == 0:
        raise LayoutError(f"link length must be odd and >= 3, got {length}")
    physics = physics or Physics()
    pos1 = triangle_positions()
    axis = _corner_axis(pos1, "C")
    c_pt = np.asarray(pos1["C"])
    x_pt = c_pt + axis * (length - 1)
    center = (c_pt + x_pt) / 2
    pos2 = {n: tuple(2 * center - np.asarray(p)) for n, p in pos1.items()}
    asm = Assembler(physics)
    m1 = asm.add_module("three_body", pos1, {"A": "A", "B": "B", "C": "C"}, "M1")
    m2 = asm.add_module("three_body", pos2, {"A": "Y", "B": "Z", "C": "X"}, "M2")
    interior = _straight(c_pt, axis, length - 2)
    asm.add_link("CX", m1.corners["C"], m2.corners["X"], interior)
    return asm.build()


def two_arm_module_layout(length: int, physics: Physics | None = None) -> AtomLayout:
    """Triangle with straight arms leaving corners B and C, ending in lone far corners."""
    physics = physics or Physics()
    pos = triangle_positions()
    asm = Assembler(physics)
    m = asm.add_module("three_body", pos, {"A": "A", "B": "B", "C": "C"})
    for corner in ("B", "C"):
        axis = _corner_axis(pos, corner)
        pts = _straight(pos[corner], axis, length - 1)
        k = len(asm.pos)
        asm.pos.append(pts[-1])
        asm.roles.append(PARITY)
        asm.module_of.append(f"far_{corner}")
        asm.labels.append(None)
        asm.base.append(physics.alpha)
        asm.add_link(corner, m.corners[corner], k, pts[:-1])
    return asm.build()
