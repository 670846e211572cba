"""Weighted MWIS gadgets realizing parity constraints, with geometry templates.

Coordinates are in units of the nearest-neighbour spacing ``d``. Planar gadgets
live on the triangular lattice, so their blockade graph is the same for every
blockade radius in ``(d, sqrt(3) d)``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mwis import WeightedGraph, mwis_solve

SQRT3 = math.sqrt(3.0)
PARITY, AUXILIARY, LINK = "parity", "auxiliary", "link"


class GadgetError(ValueError):
    pass


class GadgetConstructionError(GadgetError):
    """A constructed gadget failed its MWIS bijection check."""


def default_blockade_radius(d: float = 1.0) -> float:
    """Geometric mean of ``d`` and ``sqrt(3) d``."""
    return math.sqrt(d * SQRT3 * d)


def axial_to_xy(q: float, r: float) -> tuple[float, float]:
    return q + 0.5 * r, 0.5 * SQRT3 * r


@dataclass(frozen=True)
class Vertex:
    id: str
    role: str
    weight: float
    pos: tuple[float, ...]


@dataclass(frozen=True)
class MwisCatalog:
    w_max: float
    maximizers: tuple[frozenset[str], ...]


@dataclass(frozen=True)
class GadgetGraph:
    """Gadget template.

    ``constraints`` lists ``(members, parity)`` pairs over anchor names that the
    gadget is meant to enforce jointly.
    """

    name: str
    vertices: tuple[Vertex, ...]
    edges: frozenset[tuple[str, str]]
    anchors: dict[str, str]
    constraints: tuple[tuple[tuple[str, ...], int], ...]
    alpha: float = 1.0
    experimental: bool = False

    @property
    def ids(self) -> list[str]:
        return [v.id for v in self.vertices]

    def vertex(self, vid: str) -> Vertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(vid)

    @property
    def parity_ids(self) -> list[str]:
        return [v.id for v in self.vertices if v.role == PARITY]

    @property
    def dimension(self) -> int:
        return len(self.vertices[0].pos)

    def positions(self) -> np.ndarray:
        return np.array([v.pos for v in self.vertices], dtype=float)

    def threshold_edges(self, rb: float) -> frozenset[tuple[str, str]]:
        return _threshold_edges(self.ids, self.positions(), rb)

    def rb_window(self) -> tuple[float, float]:
        """Open interval of blockade radii reproducing ``edges`` (units of d)."""
        pos = self.positions()
        ids = self.ids
        lo, hi = 0.0, math.inf
        for a, b in itertools.combinations(range(len(ids)), 2):
            dist = float(np.linalg.norm(pos[a] - pos[b]))
            if _key(ids[a], ids[b]) in self.edges:
                lo = max(lo, dist)
            else:
                hi = min(hi, dist)
        return lo, hi

    def default_rb(self) -> float:
        lo, hi = self.rb_window()
        if lo < 1.0 + 1e-12 and hi > SQRT3 - 1e-12:
            return default_blockade_radius()
        return math.sqrt(lo * hi)

    def weighted_graph(self) -> WeightedGraph:
        ix = {v: k for k, v in enumerate(self.ids)}
        return WeightedGraph(
            len(self.vertices),
            frozenset((ix[a], ix[b]) for a, b in self.edges),
            tuple(v.weight for v in self.vertices),
        )

    def catalog(self) -> MwisCatalog:
        w, sets = mwis_solve(self.weighted_graph())
        ids = self.ids
        return MwisCatalog(w, tuple(frozenset(ids[k] for k in s) for s in sets))

    def parity_assignment(self, vertex_set) -> tuple[int, ...]:
        """Bits of the anchored parity vertices, in ``parity_ids`` order."""
        return tuple(int(v in vertex_set) for v in self.parity_ids)

    def satisfying_assignments(self) -> set[tuple[int, ...]]:
        names = self.parity_ids
        out = set()
        for bits in itertools.product((0, 1), repeat=len(names)):
            value = dict(zip(names, bits))
            if all(sum(value[m] for m in members) % 2 == p for members, p in self.constraints):
                out.add(bits)
        return out

    def bijection_errors(self) -> list[str]:
        cat = self.catalog()
        errors = []
        assignments = [self.parity_assignment(s) for s in cat.maximizers]
        if len(set(assignments)) != len(assignments):
            errors.append("two maximizers share a parity assignment")
        want = self.satisfying_assignments()
        if set(assignments) != want:
            errors.append(
                f"maximizer assignments {sorted(set(assignments))} != satisfying {sorted(want)}"
            )
        return errors

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "alpha": self.alpha,
            "vertices": [
                {"id": v.id, "role": v.role, "weight": v.weight, "xyz": list(v.pos)}
                for v in self.vertices
            ],
            "edges": sorted([list(e) for e in self.edges]),
            "anchors": dict(self.anchors),
            "constraints": [{"members": list(m), "parity": p} for m, p in self.constraints],
            "experimental": self.experimental,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GadgetGraph":
        return cls(
            doc["name"],
            tuple(
                Vertex(v["id"], v["role"], float(v["weight"]), tuple(v["xyz"]))
                for v in doc["vertices"]
            ),
            frozenset(_key(*e) for e in doc["edges"]),
            dict(doc["anchors"]),
            tuple((tuple(c["members"]), int(c["parity"])) for c in doc["constraints"]),
            float(doc.get("alpha", 1.0)),
            bool(doc.get("experimental", False)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


def _threshold_edges(ids, pos, rb):
    out = set()
    for a, b in itertools.combinations(range(len(ids)), 2):
        if np.linalg.norm(pos[a] - pos[b]) < rb:
            out.add(_key(ids[a], ids[b]))
    return frozenset(out)


def _check_alpha(alpha):
    if not alpha > 0:
        raise GadgetError(f"alpha must be positive, got {alpha}")


def _build(name, spec, alpha, constraints, rb=None, experimental=False, verify=True):
    """``spec`` rows: (id, role, weight in units of alpha, position)."""
    vertices = tuple(Vertex(i, role, w * alpha, tuple(float(x) for x in p)) for i, role, w, p in spec)
    ids = [v.id for v in vertices]
    pos = np.array([v.pos for v in vertices])
    if rb is None:
        rb = default_blockade_radius()
    g = GadgetGraph(
        name,
        vertices,
        _threshold_edges(ids, pos, rb),
        {v.id: v.id for v in vertices if v.role == PARITY},
        tuple(constraints),
        alpha,
        experimental,
    )
    if verify:
        errors = g.bijection_errors()
        if errors:
            raise GadgetConstructionError(f"{name}: " + "; ".join(errors))
    return g


def _planar(q, r):
    return axial_to_xy(q, r)


def two_body_gadget(alpha: float = 1.0) -> GadgetGraph:
    """Path A - c - B enforcing ``n_A xor n_B = 0``."""
    _check_alpha(alpha)
    spec = [
        ("A", PARITY, 1, (0.0, 0.0)),
        ("c", AUXILIARY, 2, (1.0, 0.0)),
        ("B", PARITY, 1, (2.0, 0.0)),
    ]
    return _build("two_body", spec, alpha, [(("A", "B"), 0)])


# axial lattice coordinates of the side-2 triangle; lowercase = midpoint opposite
TRIANGLE_AXIAL = {
    "A": (0, 0),
    "B": (2, 0),
    "C": (0, 2),
    "a": (1, 1),
    "b": (0, 1),
    "c": (1, 0),
}


def three_body_gadget(alpha: float = 1.0) -> GadgetGraph:
    """Equilateral side-2d triangle; parity corners A, B, C and midpoint auxiliaries."""
    _check_alpha(alpha)
    spec = [
        (k, PARITY if k.isupper() else AUXILIARY, 1 if k.isupper() else 2, _planar(*TRIANGLE_AXIAL[k]))
        for k in "ABCabc"
    ]
    return _build("three_body", spec, alpha, [(("A", "B", "C"), 1)])


FOUR_BODY_AXIAL = {
    "A": (0, 0),
    "B": (2, 0),
    "e": (0, 2),
    "m_AB": (1, 0),
    "m_Be": (1, 1),
    "m_Ae": (0, 1),
    "C": (0, 4),
    "D": (-2, 4),
    "m_CD": (-1, 4),
    "m_eC": (0, 3),
    "m_eD": (-1, 3),
}


def four_body_gadget(alpha: float = 1.0) -> GadgetGraph:
    """Two triangles sharing corner ``e`` (weight 2 alpha), point-mirrored about it."""
    _check_alpha(alpha)
    weights = {"A": 1, "B": 1, "C": 1, "D": 1, "e": 2}
    spec = []
    for k, qr in FOUR_BODY_AXIAL.items():
        role = PARITY if k in "ABCD" else AUXILIARY
        spec.append((k, role, weights.get(k, 2), _planar(*qr)))
    return _build("four_body", spec, alpha, [(("A", "B", "C", "D"), 0)])


RHOMBUS_AXIAL = {
    "P": (0, 0),
    "Q": (2, 0),
    "R": (0, 2),
    "S": (2, -2),
    "m": (1, 0),
    "p1": (1, 1),
    "q1": (0, 1),
    "p2": (2, -1),
    "q2": (1, -1),
}
RHOMBUS_WEIGHTS = {"P": 2, "Q": 2, "R": 1, "S": 1, "m": 4, "p1": 2, "q1": 2, "p2": 2, "q2": 2}


def rhombic_module(alpha: float = 1.0) -> GadgetGraph:
    """Triangles PQR (up) and PQS (down) fused along their common side PQ.

    The shared corners and the shared midpoint ``m`` carry the summed weights.
    The constructor refuses to return a graph failing the bijection check.
    """
    _check_alpha(alpha)
    spec = [
        (k, PARITY if k.isupper() else AUXILIARY, RHOMBUS_WEIGHTS[k], _planar(*qr))
        for k, qr in RHOMBUS_AXIAL.items()
    ]
    return _build("rhombic", spec, alpha, [(("P", "Q", "R"), 1), (("P", "Q", "S"), 1)])


def tetrahedron_gadget(alpha: float = 1.0) -> GadgetGraph:
    """Ten-atom unit-ball gadget for ``n_A xor n_B xor n_C xor n_D = 0``.

    Corners sit on a tetragonal disphenoid (edges AB and CD of length 2d, the
    other four longer) with auxiliaries at the edge midpoints. On a regular
    tetrahedron the three opposite-midpoint pairs all tie for the all-zero
    assignment; stretching along the AB/CD axis leaves only the AB/CD pair
    independent.
    """
    _check_alpha(alpha)
    corners = {
        "A": (-1.0, 0.0, 1.0),
        "B": (1.0, 0.0, 1.0),
        "C": (0.0, -1.0, -1.0),
        "D": (0.0, 1.0, -1.0),
    }
    spec = [(k, PARITY, 1, p) for k, p in corners.items()]
    for u, v in itertools.combinations("ABCD", 2):
        mid = tuple((a + b) / 2 for a, b in zip(corners[u], corners[v]))
        spec.append((f"m_{u}{v}", AUXILIARY, 2, mid))
    # longest edge sqrt(2) d (opposite midpoints AC/BD), shortest gap sqrt(3.5) d
    rb = math.sqrt(math.sqrt(2.0) * math.sqrt(3.5))
    return _build("tetrahedron", spec, alpha, [(("A", "B", "C", "D"), 0)], rb=rb)


def twin_three_body_gadget_3d(alpha: float = 1.0) -> GadgetGraph:
    """Seven-atom unit-ball gadget for two three-body constraints sharing P, Q.

    Enforces ``P xor Q xor R = 1`` and ``P xor Q xor S = 1``. The auxiliary
    triangle p, q, m lies in a plane; R and S sit above and below the p-q edge.
    Experimental geometry: the bijection check is the authority.
    """
    _check_alpha(alpha)
    h = 0.5 * SQRT3
    spec = [
        ("P", PARITY, 1, (-1.0, h, 0.0)),
        ("Q", PARITY, 1, (1.0, h, 0.0)),
        ("R", PARITY, 1, (0.0, -0.6, 0.85)),
        ("S", PARITY, 1, (0.0, -0.6, -0.85)),
        ("p", AUXILIARY, 3, (0.5, 0.0, 0.0)),
        ("q", AUXILIARY, 3, (-0.5, 0.0, 0.0)),
        ("m", AUXILIARY, 2, (0.0, h, 0.0)),
    ]
    return _build(
        "twin_three_body_3d",
        spec,
        alpha,
        [(("P", "Q", "R"), 1), (("P", "Q", "S"), 1)],
        rb=default_blockade_radius(),
        experimental=True,
    )


def face_of(gadget: GadgetGraph, corners: Sequence[str]) -> GadgetGraph:
    """Induced sub-gadget on three tetrahedron corners and their edge midpoints."""
    keep = set(corners)
    for u, v in itertools.combinations(sorted(corners), 2):
        keep.add(f"m_{u}{v}")
    verts = tuple(v for v in gadget.vertices if v.id in keep)
    edges = frozenset(e for e in gadget.edges if e[0] in keep and e[1] in keep)
    return GadgetGraph(
        f"{gadget.name}_face",
        verts,
        edges,
        {k: v for k, v in gadget.anchors.items() if k in keep},
        ((tuple(corners), 1),),
        gadget.alpha,
        gadget.experimental,
    )


GADGETS = {
    "two_body": two_body_gadget,
    "three_body": three_body_gadget,
    "four_body": four_body_gadget,
    "rhombic": rhombic_module,
    "tetrahedron": tetrahedron_gadget,
    "twin_three_body_3d": twin_three_body_gadget_3d,
}
