"""Physical atom layouts: data model, blockade graph and validation.

Placement of parity layouts onto the triangular lattice lives in
:mod:`rydberg_parity.placement`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .gadgets import AUXILIARY, LINK, PARITY, SQRT3, default_blockade_radius
from .mwis import WeightedGraph

DEFAULT_V_OVER_ALPHA = 8.0
FAITHFULNESS_GUARD = 4.0


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Physics:
    """Global parameters. Lengths in units of ``d`` unless ``d`` is changed."""

    d: float = 1.0
    c6: float = DEFAULT_V_OVER_ALPHA
    rb: float = field(default_factory=default_blockade_radius)
    alpha: float = 1.0

    @classmethod
    def from_ratio(cls, v_over_alpha: float = DEFAULT_V_OVER_ALPHA, alpha: float = 1.0,
                   d: float = 1.0, rb: float | None = None) -> "Physics":
        """Fix ``C6`` through the nearest-neighbour interaction ``V(d) = ratio * alpha``."""
        return cls(d, v_over_alpha * alpha * d**6, default_blockade_radius(d) if rb is None else rb, alpha)

    @property
    def v_nn(self) -> float:
        return self.c6 / self.d**6

    def to_json_dict(self) -> dict:
        return {"d": self.d, "c6": self.c6, "rb": self.rb, "alpha": self.alpha}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Physics":
        try:
            return cls(float(doc["d"]), float(doc["c6"]), float(doc["rb"]), float(doc["alpha"]))
        except KeyError as exc:
            raise LayoutError(f"physics missing field {exc}") from None


@dataclass(frozen=True)
class Atom:
    """One atom.

    ``field`` and ``shift`` are energy terms proportional to the occupation
    (problem field and compensation); the laser detuning follows from them.
    """

    pos: tuple[float, ...]
    weight: float
    role: str
    module: str
    label: tuple | None = None
    field: float = 0.0
    shift: float = 0.0

    @property
    def detuning(self) -> float:
        return self.weight - self.field - self.shift


@dataclass(frozen=True)
class LinkSpec:
    """Chain of atoms copying ``variable`` between two module corners.

    ``atoms`` runs corner to corner, both included, so ``length`` is odd.
    """

    atoms: tuple[int, ...]
    variable: object = None

    @property
    def length(self) -> int:
        return len(self.atoms)

    @property
    def interior(self) -> tuple[int, ...]:
        return self.atoms[1:-1]


@dataclass(frozen=True)
class ModuleSpec:
    """A placed gadget instance.

    ``corners`` maps constraint variables to atom indices; ``base_weights``
    are the gadget weights before link bonuses.
    """

    id: str
    kind: str
    atoms: tuple[int, ...]
    corners: dict
    base_weights: tuple[float, ...]
    edges: frozenset = frozenset()

    @property
    def aux_atoms(self) -> tuple[int, ...]:
        corner_set = set(self.corners.values())
        return tuple(a for a in self.atoms if a not in corner_set)


@dataclass(frozen=True)
class AtomLayout:
    atoms: tuple[Atom, ...]
    physics: Physics = field(default_factory=Physics)
    modules: tuple[ModuleSpec, ...] = ()
    links: tuple[LinkSpec, ...] = ()
    representatives: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.atoms)

    def positions(self) -> np.ndarray:
        if not self.atoms:
            return np.zeros((0, 2))
        return np.array([a.pos for a in self.atoms], dtype=float) * self.physics.d

    def detunings(self) -> np.ndarray:
        return np.array([a.detuning for a in self.atoms], dtype=float)

    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self.atoms], dtype=float)

    def module(self, mid: str) -> ModuleSpec:
        for m in self.modules:
            if m.id == mid:
                return m
        raise KeyError(mid)

    def intended_edges(self) -> frozenset[tuple[int, int]]:
        out = set()
        for m in self.modules:
            out |= set(m.edges)
        for link in self.links:
            for u, v in zip(link.atoms, link.atoms[1:]):
                out.add((min(u, v), max(u, v)))
        return frozenset(out)

    def replace_atoms(self, atoms: Sequence[Atom]) -> "AtomLayout":
        return replace(self, atoms=tuple(atoms))

    def with_physics(self, physics: Physics) -> "AtomLayout":
        return replace(self, physics=physics)

    def with_fields(self, fields: dict) -> "AtomLayout":
        """Put problem field ``J_m`` on each parity label's representative atom."""
        atoms = [replace(a, field=0.0) for a in self.atoms]
        for label, value in fields.items():
            key = tuple(label) if isinstance(label, (list, tuple)) else label
            if key not in self.representatives:
                raise LayoutError(f"no representative atom for parity label {label}")
            k = self.representatives[key]
            atoms[k] = replace(atoms[k], field=float(value))
        return self.replace_atoms(atoms)

    def with_shifts(self, shifts: dict[int, float]) -> "AtomLayout":
        atoms = list(self.atoms)
        for k, c in shifts.items():
            if not 0 <= k < len(atoms):
                raise LayoutError(f"unknown atom id {k}")
            atoms[k] = replace(atoms[k], shift=atoms[k].shift + float(c))
        return self.replace_atoms(atoms)

    def cleared(self) -> "AtomLayout":
        return self.replace_atoms([replace(a, field=0.0, shift=0.0) for a in self.atoms])

    def to_json_dict(self) -> dict:
        return {
            "physics": self.physics.to_json_dict(),
            "atoms": [
                {
                    "pos": list(a.pos),
                    "weight": a.weight,
                    "detuning": a.detuning,
                    "role": a.role,
                    "module": a.module,
                    "label": _label_out(a.label),
                    "field": a.field,
                    "shift": a.shift,
                }
                for a in self.atoms
            ],
            "modules": [
                {
                    "id": m.id,
                    "kind": m.kind,
                    "atoms": list(m.atoms),
                    "corners": [[_label_out(k), v] for k, v in m.corners.items()],
                    "base_weights": list(m.base_weights),
                    "edges": sorted([list(e) for e in m.edges]),
                }
                for m in self.modules
            ],
            "links": [
                {"atoms": list(l.atoms), "variable": _label_out(l.variable)} for l in self.links
            ],
            "representatives": [[_label_out(k), v] for k, v in self.representatives.items()],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "AtomLayout":
        try:
            physics = Physics.from_json_dict(doc["physics"])
            atoms = []
            for k, a in enumerate(doc["atoms"]):
                weight = float(a["weight"])
                fld = float(a.get("field", 0.0))
                # detuning is authoritative when bookkeeping terms are absent
                shift = float(a["shift"]) if "shift" in a else weight - fld - float(a["detuning"])
                atoms.append(
                    Atom(
                        tuple(float(x) for x in a["pos"]),
                        weight,
                        a.get("role", AUXILIARY),
                        str(a.get("module", "")),
                        _label_in(a.get("label")),
                        fld,
                        shift,
                    )
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise LayoutError(f"atom layout document: bad or missing field {exc}") from None
        modules = tuple(
            ModuleSpec(
                m["id"],
                m["kind"],
                tuple(m["atoms"]),
                {_label_in(k): v for k, v in m["corners"]},
                tuple(m["base_weights"]),
                frozenset(tuple(e) for e in m.get("edges", [])),
            )
            for m in doc.get("modules", [])
        )
        links = tuple(
            LinkSpec(tuple(l["atoms"]), _label_in(l.get("variable"))) for l in doc.get("links", [])
        )
        reps = {_label_in(k): v for k, v in doc.get("representatives", [])}
        return cls(tuple(atoms), physics, modules, links, reps)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "AtomLayout":
        return cls.from_json_dict(json.loads(text))


def _label_out(label):
    if isinstance(label, tuple):
        return list(label)
    return label


def _label_in(label):
    if isinstance(label, list):
        return tuple(label)
    return label


def gadget_layout(gadget, physics: Physics | None = None) -> AtomLayout:
    """A gadget template as a one-module layout (no links).

    ``physics`` defaults to the gadget's own blockade radius and a ``C6``
    giving ``DEFAULT_V_OVER_ALPHA * alpha`` on its longest blockaded pair,
    so every intended edge is at least that strong. In the planar gadgets all
    blockaded pairs sit at ``d``; in the 3D ones they do not.
    """
    if physics is None:
        pos = {v.id: np.asarray(v.pos, float) for v in gadget.vertices}
        longest = max((np.linalg.norm(pos[a] - pos[b]) for a, b in gadget.edges), default=1.0)
        physics = Physics(1.0, DEFAULT_V_OVER_ALPHA * gadget.alpha * longest**6,
                          gadget.default_rb(), gadget.alpha)
    ids = gadget.ids
    ix = {v: k for k, v in enumerate(ids)}
    atoms = tuple(
        Atom(tuple(float(x) for x in v.pos), v.weight, v.role, gadget.name)
        for v in gadget.vertices
    )
    module = ModuleSpec(
        gadget.name, gadget.name, tuple(range(len(ids))),
        {vid: ix[vid] for vid in gadget.parity_ids},
        tuple(v.weight for v in gadget.vertices),
        frozenset(tuple(sorted((ix[a], ix[b]))) for a, b in gadget.edges),
    )
    return AtomLayout(atoms, physics, (module,), (), {})


def pair_distances(layout: AtomLayout) -> np.ndarray:
    pos = layout.positions()
    diff = pos[:, None, :] - pos[None, :, :]
    return np.sqrt((diff**2).sum(-1))


def blockade_graph(layout: AtomLayout) -> WeightedGraph:
    """Atoms closer than ``r_B`` are joined; vertex weights are the MWIS weights."""
    n = len(layout.atoms)
    dist = pair_distances(layout)
    rb = layout.physics.rb * layout.physics.d
    edges = frozenset((i, j) for i, j in itertools.combinations(range(n), 2) if dist[i, j] < rb)
    return WeightedGraph(n, edges, tuple(layout.weights()) if n else ())


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        return "pass" if self.ok else "fail:\n  " + "\n  ".join(self.violations)


def validate(layout: AtomLayout, guard: float = FAITHFULNESS_GUARD) -> ValidationReport:
    """Check radius window, spacing, link parity, guard ratio and intended edges."""
    ph = layout.physics
    out = []
    if not ph.d < ph.rb * ph.d < SQRT3 * ph.d:
        out.append(f"window: r_B = {ph.rb:.6g} d outside (d, sqrt(3) d)")
    if ph.v_nn / ph.alpha < guard:
        out.append(f"guard: V(d)/alpha = {ph.v_nn / ph.alpha:.6g} below {guard}")
    n = len(layout.atoms)
    if n > 1:
        dist = pair_distances(layout)
        iu = np.triu_indices(n, 1)
        dmin = dist[iu].min()
        if dmin < ph.d * (1 - 1e-9):
            i, j = (int(x[np.argmin(dist[iu])]) for x in iu)
            out.append(f"spacing: atoms {i} and {j} at {dmin / ph.d:.6g} d < d")
    for k, link in enumerate(layout.links):
        if link.length % 2 == 0:
            out.append(f"link parity: link {k} has even length {link.length}")
    if any(not math.isfinite(a.detuning) for a in layout.atoms):
        out.append("detuning: non-finite value")
    if layout.modules or layout.links:
        want = layout.intended_edges()
        got = blockade_graph(layout).edges
        extra = sorted(got - want)
        missing = sorted(want - got)
        if extra:
            out.append(f"edges: unintended blockade pairs {extra[:10]}")
        if missing:
            out.append(f"edges: intended pairs not blockaded {missing[:10]}")
    return ValidationReport(out)
