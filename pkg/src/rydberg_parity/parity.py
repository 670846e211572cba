"""Parity encoding: parity qubits, plaquette constraints, encode and decode."""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .problem import Problem, ProblemError

Label = tuple[int, ...]


class ParityError(ValueError):
    pass


class UnsupportedProblemError(ParityError):
    pass


class DecodeError(ParityError):
    """Parity bits inconsistent with any spin configuration.

    ``cycle`` lists labels whose bits close an odd loop.
    """

    def __init__(self, message, cycle=()):
        super().__init__(message)
        self.cycle = tuple(cycle)


@dataclass(frozen=True)
class ParityQubit:
    label: Label
    field: float = 0.0
    pos: tuple[int, int] | None = None

    def __post_init__(self):
        lab = tuple(sorted(int(i) for i in self.label))
        if not lab:
            raise ParityError("parity qubit label must be non-empty")
        object.__setattr__(self, "label", lab)
        object.__setattr__(self, "field", float(self.field))
        if self.pos is not None:
            object.__setattr__(self, "pos", tuple(int(p) for p in self.pos))


@dataclass(frozen=True)
class ParityConstraint:
    members: tuple[Label, ...]
    parity: int

    def __post_init__(self):
        members = tuple(tuple(sorted(m)) for m in self.members)
        if len(members) not in (3, 4):
            raise ParityError(f"constraint must have 3 or 4 members, got {len(members)}")
        if len(set(members)) != len(members):
            raise ParityError(f"repeated member in constraint {members}")
        if int(self.parity) != (1 if len(members) == 3 else 0):
            raise ParityError("three-body constraints need parity 1, four-body parity 0")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "parity", int(self.parity))


@dataclass(frozen=True)
class ParityLayout:
    qubits: tuple[ParityQubit, ...]
    constraints: tuple[ParityConstraint, ...] = field(default=())

    def __post_init__(self):
        labels = [q.label for q in self.qubits]
        if len(set(labels)) != len(labels):
            raise ParityError("duplicate parity qubit label")
        known = set(labels)
        for c in self.constraints:
            missing = [m for m in c.members if m not in known]
            if missing:
                raise ParityError(f"constraint {c.members} names unknown qubits {missing}")

    @property
    def labels(self) -> list[Label]:
        return [q.label for q in self.qubits]

    @property
    def spin_count(self) -> int:
        return 1 + max(max(q.label) for q in self.qubits)

    def index(self, label: Sequence[int]) -> int:
        return self.labels.index(tuple(sorted(label)))

    def fields(self) -> np.ndarray:
        return np.array([q.field for q in self.qubits])

    def with_fields(self, fields: Sequence[float]) -> "ParityLayout":
        qubits = tuple(
            ParityQubit(q.label, f, q.pos) for q, f in zip(self.qubits, fields, strict=True)
        )
        return ParityLayout(qubits, self.constraints)

    def check_plaquettes(self) -> list[ParityConstraint]:
        """Constraints whose members do not fit into a 2x2 cell of the grid."""
        pos = {q.label: q.pos for q in self.qubits}
        bad = []
        for c in self.constraints:
            pts = [pos[m] for m in c.members]
            if any(p is None for p in pts):
                continue
            rows = {p[0] for p in pts}
            cols = {p[1] for p in pts}
            if max(rows) - min(rows) > 1 or max(cols) - min(cols) > 1:
                bad.append(c)
        return bad

    def to_json_dict(self) -> dict:
        return {
            "qubits": [
                {"label": list(q.label), "j": q.field, "pos": list(q.pos) if q.pos else None}
                for q in self.qubits
            ],
            "constraints": [
                {"members": [list(m) for m in c.members], "parity": c.parity}
                for c in self.constraints
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ParityLayout":
        try:
            qubits = tuple(
                ParityQubit(tuple(q["label"]), q.get("j", 0.0), q.get("pos"))
                for q in doc["qubits"]
            )
            constraints = tuple(
                ParityConstraint(tuple(tuple(m) for m in c["members"]), c["parity"])
                for c in doc.get("constraints", [])
            )
        except (KeyError, TypeError) as exc:
            raise ParityError(f"parity layout document missing field {exc}") from None
        return cls(qubits, constraints)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "ParityLayout":
        return cls.from_json_dict(json.loads(text))


def lhz_encode(problem: Problem) -> ParityLayout:
    """Encode an all-to-all two-body problem on the triangular parity grid.

    Qubit ``(i, j)`` sits at grid position ``(i, j)``. Each 2x2 cell with top-left
    ``(i, j)``, ``i < j``, is a plaquette: four-body in the bulk, three-body where
    ``(i+1, j)`` falls off the triangle (i.e. ``j == i + 1``), which is the
    boundary row.
    """
    if any(t.order != 2 for t in problem.terms):
        raise UnsupportedProblemError(
            "lhz_encode only handles two-body terms; supply a ParityLayout instead"
        )
    n = problem.spin_count
    if n < 2:
        raise UnsupportedProblemError("need at least two spins")
    qubits = tuple(
        ParityQubit((i, j), problem.coefficient((i, j)), (i, j))
        for i, j in itertools.combinations(range(n), 2)
    )
    constraints = []
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            if j == i + 1:
                constraints.append(ParityConstraint(((i, j), (i, j + 1), (j, j + 1)), 1))
            else:
                constraints.append(
                    ParityConstraint(((i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)), 0)
                )
    return ParityLayout(qubits, tuple(constraints))


def parity_config_from_spins(labels: Sequence[Sequence[int]], config: Sequence[int]) -> np.ndarray:
    """``n_m = 1`` iff the product of the spins in label ``m`` is +1."""
    s = np.asarray(config, dtype=int)
    out = np.empty(len(labels), dtype=np.int8)
    for k, lab in enumerate(labels):
        idx = list(lab)
        if min(idx) < 0 or max(idx) >= len(s):
            raise ProblemError(f"label {tuple(lab)} out of range for {len(s)} spins")
        out[k] = 1 if np.prod(s[idx]) > 0 else 0
    return out


def _bits_by_label(bits, labels):
    if isinstance(bits, dict):
        return {tuple(sorted(k)): int(v) for k, v in bits.items()}
    bits = list(bits)
    if len(bits) != len(labels):
        raise ParityError(f"expected {len(labels)} bits, got {len(bits)}")
    return {lab: int(b) for lab, b in zip(labels, bits)}


def check_constraints(bits, constraints, labels=None):
    """Evaluate XOR constraints.

    ``bits`` is either a mapping label -> bit or a sequence aligned with ``labels``.

    Returns
    -------
    (bool, list of ParityConstraint)
        Overall verdict and the violated constraints.
    """
    if labels is None and not isinstance(bits, dict):
        raise ParityError("labels required when bits is a sequence")
    table = _bits_by_label(bits, labels)
    violated = []
    for c in constraints:
        try:
            x = 0
            for m in c.members:
                x ^= table[m]
        except KeyError as exc:
            raise ParityError(f"missing bit for constraint member {exc}") from None
        if x != c.parity:
            violated.append(c)
    return not violated, violated


def decode(bits, layout: ParityLayout):
    """Recover the pair ``(s, -s)`` of spin configurations behind parity bits.

    Only ``(s,)`` is returned when odd-order labels break the global flip.

    Spins are tied together by qubits with two-spin labels, the only ones that
    fix a relative orientation on their own; higher-order labels are then
    checked for consistency. Raises ``DecodeError`` with a witness on failure.
    """
    labels = layout.labels
    table = _bits_by_label(bits, labels)
    n = layout.spin_count
    adj: dict[int, list[tuple[int, int, Label]]] = {i: [] for i in range(n)}
    # relative product s_i s_j = +1 iff bit 1
    for lab in labels:
        if len(lab) == 2:
            i, j = lab
            rel = 1 if table[lab] else -1
            adj[i].append((j, rel, lab))
            adj[j].append((i, rel, lab))
    single = {lab[0]: table[lab] for lab in labels if len(lab) == 1}

    sign = {}
    parent: dict[int, tuple[int, Label] | None] = {}
    root = 0
    sign[root] = 1
    parent[root] = None
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v, rel, lab in adj[u]:
            if v not in sign:
                sign[v] = sign[u] * rel
                parent[v] = (u, lab)
                queue.append(v)
            elif sign[v] != sign[u] * rel:
                raise DecodeError(
                    f"inconsistent parity loop through {lab}",
                    _cycle_witness(parent, u, v, lab),
                )
    if len(sign) != n:
        # spins reachable only through other label types: try to fix them by search
        sign = _complete_by_search(sign, n, table, labels)
    s = np.array([sign[i] for i in range(n)], dtype=int)
    if single:
        # a local-field label pins the global orientation
        i, b = next(iter(single.items()))
        if (s[i] > 0) != bool(b):
            s = -s
    check = parity_config_from_spins(labels, s)
    wrong = [lab for lab, b in zip(labels, check) if b != table[lab]]
    if wrong:
        raise DecodeError(f"bits of {wrong} contradict the decoded spins", wrong)
    flipped = parity_config_from_spins(labels, -s)
    if all(b == table[lab] for lab, b in zip(labels, flipped)):
        return tuple(int(v) for v in s), tuple(int(-v) for v in s)
    return (tuple(int(v) for v in s),)


def _cycle_witness(parent, u, v, closing):
    def path(x):
        out = []
        while parent[x] is not None:
            p, lab = parent[x]
            out.append(lab)
            x = p
        return out

    pu, pv = path(u), path(v)
    # drop the common tail towards the root
    while pu and pv and pu[-1] == pv[-1]:
        pu.pop()
        pv.pop()
    return tuple(pu + [closing] + pv[::-1])


def _complete_by_search(sign, n, table, labels):
    free = [i for i in range(n) if i not in sign]
    if len(free) > 20:
        raise DecodeError("spins not connected by the parity labels")
    for combo in itertools.product((1, -1), repeat=len(free)):
        trial = dict(sign)
        trial.update(zip(free, combo))
        s = np.array([trial[i] for i in range(n)])
        if all(parity_config_from_spins([lab], s)[0] == table[lab] for lab in labels):
            return trial
    raise DecodeError("no spin configuration reproduces the parity bits", tuple(labels))
