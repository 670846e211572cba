"""Independent-set enumeration and an exact branch-and-bound MWIS solver.

Vertex subsets are handled as Python integer bitmasks (bit ``i`` = vertex ``i``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

DEFAULT_ENUMERATION_CAP = 40


class GraphSizeError(ValueError):
    pass


class GraphParameterError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    edges: frozenset[tuple[int, int]]
    weights: tuple[float, ...] = field(default=())

    def __post_init__(self):
        es = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphParameterError(f"bad edge ({u}, {v})")
            es.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(es))
        w = tuple(float(x) for x in self.weights) if self.weights else (1.0,) * self.n
        if len(w) != self.n:
            raise GraphParameterError("one weight per vertex required")
        object.__setattr__(self, "weights", w)

    @property
    def neighbor_masks(self) -> list[int]:
        masks = [0] * self.n
        for u, v in self.edges:
            masks[u] |= 1 << v
            masks[v] |= 1 << u
        return masks

    def is_independent(self, vertices) -> bool:
        s = set(vertices)
        return not any(u in s and v in s for u, v in self.edges)

    def weight_of(self, vertices) -> float:
        return float(sum(self.weights[v] for v in vertices))


def mask_to_set(mask: int) -> frozenset[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def _check_cap(graph, cap):
    if cap is not None and graph.n > cap:
        raise GraphSizeError(f"graph has {graph.n} vertices, enumeration cap is {cap}")


def iter_independent_masks(graph: WeightedGraph, cap: int | None = DEFAULT_ENUMERATION_CAP) -> Iterator[int]:
    """Yield every independent set (as bitmask) exactly once, empty set first."""
    _check_cap(graph, cap)
    nb = graph.neighbor_masks
    n = graph.n
    full = (1 << n) - 1
    # explicit stack of (current set, candidates above the last chosen vertex)
    stack = [(0, full)]
    while stack:
        cur, cand = stack.pop()
        yield cur
        children = []
        c = cand
        while c:
            low = c & -c
            v = low.bit_length() - 1
            above = cand & ~((low << 1) - 1)
            children.append((cur | low, above & ~nb[v]))
            c ^= low
        stack.extend(reversed(children))


def enumerate_independent_sets(graph: WeightedGraph, cap: int | None = DEFAULT_ENUMERATION_CAP) -> Iterator[frozenset[int]]:
    for mask in iter_independent_masks(graph, cap):
        yield mask_to_set(mask)


def independent_set_matrix(graph: WeightedGraph, cap: int | None = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Occupation matrix, one row per independent set (bool, shape ``(m, n)``)."""
    masks = list(iter_independent_masks(graph, cap))
    n = graph.n
    if n == 0:
        return np.zeros((len(masks), 0), dtype=bool)
    if n <= 63:
        arr = np.array(masks, dtype=np.int64)
        return ((arr[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)
    out = np.zeros((len(masks), n), dtype=bool)
    for r, m in enumerate(masks):
        for v in mask_to_set(m):
            out[r, v] = True
    return out


def brute_mwis(graph: WeightedGraph, cap: int | None = DEFAULT_ENUMERATION_CAP, rtol: float = 1e-9):
    """Reference MWIS by full enumeration."""
    best = -np.inf
    winners: list[int] = []
    w = graph.weights
    tol = rtol * max((abs(x) for x in w), default=1.0)
    for mask in iter_independent_masks(graph, cap):
        total = sum(w[v] for v in mask_to_set(mask))
        if total > best + tol:
            best, winners = total, [mask]
        elif total >= best - tol:
            winners.append(mask)
    return float(best), sorted((mask_to_set(m) for m in winners), key=lambda s: tuple(sorted(s)))


def _clique_cover_bound(cand: int, order: Sequence[int], nb: list[int], w: Sequence[float]) -> float:
    """Sum over a greedy clique partition of the heaviest vertex in each clique."""
    total = 0.0
    rest = cand
    for v in order:
        bit = 1 << v
        if not rest & bit:
            continue
        # v is the heaviest remaining vertex; grow a clique around it
        rest &= ~bit
        clique = nb[v] & rest
        members = bit
        for u in order:
            ub = 1 << u
            if clique & ub and (nb[u] | (1 << u)) & members == members:
                members |= ub
                rest &= ~ub
        total += w[v]
    return total


def mwis_solve(graph: WeightedGraph, rtol: float = 1e-9):
    """Exact maximum-weight independent sets by branch and bound.

    Returns
    -------
    (float, list of frozenset)
        Maximum weight and all maximizers (ties within ``rtol`` times the
        largest weight), sorted by their sorted vertex tuples.
    """
    if any(x <= 0 for x in graph.weights):
        raise GraphParameterError("mwis_solve requires positive weights")
    n = graph.n
    if n == 0:
        return 0.0, [frozenset()]
    w = graph.weights
    nb = graph.neighbor_masks
    order = sorted(range(n), key=lambda v: (-w[v], v))
    tol = rtol * max(w)
    best = [-1.0]
    found: list[int] = []

    def branch(cur: int, cur_w: float, cand: int):
        if not cand:
            if cur_w > best[0] + tol:
                best[0] = cur_w
                found.clear()
                found.append(cur)
            elif cur_w >= best[0] - tol:
                found.append(cur)
            return
        if cur_w + _clique_cover_bound(cand, order, nb, w) < best[0] - tol:
            return
        v = next(u for u in order if cand >> u & 1)
        bit = 1 << v
        branch(cur | bit, cur_w + w[v], cand & ~bit & ~nb[v])
        # excluding v only pays off if a neighbour of v can enter instead
        if cand & nb[v]:
            branch(cur, cur_w, cand & ~bit)

    branch(0, 0.0, (1 << n) - 1)
    found = [m for m in found if graph.weight_of(mask_to_set(m)) >= best[0] - tol]
    sets = sorted((mask_to_set(m) for m in set(found)), key=lambda s: tuple(sorted(s)))
    return float(best[0]), sets
