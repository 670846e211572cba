"""Diagonal Rydberg energies, independent-set spectra and physical ground states."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .layout import AtomLayout, LayoutError, blockade_graph
from .mwis import DEFAULT_ENUMERATION_CAP, GraphSizeError, independent_set_matrix

EXHAUSTIVE_CAP = 24
WEIGHT_CLASSES = ("W_max", "W_max-1", "W_max-2", "lower")


class GeometryError(LayoutError):
    pass


def interaction_matrix(layout: AtomLayout) -> np.ndarray:
    """``C6 / r^6`` for every pair, zero diagonal; no cutoff."""
    pos = layout.positions()
    n = len(pos)
    if n == 0:
        return np.zeros((0, 0))
    diff = pos[:, None, :] - pos[None, :, :]
    r2 = (diff**2).sum(-1)
    np.fill_diagonal(r2, 1.0)
    if np.any(r2 <= 1e-24):
        i, j = np.argwhere(np.triu(r2 <= 1e-24, 1))[0]
        raise GeometryError(f"atoms {i} and {j} coincide")
    v = layout.physics.c6 / r2**3
    np.fill_diagonal(v, 0.0)
    return v


def diagonal_energy(layout: AtomLayout, state) -> float:
    """``-sum_i Delta_i n_i + sum_{i<j} V_ij n_i n_j`` for one occupation pattern."""
    n = np.asarray(state, dtype=float)
    if n.shape != (len(layout.atoms),):
        raise LayoutError(f"state has length {n.shape}, layout has {len(layout.atoms)} atoms")
    v = interaction_matrix(layout)
    return float(-layout.detunings() @ n + 0.5 * n @ v @ n)


def state_energies(layout: AtomLayout, occ: np.ndarray, v: np.ndarray | None = None,
                   chunk: int = 1 << 16) -> np.ndarray:
    """Energies of many occupation rows at once."""
    occ = np.asarray(occ)
    if v is None:
        v = interaction_matrix(layout)
    det = layout.detunings()
    out = np.empty(occ.shape[0])
    for s in range(0, occ.shape[0], chunk):
        block = occ[s:s + chunk].astype(float)
        out[s:s + chunk] = -block @ det + 0.5 * np.einsum("ij,ij->i", block @ v, block)
    return out


def tail_energies(layout: AtomLayout, occ: np.ndarray, v: np.ndarray | None = None) -> np.ndarray:
    """Interaction part only."""
    if v is None:
        v = interaction_matrix(layout)
    block = np.asarray(occ, dtype=float)
    return 0.5 * np.einsum("ij,ij->i", block @ v, block)


def bitstrings(occ: np.ndarray) -> list[str]:
    return ["".join("1" if b else "0" for b in row) for row in np.asarray(occ)]


@dataclass
class SpectrumReport:
    """Independent-set states sorted by energy (ties by bitstring)."""

    states: np.ndarray
    weights: np.ndarray
    energies: np.ndarray
    classes: np.ndarray
    w_max: float
    delta_s: float
    delta_g: float
    alpha: float = 1.0

    def __len__(self):
        return len(self.energies)

    @property
    def manifold(self) -> np.ndarray:
        return self.classes == 0

    def manifold_states(self) -> np.ndarray:
        return self.states[self.manifold]

    def class_name(self, k: int) -> str:
        return WEIGHT_CLASSES[int(k)]

    def to_csv(self, absolute: bool = False) -> str:
        scale = 1.0 if absolute else 1.0 / self.alpha
        buf = io.StringIO()
        buf.write("state,weight_class,energy\n")
        for bits, cls, e in zip(bitstrings(self.states), self.classes, self.energies):
            buf.write(f"{bits},{WEIGHT_CLASSES[cls]},{e * scale:.15g}\n")
        return buf.getvalue()


def _classify(weights, w_max, alpha):
    deficit = np.round((w_max - weights) / alpha, 9)
    classes = np.full(len(weights), 3, dtype=int)
    for k in range(3):
        classes[np.isclose(deficit, k, atol=1e-6)] = k
    return classes


def spectrum(layout: AtomLayout, cap: int = DEFAULT_ENUMERATION_CAP) -> SpectrumReport:
    """Enumerate independent sets of the blockade graph and classify by weight.

    ``delta_s`` is the energy width of the maximum-weight manifold and
    ``delta_g`` the distance from its top to the lowest lighter state.
    """
    alpha = layout.physics.alpha
    if not layout.atoms:
        z = np.zeros(1)
        return SpectrumReport(np.zeros((1, 0), dtype=bool), z, z, np.zeros(1, dtype=int), 0.0, 0.0, np.inf, alpha)
    graph = blockade_graph(layout)
    occ = independent_set_matrix(graph, cap)
    weights = occ.astype(float) @ layout.weights()
    energies = state_energies(layout, occ)
    w_max = float(weights.max())
    classes = _classify(weights, w_max, alpha)
    order = np.lexsort((np.array(bitstrings(occ)), energies))
    occ, weights, energies, classes = occ[order], weights[order], energies[order], classes[order]
    top = energies[classes == 0]
    rest = energies[classes != 0]
    delta_s = float(top.max() - top.min())
    delta_g = float(rest.min() - top.max()) if rest.size else np.inf
    return SpectrumReport(occ, weights, energies, classes, w_max, delta_s, delta_g, alpha)


def all_state_energies(layout: AtomLayout, cap: int = EXHAUSTIVE_CAP):
    """Every occupation pattern, blockade-violating ones included."""
    n = len(layout.atoms)
    if n > cap:
        raise GraphSizeError(f"{n} atoms exceeds exhaustive cap {cap}")
    v = interaction_matrix(layout)
    idx = np.arange(2**n, dtype=np.int64)
    occ = ((idx[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.int8)
    return occ, state_energies(layout, occ, v)


def violating_states_minimum(layout: AtomLayout, cap: int = EXHAUSTIVE_CAP) -> float:
    """Lowest energy among blockade-violating patterns (``inf`` if none)."""
    graph = blockade_graph(layout)
    occ, e = all_state_energies(layout, cap)
    bad = np.zeros(len(e), dtype=bool)
    for u, w in graph.edges:
        bad |= (occ[:, u] & occ[:, w]).astype(bool)
    return float(e[bad].min()) if bad.any() else np.inf


def physical_ground_state(layout: AtomLayout, cap: int = DEFAULT_ENUMERATION_CAP,
                          check_blockade: bool | None = None, exhaustive_cap: int = 20):
    """Minimum-energy independent-set state and its energy.

    When ``check_blockade`` (default: whenever the atom count is at most
    ``exhaustive_cap``) every blockade-violating pattern is scanned and a
    ``GeometryError`` is raised if one lies lower.
    """
    if not layout.atoms:
        return np.zeros(0, dtype=bool), 0.0
    graph = blockade_graph(layout)
    occ = independent_set_matrix(graph, cap)
    e = state_energies(layout, occ)
    k = int(np.argmin(e))
    if check_blockade is None:
        check_blockade = len(layout.atoms) <= exhaustive_cap
    if check_blockade:
        low = violating_states_minimum(layout, max(exhaustive_cap, len(layout.atoms)))
        if low < e[k]:
            raise GeometryError(
                f"blockade-violating state at {low:.6g} lies below the independent-set ground state {e[k]:.6g}"
            )
    return occ[k].copy(), float(e[k])
