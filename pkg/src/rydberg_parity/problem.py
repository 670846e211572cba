"""Higher-order binary spin problems and a brute-force ground-state oracle."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

BRUTE_FORCE_MAX_SPINS = 24


class ProblemError(ValueError):
    """Malformed problem description or configuration."""


class ProblemSizeError(ProblemError):
    """Problem too large for exhaustive enumeration."""


@dataclass(frozen=True)
class InteractionTerm:
    indices: tuple[int, ...]
    coefficient: float

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ProblemError("interaction term needs at least one index")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ProblemError(f"term indices must be strictly increasing: {idx}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def order(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Problem:
    """Spin Hamiltonian ``sum_t J_t prod_{i in t} s_i`` over ``spin_count`` spins."""

    spin_count: int
    terms: tuple[InteractionTerm, ...] = field(default=())

    def __post_init__(self):
        if int(self.spin_count) < 1:
            raise ProblemError("spin_count must be positive")
        object.__setattr__(self, "spin_count", int(self.spin_count))
        terms = tuple(
            t if isinstance(t, InteractionTerm) else InteractionTerm(*t) for t in self.terms
        )
        seen = set()
        for t in terms:
            if t.indices[-1] >= self.spin_count or t.indices[0] < 0:
                raise ProblemError(f"term {t.indices} out of range for {self.spin_count} spins")
            if t.indices in seen:
                raise ProblemError(f"duplicate term {t.indices}")
            seen.add(t.indices)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_dict(cls, mapping: dict[Sequence[int], float], spin_count: int) -> "Problem":
        return cls(spin_count, tuple(InteractionTerm(tuple(k), v) for k, v in mapping.items()))

    @property
    def max_order(self) -> int:
        return max((t.order for t in self.terms), default=0)

    def coefficient(self, indices: Iterable[int]) -> float:
        key = tuple(sorted(indices))
        for t in self.terms:
            if t.indices == key:
                return t.coefficient
        return 0.0

    def to_json_dict(self) -> dict:
        return {
            "spins": self.spin_count,
            "terms": [{"indices": list(t.indices), "j": t.coefficient} for t in self.terms],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Problem":
        try:
            spins = doc["spins"]
            raw = doc["terms"]
        except (KeyError, TypeError) as exc:
            raise ProblemError(f"problem document missing field {exc}") from None
        terms = []
        for k, t in enumerate(raw):
            try:
                terms.append(InteractionTerm(tuple(t["indices"]), t["j"]))
            except KeyError as exc:
                raise ProblemError(f"terms[{k}] missing field {exc}") from None
        return cls(spins, tuple(terms))

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "Problem":
        return cls.from_json_dict(json.loads(text))


def _check_config(problem: Problem, config) -> np.ndarray:
    s = np.asarray(config, dtype=int)
    if s.ndim != 1 or s.shape[0] != problem.spin_count:
        raise ProblemError(
            f"configuration length {s.shape} does not match spin_count {problem.spin_count}"
        )
    if not np.all(np.abs(s) == 1):
        raise ProblemError("spin values must be +1 or -1")
    return s


def energy(problem: Problem, config: Sequence[int]) -> float:
    """Energy of a +-1 spin configuration."""
    s = _check_config(problem, config)
    return float(sum(t.coefficient * np.prod(s[list(t.indices)]) for t in problem.terms))


def all_configurations(n: int) -> np.ndarray:
    """All ``2**n`` spin configurations as rows, first spin most significant."""
    bits = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return 1 - 2 * bits


def energies(problem: Problem, configs: np.ndarray) -> np.ndarray:
    """Vectorized energies for a stack of configurations (rows)."""
    configs = np.asarray(configs)
    out = np.zeros(configs.shape[0])
    for t in problem.terms:
        out += t.coefficient * np.prod(configs[:, list(t.indices)], axis=1)
    return out


def brute_force_ground_states(problem: Problem, atol: float = 1e-12):
    """Exhaustive minimum over all spin configurations.

    Returns
    -------
    (float, list of tuple)
        Minimum energy and every configuration attaining it (within ``atol``).
    """
    n = problem.spin_count
    if n > BRUTE_FORCE_MAX_SPINS:
        raise ProblemSizeError(f"{n} spins exceeds brute-force limit {BRUTE_FORCE_MAX_SPINS}")
    configs = all_configurations(n)
    e = energies(problem, configs)
    emin = e.min()
    winners = [tuple(int(v) for v in row) for row in configs[e <= emin + atol]]
    # report the exact scalar energy of the minimizers
    return energy(problem, winners[0]), winners


def random_two_body(n: int, rng: np.random.Generator, distribution: str = "bimodal",
                    scale: float = 1.0) -> Problem:
    """All-to-all two-body problem with bimodal (+-scale) or Gaussian couplings."""
    terms = []
    for i, j in itertools.combinations(range(n), 2):
        if distribution == "bimodal":
            v = scale * rng.choice((-1.0, 1.0))
        elif distribution == "gaussian":
            v = rng.normal(0.0, scale)
        else:
            raise ProblemError(f"unknown distribution {distribution!r}")
        terms.append(InteractionTerm((i, j), v))
    return Problem(n, tuple(terms))
