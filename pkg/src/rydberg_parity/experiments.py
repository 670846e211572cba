"""Verification studies: link-length study, field sweeps and end-to-end runs."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import compensation as comp
from .layout import AtomLayout, LayoutError, Physics, blockade_graph
from .mwis import DEFAULT_ENUMERATION_CAP, independent_set_matrix
from .parity import DecodeError, ParityError, ParityLayout, decode, lhz_encode, parity_config_from_spins
from .physics import spectrum, state_energies, interaction_matrix
from .placement import PlacementConfig, mlm_layout, place
from .problem import Problem, ProblemError, brute_force_ground_states, random_two_body
from .problem import energy as problem_energy

DISTRIBUTIONS = ("gaussian", "bimodal")


class ExperimentError(RuntimeError):
    pass


class StageError(ExperimentError):
    """Pipeline failure tagged with the stage it happened in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


# ---------------------------------------------------------------- reference layout


def all_to_all_problem(n: int = 4, j: float = 0.0) -> Problem:
    return Problem.from_dict({(a, b): j for a, b in itertools.combinations(range(n), 2)}, n)


def reference_layout(physics: Physics | None = None, cfg: PlacementConfig | None = None,
                     scheme: str = "local", aleph_mode: str = "measured") -> AtomLayout:
    """The N=4 all-to-all layout, placed and compensated, without fields."""
    parity = lhz_encode(all_to_all_problem(4))
    layout = place(parity, cfg or PlacementConfig(), physics)
    kw = {"aleph_mode": aleph_mode} if scheme == "local" else {}
    return comp.apply(layout, comp.compensate(layout, scheme, **kw))


# ---------------------------------------------------------------- link-length study


@dataclass(frozen=True)
class StudyRow:
    length: int
    scheme: str
    spread: float
    gap: float
    states: int


def link_length_study(lengths: Sequence[int] = (3, 5, 7, 9),
                      schemes: Sequence[str] = ("none", "local", "global"),
                      physics: Physics | None = None, cap: int = DEFAULT_ENUMERATION_CAP,
                      aleph_mode: str = "infinity") -> list[StudyRow]:
    """Spread and gap of the module-link-module system per link length and scheme."""
    rows = []
    for l in lengths:
        base = mlm_layout(l, physics)
        for scheme in schemes:
            kw = {"aleph_mode": aleph_mode} if scheme == "local" else {}
            lay = comp.apply(base, comp.compensate(base, scheme, **kw))
            rep = spectrum(lay, cap)
            rows.append(StudyRow(l, scheme, rep.delta_s / rep.alpha, rep.delta_g / rep.alpha,
                                 int(rep.manifold.sum())))
    return rows


def study_csv(rows: Sequence[StudyRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "scheme", "spread", "gap", "manifold_states"])
    for r in rows:
        w.writerow([r.length, r.scheme, f"{r.spread:.15g}", f"{r.gap:.15g}", r.states])
    return buf.getvalue()


# ---------------------------------------------------------------- state table


class StateTable:
    """All independent sets of a layout and their energies without fields.

    Fields only touch representative atoms, so the energy of every state under
    a field vector is one matrix-vector product away.
    """

    def __init__(self, layout: AtomLayout, parity: ParityLayout,
                 cap: int = DEFAULT_ENUMERATION_CAP):
        base = layout.with_fields({})
        self.layout = base
        self.parity = parity
        self.labels = parity.labels
        missing = [lab for lab in self.labels if lab not in layout.representatives]
        if missing:
            raise LayoutError(f"no representative atoms for labels {missing}")
        self.rep = np.array([layout.representatives[lab] for lab in self.labels])
        self.occ = independent_set_matrix(blockade_graph(base), cap)
        self.energies = state_energies(base, self.occ, interaction_matrix(base))
        self.rep_bits = self.occ[:, self.rep].astype(float)
        weights = base.weights()
        w = self.occ.astype(float) @ weights
        self.w_max = float(w.max())
        tol = 1e-9 * max(1.0, abs(self.w_max))
        self.manifold = np.flatnonzero(w >= self.w_max - tol)
        self._by_bits = {}
        for k in self.manifold:
            self._by_bits.setdefault(tuple(self.occ[k, self.rep].astype(int)), []).append(int(k))

    def energies_with(self, fields: np.ndarray) -> np.ndarray:
        """State energies with field ``fields[m]`` on label ``m``'s representative."""
        return self.energies + self.rep_bits @ np.asarray(fields, float)

    def solution_states(self, bits) -> list[int]:
        return self._by_bits.get(tuple(int(b) for b in bits), [])


@dataclass(frozen=True)
class Outcome:
    energy_diff: float
    success: bool
    ground_energy: float
    solution_energy: float
    decoded: tuple
    minimizers: tuple


def evaluate(table: StateTable, problem: Problem) -> Outcome:
    """Compare the physical ground state under the problem's fields with brute force."""
    fields = np.array([problem.coefficient(lab) for lab in table.labels]) * table.layout.physics.alpha
    e = table.energies_with(fields)
    k = int(np.argmin(e))
    _, winners = brute_force_ground_states(problem)
    sol = []
    for s in winners:
        sol += table.solution_states(parity_config_from_spins(table.labels, s))
    e_sol = float(e[sol].min()) if sol else math.inf
    bits = table.occ[k, table.rep].astype(int)
    try:
        decoded = decode(bits, table.parity)
        ok = any(tuple(d) in set(winners) for d in decoded)
    except (DecodeError, ParityError):
        decoded, ok = (), False
    return Outcome(max(0.0, e_sol - float(e[k])) / table.layout.physics.alpha, ok,
                   float(e[k]), e_sol, tuple(tuple(d) for d in decoded), tuple(winners))


# ---------------------------------------------------------------- field sweep


@dataclass(frozen=True)
class SweepConfig:
    sigmas: tuple[float, ...] = tuple(np.logspace(-3, 0, 13))
    samples: int = 200
    distribution: str = "gaussian"
    seed: int = 0
    cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ExperimentError(f"distribution must be one of {DISTRIBUTIONS}")
        if self.samples < 1:
            raise ExperimentError("samples must be >= 1")
        if not self.sigmas or any(not s > 0 for s in self.sigmas):
            raise ExperimentError("every sigma must be > 0")


@dataclass(frozen=True)
class SweepPoint:
    sigma: float
    mean_energy_diff: float
    success_fraction: float
    samples: int
    seed: int


@dataclass
class SweepResult:
    points: list[SweepPoint] = field(default_factory=list)

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([p.sigma for p in self.points])

    @property
    def mean_energy_diff(self) -> np.ndarray:
        return np.array([p.mean_energy_diff for p in self.points])

    @property
    def success_fraction(self) -> np.ndarray:
        return np.array([p.success_fraction for p in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sigma", "mean_energy_diff", "success_fraction", "samples", "seed"])
        for p in self.points:
            w.writerow([f"{p.sigma:.15g}", f"{p.mean_energy_diff:.15g}",
                        f"{p.success_fraction:.15g}", p.samples, p.seed])
        return buf.getvalue()


def _sample_seeds(seed: int, n_sigma: int, samples: int, offset: int = 0):
    # grid point k always gets child k of the master seed, however the grid is split
    return [np.random.SeedSequence(seed, spawn_key=(offset + k,)).spawn(samples)
            for k in range(n_sigma)]


def field_sweep(layout: AtomLayout, cfg: SweepConfig = SweepConfig(),
                parity: ParityLayout | None = None, table: StateTable | None = None,
                seed_index: int = 0) -> SweepResult:
    """Mean energy difference and success fraction per field scale sigma.

    Each sample draws an all-to-all problem with couplings of scale sigma
    (in units of alpha), puts them on the representative atoms and compares
    the physical ground state with the brute-force solution. Grid point ``i``
    draws from child ``seed_index + i`` of ``cfg.seed``, one seed per sample.
    """
    if table is None:
        if parity is None:
            n = _spin_count(layout)
            parity = lhz_encode(all_to_all_problem(n))
        table = StateTable(layout, parity, cfg.cap)
    n = table.parity.spin_count
    out = SweepResult()
    for sigma, seqs in zip(cfg.sigmas, _sample_seeds(cfg.seed, len(cfg.sigmas), cfg.samples, seed_index)):
        diffs, wins = [], 0
        for sq in seqs:
            problem = random_two_body(n, np.random.default_rng(sq), cfg.distribution, float(sigma))
            res = evaluate(table, problem)
            diffs.append(res.energy_diff)
            wins += res.success
        out.points.append(SweepPoint(float(sigma), float(np.mean(diffs)), wins / cfg.samples,
                                     cfg.samples, cfg.seed))
    return out


def _spin_count(layout: AtomLayout) -> int:
    labels = [lab for lab in layout.representatives if isinstance(lab, tuple)]
    if not labels:
        raise ExperimentError("layout has no parity labels")
    return max(max(lab) for lab in labels) + 1


# ---------------------------------------------------------------- end to end


def normalization_bound(problem: Problem) -> float:
    """Conservative lower bound on alpha: sum of all coupling magnitudes."""
    return float(sum(abs(t.coefficient) for t in problem.terms))


@dataclass(frozen=True)
class EndToEndConfig:
    physics: Physics = field(default_factory=Physics)
    placement: PlacementConfig = field(default_factory=PlacementConfig)
    scheme: str = "local"
    aleph_mode: str = "measured"
    field_scale: float = 1.0
    cap: int = DEFAULT_ENUMERATION_CAP


@dataclass(frozen=True)
class Verdict:
    match: bool
    decoded: tuple
    minimizers: tuple
    problem_energy: float
    ground_energy: float
    solution_energy: float
    energy_diff: float
    delta_s: float
    delta_g: float

    def summary(self) -> str:
        tag = "match" if self.match else "MISMATCH"
        return (f"{tag}: decoded={list(self.decoded)} minimizers={list(self.minimizers)} "
                f"E_gs={self.ground_energy:.6g} E_sol={self.solution_energy:.6g} "
                f"delta_s={self.delta_s:.4g} delta_g={self.delta_g:.4g}")


@dataclass
class Prepared:
    parity: ParityLayout
    layout: AtomLayout
    table: StateTable
    delta_s: float
    delta_g: float


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ProblemError, ParityError, LayoutError, comp.CompensationError, ValueError) as exc:
        raise StageError(name, exc) from exc


def prepare(parity: ParityLayout, cfg: EndToEndConfig = EndToEndConfig()) -> Prepared:
    """Place and compensate a parity layout once; reusable across field draws."""
    layout = _stage("place", place, parity, cfg.placement, cfg.physics)
    kw = {"aleph_mode": cfg.aleph_mode} if cfg.scheme == "local" else {}
    shifts = _stage("compensate", comp.compensate, layout, cfg.scheme, **kw)
    layout = comp.apply(layout, shifts)
    table = _stage("ground_state", StateTable, layout, parity, cfg.cap)
    rep = _stage("spectrum", spectrum, layout, cfg.cap)
    return Prepared(parity, layout, table, rep.delta_s, rep.delta_g)


def end_to_end(problem: Problem, cfg: EndToEndConfig = EndToEndConfig(),
               prepared: Prepared | None = None) -> Verdict:
    """Encode, place, compensate, find the physical ground state, decode, compare.

    The problem couplings times ``cfg.field_scale`` (units of alpha) are the
    fields on the representative atoms. Errors carry the stage they came from.
    """
    if prepared is None:
        parity = _stage("encode", lhz_encode, problem)
        prepared = prepare(parity, cfg)
    scaled = Problem(problem.spin_count,
                     tuple(type(t)(t.indices, t.coefficient * cfg.field_scale) for t in problem.terms))
    res = _stage("decode", evaluate, prepared.table, scaled)
    e_p = problem_energy(problem, res.minimizers[0])
    return Verdict(res.success, res.decoded, res.minimizers, e_p, res.ground_energy,
                   res.solution_energy, res.energy_diff, prepared.delta_s, prepared.delta_g)


def faithfulness_study(instances: int = 50, field_scale: float | None = None, seed: int = 0,
                       cfg: EndToEndConfig = EndToEndConfig()):
    """Random N=4 bimodal instances through the pipeline; returns (prepared, verdicts).

    Without ``field_scale`` the fields sit at the geometric mean of the
    measured spread and gap.
    """
    prepared = prepare(lhz_encode(all_to_all_problem(4)), cfg)
    if field_scale is None:
        if not prepared.delta_g > prepared.delta_s > 0:
            raise ExperimentError("no field window: gap does not exceed spread")
        field_scale = math.sqrt(prepared.delta_s * prepared.delta_g) / cfg.physics.alpha
    cfg = EndToEndConfig(cfg.physics, cfg.placement, cfg.scheme, cfg.aleph_mode, field_scale, cfg.cap)
    rng = np.random.default_rng(seed)
    verdicts = [end_to_end(random_two_body(4, rng, "bimodal"), cfg, prepared) for _ in range(instances)]
    return prepared, field_scale, verdicts
