"""Parity-encoded optimization on Rydberg atom arrays.

Lowers parity (LHZ) problems to weighted independent-set gadgets, places
them as atom layouts, compensates van der Waals tails with detuning shifts
and verifies everything by exact enumeration.
"""

from .problem import Problem, InteractionTerm, energy, brute_force_ground_states
from .parity import ParityLayout, lhz_encode, decode
from .mwis import WeightedGraph, mwis_solve, enumerate_independent_sets
from .gadgets import GADGETS
from .layout import AtomLayout, Physics, blockade_graph, validate
from .placement import PlacementConfig, place
from .physics import spectrum, physical_ground_state
from .compensation import CompensationShifts, compensate, apply

__version__ = "0.1.0"

__all__ = [
    "Problem", "InteractionTerm", "energy", "brute_force_ground_states",
    "ParityLayout", "lhz_encode", "decode",
    "WeightedGraph", "mwis_solve", "enumerate_independent_sets",
    "GADGETS",
    "AtomLayout", "Physics", "blockade_graph", "validate",
    "PlacementConfig", "place",
    "spectrum", "physical_ground_state",
    "CompensationShifts", "compensate", "apply",
]
