"""Exact statevector simulation of measurement-assisted duality maps."""

from .complexes import (
    CellComplex,
    Chain,
    IsolatedMonopole,
    boundary,
    build_complex,
    coboundary,
    intersection,
    pair_outcomes,
)
from .engine import (
    Layout,
    StateVector,
    TwistedTerm,
    apply_term_exp,
    exact_evolve,
    measure_x,
    project_x,
)
from .weyl import FermionLayout, WeylString, commutation_phase, jw_encode, weyl_from_chain

__version__ = "0.1.0"

__all__ = [
    "CellComplex", "Chain", "IsolatedMonopole", "boundary", "build_complex", "coboundary",
    "intersection", "pair_outcomes", "Layout", "StateVector", "TwistedTerm", "apply_term_exp",
    "exact_evolve", "measure_x", "project_x", "FermionLayout", "WeylString",
    "commutation_phase", "jw_encode", "weyl_from_chain",
]
