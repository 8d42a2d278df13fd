"""Exact Hardy-operator images of atoms and numerical checks of the bounds they satisfy."""

from __future__ import annotations

__version__ = "0.1.0"

from .atoms import Atom, AtomicSum, AtomSpec, build_atom, validate_atom
from .funcrep import GeneralizedPiecewiseFunction, Interval, Term
from .norms import WeightSpec, lp_integral, lq_norm
from .operators import dual_hardy, hardy
from .verify import BoundReport, check_classical, check_log2, check_prop1, check_prop4, check_thm3, check_thm4

__all__ = [
    "Atom",
    "AtomSpec",
    "AtomicSum",
    "BoundReport",
    "GeneralizedPiecewiseFunction",
    "Interval",
    "Term",
    "WeightSpec",
    "__version__",
    "build_atom",
    "check_classical",
    "check_log2",
    "check_prop1",
    "check_prop4",
    "check_thm3",
    "check_thm4",
    "dual_hardy",
    "hardy",
    "lp_integral",
    "lq_norm",
    "validate_atom",
]
