"""Inverse linear optimization with a goodness-of-fit measure.

Impute the cost vector that makes an observed decision closest to
optimal for a linear program, and score the fit with the coefficient of
complementarity ``rho``.
"""

from invfit.constrained import (
    CostConstraintSet,
    EpsConstraintSet,
    face_projection,
    solve_gio_constrained_cost,
    solve_gio_constrained_eps,
    solve_gio_zero_pattern,
)
from invfit.errors import DomainError, InputError, InvfitError
from invfit.geometry import Norm, Polyhedron, Position, canonicalize, classify, slack
from invfit.gof import FitReport, rho, rho_grid, rho_tilde
from invfit.inverse import (
    InverseSolution,
    solve_absolute_gap_lp,
    solve_gio,
    solve_relative_gap_lp,
)

__version__ = "0.1.0"

__all__ = [
    "CostConstraintSet",
    "DomainError",
    "EpsConstraintSet",
    "FitReport",
    "InputError",
    "InverseSolution",
    "InvfitError",
    "Norm",
    "Polyhedron",
    "Position",
    "canonicalize",
    "classify",
    "face_projection",
    "rho",
    "rho_grid",
    "rho_tilde",
    "slack",
    "solve_absolute_gap_lp",
    "solve_gio",
    "solve_gio_constrained_cost",
    "solve_gio_constrained_eps",
    "solve_gio_zero_pattern",
    "solve_relative_gap_lp",
]
