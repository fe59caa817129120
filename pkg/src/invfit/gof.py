"""Goodness of fit: the coefficient of complementarity and its lower bound.

``rho = 1 - loss* / mean_i ||eps^i||`` where ``eps^i`` is the cheapest
perturbation that moves ``x_hat`` onto row ``i``'s face while staying
feasible.  ``rho_tilde`` replaces ``eps^i`` with the plain hyperplane
distance, which never exceeds it, so ``rho_tilde <= rho``.  For the gap
losses the two denominators coincide.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from invfit.constrained import (
    CostConstraintSet,
    EpsConstraintSet,
    perturbation_norm,
    face_projection,
    gap_is_attainable,
    solve_gio_constrained_cost,
    solve_gio_constrained_eps,
)
from invfit.errors import DimensionUnsupported, EmptyDenominator, RelGapZeroRhs
from invfit.geometry import DEFAULT_TOL, Norm, Polyhedron, as_point, slack
from invfit.inverse import require_feasible, row_ratios, solve_gio
from invfit.lp import LpStatus, linprog

Constraints = CostConstraintSet | EpsConstraintSet | None


@dataclass(frozen=True)
class RowError:
    row: int
    eps_norm: float | None
    eps_tilde_norm: float
    included_in_denominator: bool

    def to_dict(self) -> dict:
        return {"row": self.row, "eps_norm": self.eps_norm,
                "eps_tilde_norm": self.eps_tilde_norm,
                "included_in_denominator": self.included_in_denominator}


@dataclass(frozen=True, eq=False)
class FitReport:
    """Both fit coefficients with the per-row errors behind them.

    ``warnings`` flags conditions a caller should see, such as rows
    dropped for an empty face or a negative ``rho`` under unadjusted
    structural constraints.
    """

    variant: Norm
    rho: float
    rho_tilde: float
    loss_star: float
    per_row: tuple[RowError, ...]
    denominator: float
    denominator_tilde: float
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "rho": self.rho,
            "rho_tilde": self.rho_tilde,
            "loss_star": self.loss_star,
            "denominator": self.denominator,
            "denominator_tilde": self.denominator_tilde,
            "per_row": [r.to_dict() for r in self.per_row],
            "warnings": list(self.warnings),
        }


def _coefficient(loss: float, denom: float) -> float:
    # a zero denominator means x_hat lies on every row: a perfect fit
    if denom <= 0.0:
        return 1.0
    return 1.0 - loss / denom


def _numerator(poly, x_hat, norm, constraints, tol) -> float:
    if constraints is None:
        return solve_gio(poly, x_hat, norm, tol).loss
    if isinstance(constraints, CostConstraintSet):
        return solve_gio_constrained_cost(poly, x_hat, norm, constraints, tol).loss
    return solve_gio_constrained_eps(poly, x_hat, norm, constraints, tol).loss


def rho(poly: Polyhedron, pt, norm: Norm | str, constraints: Constraints = None,
        adjust_denominator: bool = False, tol: float = DEFAULT_TOL) -> FitReport:
    """Coefficient of complementarity at ``pt`` with per-row detail.

    With ``adjust_denominator`` a row only counts in the denominator if
    its own error is attainable under ``constraints``: for cost
    constraints the inverse model is re-solved with the gap pinned to the
    row's value, for perturbation constraints the row's face projection
    must exist inside the allowed set.
    """
    norm = Norm.parse(norm)
    x_hat = as_point(poly, pt)
    require_feasible(poly, x_hat, tol)
    ratios = row_ratios(poly, x_hat, norm, tol)
    defined = ~np.isnan(ratios)
    if not np.any(defined):
        raise RelGapZeroRhs("every row has b_i = 0; the relative gap is undefined")
    warnings = []
    if not np.all(defined):
        warnings.append(f"rows {np.flatnonzero(~defined).tolist()} have b_i = 0 and are skipped")
    loss = _numerator(poly, x_hat, norm, constraints, tol)

    eps_norms: list[float | None] = []
    included = np.zeros(poly.m, dtype=bool)
    screen_cost = adjust_denominator and isinstance(constraints, CostConstraintSet)
    face_ec = constraints if adjust_denominator and isinstance(constraints, EpsConstraintSet) else None
    s = slack(poly, x_hat)
    for i in range(poly.m):
        if not defined[i]:
            eps_norms.append(None)
            continue
        if norm.is_gap:
            e = float(ratios[i])
            ok = True
            if screen_cost:
                value = e if norm is Norm.ABS_GAP else float(s[i] / poly.rhs[i] + 1.0)
                ok = gap_is_attainable(poly, x_hat, norm, constraints, value)
        else:
            eps = face_projection(poly, x_hat, i, norm, face_ec, tol)
            e = None if eps is None else perturbation_norm(eps, norm)
            ok = e is not None
        eps_norms.append(e)
        included[i] = ok
    empty_faces = [i for i in range(poly.m) if defined[i] and eps_norms[i] is None]
    if empty_faces:
        warnings.append(f"rows {empty_faces} admit no feasible projection and are excluded")
    if not np.any(included):
        raise EmptyDenominator("every row was excluded from the denominator")

    denom = float(np.mean([eps_norms[i] for i in np.flatnonzero(included)]))
    # the tilde denominator ignores face feasibility but honours a cost screen
    tilde_rows = included if screen_cost else defined
    denom_tilde = float(np.mean(ratios[tilde_rows]))
    r = _coefficient(loss, denom)
    rt = _coefficient(loss, denom_tilde)
    if r < 0:
        warnings.append("rho is negative: the constrained fit is worse than the average row")
    per_row = tuple(
        RowError(i, eps_norms[i], float(ratios[i]) if defined[i] else float("nan"), bool(included[i]))
        for i in range(poly.m))
    return FitReport(norm, r, rt, float(loss), per_row, denom, denom_tilde, tuple(warnings))


def rho_tilde(poly: Polyhedron, pt, norm: Norm | str, constraints: Constraints = None,
              tol: float = DEFAULT_TOL) -> float:
    """Lower bound on ``rho`` from hyperplane distances alone."""
    norm = Norm.parse(norm)
    if constraints is not None:
        return rho(poly, pt, norm, constraints, tol=tol).rho_tilde
    x_hat = as_point(poly, pt)
    require_feasible(poly, x_hat, tol)
    ratios = row_ratios(poly, x_hat, norm, tol)
    if np.all(np.isnan(ratios)):
        raise RelGapZeroRhs("every row has b_i = 0; the relative gap is undefined")
    return _coefficient(float(np.nanmin(ratios)), float(np.nanmean(ratios)))


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridPoint:
    x1: float
    x2: float
    rho: float
    rho_tilde: float


def bounding_box(poly: Polyhedron) -> np.ndarray:
    """``[[lo_1, hi_1], ..., [lo_n, hi_n]]`` of the polyhedron, by LP."""
    box = np.empty((poly.n, 2))
    free = [(None, None)] * poly.n
    for j in range(poly.n):
        for k, sgn in enumerate((1.0, -1.0)):
            sol = linprog(sgn * np.eye(poly.n)[j], A_ge=poly.rows, b_ge=poly.rhs, bounds=free)
            if sol.status is LpStatus.UNBOUNDED:
                raise ValueError("polyhedron is unbounded; grid sampling needs a polytope")
            if not sol.optimal:
                raise ValueError("polyhedron is empty")
            box[j, k] = sgn * sol.objective_value
    return box


def rho_grid(poly: Polyhedron, norm: Norm | str, resolution: int,
             tol: float = DEFAULT_TOL) -> list[GridPoint]:
    """Evaluate ``rho`` and ``rho_tilde`` on a regular grid over a 2-D polytope.

    The grid spans the bounding box with ``resolution`` points per axis;
    points violating any row by more than ``tol`` are skipped.  Output is
    ordered with ``x2`` varying fastest.
    """
    norm = Norm.parse(norm)
    if poly.n != 2:
        raise DimensionUnsupported(f"grid sampling is 2-D only, polyhedron has n = {poly.n}")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    box = bounding_box(poly)
    xs = np.linspace(box[0, 0], box[0, 1], resolution)
    ys = np.linspace(box[1, 0], box[1, 1], resolution)
    out = []
    for x in xs:
        for y in ys:
            p = np.array([x, y])
            if np.min(poly.rows @ p - poly.rhs) < -tol:
                continue
            rep = rho(poly, p, norm, tol=tol)
            out.append(GridPoint(float(x), float(y), rep.rho, rep.rho_tilde))
    return out


def write_grid_csv(points: list[GridPoint], stream: TextIO, precision: int | None = None) -> None:
    def fmt(v):
        return repr(float(v)) if precision is None else f"{v:.{precision}g}"

    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["x1", "x2", "rho", "rho_tilde"])
    for g in points:
        w.writerow([fmt(g.x1), fmt(g.x2), fmt(g.rho), fmt(g.rho_tilde)])


def grid_csv(points: list[GridPoint], precision: int | None = None) -> str:
    buf = io.StringIO()
    write_grid_csv(points, buf, precision)
    return buf.getvalue()
