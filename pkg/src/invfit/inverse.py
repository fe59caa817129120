"""Closed-form generalized inverse linear optimization.

Given ``X = {x : A x >= b}`` and an observed ``x_hat`` in ``X``, find a
cost ``c`` (``||c||_1 = 1``), duals ``y >= 0`` with ``A'y = c`` and the
smallest perturbation ``eps`` such that ``x_hat - eps`` is optimal for
``min c'x`` over ``X``.  The optimum always uses a single row ``i*``
minimising ``slack_i / ||a_i||^D``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from invfit.errors import (
    BothBranchesInfeasible,
    ConstraintInfeasible,
    InfeasiblePoint,
    RelGapZeroRhs,
)
from invfit.geometry import (
    DEFAULT_TOL,
    Norm,
    Polyhedron,
    Position,
    as_point,
    classify,
    dual_norms,
    slack,
    v_maximizer,
)
from invfit._dual_lp import GapLp, abs_gap_lp, rel_gap_lp
from invfit.lp import linprog

ORTHANT_LIMIT = 12


@dataclass(frozen=True, eq=False)
class InverseSolution:
    """Imputed ``(y*, c*, eps*)`` and derived quantities.

    ``i_star`` is the row whose normalised coefficients form ``c*`` (the
    smallest index among ``ties``); it is ``None`` when an LP route
    returns a strict conic combination of rows.  ``gap_value`` is the
    absolute gap for ``ABS_GAP`` and the ratio ``c'x_hat / b'y`` for
    ``REL_GAP``.
    """

    norm: Norm
    y_star: np.ndarray
    c_star: np.ndarray
    eps_star: np.ndarray
    i_star: int | None
    loss: float
    x_star: np.ndarray
    gap_value: float | None = None
    ties: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "norm": self.norm.value,
            "i_star": self.i_star,
            "ties": list(self.ties),
            "loss": self.loss,
            "gap_value": self.gap_value,
            "c_star": self.c_star.tolist(),
            "y_star": self.y_star.tolist(),
            "eps_star": self.eps_star.tolist(),
            "x_star": self.x_star.tolist(),
        }


def require_feasible(poly: Polyhedron, x_hat: np.ndarray, tol: float = DEFAULT_TOL) -> None:
    if classify(poly, x_hat, tol) is Position.INFEASIBLE:
        worst = int(np.argmin(slack(poly, x_hat)))
        raise InfeasiblePoint(f"observed point violates row {worst}; "
                              "the inverse model needs a feasible observation")


def row_ratios(poly: Polyhedron, x_hat, norm: Norm, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``slack_i / ||a_i||^D`` per row (the hyperplane distances).

    For ``REL_GAP`` rows with ``b_i = 0`` are ``nan``; slacks within
    ``tol`` of zero count as exactly zero.
    """
    s = slack(poly, x_hat)
    s = np.where(np.abs(s) <= tol, 0.0, s)
    with np.errstate(invalid="ignore", divide="ignore"):
        return s / dual_norms(poly, norm)


def candidate_costs(poly: Polyhedron) -> list[np.ndarray]:
    """The normalised rows ``a_i / ||a_i||_1``; ``c*`` is always one of them."""
    return [a / np.sum(np.abs(a)) for a in poly.rows]


def onto_optimal_face(poly: Polyhedron, x_hat, eps, support, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Make ``x_hat - eps`` a point of the optimal face when it is not already.

    The gap losses fix ``eps`` only up to its effect on the objective, and
    the sign-pattern choice can leave ``x_hat - eps`` outside the
    polyhedron.  In that case the smallest max-norm move onto the face
    ``{x in X : a_j'x = b_j, j in support}`` is returned instead; the
    gap, and so the loss, is the same anywhere on that face.
    """
    if _inside(poly, x_hat - eps, tol):
        return eps
    n = poly.n
    A, b = poly.rows, poly.rhs
    S = list(support)
    # variables [eps, t]: min t with |eps_j| <= t, x_hat - eps in X and on the face
    box = np.vstack([np.hstack([-np.eye(n), np.ones((n, 1))]), np.hstack([np.eye(n), np.ones((n, 1))])])
    A_ge = np.vstack([np.hstack([-A, np.zeros((poly.m, 1))]), box])
    b_ge = np.concatenate([b - A @ x_hat, np.zeros(2 * n)])
    A_eq = np.hstack([A[S], np.zeros((len(S), 1))])
    sol = linprog(np.r_[np.zeros(n), 1.0], A_ge=A_ge, b_ge=b_ge, A_eq=A_eq, b_eq=A[S] @ x_hat - b[S],
                  bounds=[(None, None)] * n + [(0, None)])
    return sol.x[:n] if sol.optimal else eps


def _inside(poly: Polyhedron, x, tol: float) -> bool:
    return bool(np.all(poly.rows @ x - poly.rhs >= -tol * (1.0 + np.abs(poly.rhs))))


def solve_gio(poly: Polyhedron, pt, norm: Norm | str, tol: float = DEFAULT_TOL) -> InverseSolution:
    """Closed-form inverse solution for any supported loss.

    ``i*`` is the smallest tied row, except under ``REL_GAP`` where a
    tied row whose face can be reached inside the polyhedron is
    preferred.  A redundant row (one whose face misses the polyhedron)
    can still win the relative-gap ratio test, and then no feasible
    ``x*`` on that row exists; ``x*`` is left as the plain move onto the
    row's hyperplane.
    """
    norm = Norm.parse(norm)
    x_hat = as_point(poly, pt)
    require_feasible(poly, x_hat, tol)
    ratios = row_ratios(poly, x_hat, norm, tol)
    if np.all(np.isnan(ratios)):
        raise RelGapZeroRhs("every row has b_i = 0; the relative gap is undefined")
    best = np.nanmin(ratios)
    loss = float(best)
    # float ties only; an exact-equality set keeps the result reproducible
    ties = tuple(int(i) for i in np.flatnonzero(ratios == best))
    i = ties[0]
    eps = loss * v_maximizer(poly.rows[i], norm, poly.rhs[i])
    if norm is Norm.REL_GAP:
        for j in ties:
            e = onto_optimal_face(poly, x_hat, loss * v_maximizer(poly.rows[j], norm, poly.rhs[j]),
                                  [j], tol)
            if _inside(poly, x_hat - e, tol):
                i, eps = j, e
                break
    a, b = poly.rows[i], poly.rhs[i]
    l1 = np.sum(np.abs(a))
    y = np.zeros(poly.m)
    y[i] = 1.0 / l1
    c = a / l1
    gap = None
    if norm is Norm.ABS_GAP:
        gap = loss
    elif norm is Norm.REL_GAP:
        gap = float(a @ x_hat / b)
    return InverseSolution(norm, y, c, eps, i, loss, x_hat - eps, gap, ties)


def classical_io_feasible(poly: Polyhedron, pt, tol: float = DEFAULT_TOL) -> bool:
    """Whether some nonzero cost makes ``pt`` exactly optimal (classical model)."""
    pos = classify(poly, pt, tol)
    if pos is Position.BOUNDARY:
        return True
    if pos is Position.INFEASIBLE:
        return bool(np.any(slack(poly, pt) >= -tol))
    return False


def gap_solution(poly, x_hat, norm, r: GapLp) -> InverseSolution:
    """Package a gap-LP optimum in :class:`InverseSolution` form."""
    y, c = r.y, r.c
    sgn = np.sign(np.where(np.abs(c) <= 1e-12, 0.0, c))
    if norm is Norm.ABS_GAP:
        eps = r.gap_value * sgn
    else:
        eps = float(poly.rhs @ y) * (r.gap_value - 1.0) * sgn
    support = np.flatnonzero(y > 1e-9 * max(1.0, float(np.max(y))))
    eps = onto_optimal_face(poly, x_hat, eps, support)
    i_star = int(support[0]) if support.size == 1 else None
    ties = (i_star,) if i_star is not None else ()
    return InverseSolution(norm, y, c, eps, i_star, float(r.loss), x_hat - eps,
                           float(r.gap_value), ties)


def orthants(n: int):
    if n > ORTHANT_LIMIT:
        raise ValueError(f"orthant enumeration limited to n <= {ORTHANT_LIMIT}")
    for signs in itertools.product((1.0, -1.0), repeat=n):
        yield np.asarray(signs)


def best_abs_gap(poly, x_hat, patterns, rows=None, pin=None) -> GapLp | None:
    """Best optimum of :func:`abs_gap_lp` over several sign patterns."""
    best = None
    for s in patterns:
        r = abs_gap_lp(poly, x_hat, s, rows, pin)
        if r.sol.optimal and (best is None or r.loss < best.loss - 1e-12):
            best = r
    return best


def best_rel_gap(poly, x_hat, branches, rows=None, patterns=(None,), pin=None) -> GapLp | None:
    """Best optimum of :func:`rel_gap_lp` over branches and sign patterns."""
    best = None
    for br in branches:
        for s in patterns:
            r = rel_gap_lp(poly, x_hat, br, rows, s, pin)
            if r.sol.optimal and (best is None or r.loss < best.loss - 1e-12):
                best = r
    return best


def solve_absolute_gap_lp(poly: Polyhedron, pt, signs=None, tol: float = DEFAULT_TOL) -> InverseSolution:
    """Absolute-gap inverse model solved directly as linear programs.

    With ``signs`` (a +/-1 vector) the norm constraint ``||c||_1 = 1``
    is linear and one LP suffices; otherwise every sign orthant is
    solved and the best optimum kept.
    """
    x_hat = as_point(poly, pt)
    require_feasible(poly, x_hat, tol)
    patterns = [np.asarray(signs, dtype=float)] if signs is not None else orthants(poly.n)
    best = best_abs_gap(poly, x_hat, patterns)
    if best is None:
        raise ConstraintInfeasible("no nonnegative combination of rows has the requested sign pattern")
    return gap_solution(poly, x_hat, Norm.ABS_GAP, best)


def solve_relative_gap_lp(poly: Polyhedron, pt, nonneg_cost: bool = False,
                          tol: float = DEFAULT_TOL) -> InverseSolution:
    """Relative-gap inverse model via the ``|b'y| = 1`` normalisation.

    Solves the ``b'y = 1`` and ``b'y = -1`` branches and keeps the better
    one, then rescales so ``||c||_1 = 1``.  With ``nonneg_cost`` and
    ``b >= 0`` only the ``b'y = 1`` branch can be feasible, so it alone
    is solved.
    """
    x_hat = as_point(poly, pt)
    require_feasible(poly, x_hat, tol)
    if np.all(poly.rhs == 0):
        raise RelGapZeroRhs("every row has b_i = 0; the relative gap is undefined")
    branches = (1.0,) if nonneg_cost and np.all(poly.rhs >= 0) else (1.0, -1.0)
    patterns = (np.ones(poly.n),) if nonneg_cost else (None,)
    best = best_rel_gap(poly, x_hat, branches, patterns=patterns)
    if best is None:
        raise BothBranchesInfeasible("neither b'y = 1 nor b'y = -1 admits a solution")
    return gap_solution(poly, x_hat, Norm.REL_GAP, best)
