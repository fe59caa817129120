"""Linear programs over dual multipliers ``y`` and cost ``c``.

Both duality-gap inverse models become LPs once ``||c||_1 = 1`` is made
linear: the absolute gap through a known sign pattern (``signs @ c = 1``),
the relative gap through the ``b'y = +/-1`` normalisation.  Variables are
laid out as ``[y (m), c (n), alpha (p), t]`` where ``alpha`` only exists
for cone-of-rows costs and ``t`` only for the homogenised relative-gap LP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from invfit.geometry import Polyhedron
from invfit.lp import LpSolution, linprog


@dataclass(frozen=True, eq=False)
class CostRows:
    """Linear restrictions on ``c`` resolved to dimension ``n``.

    ``G c >= h``, ``E c = f``, ``c_j >= lower_j``, ``c_j = 0`` on ``zero``
    and, when ``cone`` is given, ``c = cone' alpha`` with ``alpha >= 0``.
    """

    G: np.ndarray
    h: np.ndarray
    E: np.ndarray
    f: np.ndarray
    lower: np.ndarray
    zero: np.ndarray
    cone: np.ndarray | None = None

    @classmethod
    def empty(cls, n: int) -> "CostRows":
        return cls(np.zeros((0, n)), np.zeros(0), np.zeros((0, n)), np.zeros(0),
                   np.full(n, -np.inf), np.zeros(n, dtype=bool))

    @property
    def homogeneous(self) -> bool:
        """True when the feasible cost set is a cone (closed under scaling)."""
        lo = self.lower[np.isfinite(self.lower)]
        return not (np.any(self.h != 0) or np.any(self.f != 0) or np.any(lo != 0))


@dataclass
class GapLp:
    sol: LpSolution
    y: np.ndarray | None = None
    c: np.ndarray | None = None
    loss: float = float("nan")
    gap_value: float = float("nan")


class _Builder:
    def __init__(self, nvar):
        self.nvar = nvar
        self.ge, self.ge_rhs, self.eq, self.eq_rhs = [], [], [], []

    def add(self, rows, rhs, sense):
        rows = np.atleast_2d(rows)
        if rows.shape[0] == 0:
            return
        tgt, tgt_rhs = (self.ge, self.ge_rhs) if sense == ">=" else (self.eq, self.eq_rhs)
        tgt.append(rows)
        tgt_rhs.append(np.atleast_1d(np.asarray(rhs, dtype=float)))

    def solve(self, obj, bounds):
        return linprog(obj,
                       A_ge=np.vstack(self.ge) if self.ge else None,
                       b_ge=np.concatenate(self.ge_rhs) if self.ge else None,
                       A_eq=np.vstack(self.eq) if self.eq else None,
                       b_eq=np.concatenate(self.eq_rhs) if self.eq else None,
                       bounds=bounds)


def _layout(poly, rows, homog):
    m, n = poly.m, poly.n
    p = 0 if rows.cone is None else rows.cone.shape[0]
    iy, ic = slice(0, m), slice(m, m + n)
    ia = slice(m + n, m + n + p)
    it = m + n + p if homog else None
    return m, n, p, iy, ic, ia, it, m + n + p + (1 if homog else 0)


def _common_rows(bld, poly, rows, ic, ia, iy, nvar, scale_col=None):
    """Dual feasibility, structural rows on c, and the cone link."""
    m, n = poly.m, poly.n
    R = np.zeros((n, nvar))
    R[:, iy] = poly.rows.T
    R[:, ic] = -np.eye(n)
    bld.add(R, np.zeros(n), "=")
    for M_, v, sense in ((rows.G, rows.h, ">="), (rows.E, rows.f, "=")):
        if len(M_):
            R = np.zeros((len(M_), nvar))
            R[:, ic] = M_
            if scale_col is None:
                bld.add(R, v, sense)
            else:
                R[:, scale_col] = -np.asarray(v, dtype=float)
                bld.add(R, np.zeros(len(M_)), sense)
    if rows.cone is not None:
        R = np.zeros((n, nvar))
        R[:, ic] = np.eye(n)
        R[:, ia] = -rows.cone.T
        bld.add(R, np.zeros(n), "=")


def abs_gap_lp(poly: Polyhedron, x_hat, signs, rows: CostRows | None = None,
               pin: float | None = None) -> GapLp:
    """``min c'x_hat - b'y`` with ``signs @ c = 1`` and ``signs * c >= 0``.

    ``pin`` fixes the gap to a value and turns the LP into a feasibility
    check.
    """
    rows = rows or CostRows.empty(poly.n)
    signs = np.asarray(signs, dtype=float)
    m, n, p, iy, ic, ia, _, nvar = _layout(poly, rows, False)
    c_bounds = []
    for j in range(n):
        lo, hi = (0.0, np.inf) if signs[j] > 0 else (-np.inf, 0.0)
        if rows.zero[j]:
            lo, hi = 0.0, 0.0
        lo = max(lo, rows.lower[j])
        if lo > hi:
            return GapLp(LpSolution(status="INFEASIBLE"))
        c_bounds.append((lo, hi))
    bld = _Builder(nvar)
    _common_rows(bld, poly, rows, ic, ia, iy, nvar)
    R = np.zeros(nvar)
    R[ic] = signs
    bld.add(R, 1.0, "=")
    obj = np.zeros(nvar)
    obj[iy] = -poly.rhs
    obj[ic] = x_hat
    if pin is not None:
        bld.add(obj, pin, "=")
        obj = np.zeros(nvar)
    sol = bld.solve(obj, [(0, None)] * m + c_bounds + [(0, None)] * p)
    if not sol.optimal:
        return GapLp(sol)
    y, c = sol.x[iy], sol.x[ic]
    gap = float(c @ x_hat - poly.rhs @ y)
    return GapLp(sol, y, c, gap, gap)


def _nonzero_cost(bld, obj, value, bounds, m, n):
    """Among optima of ``obj`` find one with ``c != 0``, if any.

    The relative-gap LP admits ``c = 0`` (``A'y = 0``), which cannot be
    normalised.  With the optimal value pinned, push each coordinate of
    ``c`` up or down in turn until one moves off zero.
    """
    nvar = bld.nvar
    for j in range(n):
        for sgn in (1.0, -1.0):
            trial = _Builder(nvar)
            trial.ge, trial.ge_rhs = list(bld.ge), list(bld.ge_rhs)
            trial.eq, trial.eq_rhs = list(bld.eq), list(bld.eq_rhs)
            trial.add(-obj, -(value + 1e-9 * (1.0 + abs(value))), ">=")
            cap = np.zeros(nvar)
            cap[m + j] = -sgn
            trial.add(cap, -1.0, ">=")
            sol = trial.solve(cap, bounds)
            if sol.optimal and sgn * sol.x[m + j] > 1e-9:
                return sol
    return None


def rel_gap_lp(poly: Polyhedron, x_hat, branch: float, rows: CostRows | None = None,
               signs=None, pin: float | None = None) -> GapLp:
    """One ``b'y = branch`` branch of the relative-gap LP.

    Weak duality at a feasible ``x_hat`` gives ``c'x_hat >= b'y``, so the
    relative gap ``|c'x_hat / b'y - 1|`` equals ``c'x_hat - branch`` and
    the LP minimises ``c'x_hat`` directly.  Cone-shaped restrictions on
    ``c`` survive the rescaling unchanged; anything else (nonzero
    right-hand sides, positive lower bounds) is homogenised with a scale
    variable ``t = ||c||_1``, which needs ``signs``.  Returned ``y`` and
    ``c`` are rescaled to ``||c||_1 = 1``.
    """
    rows = rows or CostRows.empty(poly.n)
    homog = not rows.homogeneous
    if homog and signs is None:
        raise ValueError("inhomogeneous cost restrictions need a sign pattern")
    m, n, p, iy, ic, ia, it, nvar = _layout(poly, rows, homog)
    c_bounds = []
    for j in range(n):
        lo, hi = -np.inf, np.inf
        if signs is not None:
            lo, hi = (0.0, np.inf) if signs[j] > 0 else (-np.inf, 0.0)
        if rows.zero[j]:
            lo, hi = 0.0, 0.0
        if not homog and np.isfinite(rows.lower[j]):
            lo = max(lo, rows.lower[j])
        if lo > hi:
            return GapLp(LpSolution(status="INFEASIBLE"))
        c_bounds.append((lo, hi))
    bld = _Builder(nvar)
    _common_rows(bld, poly, rows, ic, ia, iy, nvar, scale_col=it)
    R = np.zeros(nvar)
    R[iy] = poly.rhs
    bld.add(R, branch, "=")
    bounds = [(0, None)] * m + c_bounds + [(0, None)] * p
    if homog:
        for j in np.flatnonzero(np.isfinite(rows.lower) & ~rows.zero):
            R = np.zeros(nvar)
            R[m + j] = 1.0
            R[it] = -rows.lower[j]
            bld.add(R, 0.0, ">=")
        R = np.zeros(nvar)
        R[ic] = signs
        R[it] = -1.0
        bld.add(R, 0.0, "=")
        bounds.append((0, None))
    obj = np.zeros(nvar)
    obj[ic] = x_hat
    if pin is not None:
        bld.add(obj, pin * branch, "=")
        obj = np.zeros(nvar)
    sol = bld.solve(obj, bounds)
    if not sol.optimal:
        return GapLp(sol)
    if np.sum(np.abs(sol.x[ic])) <= 1e-12:
        sol = _nonzero_cost(bld, obj, sol.objective_value, bounds, m, n)
        if sol is None:
            return GapLp(LpSolution(status="INFEASIBLE"))
    y_hat, c_hat = sol.x[iy], sol.x[ic]
    scale = float(np.sum(np.abs(c_hat)))
    eps_r = float(c_hat @ x_hat) / branch
    return GapLp(sol, y_hat / scale, c_hat / scale, abs(eps_r - 1.0), eps_r)
