"""Dense two-phase primal simplex (Bland's rule) and an active-set
Euclidean projection onto a face of a polyhedron.

Problems here are small (at most a few hundred rows), so everything is a
full ``numpy`` tableau.  Bland's rule makes the pivot sequence, and hence
the returned basis, a deterministic function of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from invfit.errors import DimensionMismatch, EmptyFace
from invfit.geometry import Sense

FEAS_TOL = 1e-8
MAX_ITERS = 10_000
_PIVOT_TOL = 1e-10


class LpStatus(str, Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"
    ITERATION_LIMIT = "ITERATION_LIMIT"


@dataclass(frozen=True, eq=False)
class LpProblem:
    """``minimize objective @ x`` subject to row constraints and bounds.

    ``bounds`` holds one ``(lower, upper)`` pair per variable, with
    ``-inf``/``inf`` (or ``None``) for a missing side.  Omitted bounds
    default to ``x >= 0``.
    """

    objective: np.ndarray
    constraint_rows: np.ndarray
    senses: tuple[Sense, ...]
    rhs: np.ndarray
    bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        n = c.size
        if n < 1:
            raise DimensionMismatch("LP needs at least one variable")
        A = np.asarray(self.constraint_rows, dtype=float)
        if A.size == 0:
            A = np.zeros((0, n))
        A = np.atleast_2d(A)
        if A.shape[1] != n:
            raise DimensionMismatch(f"constraint rows have {A.shape[1]} columns, objective has {n}")
        b = np.atleast_1d(np.asarray(self.rhs, dtype=float)).reshape(-1)
        if b.size != A.shape[0] or len(self.senses) != A.shape[0]:
            raise DimensionMismatch("rhs and senses must match the number of rows")
        senses = tuple(Sense.parse(s) for s in self.senses)
        bounds = self.bounds or tuple((0.0, np.inf) for _ in range(n))
        if len(bounds) != n:
            raise DimensionMismatch("need one bound pair per variable")
        clean = []
        for lo, hi in bounds:
            lo = -np.inf if lo is None else float(lo)
            hi = np.inf if hi is None else float(hi)
            if lo > hi:
                raise ValueError(f"empty bound interval [{lo}, {hi}]")
            clean.append((lo, hi))
        for arr in (c, A, b):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_rows", A)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "bounds", tuple(clean))

    @property
    def n(self) -> int:
        return self.objective.size


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective_value: float = float("nan")
    iterations: int = 0
    duals: np.ndarray | None = field(default=None, repr=False)
    dual_objective: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _StandardForm:
    """``min c'u  s.t.  M u = r, u >= 0`` with ``x = shift + T u``."""

    def __init__(self, p: LpProblem):
        n = p.n
        cols: list[np.ndarray] = []
        shift = np.zeros(n)
        extra_rows: list[tuple[int, float]] = []  # (column of u, upper bound)
        for j, (lo, hi) in enumerate(p.bounds):
            e = np.zeros(n)
            e[j] = 1.0
            if np.isfinite(lo):
                shift[j] = lo
                cols.append(e)
                if np.isfinite(hi):
                    extra_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                shift[j] = hi
                cols.append(-e)
            else:
                cols.append(e)
                cols.append(-e)
        T = np.column_stack(cols)
        A = p.constraint_rows @ T
        r = p.rhs - p.constraint_rows @ shift
        senses = list(p.senses)
        nu = T.shape[1]
        if extra_rows:
            U = np.zeros((len(extra_rows), nu))
            for k, (col, ub) in enumerate(extra_rows):
                U[k, col] = 1.0
            A = np.vstack([A, U])
            r = np.concatenate([r, [ub for _, ub in extra_rows]])
            senses += [Sense.LE] * len(extra_rows)
        m = A.shape[0]
        n_slack = sum(s is not Sense.EQ for s in senses)
        M = np.zeros((m, nu + n_slack))
        M[:, :nu] = A
        k = nu
        slack_col = [-1] * m
        for i, s in enumerate(senses):
            if s is Sense.LE:
                M[i, k] = 1.0
            elif s is Sense.GE:
                M[i, k] = -1.0
            if s is not Sense.EQ:
                slack_col[i] = k
                k += 1
        # row equilibration; duals are mapped back through row_scale
        scale = np.max(np.abs(np.column_stack([M, r])), axis=1)
        scale[scale == 0] = 1.0
        sign = np.where(r < 0, -1.0, 1.0)
        self.row_scale = sign / scale
        self.M = M * self.row_scale[:, None]
        self.r = r * self.row_scale
        self.c = np.concatenate([p.objective @ T, np.zeros(n_slack)])
        self.T = T
        self.shift = shift
        self.nu = nu
        self.slack_col = slack_col
        self.n_orig_rows = p.constraint_rows.shape[0]
        self.r_unscaled = r


def _pivot(M, beta, basis, i, j):
    piv = M[i, j]
    M[i] /= piv
    beta[i] /= piv
    col = M[:, j].copy()
    col[i] = 0.0
    M -= np.outer(col, M[i])
    beta -= col * beta[i]
    basis[i] = j


def _run_simplex(M, beta, basis, cost, allowed, tol, iters, max_iters):
    """Bland's-rule iterations in place. Returns (status, iterations)."""
    while True:
        if iters >= max_iters:
            return LpStatus.ITERATION_LIMIT, iters
        d = cost - cost[basis] @ M
        cand = np.flatnonzero((d < -tol) & allowed)
        if cand.size == 0:
            return LpStatus.OPTIMAL, iters
        j = int(cand[0])
        colj = M[:, j]
        rows = np.flatnonzero(colj > _PIVOT_TOL)
        if rows.size == 0:
            return LpStatus.UNBOUNDED, iters
        ratios = beta[rows] / colj[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        i = int(tied[np.argmin(np.asarray(basis)[tied])])
        _pivot(M, beta, basis, i, j)
        np.maximum(beta, 0.0, out=beta, where=np.abs(beta) < 1e-13)
        iters += 1


def solve(p: LpProblem, feas_tol: float = FEAS_TOL, max_iters: int = MAX_ITERS) -> LpSolution:
    """Solve ``p`` with a two-phase primal simplex."""
    sf = _StandardForm(p)
    m, N = sf.M.shape
    if m == 0:
        # only bounds: optimum at a bound or unbounded
        if np.any(sf.c < -feas_tol):
            return LpSolution(LpStatus.UNBOUNDED)
        x = sf.shift.copy()
        val = float(p.objective @ x)
        return LpSolution(LpStatus.OPTIMAL, x, val, 0, np.zeros(0), val)

    # phase 1: reuse a +1 slack column as the starting basic variable when possible
    basis: list[int] = []
    art_rows: list[int] = []
    for i in range(m):
        k = sf.slack_col[i]
        if k >= 0 and sf.M[i, k] > 0:
            basis.append(k)
        else:
            basis.append(-1)
            art_rows.append(i)
    n_art = len(art_rows)
    M = np.zeros((m, N + n_art))
    M[:, :N] = sf.M
    for a, i in enumerate(art_rows):
        M[i, N + a] = 1.0
        basis[i] = N + a
    beta = sf.r.copy()
    iters = 0
    allowed = np.ones(N + n_art, dtype=bool)
    if n_art:
        cost1 = np.zeros(N + n_art)
        cost1[N:] = 1.0
        status, iters = _run_simplex(M, beta, basis, cost1, allowed, feas_tol, iters, max_iters)
        if status is LpStatus.ITERATION_LIMIT:
            return LpSolution(status, iterations=iters)
        if float(cost1[basis] @ beta) > feas_tol:
            return LpSolution(LpStatus.INFEASIBLE, iterations=iters)
        # drive zero-level artificials out of the basis, dropping redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= N:
                nz = np.flatnonzero(np.abs(M[i, :N]) > 1e-9)
                if nz.size:
                    _pivot(M, beta, basis, i, int(nz[0]))
                else:
                    keep[i] = False
        M = M[keep][:, :N]
        beta = beta[keep]
        basis = [b for b, k in zip(basis, keep) if k]
        kept_rows = np.flatnonzero(keep)
    else:
        kept_rows = np.arange(m)
    allowed = np.ones(N, dtype=bool)
    status, iters = _run_simplex(M, beta, basis, sf.c, allowed, feas_tol, iters, max_iters)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, iterations=iters)

    u = np.zeros(N)
    u[basis] = beta
    x = sf.shift + sf.T @ u[: sf.nu]
    value = float(p.objective @ x)

    # duals of the equilibrated rows from B'y = c_B, then unscaled
    B = sf.M[kept_rows][:, basis]
    y_scaled = np.zeros(m)
    try:
        y_scaled[kept_rows] = np.linalg.solve(B.T, sf.c[basis])
    except np.linalg.LinAlgError:
        y_scaled[kept_rows] = np.linalg.lstsq(B.T, sf.c[basis], rcond=None)[0]
    y = y_scaled * sf.row_scale
    dual_obj = float(y @ sf.r_unscaled + p.objective @ sf.shift)
    return LpSolution(LpStatus.OPTIMAL, x, value, iters, y[: sf.n_orig_rows], dual_obj)


def linprog(c, A_ge=None, b_ge=None, A_eq=None, b_eq=None, A_le=None, b_le=None,
            bounds=None, **opts) -> LpSolution:
    """Convenience wrapper assembling an :class:`LpProblem` from blocks."""
    c = np.asarray(c, dtype=float)
    blocks, rhs, senses = [], [], []
    for A, b, s in ((A_ge, b_ge, Sense.GE), (A_le, b_le, Sense.LE), (A_eq, b_eq, Sense.EQ)):
        if A is None:
            continue
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.size == 0:
            continue
        blocks.append(A)
        rhs.append(np.atleast_1d(np.asarray(b, dtype=float)))
        senses += [s] * A.shape[0]
    rows = np.vstack(blocks) if blocks else np.zeros((0, c.size))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    return solve(LpProblem(c, rows, tuple(senses), b, tuple(bounds) if bounds else ()), **opts)


def _feasible_point(ineq_A, ineq_b, eq_A, eq_b, n, tol):
    sol = linprog(np.zeros(n), A_ge=ineq_A, b_ge=ineq_b, A_eq=eq_A, b_eq=eq_b,
                  bounds=[(None, None)] * n, feas_tol=tol)
    return sol.x if sol.optimal else None


def project_l2(
    x_hat,
    ineq_A=None,
    ineq_b=None,
    eq_A=None,
    eq_b=None,
    tol: float = FEAS_TOL,
    max_iters: int | None = None,
) -> np.ndarray:
    """Euclidean projection of ``x_hat`` onto ``{x : ineq_A x >= ineq_b, eq_A x = eq_b}``.

    Primal active-set method: equality-constrained least squares on the
    working set, with blocking rows added and rows with negative
    multipliers released.  A feasible start comes from the simplex.
    Raises :class:`EmptyFace` if the set is empty.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    n = x_hat.size
    G = np.zeros((0, n)) if ineq_A is None else np.atleast_2d(np.asarray(ineq_A, dtype=float))
    h = np.zeros(0) if ineq_b is None else np.atleast_1d(np.asarray(ineq_b, dtype=float))
    E = np.zeros((0, n)) if eq_A is None else np.atleast_2d(np.asarray(eq_A, dtype=float))
    f = np.zeros(0) if eq_b is None else np.atleast_1d(np.asarray(eq_b, dtype=float))
    # unit rows keep the working-set systems well conditioned
    gn = np.linalg.norm(G, axis=1) if G.shape[0] else np.ones(0)
    G, h = G / gn[:, None], h / gn
    en = np.linalg.norm(E, axis=1) if E.shape[0] else np.ones(0)
    E, f = E / en[:, None], f / en
    scale_x = max(1.0, float(np.max(np.abs(x_hat))))
    ftol = tol * scale_x

    # equality-only least-norm correction; done if it satisfies every inequality
    if E.shape[0]:
        w = np.linalg.lstsq(E, E @ x_hat - f, rcond=None)[0]
        x0 = x_hat - w
        if np.any(np.abs(E @ x0 - f) > ftol * max(1.0, np.max(np.abs(E)))):
            raise EmptyFace("equality constraints are inconsistent")
    else:
        x0 = x_hat.copy()
    if G.shape[0] == 0 or np.all(G @ x0 - h >= -ftol):
        return x0

    x = _feasible_point(G, h, E, f, n, tol)
    if x is None:
        raise EmptyFace("face is empty")

    working: list[int] = []
    limit = max_iters or 50 * (G.shape[0] + n + 1)
    for _ in range(limit):
        W = np.vstack([E, G[working]]) if working else E
        v = x_hat - x
        if W.shape[0]:
            # step = component of v in the null space of the working rows
            _, sv, Vt = np.linalg.svd(W)
            rank = int(np.sum(sv > 1e-12 * sv[0]))
            N = Vt[rank:]
            p = N.T @ (N @ v)
            w = np.linalg.lstsq(W.T, v - p, rcond=None)[0]
        else:
            w = np.zeros(0)
            p = v
        if np.linalg.norm(p) <= 1e-12 * max(scale_x, float(np.linalg.norm(v))):
            lam = -w[E.shape[0]:]
            if lam.size == 0 or lam.min() >= -1e-10:
                return x
            working.pop(int(np.argmin(lam)))
            continue
        Gp = G @ p
        alpha, block = 1.0, -1
        s = G @ x - h
        for k in np.flatnonzero(Gp < -1e-14):
            if k in working:
                continue
            a_k = max(s[k], 0.0) / -Gp[k]
            if a_k < alpha:
                alpha, block = a_k, int(k)
        x = x + alpha * p
        if block >= 0:
            working.append(block)
    raise RuntimeError("active-set projection did not converge")


def solve_qp_projection(rows, rhs, eq_row: int, x_hat, tol: float = FEAS_TOL) -> np.ndarray:
    """Closest point to ``x_hat`` in ``{x : rows x >= rhs, rows[eq_row] x = rhs[eq_row]}``."""
    A = np.asarray(rows, dtype=float)
    b = np.asarray(rhs, dtype=float)
    others = np.arange(A.shape[0]) != eq_row
    return project_l2(x_hat, A[others], b[others], A[eq_row:eq_row + 1], b[eq_row:eq_row + 1], tol)
