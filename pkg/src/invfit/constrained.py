"""Inverse optimization with structural constraints on ``c`` or on ``eps``.

Constraints on the cost vector are only supported for the duality-gap
losses, which stay linear programs; constraints on the perturbation are
only supported for the p-norm losses, where they change which faces of
the polyhedron ``x_hat`` can be projected onto.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from invfit._dual_lp import CostRows
from invfit.errors import (
    ConstraintInfeasible,
    DimensionMismatch,
    EmptyFace,
    NoFeasibleProjection,
    RelGapZeroRhs,
    SignPatternRequired,
    UnsupportedVariant,
)
from invfit.geometry import DEFAULT_TOL, Norm, Polyhedron, as_point, dual_norm_of_row, v_maximizer
from invfit.inverse import (
    ORTHANT_LIMIT,
    InverseSolution,
    best_abs_gap,
    best_rel_gap,
    gap_solution,
    require_feasible,
    solve_gio,
)
from invfit.lp import linprog, project_l2


def _matrix(rows, n=None):
    if rows is None:
        return None
    M = np.atleast_2d(np.asarray(rows, dtype=float))
    if M.size == 0:
        return None
    if n is not None and M.shape[1] != n:
        raise DimensionMismatch(f"constraint rows have {M.shape[1]} columns, expected {n}")
    return M


def _pair(rows, rhs, what):
    M = _matrix(rows)
    if M is None:
        return None, None
    v = np.atleast_1d(np.asarray(rhs, dtype=float))
    if v.shape != (M.shape[0],):
        raise DimensionMismatch(f"{what}: {M.shape[0]} rows but {v.size} right-hand sides")
    return M, v


@dataclass(frozen=True, eq=False)
class CostConstraintSet:
    """Linear prior knowledge about the cost vector.

    ``eq_rows @ c = eq_rhs``, ``ineq_rows @ c >= ineq_rhs``, ``c_j = 0``
    for ``j`` in ``zero_pattern``, ``c_j >= lower_bounds[j]`` and, when
    ``cone_rows`` is given, ``c = cone_rows' alpha`` with ``alpha >= 0``.
    A ratio ``c_l / c_j = r`` is written as the row ``c_l - r c_j = 0``.

    ``signs`` fixes the orthant used to make ``||c||_1 = 1`` linear:
    ``"nonneg"`` (the default), an explicit +/-1 vector, or ``"free"``,
    which enumerates every orthant the other restrictions leave open.
    """

    eq_rows: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    ineq_rows: np.ndarray | None = None
    ineq_rhs: np.ndarray | None = None
    zero_pattern: frozenset = frozenset()
    lower_bounds: Mapping[int, float] = field(default_factory=dict)
    cone_rows: np.ndarray | None = None
    signs: str | Sequence[float] = "nonneg"

    def __post_init__(self):
        E, f = _pair(self.eq_rows, self.eq_rhs, "eq_rows")
        G, h = _pair(self.ineq_rows, self.ineq_rhs, "ineq_rows")
        object.__setattr__(self, "eq_rows", E)
        object.__setattr__(self, "eq_rhs", f)
        object.__setattr__(self, "ineq_rows", G)
        object.__setattr__(self, "ineq_rhs", h)
        object.__setattr__(self, "zero_pattern", frozenset(int(j) for j in self.zero_pattern))
        object.__setattr__(self, "lower_bounds",
                           {int(j): float(v) for j, v in dict(self.lower_bounds).items()})
        if self.cone_rows is not None:
            C = _matrix(self.cone_rows)
            if C is None:
                raise DimensionMismatch("cone_rows must be nonempty when given")
            object.__setattr__(self, "cone_rows", C)
        s = self.signs
        if isinstance(s, str):
            if s not in ("nonneg", "free"):
                raise ValueError(f"signs must be 'nonneg', 'free' or a +/-1 vector, got {s!r}")
        else:
            s = tuple(float(np.sign(v)) for v in s)
            if any(v == 0 for v in s):
                raise ValueError("explicit sign pattern entries must be +1 or -1")
            object.__setattr__(self, "signs", s)
        dims = {M.shape[1] for M in (E, G, self.cone_rows) if M is not None}
        if not isinstance(self.signs, str):
            dims.add(len(self.signs))
        if len(dims) > 1:
            raise DimensionMismatch(f"constraint blocks disagree on dimension: {sorted(dims)}")

    @property
    def is_empty(self) -> bool:
        """No restriction beyond the sign information."""
        return (self.eq_rows is None and self.ineq_rows is None and not self.zero_pattern
                and not self.lower_bounds and self.cone_rows is None)

    def with_rows(self, ineq_rows=None, ineq_rhs=None, eq_rows=None, eq_rhs=None) -> "CostConstraintSet":
        """A copy with extra rows appended."""
        def cat(M, v, M2, v2):
            if M2 is None:
                return M, v
            M2, v2 = _pair(M2, v2, "extra rows")
            if M is None:
                return M2, v2
            return np.vstack([M, M2]), np.concatenate([v, v2])

        E, f = cat(self.eq_rows, self.eq_rhs, eq_rows, eq_rhs)
        G, h = cat(self.ineq_rows, self.ineq_rhs, ineq_rows, ineq_rhs)
        return CostConstraintSet(E, f, G, h, self.zero_pattern, self.lower_bounds,
                                 self.cone_rows, self.signs)

    def resolve(self, n: int) -> CostRows:
        for M in (self.eq_rows, self.ineq_rows, self.cone_rows):
            if M is not None and M.shape[1] != n:
                raise DimensionMismatch(f"cost constraints have {M.shape[1]} columns, expected {n}")
        bad = [j for j in (*self.zero_pattern, *self.lower_bounds) if not 0 <= j < n]
        if bad:
            raise DimensionMismatch(f"cost index {bad[0]} out of range for n = {n}")
        lower = np.full(n, -np.inf)
        for j, v in self.lower_bounds.items():
            lower[j] = v
        zero = np.zeros(n, dtype=bool)
        zero[list(self.zero_pattern)] = True
        empty = np.zeros((0, n))
        return CostRows(
            self.ineq_rows if self.ineq_rows is not None else empty,
            self.ineq_rhs if self.ineq_rhs is not None else np.zeros(0),
            self.eq_rows if self.eq_rows is not None else empty,
            self.eq_rhs if self.eq_rhs is not None else np.zeros(0),
            lower, zero, self.cone_rows)

    def sign_patterns(self, n: int) -> list[np.ndarray]:
        """Orthants in which ``||c||_1 = 1`` is linearised."""
        if self.signs == "nonneg":
            return [np.ones(n)]
        if not isinstance(self.signs, str):
            if len(self.signs) != n:
                raise DimensionMismatch(f"sign pattern has length {len(self.signs)}, expected {n}")
            return [np.asarray(self.signs)]
        # components that are zero or bounded away from zero need no choice
        fixed = {j for j in range(n) if j in self.zero_pattern or self.lower_bounds.get(j, -1.0) > 0}
        free = [j for j in range(n) if j not in fixed]
        if len(free) > ORTHANT_LIMIT:
            raise SignPatternRequired(
                f"{len(free)} cost components have unknown sign; give an explicit sign "
                f"pattern or lower bounds (orthant enumeration stops at {ORTHANT_LIMIT})")
        out = []
        for combo in itertools.product((1.0, -1.0), repeat=len(free)):
            s = np.ones(n)
            s[free] = combo
            out.append(s)
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "CostConstraintSet":
        known = {"eq_rows", "eq_rhs", "ineq_rows", "ineq_rhs", "zero_pattern",
                 "lower_bounds", "cone_rows", "signs"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown cost-constraint keys: {sorted(extra)}")
        lb = d.get("lower_bounds", {})
        if isinstance(lb, Mapping):
            lb = {int(k): v for k, v in lb.items()}
        else:
            lb = {j: v for j, v in enumerate(lb) if v is not None}
        return cls(d.get("eq_rows"), d.get("eq_rhs"), d.get("ineq_rows"), d.get("ineq_rhs"),
                   frozenset(d.get("zero_pattern", ())), lb, d.get("cone_rows"),
                   d.get("signs", "nonneg"))

    def to_dict(self) -> dict:
        out: dict = {"signs": self.signs if isinstance(self.signs, str) else list(self.signs)}
        for key in ("eq_rows", "eq_rhs", "ineq_rows", "ineq_rhs", "cone_rows"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v.tolist()
        if self.zero_pattern:
            out["zero_pattern"] = sorted(self.zero_pattern)
        if self.lower_bounds:
            out["lower_bounds"] = {str(j): v for j, v in sorted(self.lower_bounds.items())}
        return out


@dataclass(frozen=True, eq=False)
class EpsConstraintSet:
    """Linear restrictions ``eq_rows @ eps = eq_rhs``, ``ineq_rows @ eps >= ineq_rhs``."""

    eq_rows: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    ineq_rows: np.ndarray | None = None
    ineq_rhs: np.ndarray | None = None

    def __post_init__(self):
        E, f = _pair(self.eq_rows, self.eq_rhs, "eq_rows")
        G, h = _pair(self.ineq_rows, self.ineq_rhs, "ineq_rows")
        if E is not None and G is not None and E.shape[1] != G.shape[1]:
            raise DimensionMismatch("eps constraint blocks disagree on dimension")
        object.__setattr__(self, "eq_rows", E)
        object.__setattr__(self, "eq_rhs", f)
        object.__setattr__(self, "ineq_rows", G)
        object.__setattr__(self, "ineq_rhs", h)

    @property
    def is_empty(self) -> bool:
        return self.eq_rows is None and self.ineq_rows is None

    def contains(self, eps, tol: float = DEFAULT_TOL) -> bool:
        eps = np.asarray(eps, dtype=float)
        ok = True
        if self.eq_rows is not None:
            ok &= bool(np.all(np.abs(self.eq_rows @ eps - self.eq_rhs) <= tol))
        if self.ineq_rows is not None:
            ok &= bool(np.all(self.ineq_rows @ eps - self.ineq_rhs >= -tol))
        return ok

    def check(self, n: int) -> None:
        for M in (self.eq_rows, self.ineq_rows):
            if M is not None and M.shape[1] != n:
                raise DimensionMismatch(f"eps constraints have {M.shape[1]} columns, expected {n}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "EpsConstraintSet":
        extra = set(d) - {"eq_rows", "eq_rhs", "ineq_rows", "ineq_rhs"}
        if extra:
            raise ValueError(f"unknown eps-constraint keys: {sorted(extra)}")
        return cls(d.get("eq_rows"), d.get("eq_rhs"), d.get("ineq_rows"), d.get("ineq_rhs"))

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("eq_rows", "eq_rhs", "ineq_rows", "ineq_rhs")
                if getattr(self, k) is not None}


# ---------------------------------------------------------------------------
# constraints on c


def _require_gap(norm: Norm) -> None:
    if not norm.is_gap:
        raise UnsupportedVariant(
            f"cost constraints with the {norm.value} loss are not supported; "
            "use a duality-gap variant ('abs' or 'rel'), which stays a linear program")


def _best_constrained(poly, x_hat, norm, cc, pin=None):
    rows = cc.resolve(poly.n)
    patterns = cc.sign_patterns(poly.n)
    if norm is Norm.ABS_GAP:
        return best_abs_gap(poly, x_hat, patterns, rows, pin)
    if cc.signs == "free" and rows.homogeneous:
        patterns = [None]
    return best_rel_gap(poly, x_hat, (1.0, -1.0), rows, patterns, pin)


def solve_gio_constrained_cost(poly: Polyhedron, pt, norm: Norm | str,
                               cc: CostConstraintSet | None = None,
                               tol: float = DEFAULT_TOL) -> InverseSolution:
    """Duality-gap inverse model with linear restrictions on ``c``.

    Without restrictions and with free signs this is :func:`solve_gio`.
    Otherwise the problem is solved as an LP in ``(y, c)`` per sign
    orthant, and ``c*`` may be a strict conic combination of rows.
    """
    norm = Norm.parse(norm)
    _require_gap(norm)
    x_hat = as_point(poly, pt)
    require_feasible(poly, x_hat, tol)
    cc = cc if cc is not None else CostConstraintSet(signs="free")
    if cc.is_empty and cc.signs == "free":
        return solve_gio(poly, x_hat, norm, tol)
    if norm is Norm.REL_GAP and np.all(poly.rhs == 0):
        raise RelGapZeroRhs("every row has b_i = 0; the relative gap is undefined")
    best = _best_constrained(poly, x_hat, norm, cc)
    if best is None:
        raise ConstraintInfeasible("no dual-feasible cost vector satisfies the cost constraints")
    return gap_solution(poly, x_hat, norm, best)


def gap_is_attainable(poly: Polyhedron, pt, norm: Norm | str, cc: CostConstraintSet | None,
                      value: float) -> bool:
    """Whether some admissible ``(y, c)`` has gap exactly ``value``.

    ``value`` is the absolute gap for ``abs`` and the ratio
    ``c'x_hat / b'y`` for ``rel``.
    """
    norm = Norm.parse(norm)
    _require_gap(norm)
    x_hat = as_point(poly, pt)
    cc = cc if cc is not None else CostConstraintSet(signs="free")
    return _best_constrained(poly, x_hat, norm, cc, pin=float(value)) is not None


def solve_gio_zero_pattern(poly: Polyhedron, pt, norm: Norm | str, k: int,
                           signs: str | Sequence[float] = "free",
                           tol: float = DEFAULT_TOL) -> InverseSolution:
    """Inverse model in which only the first ``k`` cost components may be nonzero."""
    n = poly.n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    cc = CostConstraintSet(zero_pattern=frozenset(range(k, n)), signs=signs)
    return solve_gio_constrained_cost(poly, pt, norm, cc, tol)


# ---------------------------------------------------------------------------
# constraints on eps


def perturbation_norm(eps, norm: Norm) -> float:
    if norm is Norm.P1:
        return float(np.sum(np.abs(eps)))
    if norm is Norm.P2:
        return float(np.linalg.norm(eps))
    return float(np.max(np.abs(eps)))


def _eps_rows(poly, x_hat, i, ec):
    """Constraints on ``eps`` for a projection onto row ``i``'s face.

    Returns ``(G, h, E, f)`` with ``G eps >= h`` and ``E eps = f``.
    """
    G = [-poly.rows]
    h = [poly.rhs - poly.rows @ x_hat]
    E = [poly.rows[i][None, :]]
    f = [np.array([poly.rows[i] @ x_hat - poly.rhs[i]])]
    if ec is not None:
        if ec.ineq_rows is not None:
            G.append(ec.ineq_rows)
            h.append(ec.ineq_rhs)
        if ec.eq_rows is not None:
            E.append(ec.eq_rows)
            f.append(ec.eq_rhs)
    return np.vstack(G), np.concatenate(h), np.vstack(E), np.concatenate(f)


def _polyhedral_projection(G, h, E, f, n, norm):
    """``min ||eps||`` for ``norm`` in {p1, pinf} via an LP in ``[eps, t]``."""
    k = n if norm is Norm.P1 else 1
    T = np.ones((n, 1)) if k == 1 else np.eye(n)
    # |eps_j| <= t (per component for p1, shared for pinf)
    box = np.vstack([np.hstack([-np.eye(n), T]), np.hstack([np.eye(n), T])])
    A_ge = np.vstack([np.hstack([G, np.zeros((len(G), k))]), box])
    b_ge = np.concatenate([h, np.zeros(2 * n)])
    A_eq = np.hstack([E, np.zeros((len(E), k))])
    sol = linprog(np.concatenate([np.zeros(n), np.ones(k)]), A_ge=A_ge, b_ge=b_ge,
                  A_eq=A_eq, b_eq=f, bounds=[(None, None)] * n + [(0, None)] * k)
    return sol.x[:n] if sol.optimal else None


def face_projection(poly: Polyhedron, x_hat, i: int, norm: Norm | str,
                    ec: EpsConstraintSet | None = None,
                    tol: float = DEFAULT_TOL) -> np.ndarray | None:
    """Smallest ``eps`` moving ``x_hat`` onto row ``i``'s face of the polyhedron.

    ``x_hat - eps`` must satisfy row ``i`` with equality and every other
    row, and ``eps`` must lie in ``ec``.  Returns ``None`` when no such
    ``eps`` exists.  The hyperplane projection is tried first since it is
    optimal whenever it is admissible.
    """
    norm = Norm.parse(norm)
    if norm.is_gap:
        raise UnsupportedVariant("face projections are defined for the p-norm losses only")
    x_hat = np.asarray(x_hat, dtype=float)
    a, b = poly.rows[i], poly.rhs[i]
    s = float(a @ x_hat - b)
    if abs(s) <= tol:
        s = 0.0
    eps = s / dual_norm_of_row(a, norm) * v_maximizer(a, norm)
    x = x_hat - eps
    scale = 1.0 + np.abs(poly.rhs)
    if np.all(poly.rows @ x - poly.rhs >= -tol * scale) and (ec is None or ec.contains(eps, tol)):
        return eps
    G, h, E, f = _eps_rows(poly, x_hat, i, ec)
    n = poly.n
    if norm is Norm.P2:
        # eps = x_hat - x; project x_hat onto the face in x-space
        try:
            x = project_l2(x_hat, -G, h - G @ x_hat, E, E @ x_hat - f, tol)
        except EmptyFace:
            return None
        return x_hat - x
    return _polyhedral_projection(G, h, E, f, n, norm)


def solve_gio_constrained_eps(poly: Polyhedron, pt, norm: Norm | str,
                              ec: EpsConstraintSet | None = None,
                              tol: float = DEFAULT_TOL) -> InverseSolution:
    """p-norm inverse model with linear restrictions on the perturbation.

    Each row's face projection is computed under ``ec``; among rows that
    admit one the cheapest wins (smallest index on ties) and
    ``c* = a_i / ||a_i||_1``.
    """
    norm = Norm.parse(norm)
    if norm.is_gap:
        raise UnsupportedVariant("eps constraints apply to the p-norm losses; "
                                 "use solve_gio_constrained_cost for the gap losses")
    x_hat = as_point(poly, pt)
    require_feasible(poly, x_hat, tol)
    if ec is not None:
        ec.check(poly.n)
    if ec is None or ec.is_empty:
        return solve_gio(poly, x_hat, norm, tol)
    losses = np.full(poly.m, np.inf)
    proj = {}
    for i in range(poly.m):
        eps = face_projection(poly, x_hat, i, norm, ec, tol)
        if eps is not None:
            proj[i] = eps
            losses[i] = perturbation_norm(eps, norm)
    if not proj:
        raise NoFeasibleProjection("no row admits a feasible projection under the eps constraints")
    best = float(np.min(losses))
    ties = tuple(int(i) for i in np.flatnonzero(losses <= best + tol * max(1.0, best)))
    i = ties[0]
    a = poly.rows[i]
    l1 = float(np.sum(np.abs(a)))
    y = np.zeros(poly.m)
    y[i] = 1.0 / l1
    eps = proj[i]
    return InverseSolution(norm, y, a / l1, eps, i, float(losses[i]), x_hat - eps, None, ties)


__all__ = [
    "CostConstraintSet",
    "EpsConstraintSet",
    "face_projection",
    "perturbation_norm",
    "gap_is_attainable",
    "solve_gio_constrained_cost",
    "solve_gio_constrained_eps",
    "solve_gio_zero_pattern",
]
