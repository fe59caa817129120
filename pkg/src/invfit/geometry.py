"""Polyhedra in ``A x >= b`` form, norms and point classification."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from invfit.errors import DimensionMismatch, RelGapZeroRhs, ZeroRow

DEFAULT_TOL = 1e-8


class Sense(str, Enum):
    GE = ">="
    LE = "<="
    EQ = "="

    @classmethod
    def parse(cls, token: "str | Sense") -> "Sense":
        if isinstance(token, Sense):
            return token
        t = str(token).strip().upper()
        aliases = {">=": cls.GE, "GE": cls.GE, "<=": cls.LE, "LE": cls.LE,
                   "=": cls.EQ, "==": cls.EQ, "EQ": cls.EQ}
        try:
            return aliases[t]
        except KeyError:
            raise ValueError(f"unknown constraint sense {token!r}") from None


class RowOrigin(str, Enum):
    GE = "GE"
    LE_FLIPPED = "LE_flipped"
    EQ_SPLIT_LO = "EQ_split_lo"
    EQ_SPLIT_HI = "EQ_split_hi"
    NONNEG = "NONNEG"


class Norm(str, Enum):
    """Loss used by the inverse model.

    ``P1``, ``P2`` and ``PINF`` measure the perturbation of the observed
    point in decision space; ``ABS_GAP`` and ``REL_GAP`` measure the
    absolute and relative duality gap.
    """

    P1 = "p1"
    P2 = "p2"
    PINF = "pinf"
    ABS_GAP = "abs"
    REL_GAP = "rel"

    @classmethod
    def parse(cls, token: "str | Norm") -> "Norm":
        if isinstance(token, Norm):
            return token
        t = str(token).strip().lower()
        for member in cls:
            if t in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown norm {token!r}; expected one of "
                         f"{[m.value for m in cls]}")

    @property
    def is_gap(self) -> bool:
        return self in (Norm.ABS_GAP, Norm.REL_GAP)


class Position(str, Enum):
    INTERIOR = "INTERIOR"
    BOUNDARY = "BOUNDARY"
    INFEASIBLE = "INFEASIBLE"


@dataclass(frozen=True)
class RowMeta:
    original_id: int
    sense_origin: RowOrigin


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """Feasible set ``{x : rows @ x >= rhs}``.

    Full-dimensionality and absence of redundant rows are assumed by the
    inverse machinery but not checked here; use :func:`slack` to audit.
    """

    rows: np.ndarray
    rhs: np.ndarray
    row_meta: tuple[RowMeta, ...] = ()

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        rhs = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise DimensionMismatch("rows must be a non-empty m x n matrix")
        m = rows.shape[0]
        if rhs.shape != (m,):
            raise DimensionMismatch(f"rhs must have length {m}, got {rhs.shape}")
        if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(rhs))):
            raise ValueError("polyhedron data must be finite")
        zero = np.flatnonzero(~np.any(rows != 0.0, axis=1))
        if zero.size:
            raise ZeroRow(f"row {int(zero[0])} is all zeros")
        meta = self.row_meta or tuple(RowMeta(i, RowOrigin.GE) for i in range(m))
        if len(meta) != m:
            raise DimensionMismatch("row_meta length must match number of rows")
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "rhs", _frozen(rhs))
        object.__setattr__(self, "row_meta", tuple(meta))

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    def scaled(self, factors: Sequence[float]) -> "Polyhedron":
        """Multiply each row and its rhs by a positive factor."""
        f = np.asarray(factors, dtype=float)
        if f.shape != (self.m,) or np.any(f <= 0):
            raise ValueError("need one positive factor per row")
        return Polyhedron(self.rows * f[:, None], self.rhs * f, self.row_meta)


def canonicalize(
    rows_with_senses: Iterable[tuple[Sequence[float], "str | Sense", float]],
    nonneg: bool = False,
) -> Polyhedron:
    """Build a :class:`Polyhedron` from ``(coeffs, sense, rhs)`` triples.

    ``<=`` rows are negated; ``=`` rows become the pair ``a'x >= b`` and
    ``-a'x >= -b``. With ``nonneg=True`` the rows ``x_j >= 0`` are
    appended.
    """
    out_rows: list[np.ndarray] = []
    out_rhs: list[float] = []
    meta: list[RowMeta] = []

    def emit(a, b, original_id, origin):
        out_rows.append(a)
        out_rhs.append(b)
        meta.append(RowMeta(original_id, origin))

    items = list(rows_with_senses)
    if not items:
        raise DimensionMismatch("need at least one row")
    n = None
    for k, (coeffs, sense, b) in enumerate(items):
        a = np.asarray(coeffs, dtype=float).ravel()
        if n is None:
            n = a.size
        elif a.size != n:
            raise DimensionMismatch(f"row {k} has {a.size} coefficients, expected {n}")
        s = Sense.parse(sense)
        b = float(b)
        if s is Sense.GE:
            emit(a, b, k, RowOrigin.GE)
        elif s is Sense.LE:
            emit(-a, -b, k, RowOrigin.LE_FLIPPED)
        else:
            emit(a, b, k, RowOrigin.EQ_SPLIT_LO)
            emit(-a, -b, k, RowOrigin.EQ_SPLIT_HI)
    if nonneg:
        for j in range(n):
            emit(np.eye(n)[j], 0.0, len(items) + j, RowOrigin.NONNEG)
    return Polyhedron(np.vstack(out_rows), np.asarray(out_rhs), tuple(meta))


def as_point(poly: Polyhedron, pt) -> np.ndarray:
    x = np.asarray(pt, dtype=float).ravel()
    if x.shape != (poly.n,):
        raise DimensionMismatch(f"point has length {x.size}, polyhedron dimension is {poly.n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point must be finite")
    return x


def slack(poly: Polyhedron, pt) -> np.ndarray:
    """Row-wise ``a_i'x - b_i``."""
    return poly.rows @ as_point(poly, pt) - poly.rhs


def classify(poly: Polyhedron, pt, tol: float = DEFAULT_TOL) -> Position:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    s = slack(poly, pt)
    if np.all(s > tol):
        return Position.INTERIOR
    if np.all(s >= -tol) and np.any(np.abs(s) <= tol):
        return Position.BOUNDARY
    return Position.INFEASIBLE


def dual_norm_of_row(a, norm: Norm, rhs_b: float = 0.0) -> float:
    """Dual norm of ``a`` with respect to the loss ``norm``.

    For ``REL_GAP`` the loss is the infinity norm weighted by ``1/|b|``,
    whose relevant dual quantity is ``|b|``.
    """
    a = np.asarray(a, dtype=float)
    norm = Norm.parse(norm)
    if norm is Norm.P1:
        return float(np.max(np.abs(a)))
    if norm is Norm.P2:
        return float(np.linalg.norm(a))
    if norm in (Norm.PINF, Norm.ABS_GAP):
        return float(np.sum(np.abs(a)))
    if rhs_b == 0:
        raise RelGapZeroRhs("relative-gap loss needs a nonzero right-hand side")
    return abs(float(rhs_b))


def v_maximizer(a, norm: Norm, rhs_b: float = 0.0) -> np.ndarray:
    """A unit-loss vector ``v`` attaining ``a'v = dual_norm_of_row(a)``.

    For ``P1`` ties in ``max |a_j|`` go to the smallest index.
    """
    a = np.asarray(a, dtype=float)
    norm = Norm.parse(norm)
    if norm is Norm.P1:
        j = int(np.argmax(np.abs(a)))
        v = np.zeros_like(a)
        v[j] = np.sign(a[j])
        return v
    if norm is Norm.P2:
        return a / np.linalg.norm(a)
    if norm in (Norm.PINF, Norm.ABS_GAP):
        return np.sign(a)
    if rhs_b == 0:
        raise RelGapZeroRhs("relative-gap loss needs a nonzero right-hand side")
    return abs(float(rhs_b)) * np.sign(a) / np.sum(np.abs(a))


def dual_norms(poly: Polyhedron, norm: Norm) -> np.ndarray:
    """Vectorised :func:`dual_norm_of_row` over all rows.

    For ``REL_GAP`` rows with ``b_i = 0`` get ``nan``.
    """
    A = poly.rows
    if norm is Norm.P1:
        return np.max(np.abs(A), axis=1)
    if norm is Norm.P2:
        return np.sqrt(np.einsum("ij,ij->i", A, A))
    if norm in (Norm.PINF, Norm.ABS_GAP):
        return np.sum(np.abs(A), axis=1)
    d = np.abs(poly.rhs).astype(float)
    d[d == 0] = np.nan
    return d
