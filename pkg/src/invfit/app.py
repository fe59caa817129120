"""Aggregate production planning (APP): forward model, inverse model and fit.

A plan covers four quarters with five hour-valued activities per quarter:
regular time, overtime, idle time, inventory and backorder.  Decision
vectors are flattened quarter-major, so activity ``j`` of quarter ``h``
sits at index ``5 * h + j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from invfit.constrained import CostConstraintSet
from invfit.errors import ConstraintInfeasible, EmptyDenominator, InfeasiblePoint, ZeroAnchor
from invfit.geometry import Norm, Polyhedron, canonicalize
from invfit.gof import FitReport, RowError
from invfit.lp import LpProblem, LpSolution, linprog

QUARTERS = 4
ACTIVITIES = ("regular", "overtime", "idle", "inventory", "backorder")
REG, OT, IDLE, INV, BACK = range(5)
COST_FLOOR = 1e-4
# printed plans are rounded to 0.1 h, which leaves balance residuals of that size
PLAN_TOL = 0.5


@dataclass(frozen=True)
class AppInstance:
    """Demand per quarter, capacities and stocks carried in from last year.

    The capacity defaults (35000 regular and 3500 overtime hours) are
    what the published plans imply: regular plus idle hours sum to 35000
    in every quarter and overtime never exceeds 3500.
    """

    demand: tuple[float, ...]
    a1: float = 35000.0
    a2: float = 3500.0
    init_inventory: float = 0.0
    init_backorder: float = 0.0

    def __post_init__(self):
        d = tuple(float(v) for v in self.demand)
        if len(d) != QUARTERS:
            raise ValueError(f"need {QUARTERS} quarterly demands, got {len(d)}")
        if min(d) < 0:
            raise ValueError("demand must be nonnegative")
        if self.a1 <= 0 or self.a2 <= 0:
            raise ValueError("capacities must be positive")
        if self.init_inventory < 0 or self.init_backorder < 0:
            raise ValueError("initial stocks must be nonnegative")
        object.__setattr__(self, "demand", d)

    def effective_demand(self) -> np.ndarray:
        """Demand net of carried-in stock: the balance-row right-hand sides."""
        d = np.array(self.demand)
        d[0] += self.init_backorder - self.init_inventory
        return d


@dataclass(frozen=True, eq=False)
class AppPlan:
    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.shape != (QUARTERS, len(ACTIVITIES)):
            raise ValueError(f"plan must be {QUARTERS} x {len(ACTIVITIES)}, got {x.shape}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def flat(self) -> np.ndarray:
        return self.x.ravel()

    def residuals(self, inst: AppInstance) -> np.ndarray:
        """Violations: balance (4), capacity (4), overtime excess (4), negativity (20)."""
        x = self.x
        net = x[:, INV] - x[:, BACK]
        prev = np.concatenate([[0.0], net[:-1]])
        bal = prev - net + x[:, REG] + x[:, OT] - inst.effective_demand()
        cap = x[:, REG] + x[:, IDLE] - inst.a1
        ot = np.maximum(x[:, OT] - inst.a2, 0.0)
        neg = np.maximum(-x.ravel(), 0.0)
        return np.concatenate([np.abs(bal), np.abs(cap), ot, neg])

    def is_feasible(self, inst: AppInstance, tol: float = 1e-6) -> bool:
        return bool(np.all(self.residuals(inst) <= tol))


@dataclass(frozen=True, eq=False)
class AppCost:
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.shape != (len(ACTIVITIES),):
            raise ValueError(f"need {len(ACTIVITIES)} costs, got {c.shape}")
        if np.any(c < 0):
            raise ValueError("costs must be nonnegative")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)


def _idx(h: int, j: int) -> int:
    return 5 * h + j


def _forward_rows(inst: AppInstance):
    """``(coeffs, sense, rhs)`` triples: balance, capacity, overtime rows."""
    nv = QUARTERS * len(ACTIVITIES)
    out = []
    rhs = inst.effective_demand()
    for h in range(QUARTERS):
        a = np.zeros(nv)
        a[[_idx(h, REG), _idx(h, OT), _idx(h, BACK)]] = 1.0
        a[_idx(h, INV)] = -1.0
        if h > 0:
            a[_idx(h - 1, INV)] = 1.0
            a[_idx(h - 1, BACK)] = -1.0
        out.append((a, "=", rhs[h]))
    for h in range(QUARTERS):
        a = np.zeros(nv)
        a[[_idx(h, REG), _idx(h, IDLE)]] = 1.0
        out.append((a, "=", inst.a1))
    for h in range(QUARTERS):
        a = np.zeros(nv)
        a[_idx(h, OT)] = 1.0
        out.append((a, "<=", inst.a2))
    return out


def build_app_forward(inst: AppInstance, cost=None) -> LpProblem:
    """The forward planning LP over 20 nonnegative variables."""
    c = np.zeros(len(ACTIVITIES)) if cost is None else np.asarray(
        cost.c if isinstance(cost, AppCost) else cost, dtype=float)
    rows = _forward_rows(inst)
    return LpProblem(np.tile(c, QUARTERS), np.vstack([r[0] for r in rows]),
                     tuple(r[1] for r in rows), np.array([r[2] for r in rows]))


def app_polyhedron(inst: AppInstance) -> Polyhedron:
    """Canonical ``A x >= b`` form: 16 split equality rows, 4 flipped
    overtime rows, then 20 nonnegativity rows (40 in total)."""
    return canonicalize(_forward_rows(inst), nonneg=True)


def _merge_floor(cc: CostConstraintSet | None, floor: float) -> CostConstraintSet:
    cc = cc if cc is not None else CostConstraintSet()
    lb = {j: max(floor, cc.lower_bounds.get(j, floor)) for j in range(len(ACTIVITIES))}
    return CostConstraintSet(cc.eq_rows, cc.eq_rhs, cc.ineq_rows, cc.ineq_rhs,
                             cc.zero_pattern, lb, None, "nonneg")


def _inverse_lp(inst: AppInstance, plan: AppPlan, cc: CostConstraintSet,
                pin: float | None = None, maximize: int | None = None) -> LpSolution:
    """The inverse APP LP over ``[c (5), eps_a, gamma (4), lam (4), mu (4)]``.

    Dual feasibility rows follow the forward columns (inventory,
    backorder, regular, overtime, idle in each quarter); the strong
    duality row is relaxed by ``eps_a``; ``sum(c) = 1``.  ``pin`` fixes
    ``eps_a``; ``maximize`` swaps the objective for ``max c_j``.
    """
    nc = len(ACTIVITIES)
    E, G, L, M = nc, nc + 1, nc + 5, nc + 9
    nv = nc + 13
    le, le_rhs, eq, eq_rhs = [], [], [], []

    def row(entries):
        r = np.zeros(nv)
        for k, v in entries:
            r[k] += v
        return r

    for h in range(QUARTERS):
        nxt = [(G + h + 1, 1.0)] if h + 1 < QUARTERS else []
        le.append(row([(G + h, -1.0), *nxt, (INV, -1.0)]))
        le.append(row([(G + h, 1.0), *[(k, -v) for k, v in nxt], (BACK, -1.0)]))
        le.append(row([(G + h, 1.0), (L + h, 1.0), (REG, -1.0)]))
        le.append(row([(G + h, 1.0), (M + h, -1.0), (OT, -1.0)]))
        le.append(row([(L + h, 1.0), (IDLE, -1.0)]))
    le_rhs = [0.0] * len(le)
    totals = plan.x.sum(axis=0)
    d = inst.effective_demand()
    sd = [(j, totals[j]) for j in range(nc)] + [(E, -1.0)]
    sd += [(G + h, -d[h]) for h in range(QUARTERS)]
    sd += [(L + h, -inst.a1) for h in range(QUARTERS)]
    sd += [(M + h, inst.a2) for h in range(QUARTERS)]
    eq.append(row(sd))
    eq_rhs.append(0.0)
    eq.append(row([(j, 1.0) for j in range(nc)]))
    eq_rhs.append(1.0)
    ge, ge_rhs = [], []
    if cc.eq_rows is not None:
        eq.extend(np.hstack([cc.eq_rows, np.zeros((len(cc.eq_rows), nv - nc))]))
        eq_rhs.extend(cc.eq_rhs)
    if cc.ineq_rows is not None:
        ge.extend(np.hstack([cc.ineq_rows, np.zeros((len(cc.ineq_rows), nv - nc))]))
        ge_rhs.extend(cc.ineq_rhs)
    bounds = [(cc.lower_bounds.get(j, 0.0), 0.0 if j in cc.zero_pattern else None)
              for j in range(nc)]
    bounds += [(pin, pin) if pin is not None else (None, None)]
    bounds += [(None, None)] * 8 + [(0, None)] * 4
    obj = np.zeros(nv)
    if maximize is not None:
        obj[maximize] = -1.0
    elif pin is None:
        obj[E] = 1.0
    return linprog(obj, A_ge=np.array(ge) if ge else None, b_ge=ge_rhs or None,
                   A_le=np.array(le), b_le=le_rhs, A_eq=np.array(eq), b_eq=eq_rhs,
                   bounds=bounds)


def _check_plan(inst, plan):
    if not plan.is_feasible(inst, PLAN_TOL):
        worst = float(np.max(plan.residuals(inst)))
        raise InfeasiblePoint(f"plan violates the planning constraints by {worst:.3g} hours")


def solve_inverse_app(inst: AppInstance, plan: AppPlan, cc: CostConstraintSet | None = None,
                      floor: float = COST_FLOOR, concentrate: bool = True) -> tuple[AppCost, float]:
    """Cost vector on the unit simplex that makes ``plan`` closest to optimal.

    Every cost is held at or above ``floor``.  When several cost vectors
    attain the optimal gap, ``concentrate`` returns the one with the
    largest single component (smallest index on ties), which leaves as
    many costs as possible at the floor.  Returns ``(c*, eps_a*)``.
    """
    _check_plan(inst, plan)
    merged = _merge_floor(cc, floor)
    sol = _inverse_lp(inst, plan, merged)
    if not sol.optimal:
        raise ConstraintInfeasible("no cost vector satisfies the model's restrictions")
    eps = float(sol.x[len(ACTIVITIES)])
    if concentrate:
        # the optimal face is often not a single point; take its most
        # concentrated member so the answer does not hinge on pivoting
        best = None
        for j in range(len(ACTIVITIES)):
            alt = _inverse_lp(inst, plan, merged, pin=eps, maximize=j)
            if alt.optimal and (best is None or alt.x[j] > best.x[best_j] + 1e-12):
                best, best_j = alt, j
        if best is not None:
            sol = best
    c = np.maximum(sol.x[:len(ACTIVITIES)], 0.0)
    return AppCost(c), eps


def rho_a_app(inst: AppInstance, plan: AppPlan, cc: CostConstraintSet | None = None,
              floor: float = COST_FLOOR, screen: str = "floor") -> FitReport:
    """Absolute-gap fit of ``plan`` under the cost restrictions ``cc``.

    Each row of the canonical polyhedron contributes
    ``eps_i = slack_i / ||a_i||_1`` to the denominator if the inverse
    model admits a gap of exactly ``eps_i``.  With ``screen="floor"``
    that check only imposes the cost floor (candidate costs are all
    nonnegative cost vectors); ``screen="model"`` also imposes ``cc``.
    """
    if screen not in ("floor", "model"):
        raise ValueError("screen must be 'floor' or 'model'")
    _, eps_star = solve_inverse_app(inst, plan, cc, floor)
    poly = app_polyhedron(inst)
    s = poly.rows @ plan.flat - poly.rhs
    eps_i = s / np.sum(np.abs(poly.rows), axis=1)
    screen_cc = _merge_floor(cc if screen == "model" else None, floor)
    included = np.array([_inverse_lp(inst, plan, screen_cc, pin=float(e)).optimal for e in eps_i])
    if not np.any(included):
        raise EmptyDenominator("no row's gap is attainable under the screen")
    denom = float(np.mean(eps_i[included]))
    r = 1.0 if denom <= 0 else 1.0 - eps_star / denom
    per_row = tuple(RowError(i, float(e), float(e), bool(k))
                    for i, (e, k) in enumerate(zip(eps_i, included)))
    warnings = ("rho is negative: the constrained fit is worse than the average row",) if r < 0 else ()
    return FitReport(Norm.ABS_GAP, r, r, eps_star, per_row, denom, denom, warnings)


def perturb_plan(optimal_plan: AppPlan, inst: AppInstance, seed: int) -> AppPlan:
    """Noisy version of a plan, feasible by construction.

    Regular time grows by ``U[0, 0.02]`` times idle time when it was zero
    and is otherwise scaled by ``1 + U[-0.03, 0.03]`` (clipped to
    ``[0, a1]``).  Idle time absorbs the change, overtime is kept, and
    inventory or backorder carries the running surplus or shortfall.
    """
    rng = np.random.default_rng(seed)
    x = np.array(optimal_plan.x, dtype=float)
    for h in range(QUARTERS):
        if x[h, REG] == 0:
            x[h, REG] += rng.uniform(0.0, 0.02) * x[h, IDLE]
        else:
            x[h, REG] *= 1.0 + rng.uniform(-0.03, 0.03)
        x[h, REG] = min(max(x[h, REG], 0.0), inst.a1)
        x[h, IDLE] = inst.a1 - x[h, REG]
    net = inst.init_inventory - inst.init_backorder
    for h in range(QUARTERS):
        net += x[h, REG] + x[h, OT] - inst.demand[h]
        x[h, INV], x[h, BACK] = max(net, 0.0), max(-net, 0.0)
    return AppPlan(x)


def rescale_costs(c: AppCost | Sequence[float], anchor_index: int, anchor_value: float) -> AppCost:
    """Scale ``c`` so that component ``anchor_index`` equals ``anchor_value``."""
    v = np.asarray(c.c if isinstance(c, AppCost) else c, dtype=float)
    if not v[anchor_index] > 0:
        raise ZeroAnchor(f"cost component {anchor_index} is {v[anchor_index]}; cannot anchor on it")
    return AppCost(v * (anchor_value / v[anchor_index]))


# ---------------------------------------------------------------------------
# shipped data


def _read_json(name: str) -> dict:
    return json.loads(resources.files("invfit").joinpath("data").joinpath(name).read_text())


def load_table4(which: str = "perturbed") -> tuple[AppInstance, AppPlan]:
    """Instance and plan for the ``"perturbed"`` or ``"unperturbed"`` case."""
    d = _read_json("app_table4.json")
    case = d[which]
    inst = AppInstance(tuple(d["demand"]), d["a1"], d["a2"],
                       case["init_inventory"], case["init_backorder"])
    return inst, AppPlan(case["plan"])


def true_cost() -> AppCost:
    return AppCost(_read_json("app_table4.json")["true_cost"])


@dataclass(frozen=True)
class AppModel:
    name: str
    label: str
    constraints: CostConstraintSet


def load_models() -> list[AppModel]:
    d = _read_json("app_models.json")
    out = []
    for m in d["models"]:
        spec = {k: v for k, v in m.items() if k not in ("name", "label")}
        out.append(AppModel(m["name"], m["label"], CostConstraintSet.from_dict(spec)))
    return out


@dataclass(frozen=True)
class AppModelResult:
    name: str
    label: str
    cost: np.ndarray
    scaled_cost: np.ndarray
    eps_a: float
    rho_a: float

    def to_dict(self) -> dict:
        return {"model": self.name, "constraints": self.label, "c": self.cost.tolist(),
                "c_scaled": self.scaled_cost.tolist(), "eps_a": self.eps_a, "rho_a": self.rho_a}


def run_models(inst: AppInstance | None = None, plan: AppPlan | None = None,
               anchor: tuple[int, float] = (1, 21.0)) -> list[AppModelResult]:
    """Fit every shipped model to a plan (the printed observed plan by default)."""
    if inst is None or plan is None:
        inst, plan = load_table4("perturbed")
    out = []
    for m in load_models():
        cost, eps = solve_inverse_app(inst, plan, m.constraints)
        rep = rho_a_app(inst, plan, m.constraints)
        out.append(AppModelResult(m.name, m.label, cost.c.copy(),
                                  rescale_costs(cost, *anchor).c.copy(), eps, rep.rho))
    return out
