import numpy as np
import pytest

from invfit import app
from invfit.constrained import CostConstraintSet, solve_gio_constrained_cost
from invfit.errors import InfeasiblePoint, ZeroAnchor
from invfit.lp import solve

# Scaled costs and fit values as printed for the four models.
PRINTED = {
    "Model 1": ([6, 21, 24, 2, 25], 0.426),
    "Model 2": ([6, 21, 0.0035, 2, 6], 0.846),
    "Model 3": ([12, 21, 1.5, 4, 10.5], 0.906),
    "Model 4": ([42, 21, 21, 209895, 21], 0.999),
}


@pytest.fixture(scope="module")
def results():
    return {r.name: r for r in app.run_models()}


def test_forward_model_reproduces_unperturbed_plan():
    inst, plan = app.load_table4("unperturbed")
    sol = solve(app.build_app_forward(inst, app.true_cost()))
    assert sol.optimal
    np.testing.assert_allclose(sol.x.reshape(4, 5), plan.x, atol=0.5)
    assert plan.is_feasible(inst, app.PLAN_TOL)


def test_printed_observed_plan_is_nearly_feasible():
    inst, plan = app.load_table4("perturbed")
    assert inst.init_backorder == pytest.approx(1183.8)
    r = plan.residuals(inst)
    assert r.max() <= app.PLAN_TOL
    assert not plan.is_feasible(inst, 1e-6)


def test_polyhedron_shape():
    inst, _ = app.load_table4()
    poly = app.app_polyhedron(inst)
    # 4 balance rows split in two, 4 capacity rows split in two, 4 overtime caps, 20 sign rows
    assert (poly.m, poly.n) == (40, 20)


@pytest.mark.parametrize("name", list(PRINTED))
def test_models_match_printed_table(results, name):
    c, r = PRINTED[name]
    res = results[name]
    np.testing.assert_allclose(res.scaled_cost, c, rtol=0.01)
    assert res.rho_a == pytest.approx(r, abs=1e-3)
    assert res.cost.sum() == pytest.approx(1.0)
    assert np.all(res.cost >= app.COST_FLOOR - 1e-12)


def test_fit_improves_as_restrictions_relax(results):
    vals = [results[n].rho_a for n in PRINTED]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_model_screen_is_stricter(results):
    inst, plan = app.load_table4()
    m1 = app.load_models()[0]
    strict = app.rho_a_app(inst, plan, m1.constraints, screen="model")
    # the model's own restrictions drop more rows than the floor alone
    assert sum(r.included_in_denominator for r in strict.per_row) < \
        sum(r.included_in_denominator for r in app.rho_a_app(inst, plan, m1.constraints).per_row)
    assert strict.rho > results["Model 1"].rho_a
    with pytest.raises(ValueError):
        app.rho_a_app(inst, plan, m1.constraints, screen="bogus")


def test_round_trip_on_optimal_plan():
    inst, plan = app.load_table4("unperturbed")
    _, eps = app.solve_inverse_app(inst, plan)
    assert eps <= 1e-6


def test_infeasible_plan_rejected():
    inst, plan = app.load_table4()
    x = np.array(plan.x)
    x[0, app.REG] += 100
    with pytest.raises(InfeasiblePoint):
        app.solve_inverse_app(inst, app.AppPlan(x))


def test_perturbation_is_feasible_and_reproducible():
    inst, base = app.load_table4("unperturbed")
    for seed in range(1000):
        p = app.perturb_plan(base, inst, seed)
        assert p.is_feasible(inst, 1e-6)
    a = app.perturb_plan(base, inst, 42)
    b = app.perturb_plan(base, inst, 42)
    assert np.array_equal(a.x, b.x)
    assert not np.array_equal(a.x, app.perturb_plan(base, inst, 43).x)


def test_zero_demand_leaves_everything_idle():
    inst = app.AppInstance((0, 0, 0, 0))
    sol = solve(app.build_app_forward(inst, app.true_cost()))
    x = sol.x.reshape(4, 5)
    np.testing.assert_allclose(x[:, app.IDLE], inst.a1)
    np.testing.assert_allclose(x[:, [app.REG, app.OT, app.INV, app.BACK]], 0, atol=1e-9)


def test_rescale_costs():
    c = app.rescale_costs([0.171, 0.6, 0.0001, 0.057, 0.171], 1, 21)
    np.testing.assert_allclose(c.c, [5.985, 21, 0.0035, 1.995, 5.985])
    with pytest.raises(ZeroAnchor):
        app.rescale_costs([1, 0, 1, 1, 1], 1, 21)


def test_instance_validation():
    with pytest.raises(ValueError):
        app.AppInstance((1, 2, 3))
    with pytest.raises(ValueError):
        app.AppInstance((1, 2, 3, -4))
    with pytest.raises(ValueError):
        app.AppCost([1, 2, 3, 4, -1])


def test_generic_solver_agrees_with_dedicated_lp():
    """The 20-variable generic model, with one cost shared by all quarters, matches."""
    inst, base = app.load_table4("unperturbed")
    plan = app.perturb_plan(base, inst, 3)
    poly = app.app_polyhedron(inst)
    share = np.hstack([np.eye(5)] * 4)

    def lift(rows):
        return None if rows is None else np.hstack([rows, np.zeros((len(rows), 15))])

    for m in app.load_models():
        _, eps = app.solve_inverse_app(inst, plan, m.constraints)
        k = m.constraints
        # shared costs have four times the 1-norm, so floor and gap scale by 1/4
        cc = CostConstraintSet(lift(k.eq_rows), k.eq_rhs, lift(k.ineq_rows), k.ineq_rhs,
                               lower_bounds={j: app.COST_FLOOR / 4 for j in range(5)},
                               cone_rows=share)
        g = solve_gio_constrained_cost(poly, plan.flat, "abs", cc)
        assert 4 * g.loss == pytest.approx(eps, rel=1e-8, abs=1e-8)
