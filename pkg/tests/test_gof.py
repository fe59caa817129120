import io

import numpy as np
import pytest
from scipy.optimize import minimize

from conftest import random_polygon
from invfit.constrained import CostConstraintSet, EpsConstraintSet
from invfit.errors import DimensionUnsupported, EmptyDenominator, InfeasiblePoint, NoFeasibleProjection
from invfit.geometry import Polyhedron
from invfit.gof import bounding_box, grid_csv, rho, rho_grid, rho_tilde

# Hand-derived at x_hat = (2.5, 3): slacks (10, 2, 4, 2) over the dual norms.
ABS_ROWS = [10 / 7, 2 / 5, 4 / 3, 2 / 3]
P2_ROWS = [10 / np.sqrt(29), 2 / np.sqrt(13), 4 / np.sqrt(5), 2 / np.sqrt(5)]


def test_abs_gap_example(ex1, ex1_point):
    rep = rho(ex1, ex1_point, "abs")
    np.testing.assert_allclose([r.eps_norm for r in rep.per_row], ABS_ROWS)
    assert rep.rho == pytest.approx(1 - 0.4 / np.mean(ABS_ROWS))
    assert rep.rho == pytest.approx(0.5821, abs=1e-4)
    assert rep.rho_tilde == rep.rho


def test_p2_example(ex1, ex1_point):
    rep = rho(ex1, ex1_point, "p2")
    # every hyperplane projection lands on its facet here
    np.testing.assert_allclose([r.eps_norm for r in rep.per_row], P2_ROWS)
    np.testing.assert_allclose([r.eps_tilde_norm for r in rep.per_row], P2_ROWS)
    assert rep.rho == pytest.approx(0.5645, abs=1e-4)
    assert rep.rho_tilde == pytest.approx(rep.rho)
    assert rho_tilde(ex1, ex1_point, "p2") == pytest.approx(rep.rho_tilde)
    assert all(r.included_in_denominator for r in rep.per_row)


def test_face_restricted_row(ex1):
    rep = rho(ex1, [4, 1.5], "p2")
    row = rep.per_row[2]
    # slack 5.5 over sqrt(5), but the facet ends at (1.25, 1.5), 2.75 away
    assert row.eps_tilde_norm == pytest.approx(5.5 / np.sqrt(5))
    assert row.eps_norm == pytest.approx(2.75)
    assert rep.rho > rep.rho_tilde


def test_boundary_point_fits_perfectly(ex1):
    for norm in ("p1", "p2", "pinf", "abs", "rel"):
        assert rho(ex1, [5, 0], norm).rho == 1.0


def test_zero_denominator_convention():
    # a point on every row: the degenerate single-point polytope
    p = Polyhedron([[1, 0], [-1, 0], [0, 1], [0, -1]], [0, 0, 0, 0])
    rep = rho(p, [0, 0], "p2")
    assert rep.denominator == 0 and rep.rho == 1.0


@pytest.mark.parametrize("delta", [0.1, 0.3])
def test_example2_divergence(delta):
    limit = 2 * delta / (3 - delta)
    gaps = []
    for nu in (1e2, 1e4, 1e6):
        poly = Polyhedron([[1 / nu, 1 / delta], [1, 0], [0, 1]], [1, 0, 0])
        rep = rho(poly, [1, 1], "p2")
        gaps.append(abs(rep.rho_tilde - limit))
        assert rep.rho > rep.rho_tilde
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-4


def test_row_scaling_leaves_rho_unchanged(ex1, ex1_point):
    scaled = ex1.scaled([3.0, 0.2, 1.0, 9.0])
    for norm in ("p1", "p2", "pinf", "abs", "rel"):
        assert rho(scaled, ex1_point, norm).rho == pytest.approx(rho(ex1, ex1_point, norm).rho)


def test_gap_variants_have_equal_bounds():
    rng = np.random.default_rng(5)
    for _ in range(30):
        poly, x0 = random_polygon(rng)
        for norm in ("abs", "rel"):
            rep = rho(poly, x0, norm)
            assert rep.rho == pytest.approx(rep.rho_tilde, abs=1e-12)


def test_errors(ex1):
    with pytest.raises(InfeasiblePoint):
        rho(ex1, [0, 0], "p2")
    cube = Polyhedron(np.vstack([np.eye(3), -np.eye(3)]), [0, 0, 0, -1, -1, -1])
    with pytest.raises(DimensionUnsupported):
        rho_grid(cube, "p2", 5)
    # eps must vanish entirely, so no row can be reached from the interior
    ec = EpsConstraintSet(eq_rows=np.eye(2), eq_rhs=[0, 0])
    with pytest.raises(NoFeasibleProjection):
        rho(ex1, [2.5, 3], "p2", ec)


def test_empty_denominator():
    # wedge x1 >= |x2|, x1 <= 2; with c2 = 0 only c = (1, 0) remains, whose gap
    # at (1.5, 0) is 1.5 + 2 y_2 >= 1.5, above every row's own ratio (0.75, 0.75, 0.5)
    wedge = Polyhedron([[1, 1], [1, -1], [-1, 0]], [0, 0, -2])
    cc = CostConstraintSet(zero_pattern={1})
    rep = rho(wedge, [1.5, 0], "abs", cc)
    assert rep.loss_star == pytest.approx(1.5)
    with pytest.raises(EmptyDenominator):
        rho(wedge, [1.5, 0], "abs", cc, adjust_denominator=True)


def test_adjusted_denominator_cost_screen(ex1, ex1_point):
    # c >= 0 rules out rows 1 and 3 as standalone costs
    cc = CostConstraintSet(signs="nonneg", lower_bounds={0: 0.0, 1: 0.0})
    plain = rho(ex1, ex1_point, "abs", cc)
    adj = rho(ex1, ex1_point, "abs", cc, adjust_denominator=True)
    assert plain.loss_star == adj.loss_star == pytest.approx(4 / 3)
    included = [r.included_in_denominator for r in adj.per_row]
    assert included == [True, False, True, False]
    assert adj.denominator == pytest.approx(np.mean([10 / 7, 4 / 3]))
    assert plain.rho < adj.rho
    assert any("negative" in w for w in plain.warnings)


def test_adjusted_denominator_eps_screen(ex1, ex1_point):
    ec = EpsConstraintSet(eq_rows=[[1, 0]], eq_rhs=[0])
    rep = rho(ex1, ex1_point, "p2", ec, adjust_denominator=True)
    # vertical moves reach rows 0 and 1 only
    assert [r.included_in_denominator for r in rep.per_row] == [True, True, False, False]
    assert rep.denominator == pytest.approx(np.mean([2, 2 / 3]))
    assert rep.rho == pytest.approx(1 - (2 / 3) / np.mean([2, 2 / 3]))


def test_bounding_box(ex1):
    np.testing.assert_allclose(bounding_box(ex1), [[0.75, 5], [0, 4]], atol=1e-12)
    with pytest.raises(ValueError):
        bounding_box(Polyhedron([[1, 0], [0, 1]], [0, 0]))


def test_grid(ex1):
    pts = rho_grid(ex1, "p2", 12)
    assert 0 < len(pts) < 144
    # x2 varies fastest
    assert pts[0].x1 == pts[1].x1 and pts[0].x2 < pts[1].x2
    for g in pts:
        assert 0 <= g.rho_tilde <= g.rho + 1e-9 <= 1 + 1e-9
    # the vertex (5, 0) is a grid corner and fits perfectly
    assert any(g.x1 == 5 and g.x2 == 0 and g.rho == 1 for g in pts)
    text = grid_csv(pts, 6)
    lines = text.splitlines()
    assert lines[0] == "x1,x2,rho,rho_tilde"
    assert len(lines) == len(pts) + 1
    assert grid_csv(pts) == grid_csv(pts)
    assert float(io.StringIO(grid_csv(pts)).readlines()[1].split(",")[2]) == pts[0].rho


def test_radial_monotonicity(ex1):
    """rho does not decrease moving from the least-fitting point towards the boundary."""
    pts = rho_grid(ex1, "p2", 30)
    low = min(pts, key=lambda g: g.rho)
    # refine the grid minimum; rho is only piecewise smooth, so use a simplex search
    res = minimize(lambda x: rho(ex1, x, "p2").rho, [low.x1, low.x2], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12})
    centre = res.x
    targets = [[1.25, 1.5], [5, 0], [3, 4], [0.75, 2.5], [3.125, 0.75], [4, 2], [1.875, 3.25], [1, 2]]
    for t in targets:
        vals = [rho(ex1, centre + s * (np.array(t) - centre), "p2").rho for s in np.linspace(0, 1, 25)]
        assert np.all(np.diff(vals) >= -1e-9)
