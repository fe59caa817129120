import itertools

import numpy as np
import pytest
from scipy.optimize import linprog as scipy_linprog

from conftest import face_segments, random_polygon
from invfit.errors import InfeasiblePoint, RelGapZeroRhs
from invfit.geometry import Norm, Polyhedron
from invfit.inverse import (
    classical_io_feasible,
    solve_absolute_gap_lp,
    solve_gio,
    solve_relative_gap_lp,
)

# Hand-derived for the quadrilateral at x_hat = (2.5, 3); slacks are (10, 2, 4, 2).
#   p1:   dual norms (5, 3, 2, 2)        -> row 1, eps = (0, -2/3)
#   p2:   dual norms (sqrt29, sqrt13, sqrt5, sqrt5) -> row 1, eps = (2/13)(2, -3)
#   pinf: dual norms (7, 5, 3, 3)        -> row 1, eps = 0.4 (1, -1)
#   rel:  |b| = (10, 6, 4, 10)           -> row 3, eps = 0.2 * (10/3) (-1, -1)
EX1 = {
    "p1": (1, [2.5, 3 + 2 / 3], 2 / 3),
    "p2": (1, [2.5 - 4 / 13, 3 + 6 / 13], 2 / np.sqrt(13)),
    "pinf": (1, [2.1, 3.4], 0.4),
    "abs": (1, [2.1, 3.4], 0.4),
    "rel": (3, [2.5 + 2 / 3, 3 + 2 / 3], 0.2),
}


@pytest.mark.parametrize("norm", list(EX1))
def test_example1(ex1, ex1_point, norm):
    i, x_star, loss = EX1[norm]
    sol = solve_gio(ex1, ex1_point, norm)
    assert sol.i_star == i
    np.testing.assert_allclose(sol.x_star, x_star, atol=1e-12)
    assert sol.loss == pytest.approx(loss, abs=1e-12)
    np.testing.assert_allclose(sol.c_star, ex1.rows[i] / np.abs(ex1.rows[i]).sum())
    # y* reproduces c*
    np.testing.assert_allclose(ex1.rows.T @ sol.y_star, sol.c_star, atol=1e-15)
    # x* sits on row i and inside the polyhedron
    assert ex1.rows[i] @ sol.x_star == pytest.approx(ex1.rhs[i])
    assert np.all(ex1.rows @ sol.x_star - ex1.rhs >= -1e-12)


def test_gap_values(ex1, ex1_point):
    assert solve_gio(ex1, ex1_point, "abs").gap_value == pytest.approx(0.4)
    # relative gap: a_3'x_hat / b_3 = (-8) / (-10)
    assert solve_gio(ex1, ex1_point, "rel").gap_value == pytest.approx(0.8)
    assert solve_gio(ex1, ex1_point, "p2").gap_value is None


def test_boundary_point_has_zero_loss(ex1):
    for norm in Norm:
        sol = solve_gio(ex1, [5, 0], norm)
        assert sol.loss == 0
        np.testing.assert_array_equal(sol.x_star, [5, 0])
    # (5, 0) is the vertex where rows 0 and 3 meet
    assert solve_gio(ex1, [5, 0], "p2").ties == (0, 3)


def test_errors(ex1):
    with pytest.raises(InfeasiblePoint):
        solve_gio(ex1, [0, 0], "p2")
    p = Polyhedron([[1, 0], [0, 1]], [0, 0])
    with pytest.raises(RelGapZeroRhs):
        solve_gio(p, [1, 1], "rel")
    # rows with b = 0 are skipped, not fatal
    q = Polyhedron([[1, 0], [0, 1]], [0, -1])
    assert solve_gio(q, [1, 1], "rel").i_star == 1


def test_classical_io(ex1):
    assert not classical_io_feasible(ex1, [2.5, 3])
    assert classical_io_feasible(ex1, [5, 0])


def _face_oracle_p(poly, x_hat, p):
    """min over rows of the smallest ||eps||_p reaching that row's face (scipy)."""
    n = poly.n
    best = np.inf
    for i in range(poly.m):
        k = n if p == 1 else 1
        T = np.eye(n) if p == 1 else np.ones((n, 1))
        A_ub = np.vstack([np.hstack([poly.rows, np.zeros((poly.m, k))]),
                          np.hstack([np.eye(n), -T]), np.hstack([-np.eye(n), -T])])
        b_ub = np.concatenate([poly.rows @ x_hat - poly.rhs, np.zeros(2 * n)])
        A_eq = np.hstack([poly.rows[i], np.zeros(k)])[None, :]
        r = scipy_linprog(np.r_[np.zeros(n), np.ones(k)], A_ub=A_ub, b_ub=b_ub, A_eq=A_eq,
                          b_eq=[poly.rows[i] @ x_hat - poly.rhs[i]],
                          bounds=[(None, None)] * n + [(0, None)] * k, method="highs")
        if r.status == 0:
            best = min(best, r.fun)
    return best


def _boundary_sampling_p2(poly, x_hat, samples=20001):
    best = np.inf
    t = np.linspace(0, 1, samples)[:, None]
    for seg in face_segments(poly):
        if seg is None:
            continue
        pts = seg[0] + t * (seg[1] - seg[0])
        best = min(best, float(np.min(np.linalg.norm(pts - x_hat, axis=1))))
    return best


def _abs_gap_oracle(poly, x_hat):
    """Absolute-gap model over every sign orthant with scipy."""
    m, n = poly.m, poly.n
    best = np.inf
    for s in itertools.product((1, -1), repeat=n):
        A_eq = np.vstack([np.hstack([poly.rows.T, -np.eye(n)]), np.r_[np.zeros(m), s]])
        r = scipy_linprog(np.r_[-poly.rhs, x_hat], A_eq=A_eq, b_eq=np.r_[np.zeros(n), 1],
                          bounds=[(0, None)] * m + [(0, None) if v > 0 else (None, 0) for v in s],
                          method="highs")
        if r.status == 0:
            best = min(best, r.fun)
    return best


def test_random_polygons_against_oracles():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        poly, x0 = random_polygon(rng)
        assert solve_gio(poly, x0, "p1").loss == pytest.approx(_face_oracle_p(poly, x0, 1), abs=1e-8)
        assert solve_gio(poly, x0, "pinf").loss == pytest.approx(_face_oracle_p(poly, x0, np.inf), abs=1e-8)
        assert solve_gio(poly, x0, "p2").loss == pytest.approx(_boundary_sampling_p2(poly, x0), abs=1e-3)
        assert solve_gio(poly, x0, "abs").loss == pytest.approx(_abs_gap_oracle(poly, x0), abs=1e-8)


def test_lp_routes_match_closed_form():
    rng = np.random.default_rng(7)
    for _ in range(60):
        poly, x0 = random_polygon(rng)
        a = solve_gio(poly, x0, "abs")
        assert solve_absolute_gap_lp(poly, x0).loss == pytest.approx(a.loss, abs=1e-9)
        r = solve_gio(poly, x0, "rel")
        lp = solve_relative_gap_lp(poly, x0)
        assert lp.loss == pytest.approx(r.loss, abs=1e-9)
        assert abs(lp.c_star).sum() == pytest.approx(1.0)


def test_lp_route_with_given_signs(ex1, ex1_point):
    sol = solve_absolute_gap_lp(ex1, ex1_point, signs=[1, -1])
    assert sol.loss == pytest.approx(0.4)
    sol = solve_absolute_gap_lp(ex1, ex1_point, signs=[1, 1])
    # best nonnegative cost: row 3 (2, 1) with gap 4/3
    assert sol.loss == pytest.approx(4 / 3)


def test_row_scaling_invariance(ex1, ex1_point):
    f = np.array([0.5, 3.0, 7.0, 0.1])
    scaled = ex1.scaled(f)
    for norm in Norm:
        a = solve_gio(ex1, ex1_point, norm)
        b = solve_gio(scaled, ex1_point, norm)
        assert a.i_star == b.i_star
        assert a.loss == pytest.approx(b.loss, rel=1e-12)
        np.testing.assert_allclose(a.c_star, b.c_star)


def test_to_dict_round_trips(ex1, ex1_point):
    d = solve_gio(ex1, ex1_point, "p2").to_dict()
    assert d["norm"] == "p2"
    assert d["i_star"] == 1
    assert len(d["x_star"]) == 2


def test_relative_gap_point_moved_onto_face():
    # rows x2 >= -2, x1 + 2 x2 >= 1, x1 - 2 x2 >= 1; ratios slack/|b| = (1, 2, 2)
    poly = Polyhedron([[0, 1], [1, 2], [1, -2]], [-2, 1, 1])
    sol = solve_gio(poly, [3, 0], "rel")
    assert sol.i_star == 0 and sol.loss == pytest.approx(1.0)
    # the straight drop to (3, -2) breaks row 1; the face x2 = -2 starts at x1 = 5
    np.testing.assert_allclose(sol.x_star, [5, -2], atol=1e-12)
    np.testing.assert_allclose(sol.eps_star, [-2, 2], atol=1e-12)
    # the LP route lands on the same face
    lp = solve_relative_gap_lp(poly, [3, 0])
    assert lp.loss == pytest.approx(1.0)
    assert np.all(poly.rows @ lp.x_star - poly.rhs >= -1e-9)
    assert lp.x_star[1] == pytest.approx(-2)


def test_relative_gap_prefers_reachable_tied_row():
    # rows 1 (x2 >= -2, redundant) and 2 tie at ratio 1.5
    poly = Polyhedron([[0, 1], [0, 1], [2, -1]], [-1, -2, -2])
    sol = solve_gio(poly, [1, 1], "rel")
    assert sol.ties == (1, 2)
    assert sol.i_star == 2
    np.testing.assert_allclose(sol.x_star, [0, 2], atol=1e-12)


def test_relative_gap_redundant_row_limit():
    # x2 >= -3 is redundant yet has the smaller ratio (4/3 against 2); its
    # face misses the polyhedron, so no feasible x* lies on it
    poly = Polyhedron([[0, 1], [0, 1]], [-1, -3])
    sol = solve_gio(poly, [0, 1], "rel")
    assert sol.i_star == 1 and sol.loss == pytest.approx(4 / 3)
    assert sol.gap_value == pytest.approx(-1 / 3)
    np.testing.assert_allclose(sol.x_star, [0, -3])
    assert poly.rows[0] @ sol.x_star < poly.rhs[0]
