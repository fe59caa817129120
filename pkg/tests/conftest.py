import numpy as np
import pytest

from invfit.geometry import Polyhedron

# Results recorded by test_acceptance.py, printed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def ex1():
    """Quadrilateral with vertices (1.25, 1.5), (5, 0), (3, 4), (0.75, 2.5)."""
    return Polyhedron([[2, 5], [2, -3], [2, 1], [-2, -1]], [10, -6, 4, -10])


@pytest.fixture
def ex1_point():
    return np.array([2.5, 3.0])


def random_polygon(rng, m_lo=4, m_hi=8):
    """Bounded 2-D polygon containing a strictly interior random point.

    Rows are normals spread around the circle so the region is bounded.
    """
    m = int(rng.integers(m_lo, m_hi + 1))
    # jittered even spacing keeps every angular gap below pi
    angles = np.linspace(0, 2 * np.pi, m, endpoint=False) + rng.uniform(-0.3, 0.3, m)
    A = -np.column_stack([np.cos(angles), np.sin(angles)]) * rng.uniform(0.5, 3.0, (m, 1))
    x0 = rng.uniform(-2, 2, 2)
    b = A @ x0 - rng.uniform(0.2, 3.0, m)
    return Polyhedron(A, b), x0


def random_polytope_nonneg(rng, n=3, extra=4):
    """Polytope in the nonnegative orthant with a random interior point."""
    x0 = rng.uniform(0.3, 2.0, n)
    A = rng.normal(size=(extra, n))
    b = A @ x0 - rng.uniform(0.1, 2.0, extra)
    rows = np.vstack([A, np.eye(n), -np.ones((1, n))])
    rhs = np.concatenate([b, np.zeros(n), [-float(np.sum(x0)) - rng.uniform(0.5, 3.0)]])
    return Polyhedron(rows, rhs), x0


def polygon_vertices(poly):
    """Vertices of a bounded 2-D polygon by pairwise row intersection."""
    A, b = poly.rows, poly.rhs
    out = []
    for i in range(poly.m):
        for j in range(i + 1, poly.m):
            M = A[[i, j]]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            v = np.linalg.solve(M, b[[i, j]])
            if np.all(A @ v - b >= -1e-9):
                out.append(v)
    return np.array(out)


def face_segments(poly):
    """For each row the (start, end) of its edge, or None if it is not a facet."""
    verts = polygon_vertices(poly)
    segs = []
    for i in range(poly.m):
        on = verts[np.abs(verts @ poly.rows[i] - poly.rhs[i]) <= 1e-9]
        if len(on) < 1:
            segs.append(None)
            continue
        d = np.array([-poly.rows[i][1], poly.rows[i][0]])
        t = on @ d
        segs.append((on[np.argmin(t)], on[np.argmax(t)]))
    return segs
