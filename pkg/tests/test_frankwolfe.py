import numpy as np
import pytest

from dpmarg._kernels import fw_hull
from dpmarg.frankwolfe import Vertex, frank_wolfe, line_search


def hull_oracle(vertices):
    """Brute-force linear oracle over conv{+-vertices}."""
    V = np.asarray(vertices, dtype=np.float64)

    def oracle(u):
        scores = V @ u
        j = int(np.argmax(np.abs(scores)))
        sign = 1.0 if scores[j] >= 0 else -1.0
        return Vertex(point=sign * V[j], payload=(j, sign))

    return oracle


def exact_projection(vertices, r, iterations=200_000):
    # history-free kernel; same brute-force vertex oracle, long horizon
    return fw_hull(np.asarray(vertices, dtype=np.float64), r, iterations)


L1_VERTS = np.array([[1.0, 0.0], [0.0, 1.0]])


def test_line_search_examples():
    assert line_search(np.array([2.0, 0.0]), np.array([0.0, 0.0]), np.array([1.0, 0.0])) == 0.0
    assert line_search(np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == 0.5
    q = np.array([0.3, 0.4])
    assert line_search(np.array([1.0, 1.0]), q, q.copy()) == 0.0


def test_l1_ball_clamped_projection():
    res = frank_wolfe(hull_oracle(L1_VERTS), np.array([2.0, 0.0]), 50)
    np.testing.assert_allclose(res.point, [1.0, 0.0], atol=1e-6)


def test_feasible_start_is_fixed_point():
    r = np.array([0.0, 1.0])  # a vertex
    res = frank_wolfe(hull_oracle(L1_VERTS), r, 25)
    np.testing.assert_array_equal(res.point, r)
    assert all(g <= 1e-12 for g in res.gaps)


def test_interior_point_reached():
    r = np.array([0.3, 0.1])
    point = exact_projection(L1_VERTS, r, 20_000)
    np.testing.assert_allclose(point, r, atol=1e-4)


def test_monotone_residuals():
    rng = np.random.default_rng(4)
    for _ in range(10):
        verts = rng.standard_normal((12, 6))
        r = rng.standard_normal(6) * rng.uniform(0.5, 4.0)
        res = frank_wolfe(hull_oracle(verts), r, 60)
        resid = np.array(res.residuals)
        assert np.all(np.diff(resid) <= 1e-12)


def test_history_reconstruction_and_weights():
    rng = np.random.default_rng(9)
    verts = rng.standard_normal((20, 8))
    r = rng.standard_normal(8) * 2.0
    res = frank_wolfe(hull_oracle(verts), r, 200)
    assert abs(res.weights.sum() - 1.0) < 1e-9
    assert np.all(res.weights >= 0)
    assert len(res.weights) <= 201
    np.testing.assert_allclose(res.reconstruct(), res.point, atol=1e-6)


def test_gap_certificate_duality():
    # 2 * gap at q^(t-1) upper-bounds the squared-distance suboptimality
    rng = np.random.default_rng(21)
    for _ in range(5):
        verts = rng.standard_normal((16, 5))
        r = rng.standard_normal(5) * 3.0
        qstar = exact_projection(verts, r, 100_000)
        fstar = float(np.sum((r - qstar) ** 2))
        res = frank_wolfe(hull_oracle(verts), r, 50)
        for t, gap in enumerate(res.gaps):
            f_prev = res.residuals[t] ** 2
            assert 2.0 * gap >= f_prev - fstar - 1e-9


@pytest.mark.parametrize("T", [10, 100, 1000])
def test_convergence_bound_enumerable_bodies(T):
    # bodies with <= 64 enumerable vertices; diam convention: max euclidean norm
    rng = np.random.default_rng(33)
    for _ in range(5):
        nv = int(rng.integers(4, 33))
        dim = int(rng.integers(3, 9))
        verts = rng.standard_normal((nv, dim)) * rng.uniform(0.5, 3.0)
        R = float(np.max(np.linalg.norm(verts, axis=1)))
        y = verts[rng.integers(0, nv)] * rng.uniform(0, 1)
        r = y + rng.standard_normal(dim) * rng.uniform(0.1, 2.0) * R
        qstar = exact_projection(verts, r)
        fstar = float(np.sum((r - qstar) ** 2))
        res = frank_wolfe(hull_oracle(verts), r, T)
        fT = float(np.sum((r - res.point) ** 2))
        assert fT - fstar <= 4.0 * R * R / (T + 3) + 1e-9


def test_gap_tol_early_stop():
    res = frank_wolfe(hull_oracle(L1_VERTS), np.array([0.0, 1.0]), 500, gap_tol=1e-10)
    assert len(res.gaps) == 1  # already optimal at the start vertex


def test_iterations_validated():
    with pytest.raises(ValueError):
        frank_wolfe(hull_oracle(L1_VERTS), np.array([1.0, 0.0]), 0)
