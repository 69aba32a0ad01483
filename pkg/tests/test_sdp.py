import math
from itertools import product

import numpy as np
import pytest

from dpmarg.errors import SizeGuardError, ValidationError
from dpmarg.noise import make_rng
from dpmarg.queries import parity_eval
from dpmarg.sdp import (
    GrothendieckMatrix,
    LPoint,
    SdpSettings,
    binary_maximize_bruteforce,
    build_grothendieck_matrix,
    default_rank,
    l_point_eval,
    rank_one_from_assignment,
    sdp_maximize,
    split_query,
)


def gm_from_matrix(M):
    M = np.asarray(M, dtype=np.float64)
    rows = [(i,) for i in range(M.shape[0])]
    cols = [(j,) for j in range(M.shape[1])]
    return GrothendieckMatrix(M, rows, cols, d=max(M.shape) - 1, k=2)


def test_build_matrix_k2_reshape():
    d = 2
    g = {q: float(10 * q[0] + q[1]) for q in product(range(d + 1), repeat=2)}
    gm = build_grothendieck_matrix(g, d, 2)
    assert gm.matrix.shape == (3, 3)
    for i in range(3):
        for j in range(3):
            assert gm.matrix[i, j] == g[(i, j)]


def test_build_matrix_k3_shape():
    gm = build_grothendieck_matrix({(1, 2, 0): 1.0}, 2, 3)
    assert gm.matrix.shape == (3, 9)
    s, t = split_query((1, 2, 0))
    assert s == (1,) and t == (2, 0)
    assert gm.matrix[gm.row_index[(1,)], gm.col_index[(2, 0)]] == 1.0


def test_build_matrix_zero():
    gm = build_grothendieck_matrix({}, 2, 2)
    assert not np.any(gm.matrix)


def test_sdp_identity_value_two():
    res = sdp_maximize(gm_from_matrix(np.eye(2)), SdpSettings(restarts=5), make_rng(0))
    assert res.value == pytest.approx(2.0, abs=1e-7)
    # each term maximized at <u_i, v_i> = 1
    assert res.point.u[0] @ res.point.v[0] == pytest.approx(1.0, abs=1e-6)
    assert res.point.u[1] @ res.point.v[1] == pytest.approx(1.0, abs=1e-6)


def grid_oracle_2x2(G, steps=62_832):
    """Independent maximizer for 2x2 matrices: by rotation invariance fix
    v1 = (1, 0), sweep the angle of v2 at ~1e-4 resolution, and use the
    closed-form optimal u rows (normalized G v)."""
    best = -np.inf
    for phi in np.linspace(0.0, 2.0 * np.pi, steps, endpoint=False):
        V = np.array([[1.0, 0.0], [np.cos(phi), np.sin(phi)]])
        M = G @ V
        best = max(best, float(np.linalg.norm(M, axis=1).sum()))
    return best


def test_sdp_chsh_matrix_derived():
    G = np.array([[1.0, 1.0], [1.0, -1.0]])
    expected = grid_oracle_2x2(G)
    assert expected == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-6)
    res = sdp_maximize(gm_from_matrix(G), SdpSettings(restarts=10), make_rng(1))
    assert res.value == pytest.approx(expected, abs=1e-6)
    # binary maximum over the 16 sign pairs is 2
    best_signs = max(
        sum(G[i, j] * w[i] * z[j] for i in range(2) for j in range(2))
        for w in product((-1, 1), repeat=2)
        for z in product((-1, 1), repeat=2)
    )
    assert best_signs == 2
    bval, _, _ = binary_maximize_bruteforce(G)
    assert bval == pytest.approx(2.0)


def test_sdp_zero_matrix():
    res = sdp_maximize(gm_from_matrix(np.zeros((2, 3))), SdpSettings(restarts=3), make_rng(2))
    assert res.value == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(np.linalg.norm(res.point.u, axis=1), 1.0)


def test_binary_bruteforce_examples():
    val, w, z = binary_maximize_bruteforce(np.array([[1.0, 1.0], [1.0, -1.0]]))
    assert val == pytest.approx(2.0)
    assert w @ np.array([[1.0, 1.0], [1.0, -1.0]]) @ z == pytest.approx(2.0)
    for ell in (1, 3, 5):
        val, _, _ = binary_maximize_bruteforce(np.eye(ell))
        assert val == pytest.approx(float(ell))
    M = np.zeros((3, 4))
    M[1, 2] = 5.0
    val, _, _ = binary_maximize_bruteforce(M)
    assert val == pytest.approx(5.0)


def test_binary_bruteforce_guard():
    with pytest.raises(SizeGuardError):
        binary_maximize_bruteforce(np.zeros((14, 14)))


def test_nonfinite_rejected():
    M = np.array([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        sdp_maximize(gm_from_matrix(M), SdpSettings(restarts=2), make_rng(0))
    with pytest.raises(ValidationError):
        binary_maximize_bruteforce(M)


def test_l_point_eval_examples():
    u = np.array([[1.0, 0.0]])
    v_same = np.array([[1.0, 0.0]])
    v_orth = np.array([[0.0, 1.0]])
    ridx = {(0,): 0}
    cidx = {(0,): 0}
    assert l_point_eval(LPoint(u, v_same, ridx, cidx, 0, 2), (0, 0)) == pytest.approx(1.0)
    assert l_point_eval(LPoint(u, v_orth, ridx, cidx, 0, 2), (0, 0)) == pytest.approx(0.0)
    assert l_point_eval(LPoint(u, -v_same, ridx, cidx, 0, 2), (0, 0)) == pytest.approx(-1.0)


def test_l_point_eval_unknown_tuple_uses_canonical():
    u = np.array([[0.0, 1.0]])
    v = np.array([[1.0, 0.0]])
    pt = LPoint(u, v, {(0,): 0}, {(0,): 0}, 0, 2)
    # unknown row tuple pairs the canonical e1 against v
    assert pt.eval_split((9,), (0,)) == pytest.approx(1.0)


def test_feasibility_and_reeval():
    rng = make_rng(7)
    for _ in range(10):
        nr = int(rng.integers(2, 7))
        nc = int(rng.integers(2, 7))
        gm = gm_from_matrix(rng.standard_normal((nr, nc)))
        res = sdp_maximize(gm, SdpSettings(restarts=5), rng)
        np.testing.assert_allclose(np.linalg.norm(res.point.u, axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(np.linalg.norm(res.point.v, axis=1), 1.0, atol=1e-9)
        reeval = float(np.sum(gm.matrix * (res.point.u @ res.point.v.T)))
        assert abs(reeval - res.value) <= 1e-9


def test_grothendieck_sandwich_small():
    rng = make_rng(13)
    for _ in range(25):
        nr = int(rng.integers(2, 7))
        nc = int(rng.integers(2, 13 - nr))
        gm = gm_from_matrix(rng.standard_normal((nr, nc)))
        bval, _, _ = binary_maximize_bruteforce(gm.matrix)
        res = sdp_maximize(gm, SdpSettings(restarts=8), rng)
        assert res.value >= bval - 1e-9
        assert res.value <= 1.783 * bval + 1e-6


def test_block_update_monotone():
    # the closed-form block update never decreases the objective
    rng = make_rng(17)
    for _ in range(20):
        G = rng.standard_normal((5, 6))
        rank = 4
        U = rng.standard_normal((5, rank))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        V = rng.standard_normal((6, rank))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        before = np.sum(G * (U @ V.T))
        M = G @ V
        norms = np.linalg.norm(M, axis=1)
        U2 = np.where(norms[:, None] > 0, M / np.maximum(norms, 1e-300)[:, None], U)
        mid = np.sum(G * (U2 @ V.T))
        M = G.T @ U2
        norms = np.linalg.norm(M, axis=1)
        V2 = np.where(norms[:, None] > 0, M / np.maximum(norms, 1e-300)[:, None], V)
        after = np.sum(G * (U2 @ V2.T))
        assert mid >= before - 1e-12
        assert after >= mid - 1e-12


def test_containment_rank_one_reproduces_parity_columns():
    for d, k in ((2, 2), (3, 2), (4, 3), (3, 1)):
        for bits in range(2**d):
            e = np.array([1 if (bits >> i) & 1 else -1 for i in range(d)])
            pt = rank_one_from_assignment(e, d, k)
            for q in product(range(d + 1), repeat=k):
                expect = parity_eval(e, q)
                assert l_point_eval(pt, q) == pytest.approx(float(expect), abs=1e-12)


def test_default_rank():
    assert default_rank(1, 1) == 2
    assert default_rank(7, 7) == 7  # ceil(sqrt(28)) + 1 = 7
    assert default_rank(9, 9) == 7


def test_zero_rows_get_canonical_vector():
    M = np.zeros((3, 3))
    M[0, 0] = 1.0
    res = sdp_maximize(gm_from_matrix(M), SdpSettings(restarts=4), make_rng(3))
    e1 = np.zeros(res.point.rank)
    e1[0] = 1.0
    np.testing.assert_allclose(res.point.u[2], e1)
    np.testing.assert_allclose(res.point.v[2], e1)
    assert res.value == pytest.approx(1.0, abs=1e-7)
