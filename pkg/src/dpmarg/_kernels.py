"""Hot numeric kernels: numba-jitted loops with a pure-numpy fallback.

The numba path is used when numba imports cleanly; set the environment
variable ``DPMARG_DISABLE_NUMBA=1`` to force the numpy path (useful for
debugging and for the backend benchmark in ``benchmarks/``).

Kernels here are the inner loops that dominate runtime at desk scale:
  - Frank-Wolfe least squares onto the symmetric hull of enumerated vertices
    (used by the exact projection oracle, up to 1e5 iterations),
  - binary bilinear maximization over sign vectors (Grothendieck warm start),
  - best-assignment search over all 2^d sign assignments (dual norm of the
    parity-column hull).
"""

import os

import numpy as np


def _numba_requested() -> bool:
    flag = os.environ.get("DPMARG_DISABLE_NUMBA", "").strip().lower()
    if flag in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested()


# ---------------------------------------------------------------------------
# Frank-Wolfe onto conv{+-rows of V}
# ---------------------------------------------------------------------------

def _fw_hull_numpy(vertices, r, iterations):
    """Pure-numpy reference: FW least squares of r onto conv{+-vertices}."""
    scores = vertices @ r
    j = int(np.argmax(np.abs(scores)))
    sign = 1.0 if scores[j] >= 0 else -1.0
    q = sign * vertices[j].astype(np.float64)
    for _ in range(iterations):
        u = r - q
        scores = vertices @ u
        j = int(np.argmax(np.abs(scores)))
        sign = 1.0 if scores[j] >= 0 else -1.0
        v = sign * vertices[j]
        d = q - v
        denom = float(d @ d)
        if denom <= 0.0:
            continue
        alpha = float((r - v) @ d) / denom
        if alpha < 0.0:
            alpha = 0.0
        elif alpha > 1.0:
            alpha = 1.0
        q = alpha * q + (1.0 - alpha) * v
    return q


def _fw_hull_loop(vertices, r, iterations):
    m = r.shape[0]
    nv = vertices.shape[0]
    q = np.empty(m)
    best = -1.0
    bj = 0
    bs = 1.0
    for i in range(nv):
        s = 0.0
        for c in range(m):
            s += vertices[i, c] * r[c]
        a = abs(s)
        if a > best:
            best = a
            bj = i
            bs = 1.0 if s >= 0 else -1.0
    for c in range(m):
        q[c] = bs * vertices[bj, c]
    for _ in range(iterations):
        best = -1.0
        bj = 0
        bs = 1.0
        for i in range(nv):
            s = 0.0
            for c in range(m):
                s += vertices[i, c] * (r[c] - q[c])
            a = abs(s)
            if a > best:
                best = a
                bj = i
                bs = 1.0 if s >= 0 else -1.0
        denom = 0.0
        num = 0.0
        for c in range(m):
            vc = bs * vertices[bj, c]
            dc = q[c] - vc
            denom += dc * dc
            num += (r[c] - vc) * dc
        if denom <= 0.0:
            continue
        alpha = num / denom
        if alpha < 0.0:
            alpha = 0.0
        elif alpha > 1.0:
            alpha = 1.0
        for c in range(m):
            q[c] = alpha * q[c] + (1.0 - alpha) * bs * vertices[bj, c]
    return q


# ---------------------------------------------------------------------------
# max_{w,z in {+-1}} w^T G z, enumerating the smaller side
# ---------------------------------------------------------------------------

def _binary_bilinear_numpy(G):
    nr = G.shape[0]
    # all sign rows (2^nr, nr), bit i of the pattern -> sign of coordinate i
    bits = np.arange(2 ** nr, dtype=np.uint32)
    W = np.where((bits[:, None] >> np.arange(nr)) & 1, 1.0, -1.0)
    S = W @ G
    vals = np.abs(S).sum(axis=1)
    j = int(np.argmax(vals))
    w = W[j]
    z = np.where(S[j] >= 0, 1.0, -1.0)
    return float(vals[j]), w, z


def _binary_bilinear_loop(G):
    nr, nc = G.shape
    best = -1.0
    bestbits = 0
    for bits in range(2 ** nr):
        val = 0.0
        for t in range(nc):
            s = 0.0
            for i in range(nr):
                if (bits >> i) & 1:
                    s += G[i, t]
                else:
                    s -= G[i, t]
            val += abs(s)
        if val > best:
            best = val
            bestbits = bits
    w = np.empty(nr)
    for i in range(nr):
        w[i] = 1.0 if (bestbits >> i) & 1 else -1.0
    z = np.empty(nc)
    for t in range(nc):
        s = 0.0
        for i in range(nr):
            s += w[i] * G[i, t]
        z[t] = 1.0 if s >= 0 else -1.0
    return best, w, z


# ---------------------------------------------------------------------------
# max over e in {+-1}^d of |sum_q weights_q * prod_i e'[tuples[q, i]]|
# with e' = (+1, e) so index 0 is the constant attribute
# ---------------------------------------------------------------------------

def _best_assignment_numpy(tuple_idx, weights, d):
    n_assign = 2 ** d
    m, k = tuple_idx.shape
    best_val = -1.0
    best_bits = 0
    chunk = 4096
    for lo in range(0, n_assign, chunk):
        bits = np.arange(lo, min(lo + chunk, n_assign), dtype=np.uint64)
        E = np.ones((bits.shape[0], d + 1))
        E[:, 1:] = np.where((bits[:, None] >> np.arange(d, dtype=np.uint64)) & 1, 1.0, -1.0)
        cols = np.ones((bits.shape[0], m))
        for i in range(k):
            cols *= E[:, tuple_idx[:, i]]
        scores = cols @ weights
        j = int(np.argmax(np.abs(scores)))
        if abs(scores[j]) > best_val:
            best_val = float(abs(scores[j]))
            best_bits = int(bits[j])
            best_sign = 1.0 if scores[j] >= 0 else -1.0
    e = np.where((best_bits >> np.arange(d)) & 1, 1.0, -1.0)
    return best_val, e, best_sign


def _best_assignment_loop(tuple_idx, weights, d):
    m, k = tuple_idx.shape
    best_val = -1.0
    best_bits = 0
    best_sign = 1.0
    e = np.ones(d + 1)
    for bits in range(2 ** d):
        for i in range(d):
            e[i + 1] = 1.0 if (bits >> i) & 1 else -1.0
        s = 0.0
        for q in range(m):
            prod = weights[q]
            for i in range(k):
                prod *= e[tuple_idx[q, i]]
            s += prod
        a = abs(s)
        if a > best_val:
            best_val = a
            best_bits = bits
            best_sign = 1.0 if s >= 0 else -1.0
    eout = np.empty(d)
    for i in range(d):
        eout[i] = 1.0 if (best_bits >> i) & 1 else -1.0
    return best_val, eout, best_sign


if NUMBA_ENABLED:
    from numba import njit

    _fw_hull_jit = njit(cache=True)(_fw_hull_loop)
    _binary_bilinear_jit = njit(cache=True)(_binary_bilinear_loop)
    _best_assignment_jit = njit(cache=True)(_best_assignment_loop)


def fw_hull(vertices, r, iterations):
    """Run `iterations` Frank-Wolfe steps of least squares onto conv{+-rows}.

    vertices: (n_vertices, m) float array; r: (m,) target. Returns the final
    iterate. The first vertex is picked by maximizing <r, v>.
    """
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    r = np.ascontiguousarray(r, dtype=np.float64)
    if NUMBA_ENABLED:
        return _fw_hull_jit(vertices, r, iterations)
    return _fw_hull_numpy(vertices, r, iterations)


def binary_bilinear_max(G):
    """Exact max of w^T G z over sign vectors; enumerates the smaller side.

    Returns (value, w, z). Cost 2^min(rows, cols) * rows * cols.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    transpose = G.shape[0] > G.shape[1]
    A = np.ascontiguousarray(G.T) if transpose else G
    if NUMBA_ENABLED:
        val, w, z = _binary_bilinear_jit(A)
    else:
        val, w, z = _binary_bilinear_numpy(A)
    if transpose:
        w, z = z, w
    return val, w, z


def best_assignment(tuple_idx, weights, d):
    """Best sign assignment for a weighted family of parity tuples.

    tuple_idx: (m, k) int array with entries in [0, d] (0 = constant +1
    attribute); weights: (m,). Maximizes |sum_q weights_q * parity_q(e)| over
    e in {+-1}^d and returns (value, e, sign) where sign picks +-column.
    """
    tuple_idx = np.ascontiguousarray(tuple_idx, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if NUMBA_ENABLED:
        return _best_assignment_jit(tuple_idx, weights, d)
    return _best_assignment_numpy(tuple_idx, weights, d)
