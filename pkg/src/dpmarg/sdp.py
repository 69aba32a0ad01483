"""The Grothendieck relaxation of the parity-column hull: reshape a direction
vector over k-tuples into a matrix, and approximately maximize
sum_{s,t} G'_{s,t} <u_s, v_t> over families of unit vectors.

Solver: block-coordinate alternating maximization in a Burer-Monteiro
factorization. Fixing the v's, each u_s <- normalize(sum_t G'_{s,t} v_t)
is the exact block optimum (and symmetrically), so the objective is
monotone per block update. Restarts plus a binary rank-1 warm start
guarantee the reported value is at least the best sign-vector value, and
feasibility guarantees it never exceeds the true SDP optimum.
"""

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping

import numpy as np

from ._kernels import binary_bilinear_max
from .errors import InvalidQueryError, SizeGuardError, ValidationError

BINARY_GUARD = 26  # rows + cols cap for sign enumeration
GROTHENDIECK_CONSTANT = 1.783


def split_lengths(k: int):
    """Row/column tuple lengths: floor(k/2) and ceil(k/2)."""
    return k // 2, k - k // 2


def split_query(q):
    k = len(q)
    lo, _ = split_lengths(k)
    return tuple(q[:lo]), tuple(q[lo:])


def tuple_catalog(d: int, length: int):
    """All tuples over [0..d] of the given length, lexicographic order."""
    return [tuple(t) for t in product(range(d + 1), repeat=length)]


@dataclass
class GrothendieckMatrix:
    """Direction vector over k-tuples reshaped as a (row tuple, col tuple) matrix."""

    matrix: np.ndarray
    row_tuples: list
    col_tuples: list
    d: int
    k: int
    row_index: dict = field(default_factory=dict)
    col_index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.row_index:
            self.row_index = {t: i for i, t in enumerate(self.row_tuples)}
        if not self.col_index:
            self.col_index = {t: i for i, t in enumerate(self.col_tuples)}


@dataclass
class LPoint:
    """A point of the relaxation: unit vector families indexed by split tuples."""

    u: np.ndarray  # (n_rows, rank)
    v: np.ndarray  # (n_cols, rank)
    row_index: dict
    col_index: dict
    d: int
    k: int

    @property
    def rank(self) -> int:
        return self.u.shape[1]

    def eval_split(self, s, t) -> float:
        ui = self.row_index.get(tuple(s))
        vi = self.col_index.get(tuple(t))
        if ui is None or vi is None:
            # tuples outside the catalog evaluate against the canonical
            # first-basis-direction unit vector
            e1 = np.zeros(self.rank)
            e1[0] = 1.0
            uu = self.u[ui] if ui is not None else e1
            vv = self.v[vi] if vi is not None else e1
            return float(uu @ vv)
        return float(self.u[ui] @ self.v[vi])

    def eval_many(self, rsel: np.ndarray, csel: np.ndarray) -> np.ndarray:
        return np.einsum("ij,ij->i", self.u[rsel], self.v[csel])


@dataclass
class SdpSettings:
    rank: int | None = None
    restarts: int = 20
    tol: float = 1e-7
    max_sweeps: int = 500
    warm_start: bool = True


@dataclass
class SdpResult:
    value: float
    point: LPoint
    stalled_restarts: int = 0
    binary_value: float | None = None


def default_rank(n_rows: int, n_cols: int) -> int:
    """Burer-Monteiro rank threshold; at least 2."""
    total = n_rows + n_cols
    return max(2, min(total, math.ceil(math.sqrt(2 * total)) + 1))


def build_grothendieck_matrix(g: Mapping, d: int, k: int) -> GrothendieckMatrix:
    """Reshape a tuple-indexed direction vector; absent tuples are zero."""
    lo, hi = split_lengths(k)
    rows = tuple_catalog(d, lo)
    cols = tuple_catalog(d, hi)
    ridx = {t: i for i, t in enumerate(rows)}
    cidx = {t: i for i, t in enumerate(cols)}
    M = np.zeros((len(rows), len(cols)))
    for q, val in g.items():
        q = tuple(int(i) for i in q)
        if len(q) != k:
            raise InvalidQueryError(f"tuple {q} does not have length k={k}")
        s, t = split_query(q)
        if s not in ridx or t not in cidx:
            raise InvalidQueryError(f"tuple {q} has indices outside [0, {d}]")
        M[ridx[s], cidx[t]] = float(val)
    return GrothendieckMatrix(M, rows, cols, d, k, ridx, cidx)


def binary_maximize_bruteforce(gm):
    """Exact max of w^T G' z over sign vectors.

    For fixed w the optimal z_t is sign((w^T G')_t), so only the smaller
    side is enumerated. Guarded at rows + cols <= 26.
    """
    M = gm.matrix if isinstance(gm, GrothendieckMatrix) else np.asarray(gm, dtype=np.float64)
    if M.shape[0] + M.shape[1] > BINARY_GUARD:
        raise SizeGuardError(
            f"rows + cols = {M.shape[0] + M.shape[1]} exceeds guard {BINARY_GUARD}"
        )
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix has non-finite entries")
    return binary_bilinear_max(M)


def _unit_rows(mat: np.ndarray, rng) -> np.ndarray:
    out = rng.standard_normal(mat.shape)
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    return out / norms


def _canonical_rows(n: int, rank: int) -> np.ndarray:
    out = np.zeros((n, rank))
    out[:, 0] = 1.0
    return out


def sdp_maximize(
    gm: GrothendieckMatrix,
    settings: SdpSettings | None = None,
    rng: np.random.Generator | None = None,
    extra_inits=(),
) -> SdpResult:
    """Best alternating-maximization value over restarts; feasible by construction.

    Restarts are settings.restarts - 1 random unit initializations plus one
    rank-1 warm start from the binary brute force when the size guard allows
    (the warm start pins value >= binary optimum). extra_inits takes
    additional (u, v) warm starts, e.g. a known feasible sign point.
    """
    settings = settings or SdpSettings()
    if rng is None:
        rng = np.random.default_rng(0)
    G = gm.matrix
    if not np.all(np.isfinite(G)):
        raise ValidationError("matrix has non-finite entries")
    nr, nc = G.shape
    rank = settings.rank or default_rank(nr, nc)
    if rank < 2:
        raise ValidationError("rank must be >= 2")
    if settings.restarts < 1:
        raise ValidationError("restarts must be >= 1")
    zero_rows = ~np.any(G != 0.0, axis=1)
    zero_cols = ~np.any(G != 0.0, axis=0)

    inits = []
    binary_value = None
    if settings.warm_start and nr + nc <= BINARY_GUARD:
        bval, w, z = binary_maximize_bruteforce(G)
        binary_value = bval
        U0 = np.zeros((nr, rank))
        V0 = np.zeros((nc, rank))
        U0[:, 0] = w
        V0[:, 0] = z
        inits.append((U0, V0))
    for u0, v0 in extra_inits:
        u0 = np.asarray(u0, dtype=np.float64)
        v0 = np.asarray(v0, dtype=np.float64)
        if u0.ndim == 1:
            U0 = np.zeros((nr, rank))
            V0 = np.zeros((nc, rank))
            U0[:, 0] = u0
            V0[:, 0] = v0
            inits.append((U0, V0))
        else:
            inits.append((u0[:, :rank].copy(), v0[:, :rank].copy()))
    n_random = max(settings.restarts - (1 if binary_value is not None else 0), 1)
    for _ in range(n_random):
        inits.append((_unit_rows(np.empty((nr, rank)), rng), _unit_rows(np.empty((nc, rank)), rng)))

    best_val = -np.inf
    best = None
    stalled = 0
    for U0, V0 in inits:
        U = U0.copy()
        V = V0.copy()
        U[zero_rows] = _canonical_rows(int(zero_rows.sum()), rank)
        V[zero_cols] = _canonical_rows(int(zero_cols.sum()), rank)
        prev = float(np.sum(G * (U @ V.T)))
        converged = False
        for _ in range(settings.max_sweeps):
            M = G @ V
            norms = np.linalg.norm(M, axis=1)
            upd = norms > 0
            U[upd] = M[upd] / norms[upd, None]
            M = G.T @ U
            norms = np.linalg.norm(M, axis=1)
            upd = norms > 0
            V[upd] = M[upd] / norms[upd, None]
            val = float(np.sum(G * (U @ V.T)))
            if val - prev < settings.tol * max(1.0, abs(val)):
                prev = val
                converged = True
                break
            prev = val
        if not converged:
            stalled += 1
        if prev > best_val:
            best_val = prev
            best = (U, V)
    U, V = best
    # restore exact unit norms and canonical vectors on untouched rows
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    U[zero_rows] = _canonical_rows(int(zero_rows.sum()), rank)
    V[zero_cols] = _canonical_rows(int(zero_cols.sum()), rank)
    point = LPoint(U, V, gm.row_index, gm.col_index, gm.d, gm.k)
    value = float(np.sum(G * (U @ V.T)))
    return SdpResult(value=value, point=point, stalled_restarts=stalled, binary_value=binary_value)


def l_point_eval(point: LPoint, q) -> float:
    """h_q = <u_s, v_t> for the fixed split q = s.t; in [-1, 1] by Cauchy-Schwarz."""
    s, t = split_query(tuple(q))
    return point.eval_split(s, t)


def rank_one_from_assignment(e, d: int, k: int) -> LPoint:
    """The rank-1 relaxation point matching the parity column of assignment e.

    e has d entries in {-1, +1}; with the constant attribute prepended, every
    split tuple maps to the scalar product of its entries, reproducing
    h_q = parity_q(e) exactly.
    """
    aug = np.concatenate([[1.0], np.asarray(e, dtype=np.float64)])
    lo, hi = split_lengths(k)
    rows = tuple_catalog(d, lo)
    cols = tuple_catalog(d, hi)
    U = np.zeros((len(rows), 2))
    V = np.zeros((len(cols), 2))
    for i, s in enumerate(rows):
        U[i, 0] = np.prod(aug[list(s)]) if s else 1.0
    for j, t in enumerate(cols):
        V[j, 0] = np.prod(aug[list(t)]) if t else 1.0
    return LPoint(
        U,
        V,
        {t: i for i, t in enumerate(rows)},
        {t: i for i, t in enumerate(cols)},
        d,
        k,
    )
