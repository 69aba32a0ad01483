"""End-to-end release mechanism: Gaussian noise, Frank-Wolfe projection onto
the scaled relaxation via the alternating-maximization oracle, unscaling,
plus exact-hull testing oracles and error metrics."""

import math
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping

import numpy as np

from . import sdp as sdp_mod
from ._kernels import best_assignment, fw_hull
from .errors import SizeGuardError, ValidationError
from .frankwolfe import Vertex, frank_wolfe
from .noise import (
    PrivacyLedger,
    PrivacyParams,
    make_rng,
    noisy_scaled_answers,
    privacy_multiplier,
)
from .queries import QueryDistribution, RowDatabase, tuple_index_array

EXACT_PROJECTION_GUARD_D = 12


@dataclass
class RawPoint:
    """Convex combination of relaxation points underlying a release."""

    weights: np.ndarray
    lpoints: list
    n: int
    d: int
    k: int

    def eval(self, q) -> float:
        """n * sum_i weight_i * h_i(q)."""
        return self.n * float(
            sum(w * sdp_mod.l_point_eval(pt, q) for w, pt in zip(self.weights, self.lpoints))
        )


@dataclass
class ReleaseResult:
    answers: dict
    raw_point: RawPoint
    metadata: dict = field(default_factory=dict)
    ledger: PrivacyLedger | None = None


def _support_selectors(support, point_template):
    """Row/col catalog indices for each support tuple under the split convention."""
    rsel = np.empty(len(support), dtype=np.int64)
    csel = np.empty(len(support), dtype=np.int64)
    for i, q in enumerate(support):
        s, t = sdp_mod.split_query(q)
        rsel[i] = point_template.row_index[s]
        csel[i] = point_template.col_index[t]
    return rsel, csel


def make_sdp_oracle(support, sqrt_p, n, d, k, settings, rng):
    """Linear oracle over n * P^{1/2} L.

    Maximizing <u, n P^{1/2} h> over h in L equals n times the Grothendieck
    maximization of the matrix built from the reweighted direction
    g'_q = sqrt(p_q) * u_q.
    """
    lo, hi = sdp_mod.split_lengths(k)
    rows = sdp_mod.tuple_catalog(d, lo)
    cols = sdp_mod.tuple_catalog(d, hi)
    ridx = {t: i for i, t in enumerate(rows)}
    cidx = {t: i for i, t in enumerate(cols)}
    rsel = np.empty(len(support), dtype=np.int64)
    csel = np.empty(len(support), dtype=np.int64)
    for i, q in enumerate(support):
        s, t = sdp_mod.split_query(q)
        rsel[i] = ridx[s]
        csel[i] = cidx[t]

    def oracle(u):
        M = np.zeros((len(rows), len(cols)))
        M[rsel, csel] = sqrt_p * u
        gm = sdp_mod.GrothendieckMatrix(M, rows, cols, d, k, ridx, cidx)
        res = sdp_mod.sdp_maximize(gm, settings, rng)
        h = res.point.eval_many(rsel, csel)
        return Vertex(point=n * sqrt_p * h, payload=res.point)

    return oracle


def make_exact_oracle(support, sqrt_p, n, d, k):
    """Exact vertex oracle over n * P^{1/2} K by enumerating all 2^d assignments."""
    if d > EXACT_PROJECTION_GUARD_D:
        raise SizeGuardError(f"exact oracle enumerates 2^{d}; guard is d <= {EXACT_PROJECTION_GUARD_D}")
    idx = tuple_index_array(support, k)

    def oracle(u):
        _, e, sign = best_assignment(idx, n * sqrt_p * u, d)
        pt = sdp_mod.rank_one_from_assignment(e, d, k)
        if sign < 0:
            pt = sdp_mod.LPoint(-pt.u, pt.v, pt.row_index, pt.col_index, d, k)
        rsel, csel = _support_selectors(support, pt)
        h = pt.eval_many(rsel, csel)
        return Vertex(point=n * sqrt_p * h, payload=pt)

    return oracle


def default_iterations(n: int, d: int, k: int, pp: PrivacyParams) -> int:
    """Iteration budget T = ceil(4 n / (c(eps, delta) * (d+1)^{ceil(k/2)/2})).

    Uses diam <= 1 and the analytic width bound of the tensor hull as a
    stand-in for the relaxation's mean width; clamped to at least 1.
    """
    c = privacy_multiplier(pp)
    width = (d + 1) ** (math.ceil(k / 2) / 2)
    return max(1, math.ceil(4 * n / (c * width)))


def relaxed_projection_mechanism(
    db: RowDatabase,
    p: QueryDistribution,
    pp: PrivacyParams,
    T: int | None = None,
    rng: np.random.Generator | None = None,
    noise_multiplier: float | None = None,
    oracle_kind: str = "sdp",
    sdp_settings: sdp_mod.SdpSettings | None = None,
    ledger: PrivacyLedger | None = None,
    width_estimate_T: bool = False,
) -> ReleaseResult:
    """Noise-then-project release of the parity answers on supp(p).

    The noisy scaled answers are projected onto n * P^{1/2} L by T
    Frank-Wolfe iterations, then unscaled coordinatewise by p^{-1/2}
    (coordinates outside the support are not released; 0^{-1/2} = 0).
    Every released answer lies in [-n, n].
    """
    if db.n < 1:
        raise ValidationError("database must contain at least one row")
    if rng is None:
        rng = make_rng(0)
    ledger = ledger if ledger is not None else PrivacyLedger()
    k = p.k
    d = db.d
    n = db.n
    t_start = time.perf_counter()
    support, y_tilde = noisy_scaled_answers(
        db, p, pp, rng, ledger=ledger, noise_multiplier=noise_multiplier
    )
    sqrt_p = np.sqrt(p.weight_array(support))
    if T is None:
        if width_estimate_T:
            T = _width_estimate_iterations(support, sqrt_p, n, d, k, pp, rng)
        else:
            T = default_iterations(n, d, k, pp)
    settings = sdp_settings or sdp_mod.SdpSettings()
    if oracle_kind == "sdp":
        oracle = make_sdp_oracle(support, sqrt_p, n, d, k, settings, rng)
    elif oracle_kind == "exact":
        oracle = make_exact_oracle(support, sqrt_p, n, d, k)
    else:
        raise ValidationError(f"unknown oracle kind {oracle_kind!r}")
    it = frank_wolfe(oracle, y_tilde, T)
    y_bar = it.point
    answers = {q: float(y_bar[i] / sqrt_p[i]) for i, q in enumerate(support)}
    raw = RawPoint(weights=it.weights, lpoints=it.payloads, n=n, d=d, k=k)
    metadata = {
        "epsilon": pp.epsilon,
        "delta": pp.delta,
        "noise_multiplier": noise_multiplier,
        "iterations": T,
        "oracle": oracle_kind,
        "n": n,
        "d": d,
        "k": k,
        "support_size": len(support),
        "final_gap": it.gaps[-1] if it.gaps else None,
        "runtime_s": time.perf_counter() - t_start,
    }
    return ReleaseResult(answers=answers, raw_point=raw, metadata=metadata, ledger=ledger)


def _width_estimate_iterations(support, sqrt_p, n, d, k, pp, rng, samples=50):
    """Monte Carlo stand-in for the analytic width bound in the T formula."""
    from .geometry import dual_norm_L  # local import to avoid a cycle

    total = 0.0
    for _ in range(samples):
        g = rng.standard_normal(len(support))
        w = {q: sqrt_p[i] * g[i] for i, q in enumerate(support)}
        total += dual_norm_L(w, d, k, rng=rng)
    width = max(total / samples, 1e-9)
    c = privacy_multiplier(pp)
    return max(1, math.ceil(4 * n / (c * width)))


def exact_projection_K(
    y_tilde,
    n: int,
    p: QueryDistribution,
    d: int,
    k: int,
    iterations: int,
) -> np.ndarray:
    """Ground-truth projection onto n * P^{1/2} K via the enumerated vertex hull.

    Enumerates all 2^d sign assignments (guarded at d <= 12) and runs
    Frank-Wolfe for `iterations` steps; use iterations >= 1e5 when treating
    the output as the exact projection.
    """
    if d > EXACT_PROJECTION_GUARD_D:
        raise SizeGuardError(f"2^{d} vertex enumeration exceeds guard d <= {EXACT_PROJECTION_GUARD_D}")
    support = p.support
    y_tilde = np.asarray(y_tilde, dtype=np.float64)
    if y_tilde.shape[0] != len(support):
        raise ValidationError("y_tilde length does not match the support")
    sqrt_p = np.sqrt(p.weight_array(support))
    V = enumerate_scaled_columns(support, sqrt_p, n, d, k)
    return fw_hull(V, y_tilde, iterations)


def enumerate_scaled_columns(support, sqrt_p, n, d, k) -> np.ndarray:
    """All 2^d columns n * sqrt(p_q) * parity_q(e), one row per assignment."""
    idx = tuple_index_array(support, k)
    bits = np.arange(2**d, dtype=np.uint64)
    E = np.ones((bits.shape[0], d + 1))
    E[:, 1:] = np.where((bits[:, None] >> np.arange(d, dtype=np.uint64)) & 1, 1.0, -1.0)
    cols = np.ones((bits.shape[0], len(support)))
    for i in range(k):
        cols *= E[:, idx[:, i]]
    return cols * (n * sqrt_p)


def _aligned(p: QueryDistribution, values) -> np.ndarray:
    support = p.support
    if isinstance(values, Mapping):
        return np.array([float(values[q]) for q in support])
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != len(support):
        raise ValidationError("value vector length does not match the support")
    return values


def mse(p: QueryDistribution, y_true, y_hat) -> float:
    """Mean squared error weighted by p over its support."""
    yt = _aligned(p, y_true)
    yh = _aligned(p, y_hat)
    w = p.weight_array()
    return float(np.sum(w * (yt - yh) ** 2))


def root_mse(p: QueryDistribution, y_true, y_hat) -> float:
    return math.sqrt(mse(p, y_true, y_hat))


def worst_case_error(y_true, y_hat) -> float:
    """Max absolute error; accepts mappings with a shared key set or arrays."""
    if isinstance(y_true, Mapping) and isinstance(y_hat, Mapping):
        keys = set(y_true) | set(y_hat)
        return max(abs(float(y_true.get(q, 0.0)) - float(y_hat.get(q, 0.0))) for q in keys)
    yt = np.asarray(y_true, dtype=np.float64)
    yh = np.asarray(y_hat, dtype=np.float64)
    if yt.shape != yh.shape:
        raise ValidationError("mismatched shapes")
    if yt.size == 0:
        return 0.0
    return float(np.max(np.abs(yt - yh)))


# raw point (de)serialization -------------------------------------------------

def raw_point_to_dict(raw: RawPoint) -> dict:
    if not raw.lpoints:
        raise ValidationError("raw point has no relaxation points")
    first = raw.lpoints[0]
    row_tuples = sorted(first.row_index, key=first.row_index.get)
    col_tuples = sorted(first.col_index, key=first.col_index.get)
    return {
        "n": raw.n,
        "d": raw.d,
        "k": raw.k,
        "weights": [float(w) for w in raw.weights],
        "row_tuples": [list(t) for t in row_tuples],
        "col_tuples": [list(t) for t in col_tuples],
        "points": [
            {"u": pt.u.tolist(), "v": pt.v.tolist()} for pt in raw.lpoints
        ],
    }


def raw_point_from_dict(data: dict) -> RawPoint:
    row_tuples = [tuple(t) for t in data["row_tuples"]]
    col_tuples = [tuple(t) for t in data["col_tuples"]]
    ridx = {t: i for i, t in enumerate(row_tuples)}
    cidx = {t: i for i, t in enumerate(col_tuples)}
    pts = [
        sdp_mod.LPoint(
            np.asarray(p["u"], dtype=np.float64),
            np.asarray(p["v"], dtype=np.float64),
            ridx,
            cidx,
            int(data["d"]),
            int(data["k"]),
        )
        for p in data["points"]
    ]
    return RawPoint(
        weights=np.asarray(data["weights"], dtype=np.float64),
        lpoints=pts,
        n=int(data["n"]),
        d=int(data["d"]),
        k=int(data["k"]),
    )
