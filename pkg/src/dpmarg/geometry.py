"""Width estimation and the sparse-direction experiments: dual norms of the
parity-column hull and its relaxations, Monte Carlo mean widths, and the
three-valued sparse direction distribution."""

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import sdp as sdp_mod
from ._kernels import best_assignment
from .errors import SizeGuardError, ValidationError
from .queries import tuple_index_array, validate_query_index

DUAL_NORM_GUARD_D = 14


@dataclass
class WidthEstimate:
    mean: float
    stderr: float
    samples: int
    body: str = ""
    distribution: str = ""
    extras: dict = field(default_factory=dict)


def sample_dp_vector(p_param: float, m: int, rng: np.random.Generator) -> np.ndarray:
    """iid coordinates: +1 w.p. p/2, -1 w.p. p/2, 0 w.p. 1-p."""
    if not 0 <= p_param <= 1:
        raise ValidationError("p_param must lie in [0, 1]")
    u = rng.random(m)
    signs = np.where(rng.random(m) < 0.5, 1.0, -1.0)
    return np.where(u < p_param, signs, 0.0)


def _weights_to_arrays(w: Mapping, d: int, k: int):
    tuples = sorted(tuple(int(i) for i in q) for q in w)
    for q in tuples:
        validate_query_index(q, d, k)
    vals = np.array([float(w[q]) for q in tuples])
    return tuples, vals


def dual_norm_K_bruteforce(w: Mapping, d: int, k: int) -> float:
    """Width of the parity-column hull in direction w: the advantage over
    random of the best sign assignment, by enumerating all 2^d of them."""
    val, _, _ = best_assignment_K(w, d, k)
    return val


def best_assignment_K(w: Mapping, d: int, k: int):
    """(value, assignment, sign) of the best assignment for direction w."""
    if d > DUAL_NORM_GUARD_D:
        raise SizeGuardError(f"2^{d} assignments exceeds guard d <= {DUAL_NORM_GUARD_D}")
    tuples, vals = _weights_to_arrays(w, d, k)
    if not tuples:
        return 0.0, np.ones(d), 1.0
    idx = tuple_index_array(tuples, k)
    return best_assignment(idx, vals, d)


def dual_norm_L0_bruteforce(w: Mapping, d: int, k: int) -> float:
    """Width of the tensor-product hull: exact sign-vector maximization of the
    reshaped direction matrix (guarded enumeration over the smaller side)."""
    gm = sdp_mod.build_grothendieck_matrix(w, d, k)
    val, _, _ = sdp_mod.binary_maximize_bruteforce(gm)
    return val


def dual_norm_L(
    w: Mapping,
    d: int,
    k: int,
    settings: sdp_mod.SdpSettings | None = None,
    rng: np.random.Generator | None = None,
    k_warm_start: bool = True,
    stats: dict | None = None,
) -> float:
    """Width of the unit-vector relaxation in direction w via alternating
    maximization.

    When the assignment enumeration is affordable, the best parity column is
    supplied as an extra rank-1 warm start, which pins the result at or above
    the hull width (the containment check is then guaranteed per direction).
    """
    settings = settings or sdp_mod.SdpSettings()
    gm = sdp_mod.build_grothendieck_matrix(w, d, k)
    extra = []
    if k_warm_start and d <= DUAL_NORM_GUARD_D:
        _, e, sign = best_assignment_K(w, d, k)
        pt = sdp_mod.rank_one_from_assignment(e, d, k)
        u0 = pt.u[:, 0] * (1.0 if sign >= 0 else -1.0)
        extra.append((u0, pt.v[:, 0]))
    res = sdp_mod.sdp_maximize(gm, settings, rng, extra_inits=extra)
    if stats is not None:
        stats["stalled_restarts"] = stats.get("stalled_restarts", 0) + res.stalled_restarts
        stats["calls"] = stats.get("calls", 0) + 1
    return res.value


def estimate_width(
    direction_sampler: Callable[[], Mapping],
    dual_norm_fn: Callable[[Mapping], float],
    samples: int,
    body: str = "",
    distribution: str = "",
    extras: dict | None = None,
) -> WidthEstimate:
    """Monte Carlo mean width: average dual norm over sampled directions."""
    if samples < 2:
        raise ValidationError("need at least 2 samples for a stderr")
    vals = np.array([float(dual_norm_fn(direction_sampler())) for _ in range(samples)])
    return WidthEstimate(
        mean=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
        body=body,
        distribution=distribution,
        extras=extras or {},
    )


def gaussian_direction_sampler(tuples, rng: np.random.Generator, scale=None):
    """iid N(0,1) weights over the given tuples, optionally scaled per-tuple."""
    tuples = [tuple(q) for q in tuples]
    scale_arr = None if scale is None else np.asarray(scale, dtype=np.float64)

    def sample():
        g = rng.standard_normal(len(tuples))
        if scale_arr is not None:
            g = g * scale_arr
        return dict(zip(tuples, g))

    return sample


def dp_direction_sampler(tuples, p_param: float, rng: np.random.Generator):
    """Sparse three-valued weights over the given tuples."""
    tuples = [tuple(q) for q in tuples]

    def sample():
        g = sample_dp_vector(p_param, len(tuples), rng)
        return dict(zip(tuples, g))

    return sample
