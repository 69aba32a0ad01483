import math
from itertools import product

import numpy as np
import pytest

from dpmarg.errors import SizeGuardError, ValidationError
from dpmarg.geometry import (
    dp_direction_sampler,
    dual_norm_K_bruteforce,
    dual_norm_L,
    dual_norm_L0_bruteforce,
    estimate_width,
    gaussian_direction_sampler,
    sample_dp_vector,
)
from dpmarg.noise import make_rng
from dpmarg.queries import all_subset_tuples


def test_dp_vector_extremes():
    rng = make_rng(0)
    assert not np.any(sample_dp_vector(0.0, 500, rng))
    assert np.all(sample_dp_vector(1.0, 500, rng) != 0)


def test_dp_vector_symmetric_mean():
    rng = make_rng(1)
    draws = sample_dp_vector(0.5, 100_000, rng)
    assert abs(draws.mean()) <= 0.01
    assert abs((draws**2).mean() - 0.5) <= 0.01


def test_dp_vector_validation():
    with pytest.raises(ValidationError):
        sample_dp_vector(1.5, 10, make_rng(0))


def test_dual_norm_K_examples():
    assert dual_norm_K_bruteforce({(1, 2): 1.0}, 2, 2) == pytest.approx(1.0)
    w = {q: 1.0 for q in product((1, 2), repeat=2)}
    # independent check: enumerate the 4 assignments by hand
    best = max(
        abs(sum(e[i - 1] * e[j - 1] for (i, j) in w))
        for e in product((-1, 1), repeat=2)
    )
    assert best == 4
    assert dual_norm_K_bruteforce(w, 2, 2) == pytest.approx(4.0)
    assert dual_norm_K_bruteforce({(1, 2): 0.0}, 2, 2) == 0.0


def test_dual_norm_K_guard():
    with pytest.raises(SizeGuardError):
        dual_norm_K_bruteforce({(1, 2): 1.0}, 15, 2)


def test_dual_norm_L_examples():
    rng = make_rng(2)
    assert dual_norm_L({(1, 2): 1.0}, 2, 2, rng=rng) == pytest.approx(1.0, abs=1e-6)
    assert dual_norm_L({(1, 2): 0.0}, 2, 2, rng=rng) == pytest.approx(0.0, abs=1e-9)
    w = {q: 1.0 for q in product((1, 2), repeat=2)}
    assert dual_norm_L(w, 2, 2, rng=rng) >= dual_norm_K_bruteforce(w, 2, 2) - 1e-6


def test_containment_every_direction():
    rng = make_rng(3)
    d, k = 4, 2
    tuples = all_subset_tuples(d, k)
    for sampler in (
        gaussian_direction_sampler(tuples, rng),
        dp_direction_sampler(tuples, 0.4, rng),
    ):
        for _ in range(10):
            w = sampler()
            nk = dual_norm_K_bruteforce(w, d, k)
            nl = dual_norm_L(w, d, k, rng=rng)
            assert nk <= nl + 1e-6


def test_grothendieck_bound_per_direction():
    rng = make_rng(4)
    d, k = 3, 2
    tuples = [t for t in product(range(1, d + 1), repeat=k)]
    sampler = gaussian_direction_sampler(tuples, rng)
    for _ in range(10):
        w = sampler()
        nl = dual_norm_L(w, d, k, rng=rng)
        nl0 = dual_norm_L0_bruteforce(w, d, k)
        assert nl <= 1.783 * nl0 + 1e-6
        assert nl0 <= nl + 1e-6  # L0 is inside L


def test_estimate_width_constant_norm():
    est = estimate_width(lambda: {(1,): 1.0}, lambda w: 5.0, 50, body="stub")
    assert est.mean == 5.0
    assert est.stderr == 0.0
    assert est.samples == 50


def test_estimate_width_needs_two_samples():
    with pytest.raises(ValidationError):
        estimate_width(lambda: {}, lambda w: 0.0, 1)


def test_euclidean_ball_width_sanity():
    # dual norm of the unit ball is the euclidean norm; the Gaussian width of
    # the ball is E||g||_2, known in closed form
    rng = make_rng(5)
    m = 12
    tuples = [(i,) for i in range(1, m + 1)]
    sampler = gaussian_direction_sampler(tuples, rng)
    est = estimate_width(
        sampler,
        lambda w: float(np.linalg.norm(np.array(list(w.values())))),
        400,
        body="ball",
    )
    expect = math.sqrt(2.0) * math.gamma((m + 1) / 2.0) / math.gamma(m / 2.0)
    assert abs(est.mean - expect) <= 3.0 * est.stderr


def test_width_bound_tensor_hull_d4():
    # mean width of the scaled tensor hull at d=4 under uniform subset
    # weights stays within 1.1x of the analytic bound sqrt(d)
    rng = make_rng(6)
    d, k = 4, 2
    tuples = all_subset_tuples(d, k)
    sp = 1.0 / math.sqrt(len(tuples))

    def norm(w):
        return dual_norm_L0_bruteforce({q: sp * v for q, v in w.items()}, d, k)

    est = estimate_width(gaussian_direction_sampler(tuples, rng), norm, 200, body="L0")
    assert est.mean <= 1.1 * math.sqrt(d)


def test_dual_norm_L_stall_stats():
    rng = make_rng(7)
    stats = {}
    dual_norm_L({(1, 2): 1.0, (2, 1): -0.5}, 2, 2, rng=rng, stats=stats)
    assert stats["calls"] == 1
    assert "stalled_restarts" in stats
