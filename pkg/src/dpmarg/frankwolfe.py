"""Conditional-gradient least squares over any convex body given as a
linear-maximization oracle, keeping the convex-combination history that
downstream compression needs."""

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

PRUNE_WEIGHT = 1e-12


@dataclass
class Vertex:
    """One oracle answer: the vertex point plus any certificate payload."""

    point: np.ndarray
    payload: Any = None


LinearOracle = Callable[[np.ndarray], Vertex]


@dataclass
class FWIterate:
    """Final iterate with its convex-combination history.

    weights are nonnegative and sum to 1; sum_i weights[i] * vertex_points[i]
    reconstructs `point` (up to pruning of weights below 1e-12).
    """

    point: np.ndarray
    weights: np.ndarray
    vertex_points: list
    payloads: list
    gaps: list = field(default_factory=list)
    residuals: list = field(default_factory=list)  # ||r - q|| after start and each step

    def reconstruct(self) -> np.ndarray:
        out = np.zeros_like(self.point)
        for w, v in zip(self.weights, self.vertex_points):
            out += w * v
        return out


def line_search(r, q, v) -> float:
    """argmin over alpha in [0,1] of ||r - alpha q - (1-alpha) v||^2.

    Closed form: clamp(<r - v, q - v> / ||q - v||^2); 0 when q == v.
    """
    r = np.asarray(r, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    d = q - v
    denom = float(d @ d)
    if denom <= 0.0:
        return 0.0
    return float(np.clip((r - v) @ d / denom, 0.0, 1.0))


def frank_wolfe(
    oracle: LinearOracle,
    r,
    iterations: int,
    start: Vertex | None = None,
    gap_tol: float | None = None,
) -> FWIterate:
    """Frank-Wolfe least squares of r onto the oracle's body.

    Starts from the oracle's maximizer in the direction of r (unless `start`
    is given). Each step maximizes <r - q, v> over the body, line-searches
    along the segment, and folds the step into the weight history. The FW
    gap <r - q, v - q> is logged per iteration; when gap_tol is set the loop
    stops early once the gap falls below it.
    """
    r = np.asarray(r, dtype=np.float64)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    v0 = oracle(r) if start is None else start
    q = np.array(v0.point, dtype=np.float64)
    weights = [1.0]
    vertex_points = [np.array(v0.point, dtype=np.float64)]
    payloads = [v0.payload]
    gaps = []
    residuals = [float(np.linalg.norm(r - q))]
    for _ in range(iterations):
        vert = oracle(r - q)
        v = np.asarray(vert.point, dtype=np.float64)
        gap = float((r - q) @ (v - q))
        gaps.append(gap)
        if gap_tol is not None and gap <= gap_tol:
            break
        alpha = line_search(r, q, v)
        q = alpha * q + (1.0 - alpha) * v
        residuals.append(float(np.linalg.norm(r - q)))
        weights = [alpha * w for w in weights]
        weights.append(1.0 - alpha)
        vertex_points.append(v)
        payloads.append(vert.payload)
        keep = [i for i, w in enumerate(weights) if w >= PRUNE_WEIGHT]
        if len(keep) < len(weights):
            weights = [weights[i] for i in keep]
            vertex_points = [vertex_points[i] for i in keep]
            payloads = [payloads[i] for i in keep]
        total = sum(weights)
        weights = [w / total for w in weights]
    return FWIterate(
        point=q,
        weights=np.array(weights),
        vertex_points=vertex_points,
        payloads=payloads,
        gaps=gaps,
        residuals=residuals,
    )
