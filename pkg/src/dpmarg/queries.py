"""Universe and query representation: parity and marginal queries over
databases of {-1,+1} attribute vectors, the reduction between them, and
distribution lifting.

Conventions used throughout the package:
  - attributes are 1-indexed (1..d); index 0 is a reserved constant
    attribute that always evaluates to +1, so parities of any order <= k
    are expressible as k-tuples,
  - a parity query is a k-tuple over [0, d] ("QueryIndex"); the canonical
    tuple for a subset T is sorted(T) left-padded with zeros to length k.
"""

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import IncompleteInputError, InvalidQueryError, SizeGuardError, ValidationError

QueryIndex = tuple  # k ints in [0, d]

SUBSET_GUARD_K = 30  # 2^k subset enumeration guard
WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class RowDatabase:
    """n rows of d attributes, every entry exactly -1 or +1."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int8)
        if rows.ndim != 2:
            if rows.size == 0:
                rows = rows.reshape(0, 0)
            else:
                raise ValidationError("database rows must form a 2-D array")
        if rows.size and not np.all(np.abs(rows) == 1):
            raise ValidationError("database entries must be -1 or +1")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    def augmented(self) -> np.ndarray:
        """Rows with the constant +1 attribute prepended (column 0)."""
        return np.hstack([np.ones((self.n, 1), dtype=np.int8), self.rows])


@dataclass(frozen=True)
class MarginalQuery:
    """A k-way marginal: attribute set S with target signs beta."""

    S: tuple
    beta: tuple

    def __post_init__(self):
        S = tuple(int(i) for i in self.S)
        beta = tuple(int(b) for b in self.beta)
        if len(S) != len(set(S)):
            raise InvalidQueryError(f"marginal attribute set has repeats: {S}")
        if len(S) != len(beta):
            raise InvalidQueryError("S and beta must have equal length")
        if any(i < 1 for i in S):
            raise InvalidQueryError("marginal attributes are 1-indexed")
        if any(b not in (-1, 1) for b in beta):
            raise InvalidQueryError("beta entries must be -1 or +1")
        order = np.argsort(S)
        object.__setattr__(self, "S", tuple(S[i] for i in order))
        object.__setattr__(self, "beta", tuple(beta[i] for i in order))

    @property
    def k(self) -> int:
        return len(self.S)


@dataclass
class QueryDistribution:
    """Probability weights over parity query indices."""

    weights: dict
    k: int

    def __post_init__(self):
        cleaned = {}
        for q, w in self.weights.items():
            q = tuple(int(i) for i in q)
            if len(q) != self.k:
                raise InvalidQueryError(f"tuple {q} does not have length k={self.k}")
            w = float(w)
            if w < 0:
                raise ValidationError(f"negative weight for {q}")
            if w > 0:
                cleaned[q] = cleaned.get(q, 0.0) + w
        total = sum(cleaned.values())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError(f"weights sum to {total}, expected 1")
        self.weights = cleaned

    @property
    def support(self):
        """Sorted support tuples (the canonical coordinate order)."""
        return sorted(self.weights)

    def weight_array(self, support=None) -> np.ndarray:
        supp = self.support if support is None else support
        return np.array([self.weights[q] for q in supp])

    def validate_for(self, d: int):
        for q in self.weights:
            validate_query_index(q, d, self.k)


def validate_query_index(q, d: int, k: int | None = None):
    if k is not None and len(q) != k:
        raise InvalidQueryError(f"tuple {q} does not have length {k}")
    for i in q:
        if not 0 <= int(i) <= d:
            raise InvalidQueryError(f"tuple index {i} outside [0, {d}]")


def canonical_tuple(T: Iterable[int], k: int) -> tuple:
    """Canonical QueryIndex for subset T: sorted, zero-padded to length k."""
    T = sorted(int(i) for i in T)
    if len(T) > k:
        raise InvalidQueryError(f"subset {T} larger than k={k}")
    return (0,) * (k - len(T)) + tuple(T)


def reduced_index_set(q) -> tuple:
    """Indices of odd multiplicity in q (the parity q actually computes)."""
    counts = {}
    for i in q:
        if i != 0:
            counts[i] = counts.get(i, 0) + 1
    return tuple(sorted(i for i, c in counts.items() if c % 2 == 1))


def parity_eval(row, q) -> int:
    """Product of the row's attributes at the tuple positions (index 0 -> +1)."""
    row = np.asarray(row)
    d = row.shape[0]
    validate_query_index(q, d)
    out = 1
    for i in q:
        if i != 0:
            out *= int(row[i - 1])
    return out


def marginal_eval(row, m: MarginalQuery) -> int:
    """1 iff the row agrees with beta on all of S."""
    row = np.asarray(row)
    d = row.shape[0]
    for i in m.S:
        if i > d:
            raise InvalidQueryError(f"attribute {i} outside [1, {d}]")
    for i, b in zip(m.S, m.beta):
        if int(row[i - 1]) != b:
            return 0
    return 1


def tuple_index_array(queries: Sequence, k: int) -> np.ndarray:
    arr = np.zeros((len(queries), k), dtype=np.int64)
    for r, q in enumerate(queries):
        arr[r] = q
    return arr


def true_parity_answers(db: RowDatabase, queries: Sequence) -> np.ndarray:
    """Exact parity answers y_q = sum over rows of parity_eval(row, q).

    Works directly on the n rows, never enumerating the 2^d universe.
    """
    for q in queries:
        validate_query_index(q, db.d)
    if db.n == 0 or not len(queries):
        return np.zeros(len(queries))
    aug = db.augmented().astype(np.float64)
    idx = tuple_index_array(queries, len(queries[0]))
    prods = np.ones((db.n, len(queries)))
    for i in range(idx.shape[1]):
        prods *= aug[:, idx[:, i]]
    return prods.sum(axis=0)


def true_marginal_answers(db: RowDatabase, marginals: Sequence[MarginalQuery]) -> np.ndarray:
    """Brute-force marginal counts, one pass over rows per query."""
    out = np.zeros(len(marginals))
    for j, m in enumerate(marginals):
        out[j] = sum(marginal_eval(row, m) for row in db.rows)
    return out


def barak_coefficients(m: MarginalQuery) -> dict:
    """Coefficients alpha_{S,beta,T} = 2^-k * prod_{i in T} beta_i, T subseteq S.

    Keys are sorted subset tuples; 2^k entries.
    """
    k = m.k
    if k > SUBSET_GUARD_K:
        raise SizeGuardError(f"2^{k} subsets exceeds guard k <= {SUBSET_GUARD_K}")
    scale = 0.5**k
    beta_of = dict(zip(m.S, m.beta))
    coeffs = {}
    for size in range(k + 1):
        for T in combinations(m.S, size):
            prod = 1
            for i in T:
                prod *= beta_of[i]
            coeffs[T] = scale * prod
    return coeffs


def marginals_from_parities(parity_estimates: Mapping, m: MarginalQuery) -> float:
    """Reconstruct one marginal from parity estimates for every T subseteq S.

    If each estimate is within lambda of the true parity, the result is
    within lambda of the true marginal (coefficients sum to 1 in absolute
    value).
    """
    coeffs = barak_coefficients(m)
    z = 0.0
    for T, a in coeffs.items():
        if T not in parity_estimates:
            raise IncompleteInputError(f"missing parity estimate for subset {T}")
        z += a * float(parity_estimates[T])
    return z


def lift_distribution(p: Mapping[MarginalQuery, float], k: int) -> QueryDistribution:
    """Lift a marginal-query distribution to parities: p'(T) = sum 2^-k p(S,beta).

    Sampling view: draw (S, beta) from p, then a uniformly random subset
    T of S; T is encoded as its canonical padded tuple.
    """
    weights = {}
    scale = 0.5**k
    for mq, w in p.items():
        if mq.k != k:
            raise InvalidQueryError(f"marginal {mq} does not have k={k}")
        if w < 0:
            raise ValidationError("negative marginal weight")
        if w == 0:
            continue
        for size in range(k + 1):
            for T in combinations(mq.S, size):
                key = canonical_tuple(T, k)
                weights[key] = weights.get(key, 0.0) + w * scale
    return QueryDistribution(weights, k)


# distribution constructors ---------------------------------------------------

def uniform_grid_distribution(d: int, k: int) -> QueryDistribution:
    """Uniform over all d^k tuples in [1..d]^k (the expanded query matrix rows)."""
    tuples = list(product(range(1, d + 1), repeat=k))
    w = 1.0 / len(tuples)
    return QueryDistribution({t: w for t in tuples}, k)


def uniform_subset_distribution(d: int, k: int) -> QueryDistribution:
    """Uniform over the C(d, k) canonical tuples of k distinct attributes."""
    tuples = [tuple(c) for c in combinations(range(1, d + 1), k)]
    if not tuples:
        raise ValidationError(f"no size-{k} subsets of [1, {d}]")
    w = 1.0 / len(tuples)
    return QueryDistribution({t: w for t in tuples}, k)


def uniform_marginal_distribution(d: int, k: int) -> dict:
    """Uniform over all (S, beta) pairs: C(d,k) * 2^k marginal queries."""
    out = {}
    for S in combinations(range(1, d + 1), k):
        for beta in product((-1, 1), repeat=k):
            out[MarginalQuery(S, beta)] = 1.0
    if not out:
        raise ValidationError(f"no k={k} marginals at d={d}")
    total = len(out)
    return {mq: 1.0 / total for mq in out}


def all_subset_tuples(d: int, k: int):
    """Canonical tuples for all size-k attribute subsets."""
    return [tuple(c) for c in combinations(range(1, d + 1), k)]
