import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpmarg.errors import IncompleteInputError, InvalidQueryError, ValidationError
from dpmarg.queries import (
    MarginalQuery,
    QueryDistribution,
    RowDatabase,
    barak_coefficients,
    canonical_tuple,
    lift_distribution,
    marginal_eval,
    marginals_from_parities,
    parity_eval,
    reduced_index_set,
    true_marginal_answers,
    true_parity_answers,
    uniform_marginal_distribution,
)

ROW = np.array([1, -1, 1])


def test_parity_eval_examples():
    assert parity_eval(ROW, (1, 2)) == -1
    assert parity_eval(ROW, (2, 2)) == 1
    assert parity_eval(ROW, (0, 2)) == -1


def test_parity_eval_out_of_range():
    with pytest.raises(InvalidQueryError):
        parity_eval(ROW, (1, 4))


def test_marginal_eval_examples():
    row = np.array([1, -1])
    assert marginal_eval(row, MarginalQuery((1, 2), (1, -1))) == 1
    assert marginal_eval(row, MarginalQuery((1, 2), (1, 1))) == 0
    assert marginal_eval(np.array([1]), MarginalQuery((1,), (-1,))) == 0


def test_true_parity_answers_examples():
    db = RowDatabase(np.array([[1, -1, 1]]))
    assert true_parity_answers(db, [(1, 2)])[0] == -1
    db5 = RowDatabase(np.tile([[1, -1, 1]], (5, 1)))
    assert true_parity_answers(db5, [(1, 2)])[0] == -5
    empty = RowDatabase(np.zeros((0, 3), dtype=np.int8))
    assert true_parity_answers(empty, [(1, 2)])[0] == 0


def test_barak_coefficients_examples():
    c = barak_coefficients(MarginalQuery((1, 2), (1, 1)))
    assert c == {(): 0.25, (1,): 0.25, (2,): 0.25, (1, 2): 0.25}
    c = barak_coefficients(MarginalQuery((3,), (-1,)))
    assert c == {(): 0.5, (3,): -0.5}
    c = barak_coefficients(MarginalQuery((1, 2), (1, -1)))
    assert c == {(): 0.25, (1,): 0.25, (2,): -0.25, (1, 2): -0.25}


def test_marginals_from_parities_derived():
    # brute-force oracle: count matching rows directly
    for row in ([1, 1], [1, -1]):
        db = RowDatabase(np.array([row]))
        mq = MarginalQuery((1, 2), (1, 1))
        parities = {
            T: true_parity_answers(db, [canonical_tuple(T, 2)])[0]
            for T in [(), (1,), (2,), (1, 2)]
        }
        expect = sum(marginal_eval(r, mq) for r in db.rows)
        assert marginals_from_parities(parities, mq) == expect


def test_marginals_from_parities_zero_and_missing():
    mq = MarginalQuery((1, 3), (-1, 1))
    zeros = {T: 0.0 for T in barak_coefficients(mq)}
    assert marginals_from_parities(zeros, mq) == 0.0
    del zeros[(1, 3)]
    with pytest.raises(IncompleteInputError):
        marginals_from_parities(zeros, mq)


def test_lift_distribution_examples():
    point = {MarginalQuery((1, 2), (1, 1)): 1.0}
    lifted = lift_distribution(point, 2)
    assert lifted.weights == {
        (0, 0): 0.25,
        (0, 1): 0.25,
        (0, 2): 0.25,
        (1, 2): 0.25,
    }
    # beta does not change subset marginals
    from itertools import product

    all_beta = {MarginalQuery((1, 2), b): 0.25 for b in product((-1, 1), repeat=2)}
    assert lift_distribution(all_beta, 2).weights == lifted.weights


def test_lift_distribution_sums_to_one():
    rng = np.random.default_rng(0)
    marg = uniform_marginal_distribution(5, 2)
    # random reweighting
    w = rng.random(len(marg))
    w /= w.sum()
    marg = {mq: float(x) for mq, x in zip(marg, w)}
    lifted = lift_distribution(marg, 2)
    assert abs(sum(lifted.weights.values()) - 1.0) < 1e-12
    for q in lifted.weights:
        assert len(q) == 2 and all(0 <= i <= 5 for i in q)


def test_exactness_random_databases():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(1, 51))
        d = int(rng.integers(2, 9))
        k = int(rng.integers(1, min(3, d) + 1))
        db = RowDatabase(rng.choice(np.array([-1, 1], dtype=np.int8), size=(n, d)))
        S = tuple(sorted(rng.choice(np.arange(1, d + 1), size=k, replace=False).tolist()))
        beta = tuple(int(b) for b in rng.choice([-1, 1], size=k))
        mq = MarginalQuery(S, beta)
        parities = {
            T: true_parity_answers(db, [canonical_tuple(T, k)])[0]
            for T in barak_coefficients(mq)
        }
        truth = true_marginal_answers(db, [mq])[0]
        assert marginals_from_parities(parities, mq) == truth


def test_error_transfer_adversarial():
    rng = np.random.default_rng(3)
    lam = 0.5
    db = RowDatabase(rng.choice(np.array([-1, 1], dtype=np.int8), size=(10, 4)))
    mq = MarginalQuery((1, 3), (-1, 1))
    exact = {
        T: true_parity_answers(db, [canonical_tuple(T, 2)])[0]
        for T in barak_coefficients(mq)
    }
    truth = true_marginal_answers(db, [mq])[0]
    for _ in range(50):
        perturbed = {T: v + lam * rng.choice([-1, 1]) for T, v in exact.items()}
        err = abs(marginals_from_parities(perturbed, mq) - truth)
        assert err <= lam + 1e-12


@given(
    st.integers(min_value=1, max_value=6).flatmap(
        lambda d: st.tuples(
            st.just(d),
            st.lists(st.integers(min_value=0, max_value=d), min_size=1, max_size=4),
            st.lists(st.sampled_from([-1, 1]), min_size=6, max_size=6),
        )
    )
)
@settings(max_examples=200, deadline=None)
def test_multiplicity_reduction_identity(args):
    d, q, bits = args
    row = np.array(bits[:d])
    q = tuple(q)
    reduced = reduced_index_set(q)
    padded = canonical_tuple(reduced, len(q))
    assert parity_eval(row, q) == parity_eval(row, padded)


def test_row_database_validation():
    with pytest.raises(ValidationError):
        RowDatabase(np.array([[1, 0]]))
    db = RowDatabase(np.zeros((0, 0), dtype=np.int8))
    assert db.n == 0


def test_query_distribution_validation():
    with pytest.raises(ValidationError):
        QueryDistribution({(1, 2): 0.5}, 2)  # does not sum to 1
    with pytest.raises(InvalidQueryError):
        QueryDistribution({(1,): 1.0}, 2)
    p = QueryDistribution({(1, 2): 0.25, (2, 2): 0.75, (1, 1): 0.0}, 2)
    assert p.support == [(1, 2), (2, 2)]  # zero weights dropped
