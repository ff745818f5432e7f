import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statdisc import linalg, quadric
from statdisc.exceptions import InvalidInputError, PreconditionError
from statdisc.lab.generators import random_quadric
from statdisc.quadric import QuadricModel


def test_generating_examples(diag_quadric):
    assert quadric.validate(diag_quadric).generating
    assert not quadric.validate(QuadricModel([[[1.0]], [[2.0]]])).generating
    assert not quadric.validate(QuadricModel([np.zeros((2, 2))])).generating


def test_generating_reports_rank():
    cls = quadric.validate(QuadricModel([[[1.0]], [[2.0]]]))
    assert cls.generating_rank == 1


@pytest.mark.parametrize("mats, expected", [
    ([np.diag([1.0, 0.0])], False),
    ([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], True),
    ([np.eye(2)], True),
])
def test_levi_nondegenerate(mats, expected):
    assert quadric.levi_nondegenerate(QuadricModel(mats)) is expected


@pytest.mark.parametrize("mats, b, nondeg, pc", [
    ([np.diag([1.0, -1.0])], [1.0], True, False),
    ([np.diag([1.0, -1.0])], [0.0], False, False),
    ([np.eye(2), np.diag([1.0, -1.0])], [1.0, 0.0], True, True),
])
def test_strong_classes(mats, b, nondeg, pc):
    Q = QuadricModel(mats)
    assert quadric.strongly_nondegenerate_at(Q, b) is nondeg
    assert quadric.strongly_pseudoconvex_at(Q, b) is pc
    cls = quadric.validate(Q, b)
    assert cls.strongly_nondegenerate_at_b is nondeg
    assert cls.strongly_pseudoconvex_at_b is pc
    ok, smin = quadric.strongly_nondegenerate_at(Q, b, return_certificate=True)
    assert (smin > 0) is ok


def test_find_positive_combination_examples():
    b = quadric.find_positive_combination(QuadricModel([np.eye(2)]))
    assert b is not None and b[0] > 0
    assert quadric.find_positive_combination(QuadricModel([np.diag([1.0, -1.0])]),
                                             budget=20) is None
    b = quadric.find_positive_combination(
        QuadricModel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))
    assert b is not None and np.all(b > 0)


def test_find_positive_combination_traceless_never(rng):
    # a traceless tuple has no positive definite combination
    Q = random_quadric("strongly-nondeg-indefinite", 3, 2, seed=3)
    assert all(abs(np.trace(A)) < 1e-12 for A in Q.matrices)
    assert quadric.find_positive_combination(Q, budget=30) is None


def test_segre_rank_examples(diag_quadric):
    assert quadric.segre_rank(diag_quadric, [1, 1]) == 2
    assert quadric.segre_rank(diag_quadric, [1, 0]) == 1
    assert quadric.segre_rank(QuadricModel([np.eye(3)]), [0.6, 0.8j, 0]) == 1
    with pytest.raises(InvalidInputError):
        quadric.segre_rank(diag_quadric, [0, 0])


def test_generic_segre_rank_monotone_and_stable():
    Q = random_quadric("pseudoconvex", 3, 3, seed=11)
    r = [quadric.generic_segre_rank(Q, s, seed=4) for s in (1, 10, 100)]
    assert r[0] <= r[1] <= r[2]
    assert r[1] == r[2] == 3
    rank, V = quadric.generic_segre_rank(Q, 10, seed=4, return_witness=True)
    assert quadric.segre_rank(Q, V) == rank


def test_d_nondegenerate_examples(diag_quadric):
    ok, M = quadric.d_nondegenerate(diag_quadric, [1, 0], [1, 1])
    assert ok
    np.testing.assert_allclose(M, np.diag([2.0, 2.0]), atol=1e-14)
    ok, M = quadric.d_nondegenerate(diag_quadric, [1, 0], [1, 0])
    assert not ok
    np.testing.assert_allclose(M, np.ones((2, 2)), atol=1e-14)
    ok, M = quadric.d_nondegenerate(QuadricModel([[[1.0]]]), [1.0], [1.0])
    assert ok and M[0, 0] == pytest.approx(1.0)


def test_d_nondegenerate_needs_invertible_combination(diag_quadric):
    with pytest.raises(PreconditionError):
        quadric.d_nondegenerate(diag_quadric, [1, -1], [1, 1])


@given(st.sampled_from([(2, 1), (2, 2), (2, 3), (3, 2), (3, 3), (4, 3)]),
       st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_d_nondegenerate_implies_full_real_rank(nd, seed):
    n, d = nd
    rng = np.random.default_rng(seed)
    Q = random_quadric("pseudoconvex", n, d, seed)
    b = quadric.find_positive_combination(Q)
    V = linalg.random_unit_vector(rng, n)
    ok, _ = quadric.d_nondegenerate(Q, b, V)
    D0 = quadric.d0_matrix(Q, V)
    if ok:
        assert linalg.real_span_rank(list(D0.T)) == d
        if d <= 2:
            assert quadric.segre_rank(Q, V) == d


def test_d_nondegenerate_without_full_complex_rank():
    # d > n: the complex rank is at most n, yet the real certificate is invertible
    Q = random_quadric("pseudoconvex", 2, 3, seed=5)
    b = quadric.find_positive_combination(Q)
    ok, _ = quadric.d_nondegenerate(Q, b, [1, 0.3 + 0.7j])
    assert ok and quadric.segre_rank(Q, [1, 0.3 + 0.7j]) == 2


def test_normalize_examples():
    Q = QuadricModel([[[4.0]]])
    Qn, C = quadric.normalize(Q, [1.0])
    assert Qn.matrices[0][0, 0] == pytest.approx(1.0)
    assert C[0, 0] == pytest.approx(0.5)
    Qi, Ci = quadric.normalize(QuadricModel([np.eye(2), np.diag([1.0, -1.0])]), [1.0, 0.0])
    np.testing.assert_allclose(Ci, np.eye(2), atol=1e-15)


def test_normalize_residual(rng):
    for seed in range(10):
        Q = random_quadric("pseudoconvex", 4, 3, seed)
        c = quadric.find_positive_combination(Q, seed=seed)
        Qn, C = quadric.normalize(Q, c)
        assert np.linalg.norm(Qn.combination(c) - np.eye(4)) <= 1e-12
    with pytest.raises(PreconditionError):
        quadric.normalize(QuadricModel([np.diag([1.0, -1.0])]), [1.0])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_classifications_congruence_invariant(seed):
    rng = np.random.default_rng(seed)
    kind = ("pseudoconvex", "strongly-nondeg-indefinite", "levi-degenerate")[seed % 3]
    n = int(rng.integers(2, 5))
    d = int(rng.integers(1, 4))
    Q = random_quadric(kind, n, d, seed)
    C = linalg.random_congruence(rng, n, 10.0)
    Qc = Q.congruent(C)
    b = rng.standard_normal(d)
    V = linalg.random_unit_vector(rng, n)
    Vc = np.linalg.solve(C, V)
    c0, c1 = quadric.validate(Q, b), quadric.validate(Qc, b)
    for key in ("generating", "levi_nondegenerate", "strongly_nondegenerate_at_b",
                "strongly_pseudoconvex_at_b"):
        assert getattr(c0, key) == getattr(c1, key), key
    assert quadric.segre_rank(Q, V) == quadric.segre_rank(Qc, Vc)
    if c0.strongly_nondegenerate_at_b:
        assert quadric.d_nondegenerate(Q, b, V)[0] == quadric.d_nondegenerate(Qc, b, Vc)[0]


def test_pseudoconvex_implies_nondegenerate(rng):
    for seed in range(30):
        Q = random_quadric("pseudoconvex", 3, 2, seed)
        b = rng.standard_normal(2)
        if quadric.strongly_pseudoconvex_at(Q, b):
            assert quadric.strongly_nondegenerate_at(Q, b)


def test_json_round_trip_bit_exact(tmp_path):
    Q = random_quadric("pseudoconvex", 3, 2, seed=9)
    path = tmp_path / "q.json"
    Q.save(path)
    Q2 = QuadricModel.load(path)
    assert Q2 == Q
    assert Q2.dumps() == Q.dumps()
    doc = json.loads(path.read_text())
    assert set(doc) == {"n", "d", "matrices"}
    assert np.asarray(doc["matrices"]).shape == (2, 3, 3, 2)


def test_json_hermitian_checks():
    doc = {"n": 2, "d": 1, "matrices": [[[[1, 0], [0, 1e-12]], [[0, 0], [2, 0]]]]}
    Q = QuadricModel.from_dict(doc)
    assert np.array_equal(Q.matrices[0], Q.matrices[0].conj().T)
    bad = {"n": 2, "d": 1, "matrices": [[[[1, 0], [0, 1e-6]], [[0, 0], [2, 0]]]]}
    with pytest.raises(InvalidInputError):
        QuadricModel.from_dict(bad)
    with pytest.raises(InvalidInputError):
        QuadricModel.from_dict({"n": 2, "d": 2, "matrices": doc["matrices"]})


def test_matrices_read_only(diag_quadric):
    with pytest.raises(ValueError):
        diag_quadric.matrices[0][0, 0] = 5
