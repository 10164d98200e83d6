from fractions import Fraction

import numpy as np
import pytest

from conftest import build
from pirlab.checker import check_capacity_robust_byz, check_privacy
from pirlab.errors import FieldTooSmall, Undecodable
from pirlab.mds import vandermonde
from pirlab.scheme import MessageLibrary, ResponseBundle
from pirlab.wang import WangScheme, wang_params, wang_variant_points

EXAMPLE_F = (np.array([[1], [2]]), np.array([[0], [1]]))


def test_example_queries():
    s = WangScheme(2, 3, 2)
    assert s.params.q == 3 and s.params.L == 1
    Q = s.query_gen(2, EXAMPLE_F)
    assert Q.data[:, 0, :].tolist() == [[1, 0], [0, 2], [2, 0]]


def test_example_has_two_zero_rows_in_desired_block():
    Q = WangScheme(2, 3, 2).query_gen(2, EXAMPLE_F)
    assert Q.block([2]).ravel().tolist() == [0, 2, 0]


def test_zero_noise_makes_first_server_silent():
    s = WangScheme(2, 3, 2)
    zero = (np.zeros((2, 1), dtype=np.int64),) * 2
    Q = s.query_gen(1, zero)
    assert Q.is_zero(0)
    assert not Q.is_zero(1)


def test_row_length():
    s = WangScheme(3, 4, 2)
    F = s.sample_randomness(np.random.default_rng(0))
    assert s.query_gen(3, F).server(0).shape == (1, 3 * 2)


def test_example_vandermonde_solve():
    s = WangScheme(2, 3, 2)
    gf = s.field
    Q = s.query_gen(2, EXAMPLE_F)
    for w1 in range(3):
        for w2 in range(3):
            W = MessageLibrary(gf, [[w1], [w2]])
            X = gf.matmul(Q.stack(), W.stacked())
            sol = gf.matmul(gf.inverse(s.V), X)
            assert sol.tolist() == [w1, (2 * w1 + w2) % 3, w2]
            assert s.decode(Q, ResponseBundle(list(X[:, None])), 2).tolist() == [w2]


def test_zero_noise_decodes_first_message():
    s = WangScheme(2, 4, 1)
    gf = s.field
    rng = np.random.default_rng(1)
    zero = tuple(np.zeros((1, 3), dtype=np.int64) for _ in range(2))
    Q = s.query_gen(1, zero)
    W = MessageLibrary.random(gf, 2, 3, rng)
    X = [gf.matmul(Q.server(i), W.stacked()) for i in range(4)]
    assert np.array_equal(s.decode(Q, ResponseBundle(X), 1), W.message(1))


def test_colluding_needs_everyone():
    s = WangScheme(2, 3, 2)
    Q = s.query_gen(1, EXAMPLE_F)
    with pytest.raises(Undecodable):
        s.decode(Q, ResponseBundle([np.array([0]), None, np.array([1])]), 1)


def test_variant_points():
    assert wang_variant_points(wang_params(2, 3, 2)) == (0, 1, 2)
    assert wang_variant_points(wang_params(2, 3, 1, U=1, variant="robust", q=5)) == (0, 1, 2, 3)
    assert len(wang_variant_points(wang_params(2, 2, 1, B=1, variant="byzantine", q=5))) == 4
    assert wang_params(2, 3, 1, U=1, variant="robust").q == 4


def test_field_too_small():
    with pytest.raises(FieldTooSmall):
        wang_params(2, 3, 1, U=1, variant="robust", q=3)


@pytest.mark.parametrize("args", [(2, 3, 2), (3, 4, 2), (2, 4, 1)])
def test_queries_are_vandermonde_times_design(args):
    s = WangScheme(*args)
    gf, p = s.field, s.params
    rng = np.random.default_rng(3)
    V = vandermonde(gf, s.points, p.S)
    for _ in range(20):
        F = s.sample_randomness(rng)
        m = int(rng.integers(1, p.M + 1))
        Q = s.query_gen(m, F)
        for k in range(1, p.M + 1):
            expect = gf.matmul(V[:, : p.T], F[k - 1])
            if k == m:
                expect = gf.add(expect, V[:, p.T :])
            assert np.array_equal(Q.block([k]), expect)


def test_exhaustive_privacy_counting():
    s = build("wang-colluding-2-3-2")
    v = check_privacy(s, budget=81)
    assert v.passed and v.coverage == "exhaustive"


def test_expected_downloads_by_enumeration():
    # every server's row is uniform on GF(3)^2, so each is silent w.p. 1/9
    s = build("wang-colluding-2-3-2")
    silent = sum(s.query_gen(m, F).is_zero(j) for m in (1, 2) for F in s.randomness for j in range(3))
    assert Fraction(silent, 162) == Fraction(1, 3)
    assert Fraction(1, 3 - Fraction(silent, 162)) == Fraction(3, 8)


def test_robust_capacity_fails_for_generic_noise():
    s = build("wang-robust-2-3-1-U1")
    rng = np.random.default_rng(0)
    v = check_capacity_robust_byz(s.query_gen(1, s.sample_randomness(rng)), 1, 3, 1)
    assert not v.passed
    w = v.parts["capacity_block_rank"].witnesses
    assert w and "servers" in w[0] and "I" in w[0]
