import itertools
from collections import Counter

import numpy as np
import pytest

from conftest import build, random_library, responses_for
from pirlab.checker import check_correctness, check_privacy, check_scheme
from pirlab.errors import ConstructionCheckFailed, UnsupportedParameters, Undecodable
from pirlab.scheme import ResponseBundle
from pirlab.sun import SunScheme, plan_rounds, plan_two_messages, round_row_counts, sun_params, sun_row_count


@pytest.mark.parametrize("args,rows", [((2, 2, 1), 3), ((2, 3, 2), 5), ((3, 2, 1), 7)])
def test_row_count_examples(args, rows):
    assert sun_row_count(*args) == rows == sum(round_row_counts(*args))


@pytest.mark.parametrize("args,rows,downloads,L", [
    ((2, 2, 1), 3, 6, 4),
    ((2, 3, 2), 5, 15, 9),
    ((3, 2, 1), 7, 14, 8),
])
def test_download_examples(args, rows, downloads, L):
    s = SunScheme(*args)
    Q = s.query_gen(1, s.sample_randomness(np.random.default_rng(0)))
    assert Q.rows_per_server == rows
    assert Q.n_servers * Q.rows_per_server == downloads
    assert s.params.L == L
    assert not any(Q.is_zero(j) for j in range(Q.n_servers))


def _support_sizes(plan):
    return [Counter(len(row) for row in rows) for rows in plan]


@pytest.mark.parametrize("M,S", [(3, 2), (3, 3), (4, 2), (4, 3)])
def test_round_plan_counts(M, S):
    expect = round_row_counts(M, S, 1)
    for m in range(1, M + 1):
        for sizes in _support_sizes(plan_rounds(M, S, m)):
            assert [sizes[j] for j in range(1, M + 1)] == expect


@pytest.mark.parametrize("S,T", [(2, 1), (3, 1), (3, 2), (5, 3)])
def test_two_message_plan_counts(S, T):
    expect = round_row_counts(2, S, T)
    for sizes in _support_sizes(plan_two_messages(S, T, 1)):
        assert [sizes[1], sizes[2]] == expect


@pytest.mark.parametrize("M,S", [(3, 2), (3, 3), (4, 2)])
def test_round_plan_index_usage(M, S):
    L, d = S**M, S ** (M - 1)
    for m in range(1, M + 1):
        plan = plan_rounds(M, S, m)
        desired = [row[m] for rows in plan for row in rows if m in row]
        assert sorted(desired) == list(range(L))
        for k in range(1, M + 1):
            if k == m:
                continue
            for rows in plan:
                seen = [row[k] for row in rows if k in row]
                assert sorted(seen) == list(range(d))


def test_plan_shape_does_not_depend_on_m():
    for M, S in [(3, 2), (4, 2)]:
        shapes = {tuple(tuple(sorted(row)) for row in rows) for m in range(1, M + 1)
                  for rows in plan_rounds(M, S, m)}
        assert len(shapes) == 1


def test_redundant_fields():
    assert SunScheme(2, 2, 1, U=1, variant="robust").params.q == 7
    assert SunScheme(2, 2, 1, B=1, variant="byzantine").params.q == 8


@pytest.mark.parametrize("args", [
    dict(M=3, S=3, T=2),
    dict(M=5, S=2, T=1),
    dict(M=2, S=6, T=1),
    dict(M=3, S=2, T=1, U=1, variant="robust"),
    dict(M=2, S=3, T=2, B=1, variant="byzantine"),
])
def test_unsupported_points(args):
    with pytest.raises(UnsupportedParameters):
        sun_params(**args)


@pytest.mark.parametrize("label", ["sun-colluding-2-3-2", "sun-colluding-2-2-1", "sun-robust-2-2-1-U1"])
def test_capacity_conditions_100_seeds(label):
    report = check_scheme(build(label), 100, seed=17)
    assert report.passed, report.to_json()


def test_capacity_conditions_wider_grid():
    for args in [(2, 4, 3), (2, 5, 2), (3, 3, 1), (4, 2, 1)]:
        report = check_scheme(SunScheme(*args), 5, seed=1)
        assert report.passed, args
    report = check_scheme(SunScheme(2, 3, 1, B=1, variant="byzantine"), 5, seed=1)
    assert report.passed


def test_every_s_subset_decodes_byzantine():
    s = build("sun-byzantine-2-2-1-B1")
    Q = s.query_gen(2, s.sample_randomness(np.random.default_rng(4)))
    for subset in itertools.combinations(range(4), 2):
        assert check_correctness(Q, 2, s.params.L, subset).passed


def test_sampled_privacy_single_server():
    s = build("sun-colluding-2-2-1")
    v = check_privacy(s, budget=10_000, seed=3, view=(2, 2))
    assert v.result == "pass" and v.coverage == "sampled(10000)"


def test_row_permutation_invariance():
    s = build("sun-colluding-2-3-2")
    rng = np.random.default_rng(12)
    for _ in range(10):
        m = int(rng.integers(1, 3))
        W = random_library(s, rng)
        Q = s.query_gen(m, s.sample_randomness(rng))
        X = responses_for(s, Q, W)
        perms = [rng.permutation(Q.rows_per_server) for _ in range(Q.n_servers)]
        Qp = type(Q)(Q.params, Q.field, np.stack([Q.data[i][p] for i, p in enumerate(perms)]), Q.block_cols)
        Xp = [X[i][p] for i, p in enumerate(perms)]
        assert np.array_equal(s.decode(Qp, ResponseBundle(Xp), m), W.message(m))


def test_colluding_has_no_error_protection():
    s = build("sun-colluding-2-2-1")
    rng = np.random.default_rng(2)
    caught = 0
    for _ in range(20):
        m = 1
        W = random_library(s, rng)
        Q = s.query_gen(m, s.sample_randomness(rng))
        X = responses_for(s, Q, W)
        X[0] = s.field.add(X[0], np.array([1, 0, 0]))
        try:
            out = s.decode(Q, ResponseBundle(X), m)
        except Undecodable:
            caught += 1
            continue
        caught += not np.array_equal(out, W.message(m))
    assert caught == 20


def test_construction_tripwire(monkeypatch):
    s = SunScheme(2, 2, 1)
    broken = tuple(tuple({k: 0 for k in row} for row in rows) for rows in s.plan(1))
    monkeypatch.setattr(s, "plan", lambda m: broken)
    with pytest.raises(ConstructionCheckFailed):
        s.query_gen(1, s.sample_randomness(np.random.default_rng(0)))
