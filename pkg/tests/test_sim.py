import itertools
from fractions import Fraction

import numpy as np
import pytest

from conftest import build, random_library
from pirlab.errors import AnyTrialFailed, InvalidParameters
from pirlab.scheme import SchemeParams
from pirlab.sim import (
    AdversaryConfig,
    capacity_formula,
    exhaustive_adversaries,
    measure_rate,
    run_trial,
)
from pirlab.sun import SunScheme
from pirlab.wang import WangScheme


@pytest.mark.parametrize("params,value", [
    (SchemeParams(2, 2, 1, 0, 0, 4, 4), Fraction(2, 3)),
    (SchemeParams(2, 3, 2, 0, 0, 9, 9), Fraction(3, 5)),
    (SchemeParams(3, 2, 1, 0, 0, 8, 8), Fraction(4, 7)),
    (SchemeParams(2, 2, 1, 1, 0, 7, 4, "robust"), Fraction(2, 3)),
    (SchemeParams(2, 2, 1, 0, 1, 8, 4, "byzantine"), Fraction(1, 3)),
])
def test_capacity_formula(params, value):
    assert capacity_formula(params) == value


@pytest.mark.parametrize("M,S", [(2, 2), (3, 3), (4, 5)])
def test_byzantine_below_robust(M, S):
    rob = capacity_formula(SchemeParams(M, S, 1, 1, 0, 2, 1, "robust"))
    byz = capacity_formula(SchemeParams(M, S, 1, 0, 1, 2, 1, "byzantine"))
    assert byz < rob


def test_sun_colluding_trial():
    s = build("sun-colluding-2-2-1")
    rng = np.random.default_rng(0)
    r = run_trial(s, 1, random_library(s, rng), seed=1)
    assert r.decoded_ok and r.downloaded_symbols == 6


def test_sun_byzantine_trial_third_server_lies():
    s = build("sun-byzantine-2-2-1-B1")
    rng = np.random.default_rng(0)
    for seed in range(20):
        r = run_trial(s, 2, random_library(s, rng), AdversaryConfig(byzantine={2}), seed=seed)
        assert r.decoded_ok and r.downloaded_symbols == 12


def test_wang_silent_first_server():
    s = build("wang-colluding-2-3-2")
    F = (np.array([[0], [1]]), np.array([[0], [2]]))
    r = run_trial(s, 1, random_library(s, np.random.default_rng(0)), F=F)
    assert r.decoded_ok and r.downloaded_symbols == 2


def test_fixed_delta():
    s = build("sun-byzantine-2-2-1-B1")
    adv = AdversaryConfig(byzantine={0}, corruption="fixed", delta=(1, 0, 0))
    r = run_trial(s, 1, random_library(s, np.random.default_rng(4)), adv, seed=4)
    assert r.decoded_ok


def test_adversary_validation():
    with pytest.raises(InvalidParameters):
        AdversaryConfig(unresponsive={1}, byzantine={1})
    with pytest.raises(InvalidParameters):
        AdversaryConfig(corruption="fixed")
    s = build("sun-robust-2-2-1-U1")
    with pytest.raises(InvalidParameters):
        run_trial(s, 1, random_library(s, np.random.default_rng(0)), AdversaryConfig(unresponsive={0, 1}))


@pytest.mark.parametrize("label", ["wang-robust-2-3-1-U1", "wang-byzantine-2-2-1-B1",
                                   "sun-robust-2-2-1-U1", "sun-byzantine-2-2-1-B1"])
def test_every_admissible_adversary(label):
    s = build(label)
    rng = np.random.default_rng(5)
    for adv in exhaustive_adversaries(s.params):
        for seed in range(25):
            m = int(rng.integers(1, s.params.M + 1))
            assert run_trial(s, m, random_library(s, rng), adv, seed=seed).decoded_ok


@pytest.mark.parametrize("args,rate", [((2, 2, 1), Fraction(2, 3)), ((2, 3, 2), Fraction(3, 5)),
                                       ((3, 2, 1), Fraction(4, 7))])
def test_sun_rate_equals_capacity(args, rate):
    res = measure_rate(SunScheme(*args), 30, seed=2)
    assert res.empirical_rate == res.capacity == rate
    assert res.ratio == 1


def test_sun_byzantine_rate():
    s = build("sun-byzantine-2-2-1-B1")
    res = measure_rate(s, 30, seed=0, adversary=AdversaryConfig(selection="random"))
    assert res.empirical_rate == Fraction(1, 3)


def test_sun_robust_rate_with_random_drops():
    s = build("sun-robust-2-2-1-U1")
    res = measure_rate(s, 30, seed=0, adversary=AdversaryConfig(selection="random"))
    assert res.empirical_rate == Fraction(2, 3)


def test_rate_does_not_depend_on_library():
    s = build("wang-colluding-2-3-2")
    rng = np.random.default_rng(0)
    for seed in range(50):
        a = run_trial(s, 1, random_library(s, rng), seed=seed)
        b = run_trial(s, 1, random_library(s, rng), seed=seed)
        assert a.downloaded_symbols == b.downloaded_symbols


def test_wang_rate_matches_enumeration():
    # exact expected download is 8/3 symbols per retrieval (see test_wang)
    res = measure_rate(build("wang-colluding-2-3-2"), 20_000, seed=11)
    assert abs(float(res.empirical_rate) - 3 / 8) / (3 / 8) < 0.01


def test_threads_do_not_change_results():
    s = build("wang-colluding-3-4-2")
    a = measure_rate(s, 300, seed=9)
    b = measure_rate(s, 300, seed=9, threads=4)
    assert a.empirical_rate == b.empirical_rate
    assert a.trials_csv() == b.trials_csv()


def test_failed_trials_invalidate_measurement():
    class Broken(WangScheme):
        def decode(self, queries, responses, m):
            return np.zeros(self.params.L, dtype=np.int64) + 1

    with pytest.raises(AnyTrialFailed):
        measure_rate(Broken(2, 3, 2), 50, seed=0)


def test_outputs():
    res = measure_rate(build("sun-colluding-2-2-1"), 3, seed=5)
    lines = res.trials_csv().splitlines()
    assert lines[0] == "trial,m,downloaded,ok"
    assert len(lines) == 4 and all(l.endswith(",6,1") for l in lines[1:])
    summary = res.summary()
    assert summary["empirical_rate_exact"] == "2/3" and summary["n"] == 3 and summary["seed"] == 5
    assert res.summary_json() == measure_rate(build("sun-colluding-2-2-1"), 3, seed=5).summary_json()
