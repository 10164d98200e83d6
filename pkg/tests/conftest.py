import numpy as np
import pytest

from pirlab.scheme import MessageLibrary
from pirlab.sun import SunScheme
from pirlab.wang import WangScheme

# (label, factory) for every implemented scheme at desk-scale parameters
SCHEME_POINTS = [
    ("wang-colluding-2-3-2", lambda: WangScheme(2, 3, 2)),
    ("wang-colluding-3-4-2", lambda: WangScheme(3, 4, 2)),
    ("wang-robust-2-3-1-U1", lambda: WangScheme(2, 3, 1, U=1, variant="robust")),
    ("wang-byzantine-2-2-1-B1", lambda: WangScheme(2, 2, 1, B=1, variant="byzantine")),
    ("sun-colluding-2-2-1", lambda: SunScheme(2, 2, 1)),
    ("sun-colluding-2-3-2", lambda: SunScheme(2, 3, 2)),
    ("sun-colluding-3-2-1", lambda: SunScheme(3, 2, 1)),
    ("sun-robust-2-2-1-U1", lambda: SunScheme(2, 2, 1, U=1, variant="robust")),
    ("sun-byzantine-2-2-1-B1", lambda: SunScheme(2, 2, 1, B=1, variant="byzantine")),
]

_cache = {}


def build(label):
    if label not in _cache:
        _cache[label] = dict(SCHEME_POINTS)[label]()
    return _cache[label]


@pytest.fixture(params=[label for label, _ in SCHEME_POINTS])
def scheme(request):
    return build(request.param)


def random_library(scheme, rng):
    p = scheme.params
    return MessageLibrary.random(scheme.field, p.M, p.L, rng)


def responses_for(scheme, Q, W):
    return [scheme.field.matmul(Q.server(i), W.stacked()) for i in range(Q.n_servers)]


_acceptance_lines = []


def record_acceptance(line):
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
