"""Retrieval trials with dropped or corrupted responses, and rate measurement.

A trial runs query -> response -> decode end to end against a random
library.  Download accounting counts transferred field symbols only: a
server whose query is all zero is never contacted (the user knows its answer
is zero), and an unresponsive server transfers nothing.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import AnyTrialFailed, InvalidParameters, PirError
from .scheme import LinearScheme, MessageLibrary, ResponseBundle, SchemeParams, Server


def capacity_formula(params: SchemeParams) -> Fraction:
    """Exact capacity of the scenario the parameters describe."""
    M, S, T = params.M, params.S, params.T
    if params.variant == "colluding":
        r = Fraction(T, S)
        return (1 - r) / (1 - r**M)
    robust = (1 - Fraction(1, S)) / (1 - Fraction(1, S) ** M)
    if params.variant == "robust":
        return robust
    return Fraction(S, S + 2 * params.B) * robust


@dataclass(frozen=True)
class AdversaryConfig:
    """Which servers drop out or lie, and how the lies are drawn.

    With ``selection="random"`` the sets are ignored and U (resp. B) servers
    are drawn per trial from the trial's generator.
    """

    unresponsive: frozenset = frozenset()
    byzantine: frozenset = frozenset()
    corruption: str = "random"
    delta: Optional[tuple] = None
    selection: str = "fixed"

    def __post_init__(self):
        object.__setattr__(self, "unresponsive", frozenset(self.unresponsive))
        object.__setattr__(self, "byzantine", frozenset(self.byzantine))
        if self.unresponsive & self.byzantine:
            raise InvalidParameters("a server cannot be both unresponsive and Byzantine")
        if self.corruption not in ("random", "fixed"):
            raise InvalidParameters(f"unknown corruption model {self.corruption!r}")
        if self.corruption == "fixed" and self.delta is None:
            raise InvalidParameters("fixed corruption needs a delta vector")
        if self.selection not in ("fixed", "random"):
            raise InvalidParameters(f"unknown selection {self.selection!r}")

    def realize(self, params: SchemeParams, rng) -> tuple[frozenset, frozenset]:
        if self.selection == "random":
            order = rng.permutation(params.N)
            return frozenset(int(j) for j in order[: params.U]), \
                frozenset(int(j) for j in order[params.U : params.U + params.B])
        if len(self.unresponsive) > params.U or len(self.byzantine) > params.B:
            raise InvalidParameters(f"adversary exceeds U={params.U}, B={params.B}")
        if any(not 0 <= j < params.N for j in self.unresponsive | self.byzantine):
            raise InvalidParameters("adversary names a server that does not exist")
        return self.unresponsive, self.byzantine


NO_ADVERSARY = AdversaryConfig()


@dataclass
class TrialResult:
    decoded_ok: bool
    downloaded_symbols: int
    m: int
    seed: object
    unresponsive: frozenset = frozenset()
    byzantine: frozenset = frozenset()
    reason: str = ""


def _corruption(adversary: AdversaryConfig, field, rows: int, rng) -> np.ndarray:
    if adversary.corruption == "fixed":
        return np.asarray(adversary.delta, dtype=np.int64).reshape(rows)
    while True:
        d = field.random(rng, rows)
        if d.any():
            return d


def run_trial(scheme: LinearScheme, m: int, W: MessageLibrary,
              adversary: AdversaryConfig = NO_ADVERSARY, seed=0, F=None) -> TrialResult:
    """One retrieval of W_m; F is drawn from ``seed`` unless given."""
    p = scheme.params
    rng = np.random.default_rng(seed)
    if F is None:
        F = scheme.sample_randomness(rng)
    silent, liars = adversary.realize(p, rng)
    Q = scheme.query_gen(m, F)
    zero_rows = np.zeros(Q.rows_per_server, dtype=np.int64)

    # servers the user tries, in ascending order; robust users stop after S answers
    responses: list = [None] * Q.n_servers
    downloaded, collected = 0, 0
    for j in range(Q.n_servers):
        if p.variant == "robust" and collected == p.S:
            break
        if Q.is_zero(j):
            responses[j] = zero_rows
            collected += 1
            continue
        if j in silent:
            continue
        x = Server(scheme.field, W).answer(Q.server(j))
        if j in liars:
            x = scheme.field.add(x, _corruption(adversary, scheme.field, Q.rows_per_server, rng))
        responses[j] = x
        downloaded += Q.rows_per_server
        collected += 1
    bundle = ResponseBundle(responses, downloaded)
    try:
        out = scheme.decode(Q, bundle, m)
    except PirError as exc:
        return TrialResult(False, downloaded, m, seed, silent, liars, f"{type(exc).__name__}: {exc}")
    ok = bool(np.array_equal(np.asarray(out).reshape(-1), W.message(m)))
    return TrialResult(ok, downloaded, m, seed, silent, liars, "" if ok else "wrong message")


@dataclass
class RateResult:
    empirical_rate: Fraction
    capacity: Fraction
    n: int
    seed: int
    trials: list = field(default_factory=list, repr=False)

    @property
    def ratio(self) -> Fraction:
        return self.empirical_rate / self.capacity

    def summary(self) -> dict:
        return {
            "empirical_rate": float(self.empirical_rate),
            "empirical_rate_exact": str(self.empirical_rate),
            "capacity": float(self.capacity),
            "capacity_exact": str(self.capacity),
            "ratio": float(self.ratio),
            "n": self.n,
            "seed": self.seed,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def trials_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "m", "downloaded", "ok"])
        for i, t in enumerate(self.trials):
            w.writerow([i, t.m, t.downloaded_symbols, int(t.decoded_ok)])
        return buf.getvalue()


def _one(scheme: LinearScheme, seed: int, i: int, adversary: AdversaryConfig) -> TrialResult:
    p = scheme.params
    rng = np.random.default_rng([seed, i])
    m = int(rng.integers(1, p.M + 1))
    W = MessageLibrary.random(scheme.field, p.M, p.L, rng)
    result = run_trial(scheme, m, W, adversary, seed=rng, F=None)
    result.seed = (seed, i)
    return result


def measure_rate(scheme: LinearScheme, trials: int, seed: int = 0, threads: int = 1,
                 adversary: AdversaryConfig = NO_ADVERSARY) -> RateResult:
    """L / mean download over ``trials`` trials with uniform random m.

    Trial i draws everything from ``default_rng([seed, i])``, so results do
    not depend on ``threads``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: _one(scheme, seed, i, adversary), range(trials)))
    else:
        results = [_one(scheme, seed, i, adversary) for i in range(trials)]
    failed = [r for r in results if not r.decoded_ok]
    if failed:
        raise AnyTrialFailed(f"{len(failed)} of {trials} trials failed; first: {failed[0].reason}")
    total = sum(r.downloaded_symbols for r in results)
    rate = Fraction(scheme.params.L * trials, total)
    return RateResult(rate, capacity_formula(scheme.params), trials, seed, results)


def exhaustive_adversaries(params: SchemeParams) -> list[AdversaryConfig]:
    """Every admissible drop set (size U) or corrupt set (size B)."""
    if params.variant == "robust":
        return [AdversaryConfig(unresponsive=s) for s in itertools.combinations(range(params.N), params.U)]
    if params.variant == "byzantine":
        return [AdversaryConfig(byzantine=s) for s in itertools.combinations(range(params.N), params.B)]
    return [NO_ADVERSARY]
