"""Executable verdicts for correctness, privacy and capacity of linear PIR.

Every check works on concrete query realizations.  A scheme-level verdict
quantifies over all (or all sampled) randomness realizations and fails on the
first counterexample; witnesses record where.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import BudgetTooSmall, DimensionMismatch
from .scheme import LinearScheme, QuerySet, canonical_hash

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
CONDITIONS = ("correctness", "privacy", "capacity_block_rank", "capacity_interference_rank")
MAX_WITNESSES = 20


@dataclass
class Verdict:
    condition: str
    result: str
    witnesses: list = field(default_factory=list)
    coverage: str = "exhaustive"
    decoder: Optional[np.ndarray] = field(default=None, repr=False)
    parts: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return self.result == PASS


@dataclass(frozen=True)
class SubsetQuantifier:
    """Which server subsets a privacy or capacity statement ranges over."""

    mode: str
    size: int = 1

    def subsets(self, n_servers: int) -> list[tuple[int, ...]]:
        if self.mode == "single_server":
            return [(j,) for j in range(n_servers)]
        if self.mode in ("all_T_subsets", "all_S_subsets_of"):
            if not 1 <= self.size <= n_servers:
                raise ValueError(f"subset size {self.size} outside [1, {n_servers}]")
            return list(itertools.combinations(range(n_servers), self.size))
        raise ValueError(f"unknown quantifier mode {self.mode!r}")


def selector(M: int, L: int, m: int) -> np.ndarray:
    """The L x ML matrix with an identity in block m and zeros elsewhere."""
    E = np.zeros((L, M * L), dtype=np.int64)
    E[:, (m - 1) * L : m * L] = np.eye(L, dtype=np.int64)
    return E


# -- correctness --------------------------------------------------------------

def check_correctness(Q: QuerySet, m: int, L: int, server_subset: Optional[Sequence[int]] = None) -> Verdict:
    """Pass iff the selector rows lie in the row space of the stacked queries."""
    if Q.block_cols != L:
        raise DimensionMismatch(f"query blocks have {Q.block_cols} columns, L={L}")
    subset = list(range(Q.n_servers)) if server_subset is None else list(server_subset)
    A = Q.stack(subset)
    target = selector(Q.params.M, L, m)
    D = Q.field.solve_left(A, target)
    if D is not None:
        return Verdict("correctness", PASS, decoder=D)
    gf = Q.field
    witness = {
        "m": m,
        "servers": subset,
        "rank_queries": gf.rank(A),
        "rank_with_selector": gf.rank(np.concatenate([A, target])),
    }
    return Verdict("correctness", FAIL, [witness])


# -- capacity -----------------------------------------------------------------

def _index_sets(M: int, m: int):
    """Every I = complement of a subset of [1:M] minus {m}; I always holds m."""
    others = [k for k in range(1, M + 1) if k != m]
    for r in range(len(others) + 1):
        for Ibar in itertools.combinations(others, r):
            yield sorted(set(range(1, M + 1)) - set(Ibar))


def _block_rank_witnesses(Q: QuerySet, m: int, groups) -> list[dict]:
    gf = Q.field
    out = []
    for I in _index_sets(Q.params.M, m):
        per_server = [gf.rank(Q.block(I, [j])) for j in range(Q.n_servers)]
        for servers in groups:
            stacked = gf.rank(Q.block(I, servers))
            total = sum(per_server[j] for j in servers)
            if stacked != total:
                out.append({"m": m, "I": I, "servers": list(servers),
                            "stacked_rank": stacked, "sum_of_ranks": total})
    return out


def _interference_witnesses(Q: QuerySet, m: int, groups) -> list[dict]:
    gf = Q.field
    others = [k for k in range(1, Q.params.M + 1) if k != m]
    full = gf.rank(Q.block(others))
    best = max(gf.rank(Q.block(others, g)) for g in groups)
    if full == best:
        return []
    return [{"m": m, "stacked_rank": full, "max_subset_rank": best,
             "subset_size": len(groups[0])}]


def _capacity_verdict(block: list, interference: list) -> Verdict:
    parts = {
        "capacity_block_rank": Verdict("capacity_block_rank", FAIL if block else PASS, block),
        "capacity_interference_rank": Verdict(
            "capacity_interference_rank", FAIL if interference else PASS, interference),
    }
    ok = not block and not interference
    return Verdict("capacity", PASS if ok else FAIL, block + interference, parts=parts)


def check_capacity_colluding(Q: QuerySet, m: int, T: int) -> Verdict:
    """Rank additivity over all servers for every I containing m, and the
    interference rank of all servers attained by some T of them."""
    everyone = [tuple(range(Q.n_servers))]
    T_subsets = list(itertools.combinations(range(Q.n_servers), T))
    return _capacity_verdict(_block_rank_witnesses(Q, m, everyone),
                             _interference_witnesses(Q, m, T_subsets))


def check_capacity_robust_byz(Q: QuerySet, m: int, S: int, mu: int) -> Verdict:
    """Rank additivity on every S-subset of the S+mu servers; interference
    rank of all servers attained by a single server."""
    N = S + mu
    if Q.n_servers != N:
        raise DimensionMismatch(f"expected {N} servers, query set has {Q.n_servers}")
    kappas = list(itertools.combinations(range(N), S))
    singles = [(j,) for j in range(N)]
    return _capacity_verdict(_block_rank_witnesses(Q, m, kappas),
                             _interference_witnesses(Q, m, singles))


def check_capacity(scheme: LinearScheme, Q: QuerySet, m: int) -> Verdict:
    p = scheme.params
    if p.variant == "colluding":
        return check_capacity_colluding(Q, m, p.T)
    return check_capacity_robust_byz(Q, m, p.S, p.mu)


# -- privacy ------------------------------------------------------------------

def _view(Q: QuerySet, subset, view) -> np.ndarray:
    data = Q.data[list(subset)]
    if view is None:
        return data
    rows, cols = view
    c = Q.block_cols
    keep = np.concatenate([np.arange(k * c, k * c + min(cols, c)) for k in range(Q.params.M)])
    return data[:, :rows, keep]


def _privacy_quantifier(scheme: LinearScheme, quantifier) -> list[tuple[int, ...]]:
    if quantifier is None:
        return scheme.privacy_subsets()
    return quantifier.subsets(scheme.n_servers)


def check_privacy(
    scheme: LinearScheme,
    quantifier: Optional[SubsetQuantifier] = None,
    budget: int = 1000,
    seed=0,
    view: Optional[tuple[int, int]] = None,
) -> Verdict:
    """Counting equality of the subset views across desired indices.

    Exhaustive when the randomness space has at most ``budget`` elements;
    otherwise ``budget`` samples per index compared by total variation on a
    64-bit hash of the view.  ``view=(rows, cols)`` restricts each server's
    query to its first rows and the first cols of every message block before
    comparing (a projection: equal distributions stay equal).
    """
    subsets = _privacy_quantifier(scheme, quantifier)
    M = scheme.params.M
    spec = scheme.randomness
    if spec.enumerable and spec.size <= budget:
        counts = {s: [Counter() for _ in range(M)] for s in subsets}
        for F in spec:
            for m in range(1, M + 1):
                Q = scheme.query_gen(m, F)
                for s in subsets:
                    counts[s][m - 1][_view(Q, s, view).tobytes()] += 1
        witnesses = []
        for s in subsets:
            ref = counts[s][0]
            for m in range(2, M + 1):
                other = counts[s][m - 1]
                if other != ref:
                    key = min(set(ref) ^ set(other) or {k for k in ref if ref[k] != other[k]})
                    shape = _view(scheme.query_gen(1, spec.from_index(0)), s, view).shape
                    witnesses.append({
                        "servers": list(s),
                        "query": np.frombuffer(key, dtype=np.int64).reshape(shape).tolist(),
                        "counts": [counts[s][k][key] for k in range(M)],
                    })
                    break
            if len(witnesses) >= MAX_WITNESSES:
                break
        return Verdict("privacy", FAIL if witnesses else PASS, witnesses, "exhaustive")

    n = budget
    if n < 1000:
        raise BudgetTooSmall(f"sampled privacy needs at least 1000 draws per index, got {n}")
    hashes = {s: [Counter() for _ in range(M)] for s in subsets}
    for m in range(1, M + 1):
        rng = np.random.default_rng([int(seed), m])
        for _ in range(n):
            Q = scheme.query_gen(m, scheme.sample_randomness(rng))
            for s in subsets:
                hashes[s][m - 1][canonical_hash(_view(Q, s, view))] += 1
    worst, witnesses = PASS, []
    for s in subsets:
        ref = hashes[s][0]
        for m in range(2, M + 1):
            other = hashes[s][m - 1]
            bins = set(ref) | set(other)
            tv = 0.5 * sum(abs(ref[b] - other[b]) for b in bins) / n
            threshold = 3 * math.sqrt(len(bins) / n)
            if tv > threshold:
                result = FAIL if tv > 2 * threshold else INCONCLUSIVE
                witnesses.append({"servers": list(s), "m": [1, m], "tv": tv,
                                  "threshold": threshold, "bins": len(bins)})
                if result == FAIL or worst == PASS:
                    worst = result
    return Verdict("privacy", worst, witnesses, f"sampled({n})")


# -- scheme-level report --------------------------------------------------------

@dataclass
class ConditionSummary:
    condition: str
    result: str
    coverage: str
    violation_fraction: float
    witnesses: list


@dataclass
class Report:
    scheme: str
    params: dict
    entries: list = field(default_factory=list)
    index_fractions: dict = field(default_factory=dict)
    capacity_fraction: Optional[float] = None

    def add(self, verdict: Verdict, violation_fraction: Optional[float] = None) -> None:
        if violation_fraction is None:
            violation_fraction = 0.0 if verdict.passed else 1.0
        self.entries.append(ConditionSummary(verdict.condition, verdict.result, verdict.coverage,
                                             violation_fraction, verdict.witnesses))

    def entry(self, condition: str) -> ConditionSummary:
        for e in self.entries:
            if e.condition == condition:
                return e
        raise KeyError(condition)

    @property
    def passed(self) -> bool:
        return all(e.result == PASS for e in self.entries)

    def records(self) -> list[dict]:
        return [
            {"scheme": self.scheme, "params": self.params, "condition": e.condition,
             "result": e.result, "coverage": e.coverage,
             "violation_fraction": e.violation_fraction, "witnesses": e.witnesses}
            for e in self.entries
        ]

    def to_json(self) -> str:
        return json.dumps(self.records(), indent=2, sort_keys=True) + "\n"


def _realizations(scheme: LinearScheme, iteration, seed):
    if iteration == "exhaustive":
        spec = scheme.randomness
        if not spec.enumerable:
            raise BudgetTooSmall(f"{scheme!r} has a non-enumerable randomness space")
        return [(i, lambda i=i: spec.from_index(i)) for i in range(spec.size)], "exhaustive"
    n = int(iteration)
    if n < 1:
        raise BudgetTooSmall("empty randomness iteration")
    return ([(i, lambda i=i: scheme.sample_randomness(np.random.default_rng([int(seed), i])))
             for i in range(n)], f"sampled({n})")


def _check_one(scheme: LinearScheme, label: int, make_F, capacity: bool):
    F = make_F()
    found = {c: [] for c in CONDITIONS if c != "privacy"}
    for m in range(1, scheme.params.M + 1):
        Q = scheme.query_gen(m, F)
        for subset in scheme.decoding_subsets():
            v = check_correctness(Q, m, scheme.params.L, subset)
            found["correctness"] += [dict(w, F=label) for w in v.witnesses]
        if capacity:
            v = check_capacity(scheme, Q, m)
            for name, part in v.parts.items():
                found[name] += [dict(w, F=label) for w in part.witnesses]
    return found


def _violations(found_list, conditions) -> tuple[int, int]:
    """(F values, (F, m) pairs) with at least one witness among ``conditions``."""
    per_F = per_pair = 0
    for found in found_list:
        ms = {w["m"] for c in conditions for w in found[c]}
        per_F += bool(ms)
        per_pair += len(ms)
    return per_F, per_pair


CAPACITY_FAMILIES = ("capacity_block_rank", "capacity_interference_rank")


def check_scheme(scheme: LinearScheme, iteration: Union[str, int] = 100, seed=0,
                 capacity: bool = True, n_jobs: int = 1) -> Report:
    """Correctness and capacity over every iterated realization and every m.

    ``iteration`` is ``"exhaustive"`` or a number of seeded samples.  The
    violation fraction of a condition is the share of iterated F values for
    which some desired index yields a counterexample; the share of (F, m)
    pairs is kept in ``Report.index_fractions``.
    """
    realizations, coverage = _realizations(scheme, iteration, seed)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            found_list = list(pool.map(lambda r: _check_one(scheme, r[0], r[1], capacity), realizations))
    else:
        found_list = [_check_one(scheme, label, make, capacity) for label, make in realizations]
    n_F = len(realizations)
    n_pairs = n_F * scheme.params.M
    report = Report(scheme.name, scheme.params.to_dict())
    conditions = ["correctness"] + (list(CAPACITY_FAMILIES) if capacity else [])
    for cond in conditions:
        witnesses = [w for found in found_list for w in found[cond]]
        witnesses.sort(key=lambda w: json.dumps(w, sort_keys=True))
        per_F, per_pair = _violations(found_list, [cond])
        v = Verdict(cond, FAIL if witnesses else PASS, witnesses[:MAX_WITNESSES], coverage)
        report.add(v, per_F / n_F)
        report.index_fractions[cond] = per_pair / n_pairs
    if capacity:
        per_F, per_pair = _violations(found_list, CAPACITY_FAMILIES)
        report.capacity_fraction = per_F / n_F
        report.index_fractions["capacity"] = per_pair / n_pairs
    return report


def capacity_violation_fraction(report: Report, per_index: bool = False) -> float:
    """Share of F values (or of (F, m) pairs) violating either capacity family."""
    if per_index:
        return report.index_fractions["capacity"]
    return report.capacity_fraction
