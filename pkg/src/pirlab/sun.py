"""Capacity-achieving colluding, robust and Byzantine PIR by symmetric k-sums.

Each query row asks a server for the sum of one coded symbol from each
message in some set K.  Desired coded symbols come from ``e_m`` (generic,
full rank); undesired ones from ``e_k = G @ s_k[:d]`` so they live in a
d-dimensional space whose any d rows are independent.  Three index plans:

* two messages, any T (``plan_two_messages``),
* T = 1, any M (``plan_rounds``), the round-based construction,
* T = 1, two messages, S + mu servers (``plan_redundant``).

A plan is a per-server list of rows; each row maps a 1-based message to the
row of ``e_k`` it uses.  Plans depend only on m, never on F.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb
from typing import Optional

import numpy as np

from .errors import ConstructionCheckFailed, UnsupportedParameters
from .gf import field_of_order, smallest_prime_power_at_least
from .mds import rs_generator
from .scheme import Factor, LinearScheme, QuerySet, RandomnessSpec, SchemeParams, check_params

MAX_L = 1024


def sun_row_count(M: int, S: int, T: int) -> int:
    """Rows per server: (S^M - T^M) / (S - T)."""
    if not 1 <= T < S:
        raise ValueError(f"need 1 <= T < S, got T={T}, S={S}")
    return (S**M - T**M) // (S - T)


def round_row_counts(M: int, S: int, T: int) -> list[int]:
    """Rows contributed by rounds j = 1..M: C(M, j) T^(M-j) (S-T)^(j-1)."""
    return [comb(M, j) * T ** (M - j) * (S - T) ** (j - 1) for j in range(1, M + 1)]


def supported(M: int, S: int, T: int, variant: str) -> bool:
    if variant == "colluding":
        return (T == 1 and 2 <= M <= 4 and 2 <= S <= 4) or (M == 2 and 2 <= S <= 5 and 1 <= T < S)
    return T == 1 and M == 2 and 2 <= S <= 5


def sun_params(M: int, S: int, T: int = 1, U: int = 0, B: int = 0, variant: str = "colluding") -> SchemeParams:
    check_params(M, S, T, U, B, variant)
    if not supported(M, S, T, variant):
        raise UnsupportedParameters(f"no construction for {variant} M={M}, S={S}, T={T}")
    L = S**M
    if variant == "colluding":
        q = L
    else:
        q = smallest_prime_power_at_least((S + U + 2 * B) * S ** (M - 1))
    if L > MAX_L or q > MAX_L:
        raise UnsupportedParameters(f"L={L}, q={q} beyond the supported size")
    return SchemeParams(M, S, T, U, B, q, L, variant)


# -- index plans ---------------------------------------------------------------

def plan_two_messages(S: int, T: int, m: int) -> list[list[dict]]:
    """M = 2: 2T singletons then S - T mixed sums per server."""
    plan = []
    for i in range(S):
        rows = [{k: i * T + t} for k in (1, 2) for t in range(T)]
        base = S * T + i * (S - T)
        rows += [{1: base + c, 2: base + c} for c in range(S - T)]
        plan.append(rows)
    return plan


def plan_rounds(M: int, S: int, m: int) -> list[list[dict]]:
    """T = 1: round j asks each server for sums over every j-subset K.

    Sums avoiding m use fresh undesired symbols and are kept as side
    information; a sum containing m pairs a fresh desired symbol with a side
    sum another server returned in round j - 1.
    """
    desired = itertools.count()
    undesired = {k: itertools.count() for k in range(1, M + 1)}
    pure: list[dict] = [{} for _ in range(S)]
    plan: list[list[dict]] = [[] for _ in range(S)]
    for j in range(1, M + 1):
        for i in range(S):
            for K in itertools.combinations(range(1, M + 1), j):
                if m not in K:
                    rows = [{k: next(undesired[k]) for k in K} for _ in range((S - 1) ** (j - 1))]
                    pure[i][K] = rows
                elif j == 1:
                    rows = [{m: next(desired)}]
                else:
                    side = tuple(k for k in K if k != m)
                    rows = []
                    for off in range(1, S):
                        for row in pure[(i + off) % S][side]:
                            rows.append({**row, m: next(desired)})
                plan[i].extend(rows)
    return plan


def plan_redundant(S: int, N: int, m: int) -> list[list[dict]]:
    """T = 1, M = 2 over N servers; server i uses coded indices iS .. iS+S-1."""
    plan = []
    for i in range(N):
        rows = [{k: i * S} for k in (1, 2)]
        rows += [{1: i * S + c, 2: i * S + c} for c in range(1, S)]
        plan.append(rows)
    return plan


class SunScheme(LinearScheme):
    """Symmetric k-sum scheme; achieves the capacity on the supported grid."""

    def __init__(self, M: int, S: int, T: int = 1, U: int = 0, B: int = 0,
                 variant: str = "colluding", verify: bool = True):
        self.params = sun_params(M, S, T, U, B, variant)
        p = self.params
        self.field = field_of_order(p.q)
        self.name = f"sun-{variant}"
        self.block_cols = p.L
        self.rows_per_server = sun_row_count(M, S, T)
        self.verify = verify
        self.randomness = RandomnessSpec(self.field, [Factor("full_rank", (p.L, p.L))] * M)
        if variant == "colluding":
            self.coded_length = p.L
            self.interference_dim = T * S ** (M - 1)
            self._desired_code = None
        else:
            self.coded_length = p.N * S ** (M - 1)
            self.interference_dim = S ** (M - 1)
            self._desired_code = rs_generator(self.coded_length, p.L, self.field).matrix
        self._interference_code = rs_generator(self.coded_length, self.interference_dim, self.field).matrix

    @lru_cache(maxsize=None)
    def plan(self, m: int) -> tuple[tuple[dict, ...], ...]:
        p = self.params
        if p.variant != "colluding":
            raw = plan_redundant(p.S, p.N, m)
        elif p.M == 2:
            raw = plan_two_messages(p.S, p.T, m)
        else:
            raw = plan_rounds(p.M, p.S, m)
        return tuple(tuple(rows) for rows in raw)

    def codes(self, m: int, F) -> list[np.ndarray]:
        """The coded-symbol maps e_1 .. e_M for desired index m."""
        gf = self.field
        out = []
        for k in range(1, self.params.M + 1):
            s = np.asarray(F[k - 1], dtype=np.int64)
            if k == m:
                out.append(s if self._desired_code is None else gf.matmul(self._desired_code, s))
            else:
                out.append(gf.matmul(self._interference_code, s[: self.interference_dim]))
        return out

    def query_gen(self, m: int, F) -> QuerySet:
        self._check_index(m)
        p = self.params
        e = self.codes(m, F)
        plan = self.plan(m)
        data = np.zeros((p.N, self.rows_per_server, p.M * p.L), dtype=np.int64)
        for i, rows in enumerate(plan):
            for r, row in enumerate(rows):
                for k, idx in row.items():
                    data[i, r, (k - 1) * p.L : k * p.L] = e[k - 1][idx]
        Q = QuerySet(p, self.field, data, p.L, m_hidden=m)
        if self.verify:
            self._assert_decodable(Q, m)
        return Q

    def _assert_decodable(self, Q: QuerySet, m: int) -> None:
        from .checker import check_correctness

        for subset in self.decoding_subsets():
            if not check_correctness(Q, m, self.params.L, subset).passed:
                raise ConstructionCheckFailed(f"{self!r}: no decoder for m={m} on servers {subset}")


def sun_query_gen(params: SchemeParams, m: int, F, scheme: Optional[SunScheme] = None) -> QuerySet:
    p = params
    scheme = scheme or SunScheme(p.M, p.S, p.T, p.U, p.B, p.variant)
    return scheme.query_gen(m, F)
