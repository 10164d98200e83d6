"""Vandermonde-based colluding, robust and Byzantine PIR.

The user hides a selector block under T rows of uniform noise, one
polynomial coefficient per row, and sends server j the evaluation of that
polynomial at its point z_j.  One response symbol per server.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import FieldTooSmall, Undecodable
from .gf import GF, field_of_order, smallest_prime_power_at_least
from .mds import erasure_decode, error_decode, rs_generator, vandermonde
from .scheme import (
    Factor,
    LinearScheme,
    QuerySet,
    RandomnessSpec,
    ResponseBundle,
    SchemeParams,
    check_params,
)


_generator = lru_cache(maxsize=64)(rs_generator)


def wang_variant_points(params: SchemeParams) -> tuple[int, ...]:
    """Canonical evaluation points 0, 1, ..., N-1 (server 0 always holds z=0)."""
    if params.q < params.N:
        raise FieldTooSmall(f"q={params.q} has fewer than N={params.N} distinct points")
    return tuple(range(params.N))


def wang_params(M: int, S: int, T: int = 1, U: int = 0, B: int = 0,
                variant: str = "colluding", q: Optional[int] = None) -> SchemeParams:
    check_params(M, S, T, U, B, variant)
    N = S + U + 2 * B
    q = smallest_prime_power_at_least(N) if q is None else q
    if q < N:
        raise FieldTooSmall(f"q={q} < N={N}")
    return SchemeParams(M, S, T, U, B, q, S - T, variant)


def wang_query_gen(params: SchemeParams, field: GF, m: int, F, V: Optional[np.ndarray] = None) -> QuerySet:
    """Q_j = (1, z_j, ..., z_j^(S-1)) @ [r[1] .. r[M]; selector in block m]."""
    S, T, M = params.S, params.T, params.M
    c = S - T
    design = np.zeros((S, M * c), dtype=np.int64)
    for k in range(M):
        design[:T, k * c : (k + 1) * c] = np.asarray(F[k], dtype=np.int64).reshape(T, c)
    design[T:, (m - 1) * c : m * c] = np.eye(c, dtype=np.int64)
    if V is None:
        V = vandermonde(field, wang_variant_points(params), S)
    Q = field.matmul(V, design)
    return QuerySet(params, field, Q[:, None, :], c, m_hidden=m)


def wang_decode(params: SchemeParams, field: GF, points, responses: ResponseBundle,
                inverses: Optional[dict] = None) -> np.ndarray:
    """Solve the Vandermonde system for (beta, w_m) and return the w_m part.

    ``inverses`` caches the inverse of V restricted to each kept row set.
    """
    S, T = params.S, params.T
    X = [None if x is None else np.asarray(x, dtype=np.int64).reshape(-1) for x in responses.responses]
    gen = _generator(len(points), S, field)
    present = [i for i, x in enumerate(X) if x is not None]
    if params.variant == "byzantine":
        if len(present) < len(points):
            raise Undecodable("Byzantine decoding takes every response")
        word = np.stack([X[i] for i in range(len(points))])
        coeffs, _ = error_decode(gen, word, params.B)
    else:
        if params.variant == "colluding" and len(present) < S:
            raise Undecodable("colluding scheme needs every response")
        kept = tuple(present[:S])
        if len(kept) < S:
            raise Undecodable(f"only {len(kept)} responses, need {S}")
        Y = np.stack([X[i] for i in kept])
        if inverses is None:
            coeffs = erasure_decode(gen, kept, Y)
        else:
            if kept not in inverses:
                inverses[kept] = field.inverse(gen.matrix[list(kept)])
            coeffs = field.matmul(inverses[kept], Y)
    return coeffs[T:].reshape(-1)


class WangScheme(LinearScheme):
    """One query row per server; L = S - T symbols per message."""

    def __init__(self, M: int, S: int, T: int = 1, U: int = 0, B: int = 0,
                 variant: str = "colluding", q: Optional[int] = None):
        self.params = wang_params(M, S, T, U, B, variant, q)
        self.field = field_of_order(self.params.q)
        self.name = f"wang-{variant}"
        self.rows_per_server = 1
        self.block_cols = S - T
        self.points = wang_variant_points(self.params)
        self.randomness = RandomnessSpec(self.field, [Factor("matrix", (T, S - T))] * M)
        self.V = vandermonde(self.field, self.points, S)
        self._inverses: dict = {}

    def query_gen(self, m: int, F) -> QuerySet:
        self._check_index(m)
        return wang_query_gen(self.params, self.field, m, F, self.V)

    def decode(self, queries: QuerySet, responses: ResponseBundle, m: int) -> np.ndarray:
        return wang_decode(self.params, self.field, self.points, responses, self._inverses)
