"""Reed-Solomon generator matrices with erasure and bounded-error decoding."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AmbiguousDecoding,
    DimensionMismatch,
    InconsistentSymbols,
    LengthExceedsField,
    TooFewRows,
    TooManyErrors,
)
from .gf import GF


def vandermonde(field: GF, points: Sequence[int], k: int) -> np.ndarray:
    """Rows ``(1, z, z^2, ..., z^(k-1))`` for each point z."""
    pts = np.asarray(points, dtype=np.int64)
    V = np.zeros((len(pts), k), dtype=np.int64)
    if k:
        V[:, 0] = 1
    for j in range(1, k):
        V[:, j] = field.mul(V[:, j - 1], pts)
    return V


@dataclass(frozen=True, eq=False)
class RsGenerator:
    field: GF
    n: int
    k: int
    points: tuple[int, ...]
    matrix: np.ndarray

    def encode(self, message) -> np.ndarray:
        message = np.asarray(message, dtype=np.int64)
        return self.field.matmul(self.matrix, message)


def rs_generator(n: int, k: int, field: GF) -> RsGenerator:
    """Vandermonde generator on the canonical points 0, 1, ..., n-1."""
    if not 0 < k <= n:
        raise ValueError(f"need 0 < k <= n, got n={n}, k={k}")
    if n > field.q:
        raise LengthExceedsField(f"code length {n} exceeds field order {field.q}")
    points = tuple(range(n))
    M = vandermonde(field, points, k)
    M.flags.writeable = False
    return RsGenerator(field, n, k, points, M)


def _solve_consistent(field: GF, G: np.ndarray, Y: np.ndarray):
    """Message X with ``G @ X == Y`` or None when the rows disagree."""
    D = field.solve_left(G.T, Y.T)
    return None if D is None else D.T


def _as_symbols(symbols) -> np.ndarray:
    Y = np.asarray(symbols, dtype=np.int64)
    return Y[:, None] if Y.ndim == 1 else Y


def erasure_decode(gen: RsGenerator, kept_rows: Sequence[int], symbols) -> np.ndarray:
    """Recover the k x c message block from the symbols at ``kept_rows``."""
    kept = list(kept_rows)
    Y = _as_symbols(symbols)
    if len(kept) < gen.k:
        raise TooFewRows(f"{len(kept)} rows kept, need {gen.k}")
    if Y.shape[0] != len(kept):
        raise DimensionMismatch(f"{Y.shape[0]} symbol rows for {len(kept)} kept rows")
    G = gen.matrix[kept]
    X = _solve_consistent(gen.field, G, Y)
    if X is None:
        raise InconsistentSymbols("kept rows are not a codeword of the generator")
    return X


def error_decode(gen: RsGenerator, symbols, max_errors: int):
    """Subset-hypothesis decoding of up to ``max_errors`` corrupted rows.

    Candidate corrupt sets are tried by increasing size, lexicographically
    within a size.  Every consistent hypothesis of the first successful size
    must agree on the message; the smallest such set is reported.

    Returns ``(message, corrupt_set)``.
    """
    Y = _as_symbols(symbols)
    n, k = gen.n, gen.k
    if Y.shape[0] != n:
        raise DimensionMismatch(f"expected {n} symbol rows, got {Y.shape[0]}")
    if n < k + 2 * max_errors:
        raise ValueError(f"n={n} < k + 2B = {k + 2 * max_errors}")
    for size in range(max_errors + 1):
        found = []
        for E in itertools.combinations(range(n), size):
            rows = [i for i in range(n) if i not in E]
            X = _solve_consistent(gen.field, gen.matrix[rows], Y[rows])
            if X is not None:
                found.append((E, X))
        if found:
            E0, X0 = found[0]
            for E, X in found[1:]:
                if not np.array_equal(X, X0):
                    raise AmbiguousDecoding(f"hypotheses {E0} and {E} disagree")
            return X0, set(E0)
    raise TooManyErrors(f"no consistent hypothesis with at most {max_errors} errors")
