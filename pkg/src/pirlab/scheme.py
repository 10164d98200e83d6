"""Common machinery for linear PIR schemes.

A scheme maps a desired index ``m`` (1-based) and a randomness realization
``F`` to one query matrix per server.  Servers answer with ``Q_i @ W`` and the
user decodes with a matrix ``D_m`` such that ``D_m @ Q = [0 .. E .. 0]``.
Server indices are 0-based throughout.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import (
    AmbiguousDecoding,
    BadIndex,
    DimensionMismatch,
    InvalidParameters,
    Undecodable,
)
from .gf import GF, field_of_order, format_matrix, parse_matrix

VARIANTS = ("colluding", "robust", "byzantine")

ENUMERABLE_LIMIT = 10**6


def check_params(M: int, S: int, T: int = 1, U: int = 0, B: int = 0, variant: str = "colluding") -> None:
    """Raise InvalidParameters unless the protocol parameters are admissible."""
    if variant not in VARIANTS:
        raise InvalidParameters(f"unknown variant {variant!r}")
    if M < 2 or S < 2:
        raise InvalidParameters(f"need M >= 2 and S >= 2, got M={M}, S={S}")
    if not 1 <= T < S:
        raise InvalidParameters(f"need 1 <= T < S, got T={T}, S={S}")
    if U < 0 or B < 0:
        raise InvalidParameters("U and B must be non-negative")
    if variant == "colluding" and (U or B):
        raise InvalidParameters("colluding variant takes U = B = 0")
    if variant == "robust" and (U < 1 or B):
        raise InvalidParameters("robust variant needs U >= 1 and B = 0")
    if variant == "byzantine" and (B < 1 or U):
        raise InvalidParameters("byzantine variant needs B >= 1 and U = 0")


@dataclass(frozen=True)
class SchemeParams:
    M: int
    S: int
    T: int
    U: int
    B: int
    q: int
    L: int
    variant: str = "colluding"

    def __post_init__(self):
        check_params(self.M, self.S, self.T, self.U, self.B, self.variant)

    @property
    def mu(self) -> int:
        """Redundant servers: U for robust, 2B for byzantine, 0 otherwise."""
        return self.U + 2 * self.B

    @property
    def N(self) -> int:
        return self.S + self.mu

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class MessageLibrary:
    """M messages of L symbols each, stored as an (M, L) array."""

    field: GF
    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=np.int64, copy=True)
        if W.ndim != 2:
            raise DimensionMismatch("library must be an (M, L) array")
        if W.size and (W.min() < 0 or W.max() >= self.field.q):
            raise ValueError("library symbols outside the field")
        W.flags.writeable = False
        object.__setattr__(self, "W", W)

    @classmethod
    def random(cls, field: GF, M: int, L: int, rng) -> "MessageLibrary":
        return cls(field, field.random(np.random.default_rng(rng), (M, L)))

    @property
    def M(self) -> int:
        return self.W.shape[0]

    @property
    def L(self) -> int:
        return self.W.shape[1]

    def stacked(self) -> np.ndarray:
        return self.W.reshape(-1)

    def message(self, m: int) -> np.ndarray:
        return self.W[m - 1]


@dataclass(frozen=True)
class Factor:
    """One factor of the randomness space: ``matrix``, ``full_rank`` or ``vector``."""

    kind: str
    shape: tuple[int, ...]

    @property
    def entries(self) -> int:
        return math.prod(self.shape)


class RandomnessSpec:
    """The randomness space as a product of uniform factor spaces."""

    def __init__(self, field: GF, factors: Sequence[Factor]):
        self.field = field
        self.factors = tuple(factors)
        exact = all(f.kind in ("matrix", "vector") for f in self.factors)
        total = sum(f.entries for f in self.factors)
        self.size: Optional[int] = field.q**total if exact else None
        self.enumerable = self.size is not None and self.size <= ENUMERABLE_LIMIT

    def __repr__(self) -> str:
        return f"RandomnessSpec({self.field!r}, {list(self.factors)})"

    def sample(self, rng) -> tuple[np.ndarray, ...]:
        rng = np.random.default_rng(rng)
        out = []
        for f in self.factors:
            if f.kind == "full_rank":
                out.append(self.field.random_full_rank(f.shape[0], rng))
            else:
                out.append(self.field.random(rng, f.shape))
        return tuple(out)

    def from_index(self, index: int) -> tuple[np.ndarray, ...]:
        """The index-th realization in base-q digit order (enumerable spaces)."""
        if not self.enumerable:
            raise ValueError("randomness space is not enumerable")
        if not 0 <= index < self.size:
            raise IndexError(index)
        total = sum(f.entries for f in self.factors)
        digits = np.array([(index // self.field.q**i) % self.field.q for i in range(total)], dtype=np.int64)
        out, pos = [], 0
        for f in self.factors:
            out.append(digits[pos : pos + f.entries].reshape(f.shape))
            pos += f.entries
        return tuple(out)

    def __iter__(self) -> Iterator[tuple[np.ndarray, ...]]:
        if not self.enumerable:
            raise ValueError("randomness space is not enumerable")
        for i in range(self.size):
            yield self.from_index(i)


def canonical_hash(*arrays: np.ndarray) -> int:
    """64-bit digest of a sequence of integer arrays, shape included."""
    h = hashlib.blake2b(digest_size=8)
    for a in arrays:
        a = np.ascontiguousarray(a, dtype="<u4")
        h.update(repr(a.shape).encode())
        h.update(a.tobytes())
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True, eq=False)
class QuerySet:
    """Per-server query matrices, shape ``(N, rows_per_server, M * block_cols)``."""

    params: SchemeParams
    field: GF
    data: np.ndarray
    block_cols: int
    m_hidden: Optional[int] = None

    def __post_init__(self):
        data = np.array(self.data, dtype=np.int64, copy=True)
        if data.ndim != 3 or data.shape[2] != self.params.M * self.block_cols:
            raise DimensionMismatch(f"query data has shape {data.shape}")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def n_servers(self) -> int:
        return self.data.shape[0]

    @property
    def rows_per_server(self) -> int:
        return self.data.shape[1]

    def server(self, i: int) -> np.ndarray:
        return self.data[i]

    def stack(self, servers: Optional[Sequence[int]] = None) -> np.ndarray:
        servers = range(self.n_servers) if servers is None else list(servers)
        return self.data[list(servers)].reshape(-1, self.data.shape[2])

    def columns(self, messages: Sequence[int]) -> np.ndarray:
        """Column indices of the blocks of the given 1-based messages."""
        c = self.block_cols
        return np.concatenate([np.arange((k - 1) * c, k * c) for k in sorted(messages)]).astype(np.int64)

    def block(self, messages: Sequence[int], servers: Optional[Sequence[int]] = None) -> np.ndarray:
        """Stacked ``Q_servers[messages]``."""
        return self.stack(servers)[:, self.columns(messages)]

    def is_zero(self, i: int) -> bool:
        return not self.data[i].any()

    def digest(self, servers: Optional[Sequence[int]] = None) -> int:
        servers = range(self.n_servers) if servers is None else servers
        return canonical_hash(*(self.data[i] for i in servers))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QuerySet)
            and self.params == other.params
            and self.block_cols == other.block_cols
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    def header(self) -> dict:
        p = self.params
        return {
            "variant": p.variant, "M": p.M, "S": p.S, "T": p.T, "U": p.U, "B": p.B,
            "q": p.q, "L": p.L, "rows_per_server": self.rows_per_server,
            "block_cols": self.block_cols,
        }

    def save(self, directory) -> None:
        """Write ``header.json`` and one ``server_<i>.txt`` matrix per server."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "header.json").write_text(json.dumps(self.header(), indent=2, sort_keys=True) + "\n")
        for i in range(self.n_servers):
            (d / f"server_{i}.txt").write_text(format_matrix(self.field.q, self.data[i]))

    @classmethod
    def load(cls, directory) -> "QuerySet":
        d = Path(directory)
        h = json.loads((d / "header.json").read_text())
        params = SchemeParams(h["M"], h["S"], h["T"], h["U"], h["B"], h["q"], h["L"], h["variant"])
        mats = []
        for i in range(params.N):
            q, mat = parse_matrix((d / f"server_{i}.txt").read_text())
            if q != params.q or mat.shape != (h["rows_per_server"], params.M * h["block_cols"]):
                raise DimensionMismatch(f"server_{i}.txt does not match the header")
            mats.append(mat)
        return cls(params, field_of_order(params.q), np.stack(mats), h["block_cols"])


@dataclass
class ResponseBundle:
    """Per-server responses; None marks a server whose answer never arrived."""

    responses: list
    downloaded_symbols: int = 0

    def present(self) -> list[int]:
        return [i for i, x in enumerate(self.responses) if x is not None]


def respond(field: GF, Q_i, W: MessageLibrary) -> np.ndarray:
    Q_i = np.asarray(Q_i, dtype=np.int64)
    if Q_i.shape[-1] != W.M * W.L:
        raise DimensionMismatch(f"query has {Q_i.shape[-1]} columns, library has {W.M * W.L} symbols")
    return field.matmul(Q_i, W.stacked())


class Server:
    """Holds the library and sees nothing but its own query matrix."""

    def __init__(self, field: GF, library: MessageLibrary):
        self.field = field
        self._library = library

    def answer(self, query) -> np.ndarray:
        return respond(self.field, query, self._library)


class LinearScheme:
    """Base class; subclasses set the attributes below and ``query_gen``."""

    name: str
    params: SchemeParams
    field: GF
    rows_per_server: int
    block_cols: int
    randomness: RandomnessSpec

    @property
    def n_servers(self) -> int:
        return self.params.N

    def __repr__(self) -> str:
        p = self.params
        return f"{type(self).__name__}(M={p.M}, S={p.S}, T={p.T}, U={p.U}, B={p.B}, q={p.q})"

    def _check_index(self, m: int) -> None:
        if not 1 <= m <= self.params.M:
            raise BadIndex(f"m={m} outside [1, {self.params.M}]")

    def query_gen(self, m: int, F) -> QuerySet:
        raise NotImplementedError

    def sample_randomness(self, rng):
        return self.randomness.sample(rng)

    def privacy_subsets(self) -> list[tuple[int, ...]]:
        """Server subsets whose joint view must not reveal m."""
        if self.params.variant == "colluding":
            return list(itertools.combinations(range(self.n_servers), self.params.T))
        return [(j,) for j in range(self.n_servers)]

    def decoding_subsets(self) -> list[tuple[int, ...]]:
        """Server subsets on which correctness must hold on its own."""
        if self.params.variant == "colluding":
            return [tuple(range(self.n_servers))]
        return list(itertools.combinations(range(self.n_servers), self.params.S))

    def decode(self, queries: QuerySet, responses: ResponseBundle, m: int) -> np.ndarray:
        return generic_decode(queries, responses, m)


def _decode_on(queries: QuerySet, X: list, m: int, subset: Sequence[int]) -> Optional[np.ndarray]:
    from .checker import check_correctness

    verdict = check_correctness(queries, m, queries.params.L, subset)
    if not verdict.passed:
        return None
    x = np.concatenate([X[i] for i in subset])
    return queries.field.matmul(verdict.decoder, x)


def _consistent(queries: QuerySet, X: list, subset: Sequence[int]) -> bool:
    """True when the responses on ``subset`` are explained by some library."""
    Q = queries.stack(subset)
    x = np.concatenate([X[i] for i in subset])
    return queries.field.solve_left(Q.T, x[None, :]) is not None


def generic_decode(queries: QuerySet, responses: ResponseBundle, m: int) -> np.ndarray:
    """Decode W_m from the responses with the canonical decoding matrix."""
    p = queries.params
    X = responses.responses
    present = responses.present()
    if p.variant != "byzantine":
        if p.variant == "colluding" and len(present) < queries.n_servers:
            raise Undecodable("colluding scheme needs every response")
        out = _decode_on(queries, X, m, present)
        if out is None:
            raise Undecodable(f"no decoding matrix on servers {present}")
        return out
    for size in range(p.B + 1):
        results = []
        for E in itertools.combinations(present, size):
            subset = [i for i in present if i not in E]
            if not _consistent(queries, X, subset):
                continue
            out = _decode_on(queries, X, m, subset)
            if out is not None:
                results.append((E, out))
        if results:
            E0, out0 = results[0]
            for E, out in results[1:]:
                if not np.array_equal(out, out0):
                    raise AmbiguousDecoding(f"hypotheses {E0} and {E} disagree")
            return out0
    raise Undecodable(f"no consistent hypothesis with at most {p.B} corrupted servers")
