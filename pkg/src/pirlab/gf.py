"""Exact arithmetic and dense linear algebra over GF(p^d).

Elements are integer codes in ``[0, q)``; the base-p digits of a code are the
polynomial coefficients, lowest degree first.  All array operations accept
numpy integer arrays (or plain ints) and return ``int64`` arrays.

Irreducible moduli (coefficients low-to-high, monic).  The table holds the
smallest monic irreducible polynomial when the coefficient list is read as a
base-p integer.  Degrees outside the table take the smallest monic
*primitive* polynomial by the same ordering, found by search:

    p=2: d=2 x^2+x+1, d=3 x^3+x+1, d=4 x^4+x+1, d=5 x^5+x^2+1,
         d=6 x^6+x+1, d=7 x^7+x+1, d=8 x^8+x^4+x^3+x+1
    p=3: d=2 x^2+1, d=3 x^3+2x+1, d=4 x^4+x+2, ...
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, DivisionByZero, NonPrimeP, UnsupportedOrder

MAX_ORDER = 1 << 16

_MODULI = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (2, 5): (1, 0, 1, 0, 0, 1),
    (2, 6): (1, 1, 0, 0, 0, 0, 1),
    (2, 7): (1, 1, 0, 0, 0, 0, 0, 1),
    (2, 8): (1, 1, 0, 1, 1, 0, 0, 0, 1),
    (3, 2): (1, 0, 1),
    (3, 3): (1, 2, 0, 1),
    (3, 4): (2, 1, 0, 0, 1),
    (3, 5): (1, 2, 0, 0, 0, 1),
    (3, 6): (2, 1, 0, 0, 0, 0, 1),
    (3, 7): (2, 0, 1, 0, 0, 0, 0, 1),
    (3, 8): (2, 0, 1, 0, 0, 0, 0, 0, 1),
    (5, 2): (2, 0, 1),
    (5, 3): (1, 1, 0, 1),
    (5, 4): (2, 0, 0, 0, 1),
    (5, 5): (1, 4, 0, 0, 0, 1),
    (5, 6): (2, 1, 0, 0, 0, 0, 1),
    (7, 2): (1, 0, 1),
    (7, 3): (2, 0, 0, 1),
    (7, 4): (1, 1, 0, 0, 1),
    (7, 5): (3, 1, 0, 0, 0, 1),
}


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_power(q: int) -> Optional[tuple[int, int]]:
    """Return ``(p, d)`` with ``q == p**d`` or None if q is not a prime power."""
    if q < 2:
        return None
    for p in range(2, q + 1):
        if q % p == 0:
            if not is_prime(p):
                return None
            d = 0
            while q % p == 0:
                q //= p
                d += 1
            return (p, d) if q == 1 else None
    return None


def smallest_prime_power_at_least(n: int) -> int:
    q = max(n, 2)
    while prime_power(q) is None:
        q += 1
    return q


# -- scalar polynomial helpers over GF(p), coefficient lists low-to-high ------

def _poly_rem(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    a = list(a)
    inv_lead = pow(b[-1], p - 2, p)
    while a and a[-1] == 0:
        a.pop()
    while len(a) >= len(b):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(b)
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        while a and a[-1] == 0:
            a.pop()
    return a


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2."""
    d = len(poly) - 1
    if d < 1 or poly[-1] % p == 0:
        return False
    if d == 1:
        return True
    if poly[0] % p == 0:
        return False
    for k in range(1, d // 2 + 1):
        for tail in itertools.product(range(p), repeat=k):
            if not _poly_rem(poly, list(tail) + [1], p):
                return False
    return True


def _poly_mulmod(a: Sequence[int], b: Sequence[int], mod: Sequence[int], p: int) -> list[int]:
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] = (prod[i + j] + x * y) % p
    return _poly_rem(prod, mod, p)


def _x_has_order(mod: Sequence[int], p: int, order: int) -> bool:
    """True when x has multiplicative order exactly ``order`` modulo ``mod``."""

    def x_pow(e: int) -> list[int]:
        result, base = [1], [0, 1]
        while e:
            if e & 1:
                result = _poly_mulmod(result, base, mod, p)
            base = _poly_mulmod(base, base, mod, p)
            e >>= 1
        return result

    if x_pow(order) != [1]:
        return False
    n, r = order, 2
    primes = []
    while r * r <= n:
        if n % r == 0:
            primes.append(r)
            while n % r == 0:
                n //= r
        r += 1
    if n > 1:
        primes.append(n)
    return all(x_pow(order // r) != [1] for r in primes)


def _search_modulus(p: int, d: int) -> tuple[int, ...]:
    """Smallest monic primitive polynomial of degree d (by base-p code)."""
    for code in range(p**d):
        poly = [(code // p**i) % p for i in range(d)] + [1]
        if poly[0] and is_irreducible(poly, p) and _x_has_order(poly, p, p**d - 1):
            return tuple(poly)
    raise AssertionError("no primitive polynomial found")  # unreachable


class GF:
    """The finite field GF(p^d) with table-driven vectorized arithmetic.

    Instances are immutable; obtain them through :func:`field_new` so that a
    given ``(p, d)`` always maps to the same cached object.
    """

    def __init__(self, p: int, d: int = 1):
        if not is_prime(p):
            raise NonPrimeP(f"characteristic {p} is not prime")
        if d < 1:
            raise UnsupportedOrder(f"extension degree must be >= 1, got {d}")
        if p**d > MAX_ORDER:
            raise UnsupportedOrder(f"q = {p}^{d} exceeds {MAX_ORDER}")
        self.p = p
        self.d = d
        self.q = p**d
        if d == 1:
            self.modulus: tuple[int, ...] = (0, 1)
        else:
            self.modulus = _MODULI.get((p, d)) or _search_modulus(p, d)
            if not is_irreducible(self.modulus, p):
                raise AssertionError(f"modulus {self.modulus} is reducible")
        self._build_tables()

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.d})" if self.d > 1 else f"GF({self.p})"

    def __reduce__(self):
        return (field_new, (self.p, self.d))

    # -- table construction ---------------------------------------------------

    def _digits(self, code: int) -> list[int]:
        return [(code // self.p**i) % self.p for i in range(self.d)]

    def _code(self, digits: Sequence[int]) -> int:
        return sum(int(c) * self.p**i for i, c in enumerate(digits))

    def _mul_scalar(self, a: int, b: int) -> int:
        p, d = self.p, self.d
        if d == 1:
            return a * b % p
        da, db = self._digits(a), self._digits(b)
        prod = [0] * (2 * d - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] = (prod[i + j] + x * y) % p
        return self._code(_poly_rem(prod, self.modulus, p) + [0] * d)

    def _powers_of_x(self) -> list[int]:
        """Successive powers of x until the cycle closes (O(d) per step)."""
        p, d = self.p, self.d
        red = [(-c) % p for c in self.modulus[:d]]
        digits = [1] + [0] * (d - 1)
        out = []
        while True:
            out.append(self._code(digits))
            top = digits[-1]
            digits = [0] + digits[:-1]
            if top:
                digits = [(a + top * b) % p for a, b in zip(digits, red)]
            if digits[0] == 1 and not any(digits[1:]):
                return out

    def _build_tables(self) -> None:
        q, p, d = self.q, self.p, self.d
        codes = np.arange(q, dtype=np.int64)
        self._digit_arr = np.stack([(codes // p**i) % p for i in range(d)])
        self._powers = np.array([p**i for i in range(d)], dtype=np.int64)
        self.neg_table = (((-self._digit_arr) % p) * self._powers[:, None]).sum(axis=0)
        self._add_table = None
        if p > 2 and d > 1 and q <= 1024:
            s = (self._digit_arr[:, :, None] + self._digit_arr[:, None, :]) % p
            self._add_table = (s * self._powers[:, None, None]).sum(axis=0)
        # log/exp tables from the first primitive element by code
        exp = np.zeros(2 * (q - 1) + 1, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        if q == 2:
            exp[:] = 1
        else:
            powers = self._powers_of_x() if d > 1 else []
            g = p
            if len(powers) != q - 1:
                for g in range(2, q):
                    x, powers = 1, []
                    while True:
                        powers.append(x)
                        x = self._mul_scalar(x, g)
                        if x == 1:
                            break
                    if len(powers) == q - 1:
                        break
            self.generator = g
            for i, v in enumerate(powers):
                exp[i] = v
                log[v] = i
            exp[q - 1 : 2 * (q - 1)] = exp[: q - 1]
        self.exp_table = exp
        self.log_table = log
        inv = np.zeros(q, dtype=np.int64)
        inv[1:] = exp[(q - 1 - log[1:]) % (q - 1)]
        self.inv_table = inv
        self._mul_table = None
        if d > 1 and q <= 1024:
            t = exp[log[:, None] + log[None, :]]
            t[0, :] = 0
            t[:, 0] = 0
            self._mul_table = t

    # -- elementwise arithmetic -----------------------------------------------

    def add(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.d == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        if self._add_table is not None:
            return self._add_table[a, b]
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        for i in range(self.d):
            pw = self._powers[i]
            out += ((a // pw + b // pw) % self.p) * pw
        return out

    def neg(self, a):
        a = np.asarray(a, dtype=np.int64)
        if self.d == 1:
            return (-a) % self.p
        if self.p == 2:
            return a
        return self.neg_table[a]

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.d == 1:
            return a * b % self.p
        if self._mul_table is not None:
            return self._mul_table[a, b]
        r = self.exp_table[self.log_table[a] + self.log_table[b]]
        return np.where((a == 0) | (b == 0), 0, r)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise DivisionByZero("inverse of zero")
        return self.inv_table[a]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def arith(self, a: int, b: int, op: str) -> int:
        """Scalar dispatch: ``op`` is one of add, sub, mul, div."""
        for x in (a, b):
            if not 0 <= int(x) < self.q:
                raise ValueError(f"{x} is not an element of {self!r}")
        fn = {"add": self.add, "sub": self.sub, "mul": self.mul, "div": self.div}[op]
        return int(fn(a, b))

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.integers(0, self.q, size=shape, dtype=np.int64)

    # -- linear algebra -------------------------------------------------------

    def matmul(self, A, B) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        vec = B.ndim == 1
        if vec:
            B = B[:, None]
        if A.shape[1] != B.shape[0]:
            raise DimensionMismatch(f"cannot multiply {A.shape} by {B.shape}")
        if self.d == 1:
            C = (A @ B) % self.p
        else:
            C = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
            logB = self.log_table[B]
            zB = B == 0
            for k in range(A.shape[1]):
                col = A[:, k]
                nz = np.nonzero(col)[0]
                if nz.size == 0:
                    continue
                prod = self.exp_table[self.log_table[col[nz]][:, None] + logB[k][None, :]]
                prod[:, zB[k]] = 0
                C[nz] = self.add(C[nz], prod)
        return C[:, 0] if vec else C

    def rref(self, A, pivot_limit: Optional[int] = None, reduced: bool = True):
        """Row-reduce a copy of A; pivots are searched in the first
        ``pivot_limit`` columns only.  Returns ``(R, pivot_columns)``."""
        R = np.array(A, dtype=np.int64, copy=True)
        if R.ndim != 2:
            raise DimensionMismatch("rref expects a 2-D matrix")
        nrows, ncols = R.shape
        limit = ncols if pivot_limit is None else pivot_limit
        pivots: list[int] = []
        r = 0
        for c in range(limit):
            if r == nrows:
                break
            nz = np.nonzero(R[r:, c])[0]
            if nz.size == 0:
                continue
            pr = r + int(nz[0])
            if pr != r:
                R[[r, pr]] = R[[pr, r]]
            lead = int(R[r, c])
            if lead != 1:
                R[r, c:] = self.mul(R[r, c:], self.inv_table[lead])
            col = R[:, c].copy()
            col[r] = 0
            if not reduced:
                col[:r] = 0
            rows = np.nonzero(col)[0]
            if rows.size:
                R[rows, c:] = self.sub(R[rows, c:], self.mul(col[rows][:, None], R[r, c:][None, :]))
            pivots.append(c)
            r += 1
        return R, pivots

    def rank(self, A) -> int:
        A = np.asarray(A)
        if A.size == 0:
            return 0
        return len(self.rref(A, reduced=False)[1])

    def solve_left(self, A, B) -> Optional[np.ndarray]:
        """Canonical D with ``D @ A == B`` (free coordinates zero), or None."""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if B.ndim == 1:
            B = B[None, :]
        if A.shape[1] != B.shape[1]:
            raise DimensionMismatch(f"A has {A.shape[1]} columns, B has {B.shape[1]}")
        n = A.shape[0]
        if n == 0:
            return np.zeros((B.shape[0], 0), dtype=np.int64) if not B.any() else None
        aug = np.concatenate([A.T, B.T], axis=1)
        R, pivots = self.rref(aug, pivot_limit=n)
        rk = len(pivots)
        if R[rk:, n:].any():
            return None
        D = np.zeros((B.shape[0], n), dtype=np.int64)
        for row, c in enumerate(pivots):
            D[:, c] = R[row, n:]
        return D

    def inverse(self, A) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64)
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch("inverse of a non-square matrix")
        D = self.solve_left(A, np.eye(A.shape[0], dtype=np.int64))
        if D is None:
            raise DivisionByZero("matrix is singular")
        return D

    def random_full_rank(self, n: int, rng) -> np.ndarray:
        """Uniform invertible n x n matrix by rejection sampling."""
        rng = _as_rng(rng)
        while True:
            A = self.random(rng, (n, n))
            if self.rank(A) == n:
                return A


def field_new(p: int, d: int = 1) -> GF:
    """The shared GF(p^d) instance (tables are built once per order)."""
    return _field(int(p), int(d))


@functools.lru_cache(maxsize=None)
def _field(p: int, d: int) -> GF:
    return GF(p, d)


def field_of_order(q: int) -> GF:
    pd = prime_power(q)
    if pd is None:
        raise NonPrimeP(f"{q} is not a prime power")
    return field_new(*pd)


def random_full_rank(n: int, field: GF, seed) -> np.ndarray:
    return field.random_full_rank(n, seed)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """An immutable dense matrix tied to its field."""

    field: GF
    data: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.int64, copy=True)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise DimensionMismatch("FieldMatrix data must be 2-D")
        if arr.size and (arr.min() < 0 or arr.max() >= self.field.q):
            raise ValueError(f"entries outside {self.field!r}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FieldMatrix)
            and self.field.q == other.field.q
            and np.array_equal(self.data, other.data)
        )

    def __hash__(self):
        return hash((self.field.q, self.data.shape, self.data.tobytes()))

    def __matmul__(self, other: "FieldMatrix") -> "FieldMatrix":
        return FieldMatrix(self.field, self.field.matmul(self.data, other.data))

    @property
    def T(self) -> "FieldMatrix":
        return FieldMatrix(self.field, self.data.T)

    def rank(self) -> int:
        return self.field.rank(self.data)

    def solve_left(self, B: "FieldMatrix") -> Optional["FieldMatrix"]:
        D = self.field.solve_left(self.data, B.data)
        return None if D is None else FieldMatrix(self.field, D)

    def to_text(self) -> str:
        return format_matrix(self.field.q, self.data)

    @classmethod
    def from_text(cls, text: str) -> "FieldMatrix":
        q, data = parse_matrix(text)
        return cls(field_of_order(q), data)


def mat_rank(A: FieldMatrix) -> int:
    return A.rank()


def mat_solve_left(A: FieldMatrix, B: FieldMatrix) -> Optional[FieldMatrix]:
    return A.solve_left(B)


def format_matrix(q: int, data) -> str:
    """Repo matrix text format: ``q rows cols`` then one line per row."""
    data = np.asarray(data, dtype=np.int64)
    if data.ndim == 1:
        data = data[None, :]
    lines = [f"{q} {data.shape[0]} {data.shape[1]}"]
    lines += [" ".join(str(int(x)) for x in row) for row in data]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> tuple[int, np.ndarray]:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    q, rows, cols = (int(x) for x in lines[0].split())
    body: Iterable[list[int]] = [[int(x) for x in ln.split()] for ln in lines[1 : 1 + rows]]
    data = np.array(list(body), dtype=np.int64).reshape(rows, cols)
    if data.size and (data.min() < 0 or data.max() >= q):
        raise ValueError("matrix entries outside the field")
    return q, data
