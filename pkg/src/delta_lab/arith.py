"""Modular arithmetic, Dirichlet characters modulo a prime, Gauss and Ramanujan sums."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

TWO_PI = 2.0 * math.pi

# Deterministic Miller-Rabin witnesses for n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def is_prime(n: int) -> bool:
    n = int(n)
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of n by trial division."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def primes_in(lo: float, hi: float) -> list[int]:
    """Primes p with lo <= p <= hi."""
    a = max(2, math.ceil(lo))
    b = math.floor(hi)
    return [p for p in range(a, b + 1) if is_prime(p)]


def next_primes(start: float, count: int, exclude=()) -> list[int]:
    """The first `count` primes >= start that are not in `exclude`."""
    excl = set(exclude)
    out = []
    p = max(2, math.ceil(start))
    while len(out) < count:
        if p not in excl and is_prime(p):
            out.append(p)
        p += 1
    return out


def inv_mod(a: int, m: int) -> int:
    """Inverse of a modulo m by the extended Euclidean algorithm."""
    a %= m
    if m == 1:
        return 0
    r0, r1, s0, s1 = m, a, 0, 1
    while r1:
        k = r0 // r1
        r0, r1 = r1, r0 - k * r1
        s0, s1 = s1, s0 - k * s1
    if r0 != 1:
        raise ZeroDivisionError(f"{a} is not invertible modulo {m}")
    return s0 % m


def inverse_table(q: int) -> np.ndarray:
    """inv[a] = a^{-1} mod q for 1 <= a < q; inv[0] = 0."""
    inv = np.zeros(q, dtype=np.int64)
    inv[1] = 1
    for a in range(2, q):
        # inv(a) = -(q // a) * inv(q % a) mod q
        inv[a] = (-(q // a) * int(inv[q % a])) % q
    return inv


def unit_root(a: int, c: int) -> complex:
    """e(a/c) = exp(2 pi i a / c), evaluated from the reduced angle."""
    if c < 1:
        raise ValueError("modulus must be positive")
    r = int(a) % int(c)
    if r == 0:
        return 1.0 + 0.0j
    if 2 * r == c:
        return -1.0 + 0.0j
    # symmetric reduction keeps the argument in [-pi, pi]
    if 2 * r > c:
        r -= c
    theta = TWO_PI * r / c
    return complex(math.cos(theta), math.sin(theta))


def unit_roots(c: int) -> np.ndarray:
    """Table z[k] = e(k/c) for k = 0..c-1."""
    k = np.arange(c)
    k = np.where(2 * k > c, k - c, k)
    z = np.exp(1j * TWO_PI * k / c)
    z[0] = 1.0
    if c % 2 == 0:
        z[c // 2] = -1.0
    return z


@dataclass(frozen=True)
class SumValue:
    """A complex value with an attached absolute error bound."""

    value: complex
    abs_error_bound: float = 0.0

    def __post_init__(self):
        if not self.abs_error_bound >= 0:
            raise ValueError("abs_error_bound must be nonnegative")

    def __complex__(self):
        return complex(self.value)

    def __abs__(self):
        return abs(self.value)

    def close_to(self, other, tol: float = 0.0) -> bool:
        o = other.value if isinstance(other, SumValue) else complex(other)
        extra = other.abs_error_bound if isinstance(other, SumValue) else 0.0
        return abs(self.value - o) <= self.abs_error_bound + extra + tol


def _rounding_bound(n_terms: int) -> float:
    # pairwise summation of unit-size terms
    return 8.0 * float(np.finfo(float).eps) * max(1, n_terms) * max(1.0, math.log2(max(2, n_terms)))


class PrimeModulus:
    """A prime q > 3 with its smallest primitive root and discrete-log table."""

    def __init__(self, q: int):
        q = int(q)
        if q <= 3 or not is_prime(q):
            raise ValueError("q must be prime > 3")
        self.q = q
        self.generator = self._smallest_primitive_root(q)
        dlog = np.full(q, -1, dtype=np.int64)
        powers = np.empty(q - 1, dtype=np.int64)
        x = 1
        for t in range(q - 1):
            powers[t] = x
            dlog[x] = t
            x = x * self.generator % q
        self.dlog_table = dlog
        self.powers = powers
        self.inverses = inverse_table(q)
        self.roots = unit_roots(q)

    @staticmethod
    def _smallest_primitive_root(q: int) -> int:
        factors = prime_factors(q - 1)
        for g in range(2, q):
            if all(pow(g, (q - 1) // r, q) != 1 for r in factors):
                return g
        raise ArithmeticError(f"no primitive root mod {q}")

    def dlog(self, n: int) -> int:
        """Discrete log of n to base g; raises for n divisible by q."""
        t = int(self.dlog_table[int(n) % self.q])
        if t < 0:
            raise ValueError(f"{n} is divisible by {self.q}")
        return t

    def inv(self, a: int) -> int:
        r = int(a) % self.q
        if r == 0:
            raise ZeroDivisionError(f"{a} is not invertible modulo {self.q}")
        return int(self.inverses[r])

    def __eq__(self, other):
        return isinstance(other, PrimeModulus) and other.q == self.q

    def __hash__(self):
        return hash(("PrimeModulus", self.q))

    def __repr__(self):
        return f"PrimeModulus({self.q})"


@dataclass(frozen=True)
class DirichletCharacter:
    """chi(g^j) = e(index * j / (q - 1)); chi(n) = 0 when q | n."""

    modulus: PrimeModulus
    index: int
    _table: np.ndarray = field(init=False, repr=False, compare=False)
    _exps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = self.modulus.q
        t = int(self.index) % (q - 1)
        object.__setattr__(self, "index", t)
        roots = unit_roots(q - 1)
        dl = self.modulus.dlog_table
        exps = np.where(dl >= 0, (t * dl) % (q - 1), -1)
        table = np.where(dl >= 0, roots[np.maximum(exps, 0)], 0.0 + 0.0j)
        table[0] = 0.0
        object.__setattr__(self, "_exps", exps)
        object.__setattr__(self, "_table", table)

    @property
    def q(self) -> int:
        return self.modulus.q

    @property
    def is_trivial(self) -> bool:
        return self.index == 0

    @property
    def is_primitive(self) -> bool:
        return self.index != 0

    @property
    def is_quadratic(self) -> bool:
        return 2 * self.index == self.q - 1

    def exponent(self, n: int) -> int:
        """k with chi(n) = e(k/(q-1)), or -1 when q | n."""
        return int(self._exps[int(n) % self.q])

    def __call__(self, n: int) -> complex:
        return complex(self._table[int(n) % self.q])

    def values(self) -> np.ndarray:
        """chi(a) for a = 0..q-1 (read-only view)."""
        v = self._table.view()
        v.flags.writeable = False
        return v

    def conjugate(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, (-self.index) % (self.q - 1))

    def __repr__(self):
        return f"DirichletCharacter(q={self.q}, index={self.index})"


def characters(q: Union[int, PrimeModulus], primitive_only: bool = True) -> list[DirichletCharacter]:
    mod = q if isinstance(q, PrimeModulus) else PrimeModulus(q)
    start = 1 if primitive_only else 0
    return [DirichletCharacter(mod, t) for t in range(start, mod.q - 1)]


def legendre_character(q: Union[int, PrimeModulus]) -> DirichletCharacter:
    mod = q if isinstance(q, PrimeModulus) else PrimeModulus(q)
    return DirichletCharacter(mod, (mod.q - 1) // 2)


def char_value(chi: DirichletCharacter, n: int) -> complex:
    return chi(n)


def gauss_sum(chi: DirichletCharacter) -> SumValue:
    """g_chi = sum_{a mod q} chi(a) e(a/q)."""
    if not chi.is_primitive:
        raise ValueError("character not primitive")
    q = chi.q
    terms = chi.values() * chi.modulus.roots
    return SumValue(complex(np.sum(terms)), _rounding_bound(q))


def ramanujan_sum(q: Union[int, PrimeModulus], a: int) -> int:
    """R_q(a) = sum over units z mod q of e(az/q), exactly (q prime or 1)."""
    qq = q.q if isinstance(q, PrimeModulus) else int(q)
    if qq == 1:
        return 1
    if not is_prime(qq):
        raise ValueError("modulus must be 1 or prime")
    return qq - 1 if int(a) % qq == 0 else -1
