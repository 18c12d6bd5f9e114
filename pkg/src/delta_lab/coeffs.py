"""Hecke eigenvalues of weight-k prime-level newforms with trivial character.

Integer coefficients a_n are the source of truth; the analytic normalisation
lambda(n) = a_n n^{-(k-1)/2} is applied on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arith import is_prime

ETA11_LABEL = "11.2.a.a"


class CoefficientError(ValueError):
    """Raised when a coefficient table fails to parse or violates an invariant."""


def smallest_prime_factor(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in range(2, int(math.isqrt(n)) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    idx = np.arange(n + 1)
    mask = (spf == 0) & (idx >= 2)
    spf[mask] = idx[mask]
    return spf


def _prime_list(n: int) -> np.ndarray:
    spf = smallest_prime_factor(n)
    idx = np.arange(n + 1)
    return idx[(spf == idx) & (idx >= 2)]


@dataclass(frozen=True)
class HeckeCoefficients:
    """a[n] for 1 <= n <= nmax (a[0] is an unused zero)."""

    level: int
    weight: int
    label: str
    a: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=np.int64).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "a", arr)

    @property
    def nmax(self) -> int:
        return len(self.a) - 1

    def coefficient(self, n: int) -> int:
        if not 1 <= n <= self.nmax:
            raise IndexError(f"n={n} outside coefficient horizon [1, {self.nmax}]")
        return int(self.a[n])

    def lam(self, n):
        """Analytic normalisation a_n n^{-(k-1)/2}; accepts scalars or arrays."""
        n_arr = np.asarray(n)
        if n_arr.size and (n_arr.min() < 1 or n_arr.max() > self.nmax):
            raise IndexError(f"n outside coefficient horizon [1, {self.nmax}]")
        out = self.a[n_arr] * np.power(n_arr.astype(float), -(self.weight - 1) / 2.0)
        return float(out) if np.ndim(out) == 0 else out

    def lam_array(self, upto: int | None = None) -> np.ndarray:
        """lambda(n) for n = 0..upto with lambda(0) = 0."""
        upto = self.nmax if upto is None else upto
        if upto > self.nmax:
            raise IndexError(f"horizon {upto} exceeds nmax={self.nmax}")
        n = np.arange(upto + 1, dtype=float)
        n[0] = 1.0
        out = self.a[: upto + 1] * n ** (-(self.weight - 1) / 2.0)
        out[0] = 0.0
        return out

    def require(self, horizon: int):
        if horizon > self.nmax:
            raise CoefficientError(f"coefficient horizon exhausted: need {horizon}, have {self.nmax}")

    def truncated(self, nmax: int) -> "HeckeCoefficients":
        self.require(nmax)
        return HeckeCoefficients(self.level, self.weight, self.label, self.a[: nmax + 1])


def analytic_lambda(c: HeckeCoefficients, n: int) -> float:
    return c.lam(n)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate(c: HeckeCoefficients) -> None:
    """Check a_1 = 1, Deligne at primes, Hecke recursion at prime powers and
    multiplicativity, raising CoefficientError naming the first failure."""
    a = c.a
    n = c.nmax
    k = c.weight
    q = c.level
    if n < 1 or a[1] != 1:
        raise CoefficientError("a_1 must equal 1")
    spf = smallest_prime_factor(n)
    primes = np.nonzero((spf == np.arange(n + 1)) & (np.arange(n + 1) >= 2))[0]
    for p in primes:
        p = int(p)
        ap = int(a[p])
        if p == q:
            ok = ap * ap == q ** (k - 2)
        else:
            ok = ap * ap <= 4 * p ** (k - 1)
        if not ok:
            raise CoefficientError(f"Deligne bound violated at p={p}")
    for p in primes:
        p = int(p)
        if p * p > n:
            break
        ap = int(a[p])
        prev, cur = 1, ap
        pr = p
        while pr * p <= n:
            nxt = ap * cur if p == q else ap * cur - p ** (k - 1) * prev
            pr *= p
            if int(a[pr]) != nxt:
                raise CoefficientError(f"Hecke recursion violated at n={pr}")
            prev, cur = cur, nxt
    # multiplicativity: a_n = a_{p^e} a_{n/p^e} with p the smallest prime factor
    idx = np.arange(2, n + 1)
    p = spf[2:]
    pe = p.copy()
    rest = idx // p
    while True:
        more = rest % p == 0
        if not more.any():
            break
        pe = np.where(more, pe * p, pe)
        rest = np.where(more, rest // p, rest)
    composite = rest > 1
    bad = composite & (a[idx] != a[pe] * a[rest])
    if bad.any():
        raise CoefficientError(f"multiplicativity violated at n={int(idx[np.argmax(bad)])}")


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------


def euler_product_series(nmax: int) -> np.ndarray:
    """Coefficients of prod_{n>=1} (1 - x^n) up to x^nmax (pentagonal numbers)."""
    e = np.zeros(nmax + 1, dtype=np.int64)
    e[0] = 1
    j = 1
    while True:
        sign = -1 if j % 2 else 1
        g1 = j * (3 * j - 1) // 2
        g2 = j * (3 * j + 1) // 2
        if g1 > nmax:
            break
        e[g1] += sign
        if g2 <= nmax:
            e[g2] += sign
        j += 1
    return e


def _sparse_product(f: np.ndarray, g: np.ndarray, nmax: int) -> np.ndarray:
    out = np.zeros(nmax + 1, dtype=np.int64)
    fi = np.nonzero(f)[0]
    gi = np.nonzero(g)[0]
    for i in fi:
        js = gi[gi <= nmax - i]
        np.add.at(out, i + js, f[i] * g[js])
    return out


def _square_series(g: np.ndarray, nmax: int) -> np.ndarray:
    """g^2 truncated at x^nmax; float FFT rounded to integers and checked."""
    size = 1 << int(math.ceil(math.log2(2 * (nmax + 1))))
    G = np.fft.rfft(g[: nmax + 1].astype(float), size)
    sq = np.fft.irfft(G * G, size)[: nmax + 1]
    out = np.rint(sq)
    dev = float(np.max(np.abs(sq - out))) if len(sq) else 0.0
    if dev >= 1e-3:
        raise ArithmeticError(f"FFT convolution not exact (deviation {dev:.3g})")
    return out.astype(np.int64)


def eta_product_backend(nmax: int) -> HeckeCoefficients:
    """Level 11 weight 2 newform as x prod (1-x^n)^2 (1-x^{11n})^2."""
    if not 1 <= nmax <= 10**6:
        raise ValueError("nmax must lie in [1, 10^6]")
    m = nmax - 1
    e = euler_product_series(m)
    e11 = np.zeros(m + 1, dtype=np.int64)
    e11[::11] = e[: m // 11 + 1]
    g = _sparse_product(e, e11, m)
    sq = _square_series(g, m)
    a = np.zeros(nmax + 1, dtype=np.int64)
    a[1:] = sq
    return HeckeCoefficients(11, 2, ETA11_LABEL, a)


def eta_product_exact(nmax: int) -> np.ndarray:
    """Reference a_1..a_nmax by integer shift-and-add multiplication; O(nmax^2)."""
    m = nmax - 1
    series = np.zeros(m + 1, dtype=object)
    series[0] = 1
    for n in range(1, m + 1):
        for step in (n, n, 11 * n, 11 * n):
            if step > m:
                continue
            series[step:] = series[step:] - series[:-step].copy()
    return np.concatenate([[0], series]).astype(np.int64)


def _affine_points(ainv, p: int) -> int:
    """#{(x, y) in F_p^2 : y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6}."""
    a1, a2, a3, a4, a6 = (int(t) % p for t in ainv)
    x = np.arange(p, dtype=np.int64)
    rhs = (((x + a2) * x % p + a4) * x % p + a6) % p
    if p == 2:
        total = 0
        for y in range(2):
            lhs = (y * y + a1 * x * y + a3 * y) % p
            total += int(np.sum(lhs == rhs))
        return total
    b = (a1 * x + a3) % p
    disc = (b * b + 4 * rhs) % p
    sq = np.zeros(p, dtype=np.int64)
    np.add.at(sq, (np.arange(p, dtype=np.int64) ** 2) % p, 1)
    return int(np.sum(sq[disc]))


def point_count_backend(ainv, level: int, nmax: int, label: str = "") -> HeckeCoefficients:
    """Coefficients of the newform attached to an elliptic curve of prime
    conductor `level`, via a_p = p - #affine points and multiplicativity."""
    if not is_prime(level):
        raise ValueError("level must be prime")
    a = np.zeros(nmax + 1, dtype=np.int64)
    a[1] = 1
    primes = _prime_list(nmax)
    for p in primes:
        p = int(p)
        ap = p - _affine_points(ainv, p)
        a[p] = ap
        prev, cur, pr = 1, ap, p
        while pr * p <= nmax:
            nxt = ap * cur if p == level else ap * cur - p * prev
            pr *= p
            a[pr] = nxt
            prev, cur = cur, nxt
    spf = smallest_prime_factor(nmax)
    for n in range(2, nmax + 1):
        p = int(spf[n])
        pe, rest = p, n // p
        while rest % p == 0:
            pe *= p
            rest //= p
        if rest > 1:
            a[n] = a[pe] * a[rest]
    return HeckeCoefficients(level, 2, label or f"{level}.2.a.a", a)


# a-invariants of the optimal curves of conductors 11, 17, 19
CURVES = {
    11: (0, -1, 1, -10, -20),
    17: (1, -1, 1, -1, -14),
    19: (0, 1, 1, -9, -15),
}


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


def format_coefficients(c: HeckeCoefficients) -> str:
    lines = [f"LEVEL={c.level} WEIGHT={c.weight} LABEL={c.label} NMAX={c.nmax}"]
    lines.extend(f"{n} {int(c.a[n])}" for n in range(1, c.nmax + 1))
    return "\n".join(lines) + "\n"


def write_coefficients(c: HeckeCoefficients, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_coefficients(c))


def parse_coefficients(text: str) -> HeckeCoefficients:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CoefficientError("line 1: empty file")
    for i, line in enumerate(lines, 1):
        if line.endswith("\r"):
            raise CoefficientError(f"line {i}: CR line ending")
        if line != line.rstrip():
            raise CoefficientError(f"line {i}: trailing whitespace")
    header = {}
    for tok in lines[0].split(" "):
        key, sep, val = tok.partition("=")
        if not sep:
            raise CoefficientError(f"line 1: malformed header token {tok!r}")
        header[key] = val
    if list(header) != ["LEVEL", "WEIGHT", "LABEL", "NMAX"]:
        raise CoefficientError("line 1: header must be LEVEL=.. WEIGHT=.. LABEL=.. NMAX=..")
    try:
        level, weight, nmax = int(header["LEVEL"]), int(header["WEIGHT"]), int(header["NMAX"])
    except ValueError as exc:
        raise CoefficientError(f"line 1: {exc}") from None
    if not is_prime(level):
        raise CoefficientError("line 1: LEVEL must be prime")
    if weight < 2 or weight % 2:
        raise CoefficientError("line 1: WEIGHT must be an even integer >= 2")
    if len(lines) - 1 != nmax:
        raise CoefficientError(f"line {len(lines) + 1}: expected {nmax} coefficient lines, found {len(lines) - 1}")
    a = np.zeros(nmax + 1, dtype=np.int64)
    for i, line in enumerate(lines[1:], 2):
        parts = line.split(" ")
        if len(parts) != 2:
            raise CoefficientError(f"line {i}: expected '<n> <a_n>'")
        try:
            n, an = int(parts[0]), int(parts[1])
        except ValueError:
            raise CoefficientError(f"line {i}: non-integer field") from None
        if n != i - 1:
            raise CoefficientError(f"line {i}: expected n={i - 1}, found n={n}")
        a[n] = an
    return HeckeCoefficients(level, weight, header["LABEL"], a)


def file_backend(path) -> HeckeCoefficients:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    c = parse_coefficients(path.read_text(encoding="utf-8"))
    validate(c)
    return c


def bundled_level_file(level: int) -> Path:
    return Path(__file__).with_name("data") / f"{level}.txt"


# ---------------------------------------------------------------------------
# property diagnostics
# ---------------------------------------------------------------------------


def hecke_relation_defects(c: HeckeCoefficients, ell: int, mmax: int) -> np.ndarray:
    """Those m <= mmax, coprime to the level, where the integer relation
    a_m a_l = sum_{d | (m,l)} d^{k-1} a_{ml/d^2} fails."""
    if ell % c.level == 0:
        raise ValueError("ell must be coprime to the level")
    c.require(mmax * ell)
    m = np.arange(1, mmax + 1)
    m = m[m % c.level != 0]
    lhs = c.a[m] * c.a[ell]
    rhs = c.a[m * ell].copy()
    div = m % ell == 0
    rhs[div] += ell ** (c.weight - 1) * c.a[m[div] // ell]
    return m[lhs != rhs]


def amplifier_defects(c: HeckeCoefficients, ell_max: int) -> list[int]:
    """Primes l <= ell_max, l != level, with a_l^2 - a_{l^2} != l^{k-1}."""
    bad = []
    for ell in _prime_list(ell_max):
        ell = int(ell)
        if ell == c.level:
            continue
        c.require(ell * ell)
        if int(c.a[ell]) ** 2 - int(c.a[ell * ell]) != ell ** (c.weight - 1):
            bad.append(ell)
    return bad


def rankin_selberg_ratio(c: HeckeCoefficients, X: int) -> float:
    """(1/X) sum_{n <= X} lambda(n)^2."""
    X = int(X)
    c.require(X)
    lam = c.lam_array(X)
    return float(np.sum(lam[1:] ** 2) / X)

