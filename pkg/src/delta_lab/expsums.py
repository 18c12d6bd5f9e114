"""Complete character and exponential sums over F_q: the trivial delta identity,
the sums D and C, the closed forms for C, and cancellation censuses."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arith import (
    DirichletCharacter,
    SumValue,
    _rounding_bound,
    ramanujan_sum,
    unit_root,
    unit_roots,
)


class NotApplicable:
    """Returned where only an O(sqrt q) bound is known; carries the reason."""

    def __init__(self, reason: str):
        self.reason = reason

    def __repr__(self):
        return f"NotApplicable({self.reason!r})"

    def __bool__(self):
        return False


@dataclass(frozen=True)
class CSumParams:
    """Arguments of C: alpha plays l2^2 p1 and gamma plays l1^2 p2."""

    n1: int
    n2: int
    m: int
    alpha: int
    gamma: int
    chi: DirichletCharacter

    @property
    def q(self) -> int:
        return self.chi.q


def _divisors(n: int) -> list[int]:
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d * d != n:
                out.append(n // d)
        d += 1
    return sorted(out)


def trivial_delta(n: int, q: int) -> SumValue:
    """(1/q) sum_{c | q} sum*_{a mod c} e(an/c).

    Equals the Kronecker delta of n whenever q > |n|; for q <= |n| it is still
    evaluated, which exhibits the failure of detection.
    """
    if q < 1:
        raise ValueError("q must be positive")
    total = 0.0 + 0.0j
    terms = 0
    for c in _divisors(q):
        a = np.arange(c)
        a = a[np.gcd(a, c) == 1]
        z = unit_roots(c)[(a * (n % c)) % c]
        total += complex(np.sum(z))
        terms += len(a)
    return SumValue(total / q, _rounding_bound(terms) / q)


def trivial_delta_table(q: int, n: np.ndarray) -> np.ndarray:
    """Vectorised trivial_delta for many n at one modulus q."""
    n = np.asarray(n, dtype=np.int64)
    out = np.zeros(n.shape, dtype=complex)
    for c in _divisors(q):
        a = np.arange(c)
        a = a[np.gcd(a, c) == 1]
        roots = unit_roots(c)
        out += roots[(np.multiply.outer(n % c, a)) % c].sum(axis=-1)
    return out / q


def sum_D(m: int, n: int, ell: int, p: int, chi: DirichletCharacter, ell_power: int = 2) -> SumValue:
    """D(m,n,l,p) = sum*_{alpha mod q} conj(chi)(n + alpha) e(inv(alpha p) m l^2 / q)."""
    mod = chi.modulus
    q = mod.q
    if p % q == 0:
        raise ValueError("p must be coprime to q")
    pbar = mod.inv(p)
    alpha = np.arange(1, q)
    abar = mod.inverses[alpha]
    lk = pow(int(ell), ell_power, q)
    phase = mod.roots[(abar * pbar % q) * (int(m) % q * lk % q) % q]
    vals = np.conj(chi.values()[(int(n) + alpha) % q]) * phase
    return SumValue(complex(np.sum(vals)), _rounding_bound(q - 1))


def sum_D_table(chi: DirichletCharacter, ell: int, p: int, ell_power: int = 2) -> np.ndarray:
    """D[m mod q, n mod q] for fixed l, p."""
    mod = chi.modulus
    q = mod.q
    pbar = mod.inv(p)
    lk = pow(int(ell), ell_power, q)
    alpha = np.arange(1, q)
    abar = mod.inverses[alpha]
    r = np.arange(q)
    # phase[m, alpha] and chibar[n, alpha]
    phase = mod.roots[np.multiply.outer(r * lk % q, abar * pbar % q) % q]
    chib = np.conj(chi.values())[np.add.outer(r, alpha) % q]
    return phase @ chib.T


def _check_c_params(p: CSumParams):
    q = p.q
    if (p.alpha * p.gamma) % q == 0:
        raise ValueError("(alpha*gamma, q) must be 1")


def sum_C_bruteforce(p: CSumParams) -> SumValue:
    """Direct sum over z in F_q^x with m + gamma/z != 0 of
    conj(chi)(n1 + z) chi(n2 + alpha/(m + gamma/z))."""
    _check_c_params(p)
    mod = p.chi.modulus
    q = mod.q
    z = np.arange(1, q)
    w = (p.m + p.gamma * mod.inverses[z]) % q
    keep = w != 0
    z, w = z[keep], w[keep]
    chiv = p.chi.values()
    vals = np.conj(chiv[(p.n1 + z) % q]) * chiv[(p.n2 + p.alpha * mod.inverses[w]) % q]
    return SumValue(complex(np.sum(vals)), _rounding_bound(q))


def c_case(p: CSumParams) -> str:
    """'i' (q | m), 'iii' (degenerate m != 0 case) or 'ii' (generic)."""
    q = p.q
    if p.m % q == 0:
        return "i"
    mbar = p.chi.modulus.inv(p.m)
    if (p.n1 - mbar * p.gamma) % q == 0 and (p.n2 + mbar * p.alpha) % q == 0:
        return "iii"
    return "ii"


def _chi_of(chi: DirichletCharacter, num_exps: list[int]) -> complex:
    # chi of a product given as exponent list (exact at exponent level)
    k = sum(num_exps) % (chi.q - 1)
    return unit_root(k, chi.q - 1)


def c_closed_form(p: CSumParams):
    """Exact value of C when it is decidable, else NotApplicable.

    case i   (q | m):        chi(alpha/gamma) R_q(n2 - n1 alpha/gamma) - chi(n2/n1)
    case iii (m != 0, n1 = gamma/m, n2 = -alpha/m):
             -chi(m n2 / gamma) for non-quadratic chi,
             (q - 2) chi(n2 gamma / m) for quadratic chi.
    """
    _check_c_params(p)
    chi = p.chi
    mod = chi.modulus
    q = mod.q
    if (p.n1 * p.n2) % q == 0:
        raise ValueError("(n1*n2, q) must be 1")
    t = chi.index
    e = lambda a: t * mod.dlog(a)  # noqa: E731
    case = c_case(p)
    if case == "i":
        k = p.alpha * mod.inv(p.gamma) % q
        val = _chi_of(chi, [e(k)]) * ramanujan_sum(q, p.n2 - p.n1 * k) - _chi_of(
            chi, [e(p.n2), -e(p.n1)]
        )
        return SumValue(val, _rounding_bound(4))
    if case == "iii":
        if chi.is_quadratic:
            # chi(m) = chi(1/m) for quadratic chi
            val = (q - 2) * _chi_of(chi, [-e(p.m), e(p.n2), e(p.gamma)])
        else:
            val = -_chi_of(chi, [e(p.m), e(p.n2), -e(p.gamma)])
        return SumValue(val, _rounding_bound(4) * q)
    return NotApplicable("q does not divide m and the degenerate condition fails: only C << sqrt(q) is known")


def quadratic_value_q_minus_1(p: CSumParams) -> complex:
    """The value chi(n2 gamma / m)(q - 1) quoted for the quadratic degenerate case.

    Kept for comparison only; the direct sum equals (q - 2) chi(n2 gamma / m).
    """
    chi = p.chi
    mod = chi.modulus
    t = chi.index
    return (p.q - 1) * _chi_of(chi, [-t * mod.dlog(p.m), t * mod.dlog(p.n2), t * mod.dlog(p.gamma)])


# ---------------------------------------------------------------------------
# Vectorised evaluation over many tuples (censuses and exhaustive checks)
# ---------------------------------------------------------------------------


def c_bruteforce_batch(chi: DirichletCharacter, n1, n2, m, alpha, gamma) -> np.ndarray:
    """sum_C_bruteforce for arrays of tuples (all residues mod q)."""
    mod = chi.modulus
    q = mod.q
    n1, n2, m, alpha, gamma = (np.asarray(x, dtype=np.int64) % q for x in (n1, n2, m, alpha, gamma))
    if np.any(alpha * gamma % q == 0):
        raise ValueError("(alpha*gamma, q) must be 1")
    z = np.arange(1, q, dtype=np.int64)
    zbar = mod.inverses[z]
    w = (m[:, None] + gamma[:, None] * zbar[None, :]) % q
    chiv = chi.values()
    winv = mod.inverses[w]
    vals = np.conj(chiv[(n1[:, None] + z[None, :]) % q]) * chiv[(n2[:, None] + alpha[:, None] * winv) % q]
    vals = np.where(w != 0, vals, 0.0)
    return vals.sum(axis=1)


def exhaustive_closed_form_check(chi: DirichletCharacter, batch: int = 1 << 15) -> dict:
    """Compare c_closed_form with brute force over every admissible tuple in
    cases i and iii. Returns counts and the worst discrepancy."""
    mod = chi.modulus
    q = mod.q
    units = np.arange(1, q, dtype=np.int64)
    worst = 0.0
    worst_tuple = None
    count = 0
    # case i: m = 0, (n1, n2, alpha, gamma) units
    grid = np.stack(np.meshgrid(units, units, units, units, indexing="ij"), -1).reshape(-1, 4)
    t = chi.index
    dl = mod.dlog_table
    roots = unit_roots(q - 1)
    for s in range(0, len(grid), batch):
        g = grid[s : s + batch]
        n1, n2, al, ga = g.T
        bf = c_bruteforce_batch(chi, n1, n2, np.zeros_like(n1), al, ga)
        k = al * mod.inverses[ga] % q
        r = np.where((n2 - n1 * k) % q == 0, q - 1, -1)
        cf = roots[(t * dl[k]) % (q - 1)] * r - roots[(t * (dl[n2] - dl[n1])) % (q - 1)]
        d = np.abs(bf - cf)
        i = int(np.argmax(d))
        if d[i] > worst:
            worst = float(d[i])
            worst_tuple = dict(case="i", m=0, n1=int(n1[i]), n2=int(n2[i]), alpha=int(al[i]), gamma=int(ga[i]))
        count += len(g)
    # case iii: m, alpha, gamma units; n1 = gamma/m, n2 = -alpha/m
    grid = np.stack(np.meshgrid(units, units, units, indexing="ij"), -1).reshape(-1, 3)
    m, al, ga = grid.T
    mbar = mod.inverses[m]
    n1 = ga * mbar % q
    n2 = (-al * mbar) % q
    bf = c_bruteforce_batch(chi, n1, n2, m, al, ga)
    if chi.is_quadratic:
        cf = (q - 2) * roots[(t * (-dl[m] + dl[n2] + dl[ga])) % (q - 1)]
    else:
        cf = -roots[(t * (dl[m] + dl[n2] - dl[ga])) % (q - 1)]
    d = np.abs(bf - cf)
    i = int(np.argmax(d))
    if d[i] > worst:
        worst = float(d[i])
        worst_tuple = dict(case="iii", m=int(m[i]), n1=int(n1[i]), n2=int(n2[i]), alpha=int(al[i]), gamma=int(ga[i]))
    count += len(grid)
    return {"q": q, "chi_index": chi.index, "tuples": count, "max_abs_diff": worst, "worst_tuple": worst_tuple}


def _generic_tuples(q: int, rng: np.random.Generator | None, samples: int | None):
    units = np.arange(1, q, dtype=np.int64)
    if rng is None:
        g = np.stack(np.meshgrid(units, units, units, units, units, indexing="ij"), -1).reshape(-1, 5)
    else:
        g = rng.integers(1, q, size=(samples, 5), dtype=np.int64)
    return g


def cancellation_census(
    chi: DirichletCharacter,
    sample_count: int = 100_000,
    seed: int = 0,
    exhaustive_below: int = 13,
    ceiling: int = 499,
    bucket_width: float = 0.25,
    batch: int = 1 << 14,
) -> dict:
    """max |C|/sqrt(q) over case-ii tuples, exhaustive for q <= exhaustive_below.

    Tuples are (m, n1, n2, alpha, gamma) with all entries units mod q; m is a
    unit so case i never occurs, and case iii tuples are dropped.
    """
    mod = chi.modulus
    q = mod.q
    if q > ceiling:
        raise ValueError(f"q={q} exceeds census ceiling {ceiling}")
    exhaustive = q <= exhaustive_below
    rng = None if exhaustive else np.random.default_rng(seed)
    g = _generic_tuples(q, rng, sample_count)
    m, n1, n2, al, ga = g.T
    mbar = mod.inverses[m]
    degenerate = ((n1 - mbar * ga) % q == 0) & ((n2 + mbar * al) % q == 0)
    g = g[~degenerate]
    ratios = []
    for s in range(0, len(g), batch):
        b = g[s : s + batch]
        m, n1, n2, al, ga = b.T
        ratios.append(np.abs(c_bruteforce_batch(chi, n1, n2, m, al, ga)) / math.sqrt(q))
    r = np.concatenate(ratios) if ratios else np.zeros(0)
    edges = np.floor(r / bucket_width + 1e-12).astype(int)
    hist = sorted((round(b * bucket_width, 6), int(c)) for b, c in zip(*np.unique(edges, return_counts=True)))
    return {
        "q": q,
        "chi_index": chi.index,
        "case": "ii",
        "samples": int(len(r)),
        "exhaustive": exhaustive,
        "max_ratio": float(r.max()) if len(r) else 0.0,
        "histogram": [[b, c] for b, c in hist],
        "seed": None if exhaustive else seed,
    }


def d_census(chi: DirichletCharacter, ell_values=(1, 2, 3), p_values=(1, 2, 3, 5)) -> dict:
    """Empirical max |D|/sqrt(q) over all m, n mod q and the given l, p."""
    q = chi.q
    worst = 0.0
    for ell in ell_values:
        if ell % q == 0:
            continue
        for p in p_values:
            if p % q == 0:
                continue
            tab = sum_D_table(chi, ell, p)
            worst = max(worst, float(np.abs(tab).max()))
    return {"q": q, "chi_index": chi.index, "max_ratio": worst / math.sqrt(q)}
