"""Exhaustive counting of the congruence systems that arise after Cauchy-Schwarz.

Tuples (l1, l2, p1, p2, n1, n2, m) range over

    1 <= |n_i| <= R, (n_i, p_i) = 1,   |m| <= M,
    -inv(n1, p1) l1^2 p2 + inv(n2, p2) l2^2 p1 + m = 0 mod p1 p2,

with l1 != l2 for the S families and l1 = l2 for the D families. The split
is by m = 0 mod q (family *1*) or not (family *2*), then by the secondary
congruence mod q (*0* when it holds, *1* otherwise). Each family carries a
structural claim; the census checks it tuple by tuple and lists violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith import inv_mod, is_prime

FAMILIES = ("S10", "S11", "S20", "S21", "D10", "D11", "D20", "D21")
_ALIASES = {"Σ": "S", "Δ": "D"}
MAX_LISTED = 20


def family_name(name: str) -> str:
    s = name.strip()
    for a, b in _ALIASES.items():
        s = s.replace(a, b)
    s = s.replace("₀", "0").replace("₁", "1").replace("₂", "2").replace("_", "").upper()
    if s not in FAMILIES:
        raise ValueError(f"unknown census family {name!r}; expected one of {', '.join(FAMILIES)}")
    return s


@dataclass
class CensusConfig:
    q: int
    N: float
    L_set: tuple
    P_set: tuple
    eps: float = 0.05
    N0: float | None = None
    R: int | None = None
    M: int | None = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if not is_prime(self.q) or self.q <= 3:
            raise ValueError("q must be prime > 3")
        self.L_set = tuple(sorted(int(x) for x in self.L_set))
        self.P_set = tuple(sorted(int(x) for x in self.P_set))
        for x in self.L_set + self.P_set:
            if not is_prime(x) or x == self.q:
                raise ValueError(f"{x} must be a prime different from q")
        P = self.P
        if self.N0 is None:
            # the dyadic lower edge and the p1 = p2 hypothesis; take the stronger
            self.N0 = max(P ** (1 + self.eps), P * P * self.q ** (1 + self.eps) / self.N)
        if self.R is None:
            self.R = int(math.floor(self.N**self.eps * P * self.q / self.N))
        if self.M is None:
            self.M = int(math.floor(P * P * self.q ** (1 + self.eps) / self.N0))

    @property
    def P(self) -> int:
        return min(self.P_set)

    @property
    def L(self) -> int:
        return min(self.L_set)

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "N": self.N,
            "L_set": list(self.L_set),
            "P_set": list(self.P_set),
            "eps": self.eps,
            "N0": self.N0,
            "R": self.R,
            "M": self.M,
            "notes": list(self.notes),
        }


def _ell_pairs(cfg: CensusConfig, diagonal: bool):
    for l1 in cfg.L_set:
        for l2 in cfg.L_set:
            if (l1 == l2) == diagonal:
                yield l1, l2


def window(cfg: CensusConfig, family: str) -> dict:
    """Literal sufficient conditions for the family's claim, with the slack."""
    fam = family_name(family)
    diag = fam[0] == "D"
    q, R, M = cfg.q, cfg.R, cfg.M
    pmin, pmax = cfg.P, max(cfg.P_set)
    kind = fam[1:]
    out = {"family": fam, "asymptotic_form": {}}
    if kind == "10":
        red = max(
            ((l1 * l1 * p2 + l2 * l2 * p1) // math.gcd(l1 * l1, l2 * l2) for l1, l2 in _ell_pairs(cfg, diag) for p1 in cfg.P_set for p2 in cfg.P_set),
            default=0,
        )
        conds = {"R*max(l1^2 p2 + l2^2 p1)/g < q": R * red < q, "2M < P^2 q": 2 * M < pmin * pmin * q}
        out["values"] = {"R*max(l1^2 p2 + l2^2 p1)/g": R * red, "2M": 2 * M, "P^2 q": pmin * pmin * q}
        out["asymptotic_form"] = {"P^2 L^2 / N^(1-eps)": pmin**2 * cfg.L**2 / cfg.N ** (1 - cfg.eps)}
    elif kind == "11":
        conds = {"M < P q": M < pmin * q}
        out["values"] = {"M": M, "P q": pmin * q}
        out["asymptotic_form"] = {"N0 / P^(1+eps)": cfg.N0 / pmin ** (1 + cfg.eps)}
    elif kind == "20":
        lmax = max(cfg.L_set)
        conds = {"M R + L^2 P < P q": M * R + lmax * lmax * pmax < pmin * q}
        out["values"] = {"M R + L^2 P": M * R + lmax * lmax * pmax, "P q": pmin * q}
        out["asymptotic_form"] = {"N0 N / (P^2 q^(1+eps))": cfg.N0 * cfg.N / (pmin**2 * cfg.q ** (1 + cfg.eps))}
    else:
        conds = {"L and P disjoint": not (set(cfg.L_set) & set(cfg.P_set))}
        out["values"] = {}
    out["conditions"] = conds
    out["holds"] = all(conds.values())
    return out


def _n_range(R: int, p: int) -> np.ndarray:
    n = np.concatenate([np.arange(-R, 0), np.arange(1, R + 1)])
    return n[n % p != 0]


def _inv_array(n: np.ndarray, p: int) -> np.ndarray:
    return np.array([inv_mod(int(x), p) for x in n], dtype=np.int64)


def _admissible(cfg, l1, l2, p1, p2):
    """Broadcast arrays n1[:,None,None], n2[None,:,None], m[None,None,:] and the
    mod p1 p2 condition as a boolean cube."""
    R, M = cfg.R, cfg.M
    n1 = _n_range(R, p1)
    n2 = _n_range(R, p2)
    m = np.arange(-M, M + 1, dtype=np.int64)
    mod = p1 * p2
    # inv(n1, p1) * p2 is well defined mod p1 p2
    a1 = (_inv_array(n1, p1) * (l1 * l1 % mod) * p2) % mod
    a2 = (_inv_array(n2, p2) * (l2 * l2 % mod) * p1) % mod
    A = ((-a1[:, None, None] + a2[None, :, None] + m[None, None, :]) % mod) == 0
    return n1, n2, m, A


def congruence_census(cfg: CensusConfig, family: str) -> dict:
    fam = family_name(family)
    diag = fam[0] == "D"
    kind = fam[1:]
    q = cfg.q
    win = window(cfg, fam)
    bound = math.ceil(2 * cfg.R / cfg.P) + 1
    counter: list[dict] = []
    n_counter = 0
    solutions = 0
    tuples = 0

    def note(rec):
        nonlocal n_counter
        n_counter += 1
        if len(counter) < MAX_LISTED:
            counter.append(rec)

    for l1, l2 in _ell_pairs(cfg, diag):
        for p1 in cfg.P_set:
            for p2 in cfg.P_set:
                n1, n2, m, A = _admissible(cfg, l1, l2, p1, p2)
                if len(n1) == 0 or len(n2) == 0:
                    continue
                tuples += A.size
                N1 = n1[:, None, None]
                N2 = n2[None, :, None]
                Mm = m[None, None, :]
                base = {"l1": l1, "l2": l2, "p1": p1, "p2": p2}
                if kind in ("10", "11"):
                    sec = ((n2[None, :] * l1 * l1 * p2 - n1[:, None] * l2 * l2 * p1) % q) == 0
                    sel = A & (Mm % q == 0) & (sec[:, :, None] if kind == "10" else ~sec[:, :, None])
                    solutions += int(sel.sum())
                    if kind == "10":
                        # the mod q congruence forces equality, whether or not m survives
                        bad = sec & (n2[None, :] * l1 * l1 * p2 != n1[:, None] * l2 * l2 * p1)
                        for i, j in zip(*np.nonzero(bad)):
                            note({**base, "n1": int(n1[i]), "n2": int(n2[j]), "claim": "n2 l1^2 p2 = n1 l2^2 p1"})
                        cnt = sel.sum(axis=2)
                        for i, j in zip(*np.nonzero(cnt > 1)):
                            ms = m[sel[i, j]].tolist()
                            note({**base, "n1": int(n1[i]), "n2": int(n2[j]), "m": ms[:5], "claim": "at most one m"})
                    else:
                        hit = np.nonzero(sel)
                        for i, j, k in zip(*hit):
                            mm = int(m[k])
                            if p1 == p2 and mm != 0:
                                note({**base, "n1": int(n1[i]), "n2": int(n2[j]), "m": mm, "claim": "m = 0"})
                            elif p1 != p2 and math.gcd(mm, p1 * p2) != 1:
                                note({**base, "n1": int(n1[i]), "n2": int(n2[j]), "m": mm, "claim": "(m, p1 p2) = 1"})
                else:
                    unit = Mm % q != 0
                    mb = np.array([inv_mod(int(x), q) if x % q else 0 for x in m], dtype=np.int64)
                    c1 = ((n1[:, None] - mb[None, :] * (l1 * l1 * p2 % q)) % q) == 0  # (n1, m)
                    c2 = ((n2[:, None] + mb[None, :] * (l2 * l2 * p1 % q)) % q) == 0  # (n2, m)
                    sec = c1[:, None, :] & c2[None, :, :]
                    sel = A & unit & (sec if kind == "20" else ~sec)
                    solutions += int(sel.sum())
                    if kind == "20":
                        ok = (Mm * N1 == l1 * l1 * p2) & (Mm * N2 == -l2 * l2 * p1)
                        for i, j, k in zip(*np.nonzero(sel & ~ok)):
                            note({**base, "n1": int(n1[i]), "n2": int(n2[j]), "m": int(m[k]), "claim": "m n1 = l1^2 p2, m n2 = -l2^2 p1"})
                    elif p1 != p2:
                        c_n1 = sel.any(axis=1).sum(axis=0)  # distinct n1 per m
                        c_n2 = sel.any(axis=0).sum(axis=0)  # distinct n2 per m
                        for k in np.nonzero((c_n1 > bound) | (c_n2 > bound))[0]:
                            note({**base, "m": int(m[k]), "n1_count": int(c_n1[k]), "n2_count": int(c_n2[k]), "bound": bound, "claim": "n_i count <= ceil(2R/P) + 1"})
                    else:
                        c_n2 = sel.sum(axis=1)  # (n1, m)
                        for i, k in zip(*np.nonzero(c_n2 > bound)):
                            note({**base, "n1": int(n1[i]), "m": int(m[k]), "n2_count": int(c_n2[i, k]), "bound": bound, "claim": "n2 count <= ceil(2R/P) + 1"})
    return {
        "family": fam,
        "config": cfg.to_json(),
        "window": {k: v for k, v in win.items() if k != "family"},
        "in_window": win["holds"],
        "tuples": int(tuples),
        "solutions": int(solutions),
        "counterexample_count": n_counter,
        "counterexamples": counter,
        "passed": n_counter == 0,
    }


def census_sweep(cfg: CensusConfig, families=FAMILIES) -> list[dict]:
    return [congruence_census(cfg, f) for f in families]
