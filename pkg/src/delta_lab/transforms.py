"""Smooth weights, Fourier and Hankel-type transforms, and numerical checks of
twisted Poisson summation and holomorphic Voronoi summation."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from numpy.polynomial.legendre import leggauss
from scipy import special

from .arith import DirichletCharacter, SumValue, gauss_sum, inv_mod, unit_roots
from .coeffs import HeckeCoefficients

TWO_PI = 2.0 * math.pi


class QuadratureError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error {achieved:.3g})")
        self.achieved = achieved


class TruncationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# smooth weights
# ---------------------------------------------------------------------------


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = _psi(t)
    b = _psi(1.0 - t)
    return a / (a + b)


@dataclass(frozen=True)
class SmoothWeight:
    """x -> s((x - lo)/rise) * s((hi - x)/fall), optionally dilated by `scale`.

    Support is [lo, hi]*scale and the weight equals 1 on
    [lo + rise, hi - fall]*scale when that interval is nonempty.
    """

    kind: str
    lo: float
    rise: float
    hi: float
    fall: float
    scale: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float) / self.scale
        out = smooth_step((x - self.lo) / self.rise) * smooth_step((self.hi - x) / self.fall)
        return float(out) if out.ndim == 0 else out

    @property
    def support(self) -> tuple[float, float]:
        return self.lo * self.scale, self.hi * self.scale

    @property
    def plateau(self) -> tuple[float, float]:
        return (self.lo + self.rise) * self.scale, (self.hi - self.fall) * self.scale

    def dilate(self, lam: float) -> "SmoothWeight":
        """The weight x -> w(x / lam)."""
        return SmoothWeight(self.kind, self.lo, self.rise, self.hi, self.fall, self.scale * lam)

    def derivative(self, x, order: int = 1, h: float = 1e-3):
        """Central finite-difference derivative of the given order (<= 4)."""
        stencils = {
            1: ([-2, -1, 1, 2], [1 / 12, -2 / 3, 2 / 3, -1 / 12]),
            2: ([-2, -1, 0, 1, 2], [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]),
            3: ([-3, -2, -1, 1, 2, 3], [1 / 8, -1, 13 / 8, -13 / 8, 1, -1 / 8]),
            4: ([-3, -2, -1, 0, 1, 2, 3], [-1 / 6, 2, -13 / 2, 28 / 3, -13 / 2, 2, -1 / 6]),
        }
        if order not in stencils:
            raise ValueError("order must be 1..4")
        offs, coef = stencils[order]
        x = np.asarray(x, dtype=float)
        out = sum(c * self(x + o * h) for o, c in zip(offs, coef))
        return out / h**order

    def mass(self) -> float:
        """Exact integral: each smooth step contributes half its width."""
        lo, hi = self.plateau
        return float((hi - lo) + 0.5 * (self.rise + self.fall) * self.scale)


# W: bump on [1, 2] (the two steps meet at 1.45; unequal widths keep the
# Fourier transform free of exact integer zeros). V, U: plateaus.
W = SmoothWeight("W", 1.0, 0.45, 2.0, 0.55)
V = SmoothWeight("V", 0.5, 0.5, 3.0, 1.0)
U = SmoothWeight("U", 0.5, 0.5, 9.0, 1.0)


def weight(kind: str) -> SmoothWeight:
    return {"W": W, "V": V, "U": U}[kind]


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _gl(order: int):
    return leggauss(order)


def panel_nodes(a: float, b: float, panels: int, order: int = 16):
    """Nodes and weights of composite Gauss-Legendre on [a, b]."""
    x, w = _gl(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate(f, a: float, b: float, tol: float = 1e-12, panels: int = 4, order: int = 16, max_doublings: int = 16) -> SumValue:
    """Composite Gauss-Legendre, doubling the panel count until two successive
    results differ by at most tol * max(1, |I|)."""
    nodes, weights = panel_nodes(a, b, panels, order)
    prev = complex(np.dot(weights, f(nodes)))
    for _ in range(max_doublings):
        panels *= 2
        nodes, weights = panel_nodes(a, b, panels, order)
        cur = complex(np.dot(weights, f(nodes)))
        err = abs(cur - prev)
        if err <= tol * max(1.0, abs(cur)):
            return SumValue(cur, err)
        prev = cur
    raise QuadratureError("quadrature did not converge", err)


def fixed_rule(f, a: float, b: float, panels: int, order: int = 16) -> complex:
    nodes, weights = panel_nodes(a, b, panels, order)
    return complex(np.dot(weights, f(nodes)))


# ---------------------------------------------------------------------------
# Bessel functions
# ---------------------------------------------------------------------------


def bessel_j(nu: int, x):
    """Production J_nu (scipy)."""
    return special.jv(nu, x)


def bessel_j_reference(nu: int, x: float, seam: float = 16.0) -> float:
    """Independent J_nu for integer nu >= 0: power series below `seam`,
    Hankel asymptotic expansion above it."""
    x = float(x)
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x <= seam:
        term = (x / 2) ** nu / math.factorial(nu)
        total = term
        k = 0
        while True:
            k += 1
            term *= -(x * x / 4) / (k * (k + nu))
            total += term
            if abs(term) < 1e-18 * max(1.0, abs(total)) and k > x:
                return total
    mu = 4.0 * nu * nu
    P, Q = 1.0, 0.0
    term = 1.0
    k = 0
    best = float("inf")
    while k < 60:
        k += 1
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) > best:
            break
        best = abs(term)
        if k % 2:
            Q += term * (-1) ** ((k - 1) // 2)
        else:
            P += term * (-1) ** (k // 2)
        if best < 1e-17:
            break
    chi = x - (0.5 * nu + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (P * math.cos(chi) - Q * math.sin(chi))


def holomorphic_kernel(k: int, z):
    """2 pi i^k J_{k-1}(z), real for even k."""
    if k % 2:
        raise ValueError("weight must be even")
    sign = -1.0 if (k // 2) % 2 else 1.0
    if k == 2:
        return sign * TWO_PI * special.j1(z)
    return sign * TWO_PI * special.jv(k - 1, z)


# ---------------------------------------------------------------------------
# Fourier transform
# ---------------------------------------------------------------------------


def fourier_transform(w: SmoothWeight, y: float, tol: float = 1e-13) -> SumValue:
    """w^(y) = int w(x) e(-x y) dx."""
    a, b = w.support
    periods = abs(y) * (b - a)
    panels = max(4, int(2 * periods) + 1)
    return integrate(lambda x: w(x) * np.exp(-1j * TWO_PI * x * y), a, b, tol=tol, panels=panels)


def fourier_array(w: SmoothWeight, ys, chunk: int = 2048) -> np.ndarray:
    """Vectorised w^ at many y with a fixed rule sized for max |y|."""
    ys = np.asarray(ys, dtype=float)
    a, b = w.support
    ymax = float(np.max(np.abs(ys))) if ys.size else 0.0
    panels = max(64, int(2 * ymax * (b - a)) + 16)
    nodes, weights = panel_nodes(a, b, panels)
    cw = weights * w(nodes)
    out = np.empty(ys.shape, dtype=complex)
    flat = ys.ravel()
    res = out.ravel()
    for s in range(0, flat.size, chunk):
        yy = flat[s : s + chunk]
        res[s : s + chunk] = np.exp(-1j * TWO_PI * np.outer(yy, nodes)) @ cw
    return res.reshape(ys.shape)


# ---------------------------------------------------------------------------
# Hankel-type transform with the holomorphic kernel
# ---------------------------------------------------------------------------


def hankel_transform(w: SmoothWeight, y: float, k: int = 2, tol: float = 1e-12) -> SumValue:
    """F^+(y) = int F(x) 2 pi i^k J_{k-1}(4 pi sqrt(x y)) dx."""
    if y < 0:
        raise ValueError("y must be nonnegative")
    a, b = w.support
    # oscillations of the kernel across the support
    periods = 2.0 * math.sqrt(y) * (math.sqrt(b) - math.sqrt(a))
    panels = max(8, int(2 * periods) + 8)
    return integrate(
        lambda x: w(x) * holomorphic_kernel(k, 4 * math.pi * np.sqrt(x * y)),
        a,
        b,
        tol=tol,
        panels=panels,
    )


def hankel_array(w: SmoothWeight, ys, k: int = 2, nodes_per_period: int = 10, chunk: int = 512) -> np.ndarray:
    """Vectorised F^+(y), integrating in u = sqrt(x) so the kernel phase is
    linear; ys are processed in ascending buckets sized to their frequency."""
    ys = np.asarray(ys, dtype=float)
    out = np.empty(ys.size, dtype=float)
    flat = ys.ravel()
    order = np.argsort(flat)
    a, b = w.support
    ua, ub = math.sqrt(a), math.sqrt(b)
    for s in range(0, flat.size, chunk):
        idx = order[s : s + chunk]
        sq = np.sqrt(flat[idx])
        smax = float(sq.max())
        periods = 2.0 * smax * (ub - ua)
        panels = max(96, int(math.ceil(periods * nodes_per_period / 16.0)) + 8)
        u, wt = panel_nodes(ua, ub, panels)
        base = wt * w(u * u) * 2.0 * u
        kern = holomorphic_kernel(k, 4 * math.pi * np.outer(sq, u))
        out[idx] = kern @ base
    return out.reshape(ys.shape)


class HankelTable:
    """Chebyshev-panel interpolant of y -> F^+(y) in the variable s = sqrt(y).

    Zero beyond y_max, which callers only reach after truncation.
    """

    def __init__(self, w: SmoothWeight, y_max: float, k: int = 2, width: float = 0.2, degree: int = 24):
        self.w = w
        self.k = k
        self.width = width
        self.degree = degree
        self.s_max = math.sqrt(y_max)
        self.y_max = y_max
        npan = max(1, int(math.ceil(self.s_max / width)))
        self.panels = npan
        t = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
        left = np.arange(npan) * width
        s_nodes = left[:, None] + 0.5 * width * (t[None, :] + 1.0)
        vals = hankel_array(w, (s_nodes**2).ravel(), k).reshape(npan, degree + 1)
        # Chebyshev coefficients per panel from values at Chebyshev points
        V = _cheb.chebvander(t, degree)
        self.coef = np.linalg.solve(V, vals.T).T

    def __call__(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        s = np.sqrt(ys)
        idx = np.minimum((s / self.width).astype(np.int64), self.panels - 1)
        t = 2.0 * (s - idx * self.width) / self.width - 1.0
        inside = ys <= self.y_max
        idx = np.where(inside, idx, 0)
        c = self.coef[idx]
        # Clenshaw
        b1 = np.zeros_like(t)
        b2 = np.zeros_like(t)
        for j in range(self.degree, 0, -1):
            b1, b2 = 2.0 * t * b1 - b2 + c[..., j], b1
        val = t * b1 - b2 + c[..., 0]
        return np.where(inside, val, 0.0)


# horizon of the shared U^+ table; covers every decay radius used below
U_TABLE_YMAX = 16384.0


@functools.lru_cache(maxsize=4)
def hankel_table(w: SmoothWeight, k: int = 2, y_max: float = U_TABLE_YMAX) -> HankelTable:
    return HankelTable(w, y_max, k)


def hankel_eval(w: SmoothWeight, ys, k: int = 2, table_threshold: int = 4000) -> np.ndarray:
    """F^+ at many points: direct for few points, table-interpolated for many."""
    ys = np.asarray(ys, dtype=float)
    if ys.size <= table_threshold or float(ys.max()) > U_TABLE_YMAX:
        return hankel_array(w, ys, k)
    return hankel_table(w, k)(ys)


# ---------------------------------------------------------------------------
# weight-derived truncation radii
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _envelope(kind: str, transform: str):
    """(grid, running sup from the right) of |transform| sampled finely."""
    w = weight(kind)
    if transform == "fourier":
        ys = np.arange(0.0, 160.0, 0.05)
        vals = np.abs(fourier_array(w, ys))
    else:
        s = np.arange(0.0, math.sqrt(U_TABLE_YMAX), 0.01)
        ys = s * s
        vals = np.abs(hankel_table(w)(ys))
    tail_sup = np.maximum.accumulate(vals[::-1])[::-1]
    return ys, tail_sup


def decay_radius(kind: str, transform: str, rel: float) -> float:
    """Smallest sampled y0 with sup_{y >= y0} |w~(y)| <= rel * sup |w~|."""
    ys, tail = _envelope(kind, transform)
    ok = tail <= rel * tail[0]
    if not ok.any():
        raise TruncationError(f"decay below {rel:g} not reached within sampled range")
    return float(ys[np.argmax(ok)])


def tail_sup(kind: str, transform: str, y0: float) -> float:
    """Sampled sup_{y >= y0} |w~(y)|; 0 beyond the sampled range."""
    ys, tail = _envelope(kind, transform)
    i = np.searchsorted(ys, y0)
    return float(tail[i]) if i < len(ys) else 0.0


# default relative cutoff for dual-sum truncation
DUAL_CUTOFF = 1e-9
# single-sum checks need a longer dual sum: the lambda-weighted Voronoi tail
# at 1e-9 still carries ~1e-5 of the head mass
VERIFY_CUTOFF = 1e-11


def radius_multipliers(rel: float = DUAL_CUTOFF) -> dict:
    return {"K_W": decay_radius("W", "fourier", rel), "K_U": decay_radius("U", "hankel", rel)}


# ---------------------------------------------------------------------------
# Poisson summation with a character twist
# ---------------------------------------------------------------------------


def _ceil_frac(x: float) -> int:
    return int(math.floor(x)) + 1


def poisson_beta_sum(chi: DirichletCharacter, alpha: int, ell: int, c: int, h: int, ell_power: int = 2) -> complex:
    """Collapsed character sum over b mod [c, q] for dual frequency h:
    c_q chibar((h - alpha l^2 q_c) / c_q) g_chi when h = alpha l^2 q_c mod c_q, else 0,
    where c_q = c/(c, q) and q_c = q/(c, q)."""
    q = chi.q
    g = math.gcd(c, q)
    cq, qc = c // g, q // g
    lk = ell**ell_power
    k = h - alpha * lk * qc
    if k % cq:
        return 0.0j
    return cq * np.conj(chi((k // cq) if g == q else k * inv_mod(cq, q))) * gauss_sum(chi).value


def poisson_beta_sum_direct(chi: DirichletCharacter, alpha: int, ell: int, c: int, h: int, ell_power: int = 2) -> complex:
    """sum_{b mod [c,q]} chi(b) e(-alpha b l^2 / c + h b / [c,q]) by brute force."""
    q = chi.q
    r = c * q // math.gcd(c, q)
    b = np.arange(r)
    lk = ell**ell_power
    num = (-alpha * lk * (r // c) * b + h * b) % r
    return complex(np.sum(chi.values()[b % q] * unit_roots(r)[num]))


@dataclass
class PoissonReport:
    lhs: complex
    rhs: complex
    abs_diff: float
    rel_diff: float
    scale: float
    truncation: int
    tail_bound: float
    params: dict

    @property
    def passed(self) -> bool:
        return self.abs_diff < 1e-6 * self.scale

    def to_json(self) -> dict:
        return {
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "abs_diff": self.abs_diff,
            "rel_diff": self.rel_diff,
            "truncation": self.truncation,
            "tail_bound": self.tail_bound,
            "params": self.params,
        }


def poisson_verify(
    chi: DirichletCharacter,
    alpha: int,
    ell: int,
    c: int,
    N: float,
    truncation: int | None = None,
    ell_power: int = 2,
    tol: float = 1e-6,
) -> PoissonReport:
    """Compare sum_n chi(n) e(-alpha n l^k / c) W(n/N) with its Poisson dual
    (N/r) sum_{|h| <= T} B(h) W^(hN/r), r = [c, q], using the collapsed B."""
    if not chi.is_primitive:
        raise ValueError("character not primitive")
    q = chi.q
    if math.gcd(alpha, c) != 1:
        raise ValueError("(alpha, c) must be 1")
    Wn = W.dilate(N)
    lo, hi = Wn.support
    n = np.arange(math.ceil(lo), math.floor(hi) + 1)
    lk = pow(ell, ell_power)
    lhs = complex(np.sum(chi.values()[n % q] * unit_roots(c)[(-alpha * lk * n) % c] * Wn(n)))
    r = c * q // math.gcd(c, q)
    if truncation is None:
        truncation = int(math.ceil(radius_multipliers(VERIFY_CUTOFF)["K_W"] * r / N))
    h = np.arange(-truncation, truncation + 1)
    B = np.array([poisson_beta_sum(chi, alpha, ell, c, int(t), ell_power) for t in h])
    rhs = complex((N / r) * np.sum(B * fourier_array(W, h * N / r)))
    # tail estimate: the next block of the same length, summed in absolute value
    T = int(truncation)
    ht = np.concatenate([np.arange(T + 1, 2 * T + 2), np.arange(-2 * T - 1, -T)])
    Bt = np.array([poisson_beta_sum(chi, alpha, ell, c, int(t), ell_power) for t in ht])
    tail = float((N / r) * np.sum(np.abs(Bt * fourier_array(W, ht * N / r))))
    scale = max(1.0, float(np.sum(Wn(n))))
    diff = abs(lhs - rhs)
    rep = PoissonReport(
        lhs,
        rhs,
        diff,
        diff / max(abs(lhs), 1e-300),
        scale,
        int(truncation),
        tail,
        {"q": q, "chi_index": chi.index, "alpha": alpha, "ell": ell, "c": c, "N": N, "ell_power": ell_power},
    )
    if tail > tol * scale:
        rep.params["insufficient_truncation"] = True
    return rep


# ---------------------------------------------------------------------------
# holomorphic Voronoi summation
# ---------------------------------------------------------------------------


@dataclass
class VoronoiReport:
    lhs: complex
    rhs: complex
    abs_diff: float
    rel_diff: float
    fitted_eta: complex
    truncation: int
    tail_mass: float
    params: dict

    def to_json(self) -> dict:
        return {
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "abs_diff": self.abs_diff,
            "rel_diff": self.rel_diff,
            "fitted_eta": [self.fitted_eta.real, self.fitted_eta.imag],
            "truncation": self.truncation,
            "tail_mass": self.tail_mass,
            "params": self.params,
        }


def voronoi_sides(f: HeckeCoefficients, alpha: int, c: int, X: float, radius_rel: float = DUAL_CUTOFF, far_rel: float = 1e-13):
    """(lhs, dual sum without eta, head/tail magnitudes, truncation m).

    lhs  = sum_m lambda(m) e(alpha m / c) U(m / X)
    dual = (X / (c sqrt(q2))) sum_m lambda(m) e(-inv(alpha q2) m / c) U^+(m X / (q2 c^2))
    """
    q = f.level
    if math.gcd(alpha, c) != 1:
        raise ValueError("(alpha, c) must be 1")
    q1 = math.gcd(c, q)
    q2 = q // q1
    if math.gcd(q1, q2) != 1:
        raise ValueError("(q1, q2) must be 1")
    Ux = U.dilate(X)
    lo, hi = Ux.support
    m = np.arange(max(1, math.ceil(lo)), math.floor(hi) + 1)
    f.require(int(m[-1]))
    lam = f.lam_array(int(m[-1]))
    lhs = complex(np.sum(lam[m] * unit_roots(c)[(alpha * m) % c] * Ux(m)))
    kappa = X / (q2 * c * c)
    y_trunc = decay_radius("U", "hankel", radius_rel)
    y_far = decay_radius("U", "hankel", far_rel)
    M_far = int(math.floor(y_far / kappa))
    M_trunc = int(math.floor(y_trunc / kappa))
    f.require(max(M_far, 1))
    md = np.arange(1, M_far + 1)
    abar = inv_mod(alpha * q2, c) if c > 1 else 0
    terms = f.lam_array(M_far)[md] * unit_roots(c)[(-abar * md) % c] * hankel_eval(U, md * kappa)
    pref = X / (c * math.sqrt(q2))
    head = terms[:M_trunc]
    tail = terms[M_trunc:]
    dual = complex(pref * np.sum(head))
    dual_full = complex(pref * np.sum(terms))
    head_mass = float(np.sum(np.abs(head))) * pref
    tail_mass = float(np.sum(np.abs(tail))) * pref
    return lhs, dual, dual_full, head_mass, tail_mass, M_trunc, q2


def voronoi_verify(f: HeckeCoefficients, alpha: int, c: int, X: float | None = None, eta: complex | None = None) -> VoronoiReport:
    """Voronoi check; eta is fitted from this case when not supplied."""
    if X is None:
        X = 20.0 * c
    lhs, dual, dual_full, head_mass, tail_mass, M, q2 = voronoi_sides(f, alpha, c, X, radius_rel=VERIFY_CUTOFF)
    fitted = lhs / dual if dual != 0 else complex("nan")
    if eta is None:
        eta = fitted / abs(fitted) if q2 > 1 else 1.0 + 0j
        eta = complex(np.sign(eta.real)) if abs(eta.imag) < 1e-3 else eta
    rhs = eta * dual
    diff = abs(lhs - rhs)
    return VoronoiReport(
        lhs,
        rhs,
        diff,
        diff / max(abs(lhs), 1e-300),
        fitted,
        M,
        tail_mass / max(head_mass, 1e-300),
        {"level": f.level, "alpha": alpha, "c": c, "X": X, "q2": q2, "eta_used": [eta.real, eta.imag]},
    )


def fit_eta(f: HeckeCoefficients, X: float = 20.0) -> complex:
    """Unimodular eta_f(q) fitted from the c = 1 case and projected to the circle."""
    lhs, dual, *_ = voronoi_sides(f, 1, 1, X)
    z = lhs / dual
    return z / abs(z)


def poisson_sweep(count: int = 50, seed: int = 0, primes=(5, 7, 11, 13)) -> list[PoissonReport]:
    """Deterministic sweep over q, chi, c in {1, q, r, rq}, alpha, l and N."""
    from .arith import PrimeModulus, characters

    rng = np.random.default_rng(seed)
    out = []
    mods = {q: PrimeModulus(q) for q in primes}
    small = (2, 3, 5, 7)
    for _ in range(count):
        q = int(rng.choice(primes))
        chi = characters(mods[q])[int(rng.integers(0, q - 2))]
        r = int(rng.choice([x for x in small if x != q]))
        c = int(rng.choice([1, q, r, r * q]))
        alpha = 1
        if c > 1:
            units = [a for a in range(1, c) if math.gcd(a, c) == 1]
            alpha = int(rng.choice(units))
        ell = int(rng.choice([1, 2, 3, 5, 7]))
        if ell == q:
            ell = 1
        N = float(np.round(rng.uniform(10.0, 60.0), 3))
        out.append(poisson_verify(chi, alpha, ell, c, N))
    return out
