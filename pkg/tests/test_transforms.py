from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from delta_lab.arith import DirichletCharacter, PrimeModulus
from delta_lab.transforms import (
    U,
    V,
    W,
    QuadratureError,
    bessel_j,
    bessel_j_reference,
    decay_radius,
    fit_eta,
    fourier_array,
    fourier_transform,
    hankel_array,
    hankel_eval,
    hankel_table,
    hankel_transform,
    holomorphic_kernel,
    integrate,
    poisson_beta_sum,
    poisson_beta_sum_direct,
    poisson_sweep,
    poisson_verify,
    smooth_step,
    tail_sup,
    voronoi_verify,
    weight,
)


def mp_weight(w, x):
    """The same weight evaluated in mpmath."""

    def psi(t):
        return mpmath.exp(-1 / t) if t > 0 else mpmath.mpf(0)

    def step(t):
        a, b = psi(t), psi(1 - t)
        return a / (a + b)

    x = mpmath.mpf(x) / w.scale
    return step((x - w.lo) / w.rise) * step((w.hi - x) / w.fall)


class TestWeights:
    def test_step(self):
        assert_allclose(smooth_step([-1, 0, 0.5, 1, 2]), [0, 0, 0.5, 1, 1])

    @pytest.mark.parametrize("w", [W, V, U])
    def test_support_plateau(self, w):
        lo, hi = w.support
        assert w(lo) == 0 and w(hi) == 0
        assert w(lo - 1e-3) == 0 and w(hi + 1e-3) == 0
        a, b = w.plateau
        if a < b:
            assert_allclose(w(np.linspace(a, b, 11)), 1.0)
        assert np.all((w(np.linspace(lo, hi, 101)) >= 0) & (w(np.linspace(lo, hi, 101)) <= 1))

    def test_U_identically_one_on_1_8(self):
        assert_allclose(U(np.linspace(1, 8, 200)), 1.0)

    def test_mass(self):
        for w in (W, V, U):
            assert integrate(w, *w.support).value.real == pytest.approx(w.mass(), rel=1e-12)
        assert W.dilate(40).mass() == pytest.approx(40 * W.mass())

    def test_derivatives(self):
        x = np.linspace(1.1, 1.9, 9)
        h = 1e-5
        d1 = W.derivative(x, 1)
        assert_allclose(d1, (W(x + h) - W(x - h)) / (2 * h), atol=1e-6)
        d2 = W.derivative(x, 2, h=1e-3)
        assert_allclose(d2, W.derivative(x, 2, h=5e-4), rtol=1e-4, atol=1e-4)
        with pytest.raises(ValueError):
            W.derivative(x, 5)

    def test_weight_lookup(self):
        assert weight("U") is U
        with pytest.raises(KeyError):
            weight("Z")


class TestQuadrature:
    def test_polynomial(self):
        assert integrate(lambda x: x**5, 0, 2).value == pytest.approx(64 / 6)

    def test_nonconvergence_reported(self):
        with pytest.raises(QuadratureError):
            integrate(lambda x: np.sign(x - 0.3), 0, 1, max_doublings=2, tol=1e-15)


class TestBessel:
    @pytest.mark.parametrize("x", [0.0, 0.3, 2.0, 11.9, 16.0, 16.1, 40.0, 300.0])
    def test_reference_against_mpmath(self, x):
        for nu in (0, 1, 3):
            ref = float(mpmath.besselj(nu, x))
            env = max(abs(ref), math.sqrt(2 / (math.pi * max(x, 1.0))))
            # the power series loses about log10(e^x) digits to cancellation
            assert abs(bessel_j_reference(nu, x) - ref) < 1e-16 * math.exp(min(x, 16.0)) + 1e-13 * env
            assert abs(bessel_j(nu, x) - ref) < 1e-13 * env

    def test_kernel_sign(self):
        z = np.array([0.5, 3.0])
        assert_allclose(holomorphic_kernel(2, z), -2 * math.pi * bessel_j(1, z))
        assert_allclose(holomorphic_kernel(4, z), 2 * math.pi * bessel_j(3, z))
        with pytest.raises(ValueError):
            holomorphic_kernel(3, z)


class TestFourier:
    @pytest.mark.parametrize("y", [0.0, 0.7, 3.3])
    def test_against_mpmath(self, y):
        mpmath.mp.dps = 20
        ref = mpmath.quad(lambda x: mp_weight(W, x) * mpmath.expjpi(-2 * x * y), [1, 1.45, 2])
        got = fourier_transform(W, y).value
        assert abs(got - complex(ref)) < 1e-12
        assert abs(fourier_array(W, [y])[0] - complex(ref)) < 1e-12

    def test_decay_at_50(self):
        assert abs(fourier_array(W, [50.0])[0]) < 1e-6

    def test_array_matches_adaptive(self):
        ys = np.array([-12.5, -1.0, 0.2, 9.0, 40.0])
        assert_allclose(fourier_array(W, ys), [fourier_transform(W, y).value for y in ys], atol=1e-13)


class TestHankel:
    @pytest.mark.parametrize("y", [0.5, 10.0])
    def test_against_mpmath(self, y):
        mpmath.mp.dps = 20

        def f(x):
            return mp_weight(U, x) * (-2 * mpmath.pi) * mpmath.besselj(1, 4 * mpmath.pi * mpmath.sqrt(x * y))

        ref = float(mpmath.quad(f, [0.5, 1.0, 3, 6, 8, 9]))
        assert hankel_transform(U, y).value.real == pytest.approx(ref, abs=1e-10)
        assert hankel_array(U, [y])[0] == pytest.approx(ref, abs=1e-10)

    @given(st.floats(0, 16000))
    @settings(max_examples=50, deadline=None)
    def test_table_matches_direct(self, y):
        tab = hankel_table(U)
        direct = hankel_array(U, [y])[0]
        assert abs(tab([y])[0] - direct) < 1e-12

    def test_eval_dispatch(self):
        ys = np.linspace(0, 100, 5000)
        assert_allclose(hankel_eval(U, ys), hankel_array(U, ys), atol=1e-12)

    def test_polynomial_decay_constants(self):
        ys = [10.0, 100.0, 1000.0]
        consts = [abs(hankel_array(U, [y])[0]) * (1 + y) ** 3 for y in ys]
        assert all(math.isfinite(c) for c in consts)
        # the sup envelope is nonincreasing and eventually tiny
        assert tail_sup("U", "hankel", 1000.0) < tail_sup("U", "hankel", 10.0)

    def test_decay_radii_monotone(self):
        r = [decay_radius("U", "hankel", rel) for rel in (1e-5, 1e-7, 1e-9, 1e-11)]
        assert r == sorted(r)
        w = [decay_radius("W", "fourier", rel) for rel in (1e-5, 1e-7, 1e-9, 1e-11)]
        assert w == sorted(w)
        assert tail_sup("W", "fourier", 1e9) == 0.0


class TestPoisson:
    @given(st.sampled_from([5, 7, 11, 13]), st.data())
    @settings(max_examples=40, deadline=None)
    def test_collapse_matches_direct(self, q, data):
        chi = DirichletCharacter(PrimeModulus(q), data.draw(st.integers(1, q - 2)))
        c = data.draw(st.sampled_from([1, 2, 3, q, 2 * q, 3 * q]))
        alpha = data.draw(st.integers(1, max(1, c - 1)))
        if math.gcd(alpha, c) != 1:
            alpha = 1
        ell = data.draw(st.sampled_from([1, 2, 3]))
        h = data.draw(st.integers(-200, 200))
        k = data.draw(st.sampled_from([1, 2]))
        a = poisson_beta_sum(chi, alpha, ell, c, h, k)
        b = poisson_beta_sum_direct(chi, alpha, ell, c, h, k)
        assert abs(a - b) < 1e-9

    def test_c1(self):
        chi = DirichletCharacter(PrimeModulus(11), 1)
        r = poisson_verify(chi, 1, 1, 1, 40.0)
        assert r.abs_diff < 1e-6 * 40 and r.passed
        assert r.tail_bound < 1e-6 * r.scale

    def test_c_equals_q(self):
        chi = DirichletCharacter(PrimeModulus(11), 3)
        r = poisson_verify(chi, 2, 3, 11, 40.0)
        assert r.abs_diff < 1e-6 * 40

    def test_short_truncation_fails(self):
        chi = DirichletCharacter(PrimeModulus(11), 3)
        r = poisson_verify(chi, 2, 3, 77, 40.0, truncation=3)
        assert not r.passed
        assert r.params.get("insufficient_truncation")

    def test_preconditions(self):
        chi = DirichletCharacter(PrimeModulus(11), 3)
        with pytest.raises(ValueError):
            poisson_verify(chi, 2, 1, 4, 40.0)
        with pytest.raises(ValueError, match="primitive"):
            poisson_verify(DirichletCharacter(PrimeModulus(11), 0), 1, 1, 1, 40.0)

    def test_sweep_deterministic(self):
        a = [r.to_json() for r in poisson_sweep(6, seed=3)]
        b = [r.to_json() for r in poisson_sweep(6, seed=3)]
        assert a == b


class TestVoronoi:
    @pytest.fixture
    def f(self, f11):
        return f11.truncated(200000)

    @pytest.mark.parametrize("c", [1, 2, 3, 7])
    def test_agreement(self, f, c):
        r = voronoi_verify(f, 1, c)
        assert r.rel_diff < 1e-5
        assert abs(abs(r.fitted_eta) - 1) < 1e-3
        assert r.tail_mass < 1e-6

    def test_c_equals_level(self, f):
        r = voronoi_verify(f, 3, 11)
        assert r.rel_diff < 1e-5
        assert r.fitted_eta.real == pytest.approx(1.0, abs=1e-3)

    def test_fitted_eta(self, f):
        assert fit_eta(f) == pytest.approx(-1.0, abs=1e-6)

    def test_wrong_eta_fails(self, f):
        r = voronoi_verify(f, 1, 2, eta=1.0)
        assert r.rel_diff > 1.0
