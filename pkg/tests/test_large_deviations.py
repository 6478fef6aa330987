import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loopnest import large_deviations as ld

NS = [0.5, 1.0, math.sqrt(2), math.sqrt(3)]
KAPPAS = [3.0, 3.5, 4.5, 6.0, 7.0]


@pytest.mark.parametrize("n", NS)
def test_J_closed_form_vs_sup(n):
    for p in np.linspace(0.05, 10, 60):
        assert abs(ld.J(p, n) - ld.J_sup(p, n)) <= 1e-10


@pytest.mark.parametrize("n", NS)
def test_J_minimum(n):
    po = ld.p_opt(n)
    assert abs(ld.J(po, n)) <= 1e-12
    assert abs(ld.J_prime(po, n)) <= 1e-12


@given(st.floats(0.01, 10))
def test_J_second_derivative(p):
    h = 1e-4 * p
    fd = (ld.J(p + h, 1.0) - 2 * ld.J(p, 1.0) + ld.J(p - h, 1.0)) / h ** 2
    assert ld.J_second(p) * p * (p * p + 1) == pytest.approx(1.0, abs=1e-12)
    assert fd * p * (p * p + 1) == pytest.approx(1.0, abs=1e-4)


@given(st.floats(0.0, 20), st.sampled_from(NS))
def test_J_nonnegative_and_convex_side(p, n):
    assert ld.J(p, n) >= -1e-14


def test_J_at_zero_is_continuous():
    for n in NS:
        assert ld.J(1e-9, n) == pytest.approx(ld.J(0, n), abs=1e-7)


def test_J_domain():
    with pytest.raises(ld.DomainError):
        ld.J(-1, 1.0)
    with pytest.raises(ld.DomainError):
        ld.J(1, 2.0)


def test_gaussian_summary_variance_from_curvature():
    for n in NS:
        for j in (1, 2):
            s = ld.gaussian_summary(n, j=j)
            b = math.acos(n / 2) / math.pi
            c = 1 / (1 - b)
            po = ld.p_opt(n)
            # variance per ln V is (c / (j pi)) / J''(p_opt) ... up to the 2^(3-j) pairing
            expect = 2 ** (3 - j) * n * c / (math.pi * (4 - n * n) ** 1.5)
            assert s["sigma2"] == pytest.approx(expect)
            assert s["mean_per_lnV"] == pytest.approx(c * po / (j * math.pi))
            assert 1 / ld.J_second(po) == pytest.approx(n / (4 - n * n) ** 1.5 * 4, rel=1e-12)


@pytest.mark.parametrize("kappa", KAPPAS)
def test_gamma_kappa_is_transform_of_lambda(kappa):
    top = ld.lambda_max(kappa)
    for nu in (0.01, 0.1, 0.5, 1.0, 3.0):
        lf = ld.legendre_fenchel_numeric(
            lambda l: ld.lambda_kappa(l, kappa), 1 / nu, (-2000.0, top),
            df=lambda l: ld.lambda_kappa_prime(l, kappa))
        assert lf.boundary is None
        assert nu * lf.value == pytest.approx(ld.gamma_kappa(nu, kappa), abs=1e-10)


@pytest.mark.parametrize("kappa", KAPPAS)
def test_gamma_kappa_zero_at_typical(kappa):
    nu0 = 1 / ld.lambda_kappa_prime(0.0, kappa)
    assert abs(ld.gamma_kappa(nu0, kappa)) <= 1e-12


@pytest.mark.parametrize("kappa", KAPPAS)
def test_lambda_quantum_composition(kappa):
    kp = ld.kpz_params(kappa)
    lo, hi = ld.quantum_domain(kappa)
    for l in np.linspace(lo, hi, 41)[1:-1]:
        lhs = ld.lambda_quantum(l, kappa)
        rhs = ld.lambda_kappa(2 * ld.kpz_U(l, kp.gamma), kappa)
        assert abs(lhs - rhs) <= 1e-12 * max(1, abs(rhs))


@given(st.floats(0.05, 1.0), st.floats(0.4, 1.99))
def test_kpz_round_trip(t, gamma):
    # the quadratic is monotone to the right of its vertex
    vertex = -(2 / gamma - gamma / 2) / gamma
    x = vertex + 4 * t
    y = ld.kpz_U(x, gamma)
    assert ld.kpz_U(y, gamma, "inverse") == pytest.approx(x, abs=1e-10)


def test_kpz_params_range():
    with pytest.raises(ld.DomainError):
        ld.kpz_params(8.0)
    with pytest.raises(ld.DomainError):
        ld.kpz_params(2.0)


@pytest.mark.parametrize("kappa", KAPPAS)
def test_theta_from_quantum_transform(kappa):
    lo, hi = ld.quantum_domain(kappa)
    for p in np.geomspace(0.02, 5, 12):
        lf = ld.legendre_fenchel_numeric(
            lambda l: ld.lambda_quantum(l, kappa), 1 / p, (lo, hi),
            df=lambda l: ld.lambda_quantum_prime(l, kappa))
        assert p * lf.value == pytest.approx(ld.theta(p, kappa), abs=1e-8)


@given(st.floats(0.01, 10), st.sampled_from(KAPPAS))
def test_sphere_doubling(p, kappa):
    assert ld.theta(p, kappa, "sphere") == 2 * ld.theta(p / 2, kappa)


def test_theta_zero_value():
    for kappa in KAPPAS:
        assert ld.theta(1e-9, kappa) == pytest.approx(ld.theta(0, kappa), abs=1e-6)


def test_quadrature_matches_theta():
    kappa = 6.0
    As = [100.0, 200.0, 400.0]
    for p in (0.05, 0.3, 1.0):
        est = ld.richardson([ld.quantum_quadrature(p, kappa, A) for A in As], As)
        assert est == pytest.approx(ld.theta(p, kappa), rel=0.02, abs=1e-3)


def test_quadrature_sphere():
    kappa = 6.0
    As = [100.0, 200.0, 400.0]
    p = 0.6
    est = ld.richardson([ld.quantum_quadrature(p, kappa, A, "sphere") for A in As], As)
    assert est == pytest.approx(ld.theta(p, kappa, "sphere"), rel=0.02)


def test_legendre_fenchel_quadratic():
    r = ld.legendre_fenchel_numeric(lambda l: 1.5 * l * l, 0.9, (-10, 10))
    assert r.value == pytest.approx(0.9 ** 2 / 6, abs=1e-12)


def test_legendre_fenchel_boundary_and_nonconvex():
    r = ld.legendre_fenchel_numeric(lambda l: l * l, 100.0, (-1, 1))
    assert r.boundary == "upper"
    with pytest.raises(ld.DomainError):
        ld.legendre_fenchel_numeric(lambda l: -l * l, 0.0, (-1, 1))


def test_richardson_exact_on_model():
    As = [10.0, 20.0, 40.0]
    vals = [2 + 3 / A - 5 / A ** 2 for A in As]
    assert ld.richardson(vals, As) == pytest.approx(2.0, abs=1e-12)


@settings(deadline=None)
@given(st.floats(0.05, 5), st.floats(-0.95, 0.95), st.sampled_from(NS))
def test_bernoulli_closed_form(p, r, n):
    q = r * p
    law = ld.WeightLaw("bernoulli_pm1")
    assert abs(ld.bernoulli_closed(p, q, n) - ld.bivariate_rate(p, q, ("map", n), law)) <= 1e-10


@settings(deadline=None)
@given(st.floats(0.05, 5), st.floats(-5, 5), st.floats(0.1, 4))
def test_gaussian_closed_form(p, q, s2):
    law = ld.WeightLaw("gaussian", sigma2=s2)
    assert abs(ld.gaussian_closed(p, q, 1.0, s2) - ld.bivariate_rate(p, q, ("map", 1.0), law)) <= 1e-10


def test_finite_support_matches_bernoulli():
    a = ld.WeightLaw("finite_support", values=[-1, 1], probs=[0.5, 0.5])
    b = ld.WeightLaw("bernoulli_pm1")
    for lam in (-2.0, -0.3, 0.0, 0.7, 3.0):
        assert a.Lambda(lam) == pytest.approx(b.Lambda(lam), abs=1e-14)
        assert a.solve(0.4) == pytest.approx(b.solve(0.4), abs=1e-11)


def test_weight_law_errors():
    with pytest.raises(ld.DomainError):
        ld.WeightLaw("gaussian")
    with pytest.raises(ld.DomainError):
        ld.WeightLaw("bernoulli_pm1").solve(1.0)
    with pytest.raises(ld.DomainError):
        ld.WeightLaw("finite_support", values=[0, 1], probs=[0.2, 0.7])


def test_bivariate_minimum_at_typical_point():
    n = 1.0
    law = ld.WeightLaw("bernoulli_pm1")
    assert abs(ld.bivariate_rate(ld.p_opt(n), 0.0, ("map", n), law)) <= 1e-12


def test_cle_bivariate_uses_theta():
    law = ld.WeightLaw("gaussian", sigma2=1.0)
    v = ld.bivariate_rate(0.4, 0.1, ("cle", 6.0), law)
    assert v == pytest.approx(ld.theta(0.4, 6.0) + 0.01 / 0.8)
    assert ld.gamma_kappa_alpha(0.4, 0.1, 6.0, law) == pytest.approx(ld.gamma_kappa(0.4, 6.0) + 0.01 / 0.8)
