"""Rate functions for loop nesting: the map-side J, the CLE cumulant Lambda_kappa
and its transforms, KPZ, and quantum-gravity rates."""

import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar


class DomainError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def _check_n(n):
    if not 0 < n < 2:
        raise DomainError("n must lie in (0, 2)")


def arccot(p):
    return math.atan2(1.0, p)


# ---------------------------------------------------------------- map side

def J(p, n):
    """Depth rate function; J(0) is the continuous limit arcsin(n/2)."""
    _check_n(n)
    if p < 0:
        raise DomainError("p must be nonnegative")
    if p == 0:
        return math.asin(n / 2)
    return p * math.log(2 / n * p / math.sqrt(1 + p * p)) + arccot(p) - math.acos(n / 2)


def J_prime(p, n):
    return math.log(2 / n * p / math.sqrt(1 + p * p))


def J_second(p):
    return 1 / (p * (p * p + 1))


def J_sup(p, n):
    """sup over s in [0, 2/n] of p ln s + arccos(ns/2) - arccos(n/2)."""
    _check_n(n)
    f = lambda s: -(p * math.log(s) + math.acos(min(1.0, n * s / 2)) - math.acos(n / 2))
    r = minimize_scalar(f, bounds=(1e-300, 2 / n), method="bounded",
                        options={"xatol": 1e-13, "maxiter": 500})
    return -r.fun


def p_opt(n):
    return n / math.sqrt(4 - n * n)


def gaussian_summary(n, j=None, c=None, phase="dense", perimeter=None):
    """Typical depth and variance per ln V. j=1 keeps the boundary finite,
    j=2 scales it like V^(c/2)."""
    _check_n(n)
    if j is None:
        j = {"finite": 1, "large": 2}[perimeter or "finite"]
    if c is None:
        b = math.acos(n / 2) / math.pi
        c = 1 / (1 - b) if phase == "dense" else 1.0
    sigma2 = 2 ** (3 - j) * n * c / (math.pi * (4 - n * n) ** 1.5)
    po = p_opt(n)
    return dict(p_opt=po, sigma2=sigma2, mean_per_lnV=c * po / (j * math.pi), j=j)


# ---------------------------------------------------------------- CLE side

def lambda_max(kappa):
    return 1 - 2 / kappa - 3 * kappa / 32


def _radicand(lam, kappa):
    return (1 - 4 / kappa) ** 2 + 8 * lam / kappa


def lambda_kappa(lam, kappa):
    if lam >= lambda_max(kappa):
        raise DomainError("lambda at or above the pole %.17g" % lambda_max(kappa))
    r = _radicand(lam, kappa)
    num = math.cos(math.pi * (1 - 4 / kappa))
    if r >= 0:
        return math.log(num / math.cos(math.pi * math.sqrt(r)))
    return math.log(num / math.cosh(math.pi * math.sqrt(-r)))


def lambda_kappa_prime(lam, kappa):
    r = _radicand(lam, kappa)
    if r > 0:
        s = math.sqrt(r)
        return 4 * math.pi * math.tan(math.pi * s) / (kappa * s)
    if r < 0:
        s = math.sqrt(-r)
        return 4 * math.pi * math.tanh(math.pi * s) / (kappa * s)
    return 4 * math.pi ** 2 / kappa


def gamma_kappa(nu, kappa):
    """nu Lambda*_kappa(1/nu) through the v cot v / w coth w parametrisation."""
    if nu < 0:
        raise DomainError("nu must be nonnegative")
    if nu == 0:
        return lambda_max(kappa)
    k = kappa / (4 * math.pi ** 2)
    t = nu / k
    n = 2 * math.cos(math.pi * (1 - 4 / kappa))
    a0 = math.acos(n / 2)
    if t < 1:
        if t < 1e-12:
            v = math.pi / 2 - 2 * t / math.pi
        elif 1 - t < 1e-12:
            v = math.sqrt(3 * (1 - t))
        else:
            v = brentq(lambda v: v / math.tan(v) - t, 1e-8, math.pi / 2 - 1e-14,
                       xtol=1e-15, rtol=1e-15)
        lnc = math.log(n / (2 * math.cos(v)))
        return k * (v * v / 2 - t * lnc - a0 * a0 / 2)
    if t == 1:
        return k * (-math.log(n / 2) - a0 * a0 / 2)
    hi = t + 1.0
    w = brentq(lambda w: w / math.tanh(w) - t, 1e-12, hi, xtol=1e-15, rtol=1e-15)
    lnc = math.log(n / 2) - (w + math.log1p(math.exp(-2 * w)) - math.log(2))
    return k * (-w * w / 2 - t * lnc - a0 * a0 / 2)


# ---------------------------------------------------------------- KPZ

@dataclass(frozen=True)
class KPZParams:
    kappa: float
    gamma: float
    a_gamma: float
    c: float
    b: float
    n: float


def kpz_params(kappa):
    if not 8 / 3 < kappa < 8:
        raise DomainError("kappa must lie in (8/3, 8)")
    g = math.sqrt(kappa) if kappa < 4 else 4 / math.sqrt(kappa)
    return KPZParams(kappa=kappa, gamma=g, a_gamma=2 / g - g / 2, c=math.sqrt(kappa) / g,
                     b=abs(1 - 4 / kappa), n=2 * math.cos(math.pi * (1 - 4 / kappa)))


def kpz_U(x, gamma, direction="forward"):
    if direction == "forward":
        return gamma * gamma / 4 * x * x + (1 - gamma * gamma / 4) * x
    a = 2 / gamma - gamma / 2
    disc = 4 * x + a * a
    if disc < 0:
        raise DomainError("4x + a_gamma^2 must be nonnegative")
    return (math.sqrt(disc) - a) / gamma


def quantum_domain(kappa):
    kp = kpz_params(kappa)
    return -kp.b * kp.c / 2, kp.c * (0.5 - kp.b) / 2


def lambda_quantum(lp, kappa):
    """Lambda_kappa composed with 2 U_gamma, in closed form."""
    kp = kpz_params(kappa)
    lo, hi = quantum_domain(kappa)
    if lp < lo - 1e-15 or lp >= hi:
        raise DomainError("lambda' outside [%.17g, %.17g)" % (lo, hi))
    return math.log(math.cos(math.pi * kp.b) / math.cos(math.pi * (2 * lp / kp.c + kp.b)))


def lambda_quantum_prime(lp, kappa):
    kp = kpz_params(kappa)
    return 2 * math.pi / kp.c * math.tan(math.pi * (2 * lp / kp.c + kp.b))


def theta(p, kappa, topology="disk"):
    """Quantum nesting rate; the sphere rate is 2 Theta(p/2)."""
    if p < 0:
        raise DomainError("p must be nonnegative")
    if topology == "sphere":
        return 2 * theta(p / 2, kappa, "disk")
    kp = kpz_params(kappa)
    if p == 0:
        return 0.75 - 2 / kappa if kappa <= 4 else 0.5 - kappa / 16
    return kp.c / (2 * math.pi) * J(2 * math.pi * p / kp.c, kp.n)


# ---------------------------------------------------------------- transforms

LFResult = namedtuple("LFResult", "value argmax boundary")


def legendre_fenchel_numeric(f, x, interval, df=None, probes=64, tol=1e-13):
    """sup over lam in interval of lam x - f(lam), for convex f.

    The optimum is bracketed on the derivative, bisected, then Newton
    polished; suprema at an endpoint are flagged."""
    lo, hi = interval
    if df is None:
        def df(t, _h=1e-6):
            hh = _h * max(1.0, abs(t))
            return (f(t + hh) - f(t - hh)) / (2 * hh)
    # keep probes strictly inside so open ends are safe
    eps = 1e-12 * max(1.0, hi - lo)
    grid = np.linspace(lo + eps, hi - eps, probes)
    d = [df(t) for t in grid]
    if any(d[i + 1] < d[i] - 1e-9 * (1 + abs(d[i])) for i in range(len(d) - 1)):
        raise DomainError("derivative is not monotone: function not convex on the interval")
    g = lambda t: df(t) - x
    if g(grid[0]) >= 0:
        t = grid[0]
        return LFResult(t * x - f(t), t, "lower")
    if g(grid[-1]) <= 0:
        t = grid[-1]
        return LFResult(t * x - f(t), t, "upper")
    i = int(np.searchsorted(np.array(d) - x, 0.0))
    a, b = grid[i - 1], grid[i]
    for _ in range(200):
        m = 0.5 * (a + b)
        if g(m) > 0:
            b = m
        else:
            a = m
        if b - a < 1e-9 * max(1.0, abs(m)):
            break
    t = 0.5 * (a + b)
    for _ in range(20):
        h = 1e-5 * max(1e-3, b - a, abs(t) * 1e-3)
        d2 = (df(t + h) - df(t - h)) / (2 * h)
        if d2 <= 0:
            break
        step = g(t) / d2
        t_new = min(max(t - step, a), b)
        if abs(t_new - t) < tol * max(1.0, abs(t)):
            t = t_new
            break
        t = t_new
    return LFResult(t * x - f(t), t, None)


def _passage_density(t, A, a):
    return A / math.sqrt(2 * math.pi * t ** 3) * math.exp(-(A - a * t) ** 2 / (2 * t))


def quantum_quadrature(p, kappa, A, topology="disk", epsrel=1e-10):
    """-(1/(gamma A)) ln of the quantum nesting integral at depth gamma p A."""
    if p <= 0 or A <= 0:
        raise DomainError("p and A must be positive")
    kp = kpz_params(kappa)
    g, a = kp.gamma, kp.a_gamma
    A2 = 2 * A if topology == "sphere" else A
    N = g * p * A

    def E(t):
        return (A2 - a * t) ** 2 / (2 * t) + gamma_kappa(N / t, kappa) * t

    # locate the saddle in log t, then integrate the normalised integrand
    r = minimize_scalar(lambda s: E(math.exp(s)), bracket=(math.log(A2 / (4 * a + 1)),
                                                            math.log(A2 / (a + 1e-3))))
    ts = math.exp(r.x)
    Es = E(ts)

    def integrand(s):
        t = math.exp(s)
        return A2 / math.sqrt(2 * math.pi * t) * math.exp(-(E(t) - Es))

    width = 40 / math.sqrt(A2) + 1
    parts = [(-np.inf, r.x - width), (r.x - width, r.x), (r.x, r.x + width), (r.x + width, np.inf)]
    total = 0.0
    for lo, hi in parts:
        val, err = quad(integrand, lo, hi, epsrel=epsrel, epsabs=0, limit=400)
        total += val
    if not total > 0 or not math.isfinite(total):
        raise ConvergenceError("quadrature failed")
    return (Es - math.log(total)) / (g * A)


def richardson(values, As):
    """Extrapolate a_A = a + b/A + c/A^2 to A -> infinity."""
    M = np.vstack([np.ones(len(As)), 1 / np.array(As, float), 1 / np.array(As, float) ** 2]).T
    M = M[:, :len(As)]
    return float(np.linalg.solve(M, np.array(values, float))[0])


# ---------------------------------------------------------------- weighted loops

class WeightLaw:
    """Law of the i.i.d. loop weights, through its cumulant function."""

    def __init__(self, kind, sigma2=None, values=None, probs=None):
        self.kind = kind
        if kind == "gaussian":
            if not sigma2 or sigma2 <= 0:
                raise DomainError("gaussian law needs sigma2 > 0")
            self.sigma2 = float(sigma2)
        elif kind == "bernoulli_pm1":
            pass
        elif kind == "finite_support":
            v = np.asarray(values, float)
            w = np.asarray(probs, float)
            if len(v) != len(w) or len(v) < 2 or np.any(w <= 0) or abs(w.sum() - 1) > 1e-12:
                raise DomainError("finite support law needs matching values and positive probs")
            self.values, self.probs = v, w
        else:
            raise DomainError("unknown law %r" % (kind,))

    def Lambda(self, lam):
        if self.kind == "gaussian":
            return self.sigma2 * lam * lam / 2
        if self.kind == "bernoulli_pm1":
            a = abs(lam)
            return a + math.log1p(math.exp(-2 * a)) - math.log(2)
        m = self.values * lam
        top = m.max()
        return float(top + math.log(np.sum(self.probs * np.exp(m - top))))

    def dLambda(self, lam):
        if self.kind == "gaussian":
            return self.sigma2 * lam
        if self.kind == "bernoulli_pm1":
            return math.tanh(lam)
        m = self.values * lam
        e = self.probs * np.exp(m - m.max())
        return float(np.sum(self.values * e) / np.sum(e))

    def d2Lambda(self, lam):
        if self.kind == "gaussian":
            return self.sigma2
        if self.kind == "bernoulli_pm1":
            return 1 / math.cosh(lam) ** 2
        m = self.values * lam
        e = self.probs * np.exp(m - m.max())
        e = e / e.sum()
        mu = np.sum(self.values * e)
        return float(np.sum((self.values - mu) ** 2 * e))

    def moment_range(self):
        if self.kind == "gaussian":
            return -math.inf, math.inf
        if self.kind == "bernoulli_pm1":
            return -1.0, 1.0
        return float(self.values.min()), float(self.values.max())

    def solve(self, r, tol=1e-12):
        """lam with Lambda'(lam) = r (Newton, bisection fallback)."""
        lo_r, hi_r = self.moment_range()
        if not lo_r < r < hi_r:
            raise DomainError("ratio %.6g outside the moment range" % r)
        if self.kind == "gaussian":
            return r / self.sigma2
        lo, hi = -1.0, 1.0
        while self.dLambda(lo) > r:
            lo *= 2
        while self.dLambda(hi) < r:
            hi *= 2
        lam = 0.0 if lo < 0 < hi else 0.5 * (lo + hi)
        for _ in range(200):
            f = self.dLambda(lam) - r
            if abs(f) < tol:
                return lam
            if f > 0:
                hi = lam
            else:
                lo = lam
            d = self.d2Lambda(lam)
            nxt = lam - f / d if d > 0 else None
            lam = nxt if nxt is not None and lo < nxt < hi else 0.5 * (lo + hi)
        raise ConvergenceError("cumulant inversion did not converge")


def _weight_part(p, q, law):
    lam = law.solve(q / p)
    return q * lam - p * law.Lambda(lam), lam


def bivariate_rate(p, q, model, law, topology="disk"):
    """J(p, q) for maps (model=("map", n)) or Theta(p, q) for CLE
    (model=("cle", kappa))."""
    if p <= 0:
        raise DomainError("p must be positive")
    kind, par = model
    extra, _ = _weight_part(p, q, law)
    if kind == "map":
        return J(p, par) + extra
    if kind == "cle":
        return theta(p, par, topology) + extra
    raise DomainError("unknown model %r" % (kind,))


def gamma_kappa_alpha(nu, alpha, kappa, law):
    """gamma_kappa(nu) + nu Lambda*_mu(alpha/nu) for nu > 0."""
    if nu <= 0:
        raise DomainError("nu must be positive")
    extra, _ = _weight_part(nu, alpha, law)
    return gamma_kappa(nu, kappa) + extra


def bernoulli_closed(p, q, n):
    return (J(p, n) + (p + q) / 2 * math.log(p + q) + (p - q) / 2 * math.log(p - q)
            - p * math.log(p))


def gaussian_closed(p, q, n, sigma2):
    # the weight part q^2/(2 sigma2 p) is homogeneous of degree 1 in (p, q)
    return J(p, n) + q * q / (2 * sigma2 * p)


def gaussian_closed_printed(p, q, n, sigma2):
    """Variant with p^2 in the denominator; kept for comparison only."""
    return J(p, n) + q * q / (2 * sigma2 * p * p)
