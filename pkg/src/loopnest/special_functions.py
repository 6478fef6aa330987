"""Theta function, Upsilon_b, elliptic frame and the parametrisation x(v).

Derivatives are carried as truncated Taylor jets: a jet of order J at v is the
array (f(v), f'(v), f''(v)/2, ..., f^(J)(v)/J!).
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

# Im(-1/tau) > MODULAR_RATIO * Im(tau) selects the modular series.
MODULAR_RATIO = 1.0
_TAIL = 1e-20


class PoleError(ValueError):
    pass


class FrameError(ValueError):
    pass


# ---------------------------------------------------------------- jets

def jet_mul(a, b):
    n = len(a)
    out = np.zeros(n, dtype=complex)
    for i in range(n):
        out[i] = np.dot(a[: i + 1], b[i::-1])
    return out


def jet_div(a, b):
    n = len(a)
    out = np.zeros(n, dtype=complex)
    if b[0] == 0:
        raise PoleError("division by a jet vanishing at the base point")
    for i in range(n):
        s = a[i] - np.dot(out[:i], b[i:0:-1]) if i else a[0]
        out[i] = s / b[0]
    return out


def jet_exp_poly(c0, c1, c2, n):
    """Jet of exp(c0 + c1 e + c2 e^2) in e."""
    p = np.zeros(n, dtype=complex)
    if n > 1:
        p[1] = c1
    if n > 2:
        p[2] = c2
    # f' = p' f  ->  k f_k = sum_j j p_j f_{k-j}
    f = np.zeros(n, dtype=complex)
    f[0] = cmath.exp(c0)
    for k in range(1, n):
        s = 0j
        for j in range(1, min(k, 2) + 1):
            s += j * p[j] * f[k - j]
        f[k] = s / k
    return f


def jet_to_derivs(jet):
    return np.array([jet[j] * math.factorial(j) for j in range(len(jet))])


# ---------------------------------------------------------------- theta

def _theta_series_jet(v, tau, order):
    """Direct q-series of theta_1 and its Taylor jet at v (no reduction)."""
    q = cmath.exp(1j * math.pi * tau)
    aq = abs(q)
    if aq >= 1:
        raise ValueError("Im tau must be positive")
    yv = abs(v.imag)
    terms = []
    m = 0
    while True:
        e = (m + 0.5) ** 2
        mag = aq ** e * math.exp((2 * m + 1) * math.pi * yv) * ((2 * m + 1) * math.pi) ** order
        terms.append(m)
        if m > 2 and mag < _TAIL:
            break
        m += 1
        if m > 10000:
            raise ValueError("theta series does not converge")
    ms = np.array(terms, dtype=float)
    freq = (2 * ms + 1) * math.pi
    coef = 2 * ((-1.0) ** ms) * np.exp(1j * math.pi * tau * (ms + 0.5) ** 2)
    jet = np.zeros(order + 1, dtype=complex)
    fact = 1.0
    for j in range(order + 1):
        if j:
            fact *= j
        jet[j] = np.sum(coef * freq ** j * np.sin(freq * v + j * math.pi / 2)) / fact
    return jet


def _reduce(v, tau):
    """v = v0 + m + n tau with v0 in the centred cell."""
    n = round(v.imag / tau.imag)
    v1 = v - n * tau
    m = round(v1.real)
    return v1 - m, m, n


def theta1_jet(v, tau, order=0, modular=None):
    """Jet of theta_1(.|tau) at v."""
    v = complex(v)
    tau = complex(tau)
    if tau.imag <= 0:
        raise ValueError("Im tau must be positive")
    v0, m, n = _reduce(v, tau)
    if modular is None:
        tp = -1 / tau
        modular = tp.imag > MODULAR_RATIO * tau.imag
    if modular:
        base = _theta_modular_jet(v0, tau, order)
    else:
        base = _theta_series_jet(v0, tau, order)
    if n == 0 and m == 0:
        return base
    # theta(v0 + m + n tau) = (-1)^(m+n) exp(-i pi (2 n v0 + n^2 tau)) theta(v0)
    c0 = -1j * math.pi * (2 * n * v0 + n * n * tau)
    fac = jet_exp_poly(c0, -2j * math.pi * n, 0, order + 1)
    sign = -1 if (m + n) % 2 else 1
    return sign * jet_mul(fac, base)


def _theta_modular_jet(v, tau, order):
    tp = -1 / tau
    z = v / tau
    inner = _theta_series_jet(z, tp, order)
    inner = inner * np.array([tau ** (-j) for j in range(order + 1)])
    gauss = jet_exp_poly(-1j * math.pi * v * v / tau, -2j * math.pi * v / tau,
                         -1j * math.pi / tau, order + 1)
    return 1j * jet_mul(gauss, inner) / cmath.sqrt(-1j * tau)


def theta1(v, tau, deriv=0):
    """theta_1(v|tau) (deriv=0) or its v-derivative (deriv=1)."""
    if deriv not in (0, 1):
        raise ValueError("deriv must be 0 or 1")
    jet = theta1_jet(v, tau, deriv)
    return complex(jet[deriv] * (1 if deriv == 0 else 1))


def theta1_series(v, tau, deriv=0):
    """Unreduced direct series, for cross-checks."""
    jet = _theta_series_jet(complex(v), complex(tau), deriv)
    return complex(jet[deriv])


def theta1_modular(v, tau, deriv=0):
    jet = _theta_modular_jet(complex(v), complex(tau), deriv)
    return complex(jet[deriv])


# ---------------------------------------------------------------- Upsilon

def upsilon_jet(b, v, tau, order=0, modular=None, pole_tol=1e-10):
    """Jet of Upsilon_b at v: simple pole of residue 1 at 0, period 1,
    multiplier e^{i pi b} under v -> v + tau."""
    v = complex(v)
    tau = complex(tau)
    v0, m, n = _reduce(v, tau)
    if abs(v0) < pole_tol:
        raise PoleError("Upsilon evaluated at a pole")
    if modular is None:
        modular = (-1 / tau).imag > MODULAR_RATIO * tau.imag
    if modular:
        jet = _upsilon_modular_jet(b, v0, tau, order)
    else:
        num = theta1_jet(v0 - b / 2, tau, order, modular=False)
        den = theta1_jet(v0, tau, order, modular=False)
        c = theta1_jet(0, tau, 1, modular=False)[1] / theta1_jet(-b / 2, tau, 0, modular=False)[0]
        jet = c * jet_div(num, den)
    if n:
        jet = jet * cmath.exp(1j * math.pi * b * n)
    return jet


def _upsilon_modular_jet(b, v, tau, order):
    tp = -1 / tau
    s = np.array([tau ** (-j) for j in range(order + 1)])
    num = _theta_series_jet((v - b / 2) / tau, tp, order) * s
    den = _theta_series_jet(v / tau, tp, order) * s
    c = (_theta_series_jet(0j, tp, 1)[1]
         / _theta_series_jet(-b / (2 * tau), tp, 0)[0]) / tau
    expo = jet_exp_poly(1j * math.pi * b * v / tau, 1j * math.pi * b / tau, 0, order + 1)
    return c * jet_mul(expo, jet_div(num, den))


def upsilon(b, v, tau, deriv=0, modular=None):
    jet = upsilon_jet(b, v, tau, deriv, modular=modular)
    return complex(jet[deriv] * math.factorial(deriv))


def upsilon_cotsum(b, v, tau, terms=None):
    """pi sum_m e^{-i pi b m} cot(pi (v + m tau)), summed with the limits
    cot -> -i (m -> +inf) and +i (m -> -inf) removed in closed form.  The
    factor pi gives the pole at 0 unit residue."""
    v = complex(v)
    tau = complex(tau)
    if terms is None:
        terms = int(40 / (math.pi * tau.imag)) + 10
    w = cmath.exp(-1j * math.pi * b)
    total = -1j / (1 - w) + 1j * (1 / w) / (1 - 1 / w)
    for m in range(0, terms + 1):
        total += w ** m * (1 / cmath.tan(math.pi * (v + m * tau)) + 1j)
    for m in range(1, terms + 1):
        total += w ** (-m) * (1 / cmath.tan(math.pi * (v - m * tau)) - 1j)
    return math.pi * total


# ---------------------------------------------------------------- elliptic

def _agm(a, b):
    for _ in range(100):
        a, b = (a + b) / 2, math.sqrt(a * b)
        if abs(a - b) <= 1e-16 * a:
            break
    return (a + b) / 2


def elliptic_from_k2(k2, kp2):
    """(K, K', T, q) from k^2 and k'^2 given separately (no cancellation)."""
    if not (0 < k2 < 1 and 0 < kp2 < 1):
        raise ValueError("modulus outside (0, 1)")
    K = math.pi / (2 * _agm(1.0, math.sqrt(kp2)))
    Kp = math.pi / (2 * _agm(1.0, math.sqrt(k2)))
    T = K / (2 * Kp)
    return K, Kp, T, math.exp(-math.pi / T)


def elliptic_modulus(k):
    """(K, K', T, q) for modulus k in (0, 1)."""
    if not 0 < k < 1:
        raise ValueError("k must lie in (0, 1)")
    return elliptic_from_k2(k * k, (1 - k) * (1 + k))


def nome_from_theta(k):
    """q = e^{-pi/T} from the theta-quotient inversion k = theta2^2/theta3^2
    (an independent route to the nome)."""
    kp = math.sqrt((1 - k) * (1 + k))
    eps = 0.5 * (1 - math.sqrt(kp)) / (1 + math.sqrt(kp))
    qs = eps + 2 * eps ** 5 + 15 * eps ** 9 + 150 * eps ** 13 + 1707 * eps ** 17
    for _ in range(50):
        # refine qs with Newton on k(qs) using theta sums
        def kval(x):
            t2 = 2 * sum(x ** ((m + 0.5) ** 2) for m in range(0, 30))
            t3 = 1 + 2 * sum(x ** (m * m) for m in range(1, 30))
            return (t2 / t3) ** 2
        f = kval(qs) - k
        d = (kval(qs * (1 + 1e-7)) - kval(qs * (1 - 1e-7))) / (2e-7 * qs)
        step = f / d
        qs -= step
        if abs(step) < 1e-17 * qs:
            break
    return qs * qs


def varsigma(x, h, alpha):
    """The involution (1 - a h x)/(a h + (1 - a^2) h^2 x); exact on Fractions."""
    return (1 - alpha * h * x) / (alpha * h + (1 - alpha * alpha) * h * h * x)


def varsigma_inf(h, alpha):
    if alpha == 1:
        return math.inf
    return -alpha / ((1 - alpha * alpha) * h)


def fixed_point(h, alpha):
    return 1 / ((alpha + 1) * h)


@dataclass(frozen=True)
class EllipticFrame:
    gamma_minus: float
    gamma_plus: float
    sigma_gp: float
    sigma_gm: float
    h: float
    alpha: float
    k2: float
    kp2: float
    K: float
    Kp: float
    T: float
    q: float
    C: float
    w_inf: float

    @property
    def k(self):
        return math.sqrt(self.k2)

    @property
    def tau(self):
        return 1j * self.T

    @property
    def v_inf(self):
        return 0.5 + 1j * self.T * self.w_inf

    @property
    def endpoints(self):
        return (self.gamma_minus, self.gamma_plus, self.sigma_gp, self.sigma_gm)

    def E(self):
        a, b, c, d = self.endpoints
        e1 = a + b + c + d
        e2 = a * b + a * c + a * d + b * c + b * d + c * d
        e3 = a * b * c + a * b * d + a * c * d + b * c * d
        return e1, e2, e3


def _gamma_plus_from_gap(gap, h, alpha):
    """gamma_+ below the fixed point with varsigma(gamma_+) - gamma_+ = gap."""
    if alpha == 1:
        return 1 / (2 * h) - gap / 2
    a2 = (1 - alpha * alpha) * h * h
    # a2 x^2 + (2 a h + gap a2) x - (1 - gap a h) = 0
    B = 2 * alpha * h + gap * a2
    Cc = -(1 - gap * alpha * h)
    disc = math.sqrt(B * B - 4 * a2 * Cc)
    # stable root
    if B >= 0:
        return (2 * Cc) / (-B - disc)
    return (-B + disc) / (2 * a2)


def frame_from_endpoints(gamma_minus, gamma_plus=None, h=None, alpha=1.0, gap=None):
    """Elliptic frame of the cut [gamma_-, gamma_+].

    gap = varsigma(gamma_+) - gamma_+ may be given instead of gamma_+ so that
    near-merged cuts keep full precision.
    """
    h = float(h)
    alpha = float(alpha)
    gm = float(gamma_minus)
    if gap is not None:
        gap = float(gap)
        gp = _gamma_plus_from_gap(gap, h, alpha)
        sgp = gp + gap
    else:
        gp = float(gamma_plus)
        sgp = varsigma(gp, h, alpha)
        gap = sgp - gp
    sgm = varsigma(gm, h, alpha)
    if not (gm < gp and gap > 0 and sgp < sgm):
        raise FrameError("endpoint ordering violated: %r" % ((gm, gp, sgp, sgm),))
    k2 = (sgm - gm) * gap / ((sgm - gp) * (sgp - gm))
    kp2 = (sgm - sgp) * (gp - gm) / ((sgm - gp) * (sgp - gm))
    K, Kp, T, q = elliptic_from_k2(k2, kp2)
    C = math.sqrt((sgp - gm) * (sgm - gp)) / (4 * Kp)
    a, b, c = sgm - sgp, sgm - gp, sgm - gm

    def f(t):
        return 2 / math.sqrt((t * t + a) * (t * t + b) * (t * t + c))

    s = math.sqrt(a)
    i1 = quad(f, 0, s, epsabs=0, epsrel=2e-14, limit=200)[0]
    # tail via t = s/y
    i2 = quad(lambda y: f(s / y) * s / (y * y), 0, 1, epsabs=0, epsrel=2e-14, limit=200)[0]
    w_inf = C / T * (i1 + i2)
    if not 0 < w_inf < 1:
        raise FrameError("pole location outside the half-period")
    return EllipticFrame(gm, gp, sgp, sgm, h, alpha, k2, kp2, K, Kp, T, q, C, w_inf)


# ---------------------------------------------------------------- x(v)

def _theta2t(frame, v, order):
    return theta1_jet(v, 2 * frame.tau, order)


def _x_const(frame):
    vi = frame.v_inf
    tau = frame.tau
    d0 = _theta2t(frame, 0, 1)[1]
    return (-1j * frame.C * d0 * _theta2t(frame, 2 * vi, 0)[0]
            / (_theta2t(frame, vi - tau, 0)[0] * _theta2t(frame, vi + tau, 0)[0]))


def x_jet(v, frame, order=0):
    """Jet of x(v) = gamma_+ + K theta(v-tau)theta(v+tau)/(theta(v-vinf)theta(v+vinf))
    with theta = theta_1(.|2 tau)."""
    v = complex(v)
    tau = frame.tau
    vi = frame.v_inf
    num = jet_mul(_theta2t(frame, v - tau, order), _theta2t(frame, v + tau, order))
    den = jet_mul(_theta2t(frame, v - vi, order), _theta2t(frame, v + vi, order))
    jet = _x_const(frame) * jet_div(num, den)
    jet[0] += frame.gamma_plus
    return jet


def x_of_v(v, frame):
    return complex(x_jet(v, frame, 0)[0])


def dx_of_v(v, frame):
    return complex(x_jet(v, frame, 1)[1])


def _real_branch(x, frame):
    """Solve x(v) = x along the real-valued edges of the rectangle."""
    T = frame.T
    gm, gp, sgp, sgm = frame.endpoints

    def on(path, lo, hi):
        f = lambda t: x_of_v(path(t), frame).real - x
        return path(brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200))

    eps = 1e-13
    if gp < x < sgp:
        return on(lambda t: 1j * t, eps * T, T * (1 - eps))
    if sgp < x < sgm:
        return on(lambda t: complex(t, 0), eps, 0.5 - eps)
    wi = frame.w_inf
    if x > sgm:
        return on(lambda t: 0.5 + 1j * t, eps * T, T * wi * (1 - 1e-12))
    if x < gm:
        return on(lambda t: 0.5 + 1j * t, T * wi * (1 + 1e-12), T * (1 - eps))
    raise FrameError("x lies on the cut; the branch is ambiguous")


def v_of_x(x, frame, newton_steps=3):
    """Inverse of x(v) on the physical sheet, by quadrature along the straight
    segment from varsigma(gamma_+) followed by Newton polishing."""
    x = complex(x)
    gm, gp, sgp, sgm = frame.endpoints
    if abs(x.imag) < 1e-14 * (1 + abs(x)):
        if gm <= x.real <= gp:
            raise FrameError("x lies on the cut; the branch is ambiguous")
        return _real_branch(x.real, frame)
    d = x - sgp
    sd = cmath.sqrt(d)
    R0 = (sgp - sgm) * (sgp - gp) * (sgp - gm)
    ref = 1j * math.sqrt(-R0)

    def sqrtR(y, prev):
        r = cmath.sqrt((y - sgm) * (y - gp) * (y - gm))
        return r if abs(r - prev) <= abs(r + prev) else -r

    # sample the branch of sqrt R continuously along s in [0, 1]
    n = 2000
    ss = np.linspace(0.0, 1.0, n + 1)
    vals = np.empty(n + 1, dtype=complex)
    prev = ref
    for i, s in enumerate(ss):
        y = sgp + s * s * d
        prev = sqrtR(y, prev)
        vals[i] = prev
    # integrand 2 sqrt(d) / sqrt R(y(s)); Gauss-Legendre on each panel with
    # branch taken from the nearest sample
    nodes, weights = np.polynomial.legendre.leggauss(8)
    total = 0j
    for i in range(n):
        a, b = ss[i], ss[i + 1]
        for t, wgt in zip(nodes, weights):
            s = 0.5 * (a + b) + 0.5 * (b - a) * t
            y = sgp + s * s * d
            r = sqrtR(y, vals[i])
            total += 0.5 * (b - a) * wgt * 2 * sd / r
    v = 1j * frame.C * total
    for _ in range(newton_steps):
        jet = x_jet(v, frame, 1)
        v = v - (jet[0] - x) / jet[1]
    return v


# ---------------------------------------------------------------- limits

def upsilon_star(eps, w, b):
    if eps == 0:
        return cmath.exp(1j * math.pi * (b - 1) * w) / (2j * math.sin(math.pi * w))
    if eps == 0.5:
        return -cmath.exp(1j * math.pi * b * w)
    raise ValueError("eps must be 0 or 1/2")


def x_star(eps, w, gamma_minus_star, sigma_gamma_minus_star, gamma_plus_star, w_inf_star):
    r = math.sqrt((sigma_gamma_minus_star - gamma_plus_star) * (gamma_plus_star - gamma_minus_star))
    s = math.sin(math.pi * w_inf_star)
    if eps == 0:
        return 8 * r * s * math.cos(math.pi * w / 2) ** 2
    if eps == 0.5:
        return r * s / (math.cos(math.pi * w) - math.cos(math.pi * w_inf_star))
    raise ValueError("eps must be 0 or 1/2")


def limit_profiles(eps, w, b, critical_data):
    """(Upsilon*_{b,eps}(w), x*_eps(w)); critical_data has keys
    gamma_minus, sigma_gamma_minus, gamma_plus, w_inf."""
    if not 0 < w < 1:
        raise ValueError("w must lie in (0, 1)")
    d = critical_data
    return (upsilon_star(eps, w, b),
            x_star(eps, w, d["gamma_minus"], d["sigma_gamma_minus"], d["gamma_plus"], d["w_inf"]))
