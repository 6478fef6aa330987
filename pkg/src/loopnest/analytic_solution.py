"""Closed-form generating functions of the triangulated loop model with
bending energy, expressed on the elliptic parametrisation x(v)."""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .special_functions import (
    FrameError, PoleError, frame_from_endpoints, upsilon_jet,
    v_of_x, varsigma, x_jet,
)


class ConvergenceError(RuntimeError):
    pass


def _num(value, name):
    if value is None:
        raise ValueError("%s must be numeric here" % name)
    return float(value)


def _params(spec):
    return (_num(spec.n, "n"), _num(spec.g, "g"), _num(spec.h, "h"),
            _num(spec.alpha, "alpha"))


def b_of(n, s=1.0):
    ns = n * s
    if not -2 <= ns <= 2:
        raise ValueError("n s must lie in [-2, 2] for a real exponent")
    return math.acos(ns / 2) / math.pi


@dataclass(frozen=True)
class GhatData:
    E1: float
    E2: float
    E3: float
    ghat0: float
    ghat1: float
    ghat2: float
    ghat3: float
    C: float

    def gtilde(self, k):
        return (1j * self.C) ** k * (self.ghat0, self.ghat1, self.ghat2, self.ghat3)[k]


def ghat(spec, frame, u):
    n, g, h, alpha = _params(spec)
    if abs(4 - n * n) < 1e-14:
        raise ValueError("n = +-2 is singular")
    E1, E2, E3 = frame.E()
    if alpha == 1:
        E1 = 2 / h
    d = 4 - n * n
    return GhatData(
        E1, E2, E3,
        -2 * u / (2 + n),
        (g * (3 * E1 * E1 - 4 * E2) - 6 * E1) / (12 * d),
        (2 - g * E1) / d,
        2 * g / d,
        frame.C,
    )


def _ups(b, v, tau, order):
    """Upsilon_b and its first `order` derivatives (plain derivatives)."""
    jet = upsilon_jet(b, v, tau, order)
    return [complex(jet[k]) * math.factorial(k) for k in range(order + 1)]


def _four(b, v, w, tau, order):
    """d^k/dw^k [U(v+w) + U(v-w) - U(-v+w) - U(-v-w)], k <= order."""
    a = _ups(b, v + w, tau, order)
    c = _ups(b, v - w, tau, order)
    d = _ups(b, -v + w, tau, order)
    e = _ups(b, -v - w, tau, order)
    return [a[k] + (-1) ** k * c[k] - d[k] - (-1) ** k * e[k] for k in range(order + 1)]


def G_disk(v, spec, frame, u, data=None):
    n = _num(spec.n, "n")
    data = data or ghat(spec, frame, u)
    b = b_of(n)
    terms = _four(b, complex(v), frame.v_inf, frame.tau, 3)
    return sum(data.gtilde(k) / (2 * math.factorial(k)) * terms[k] for k in range(4))


def G_pointed(v, spec, frame, u, s=1.0):
    n = _num(spec.n, "n")
    b = b_of(n, s)
    v = complex(v)
    vi = frame.v_inf
    tau = frame.tau
    U = lambda z: complex(upsilon_jet(b, z, tau, 0)[0])
    return (u / (2 + n * s)) * (-U(v + vi) - U(v - vi) + U(-v + vi) + U(-v - vi))


def G_cylinder(v1, v2, spec, frame, s=1.0):
    n = _num(spec.n, "n")
    b = b_of(n, s)
    tau = frame.tau
    v1 = complex(v1)
    v2 = complex(v2)
    D = lambda z: complex(upsilon_jet(b, z, tau, 1)[1])
    return (D(v1 + v2) - D(v1 - v2) - D(-v1 + v2) + D(-v1 - v2)) / (4 - (n * s) ** 2)


# ---------------------------------------------------------------- shifts

def _den(x, h, alpha):
    return alpha * h + (1 - alpha * alpha) * h * h * x


def _disk_shift(x, spec, u):
    """d/dx of (2V(x) + nV(sigma(x)))/(4-n^2) - nu ln sigma'(x)/(2(2+n))."""
    n, g, h, alpha = _params(spec)
    dV = lambda y: y - g * y * y
    sig = varsigma(x, h, alpha)
    dsig = -h * h / _den(x, h, alpha) ** 2
    out = (2 * dV(x) + n * dV(sig) * dsig) / (4 - n * n)
    if alpha != 1:
        out += n * u * (1 - alpha * alpha) * h * h / ((2 + n) * _den(x, h, alpha))
    return out


def _pointed_shift(x, spec, u, s):
    """d/dx of the rational shift removed from F^bullet_s (zero at alpha = 1)."""
    n, g, h, alpha = _params(spec)
    if alpha == 1:
        return 0.0
    ns = n * s
    return ns * u * (1 - alpha * alpha) * h * h / ((2 + ns) * _den(x, h, alpha))


def track_v(xs, frame, v0=None, tol=1e-14):
    """Preimages of a continuous chain of points xs, followed by Newton
    steps from one point to the next."""
    v = v_of_x(xs[0], frame) if v0 is None else complex(v0)
    out = []
    for x in xs:
        for _ in range(30):
            xj = x_jet(v, frame, 1)
            dv = (complex(xj[0]) - x) / complex(xj[1])
            v -= dv
            if abs(dv) < tol * (1 + abs(v)):
                break
        out.append(v)
    return out


def _circle(frame, points):
    gm, gp, sgp = frame.gamma_minus, frame.gamma_plus, frame.sigma_gp
    c = (gp + gm) / 2
    half = (gp - gm) / 2
    R = min(1.5 * half, math.sqrt(half * (sgp - c)))
    xs = [c + R * cmath.exp(2j * math.pi * j / points) for j in range(points)]
    return c, R, xs


def perimeter_coefficients(F_of_v, frame, lmax, points=256):
    """F_l = [x^{-l-1}] F(x), l <= lmax, by the trapezoidal rule on a circle
    around the cut; F_of_v(v, x, dx) returns F(x(v))."""
    c, R, xs = _circle(frame, points)
    vs = track_v(xs, frame)
    acc = np.zeros(lmax + 1, dtype=complex)
    for x, v in zip(xs, vs):
        xj = x_jet(v, frame, 1)
        val = F_of_v(v, x, complex(xj[1])) * (x - c)
        pw = 1.0
        for l in range(lmax + 1):
            acc[l] += pw * val
            pw *= x
    return [(a / points).real for a in acc]


def _pole_radius(frame):
    T = frame.T
    w = frame.w_inf
    d = [T, 2 * T * (1 - w), 2 * T * w, 1.0]
    if abs(2 * w - 1) > 1e-12:
        d.append(T * abs(2 * w - 1))
    return 0.7 * min(d)


def pole_coefficients(G_of_v, frame, lmax, points=256):
    """F_l = -Res_{v_inf} x(v)^l G(v) dv with G = x' F, by the trapezoidal
    rule on a circle around v_inf.  Cheap and robust near criticality, but
    loses digits for large l since |x| is large on the circle."""
    r = _pole_radius(frame)
    vi = frame.v_inf
    acc = np.zeros(lmax + 1, dtype=complex)
    for j in range(points):
        e = cmath.exp(2j * math.pi * j / points)
        v = vi + r * e
        xj = x_jet(v, frame, 1)
        x = complex(xj[0])
        val = G_of_v(v, x, complex(xj[1])) * r * e
        pw = 1.0
        for l in range(lmax + 1):
            acc[l] += pw * val
            pw *= x
    return [-(a / points).real for a in acc]


def disk_coefficients(spec, frame, u, lmax, points=256):
    data = ghat(spec, frame, u)

    def F(v, x, dx):
        return G_disk(v, spec, frame, u, data) / dx + _disk_shift(x, spec, u)

    return perimeter_coefficients(F, frame, lmax, points)


def pointed_coefficients(spec, frame, u, lmax, s=1.0, points=256):
    def F(v, x, dx):
        return G_pointed(v, spec, frame, u, s) / dx + _pointed_shift(x, spec, u, s)

    return perimeter_coefficients(F, frame, lmax, points)


def analytic_F_pointed(x, spec, frame, u, s=1.0):
    """F^bullet_s at a point x of the physical sheet."""
    v = v_of_x(x, frame)
    xj = x_jet(v, frame, 1)
    return G_pointed(v, spec, frame, u, s) / complex(xj[1]) + _pointed_shift(x, spec, u, s)


def analytic_F_disk(x, spec, frame, u):
    v = v_of_x(x, frame)
    xj = x_jet(v, frame, 1)
    return G_disk(v, spec, frame, u) / complex(xj[1]) + _disk_shift(x, spec, u)


def analytic_F_cylinder(x1, x2, spec, frame, s=1.0):
    """F^(2)_s(x1, x2); x1 is the boundary the loop count is measured from."""
    n, g, h, alpha = _params(spec)
    v1, v2 = v_of_x(x1, frame), v_of_x(x2, frame)
    d1 = complex(x_jet(v1, frame, 1)[1])
    d2 = complex(x_jet(v2, frame, 1)[1])
    sig = varsigma(x1, h, alpha)
    dsig = -h * h / _den(x1, h, alpha) ** 2
    ns = n * s
    shift = (2 / (x1 - x2) ** 2 + ns * dsig / (sig - x2) ** 2) / (4 - ns * ns)
    return G_cylinder(v1, v2, spec, frame, s) / (d1 * d2) - shift


# ---------------------------------------------------------------- endpoints

def _residual(spec, u, gm, gap):
    n, g, h, alpha = _params(spec)
    f = frame_from_endpoints(gm, h=h, alpha=alpha, gap=gap)
    data = ghat(spec, f, u)
    r1 = G_disk(f.tau, spec, f, u, data)
    r2 = G_disk(0.5 + f.tau, spec, f, u, data)
    return f, np.array([r1.real, r1.imag, r2.real, r2.imag])


def _newton(spec, u, gm, lgap, tol=1e-12, maxit=60):
    x = np.array([gm, lgap], dtype=float)
    f, r = _residual(spec, u, x[0], math.exp(x[1]))
    for _ in range(maxit):
        nr = np.linalg.norm(r)
        if nr < tol:
            return f, x, nr
        J = np.empty((4, 2))
        for i in range(2):
            hstep = 1e-7 * max(1.0, abs(x[i]))
            xp = x.copy()
            xp[i] += hstep
            J[:, i] = (_residual(spec, u, xp[0], math.exp(xp[1]))[1] - r) / hstep
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            xn = x + lam * step
            try:
                fn, rn = _residual(spec, u, xn[0], math.exp(xn[1]))
            except (FrameError, PoleError, ValueError):
                lam /= 2
                continue
            if np.linalg.norm(rn) < nr:
                x, f, r = xn, fn, rn
                break
            lam /= 2
        else:
            break
    nr = np.linalg.norm(r)
    if nr < 1e-9:
        return f, x, nr
    raise ConvergenceError("endpoint Newton stalled, residual %.3e" % nr)


def _start(spec, u):
    n, g, h, alpha = _params(spec)
    r = 2 * math.sqrt(u)
    gp = min(r, 0.9 * (1 / ((1 + alpha) * h)))
    return -r, math.log(varsigma(gp, h, alpha) - gp)


def endpoint_solve(spec, u, start=None, steps=None):
    """Frame whose endpoints make F finite at gamma_+-; continued in u from
    a small-u start when no start is given."""
    u = float(u)
    if start is not None:
        gm, lgap = start
        f, x, _ = _newton(spec, u, gm, lgap)
        return f
    steps = steps or max(4, int(40 * u))
    u0 = min(u, 1e-3)
    x = np.array(_start(spec, u0))
    f = None
    for t in np.linspace(0, 1, steps + 1):
        uu = u0 + (u - u0) * t
        f, x, _ = _newton(spec, uu, x[0], x[1])
    return f


def _u_from_frame(spec, gm, gap):
    """G is affine in u: solve the first condition for u, return (u, other residual)."""
    n, g, h, alpha = _params(spec)
    f = frame_from_endpoints(gm, h=h, alpha=alpha, gap=gap)
    a0 = G_disk(f.tau, spec, f, 0.0)
    a1 = G_disk(f.tau, spec, f, 1.0) - a0
    b0 = G_disk(0.5 + f.tau, spec, f, 0.0)
    b1 = G_disk(0.5 + f.tau, spec, f, 1.0) - b0
    return f, a0, a1, b0, b1


def solve_at_gap(spec, gap, gm_guess):
    """Given the cut gap (equivalently the nome), find (gamma_-, u) with
    both endpoint conditions; returns (frame, u)."""

    def resid(gm):
        f, a0, a1, b0, b1 = _u_from_frame(spec, gm, gap)
        # u eliminated between the two (complex, but purely real or imaginary) conditions
        ua = -a0 / a1
        ub = -b0 / b1
        return (ua - ub).real, ua.real

    gm = gm_guess
    for _ in range(50):
        r, _ = resid(gm)
        hstep = 1e-8 * max(1.0, abs(gm))
        d = (resid(gm + hstep)[0] - r) / hstep
        step = -r / d
        gm += step
        if abs(step) < 1e-15 * max(1.0, abs(gm)):
            break
    r, u = resid(gm)
    f = frame_from_endpoints(gm, h=_num(spec.h, "h"), alpha=_num(spec.alpha, "alpha"), gap=gap)
    return f, u
