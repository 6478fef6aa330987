"""Non-generic critical line, exponents and near-critical constants of the
loop model with bending energy."""

import csv
import io
import math
from dataclasses import dataclass, asdict
from fractions import Fraction


class WindowError(ValueError):
    pass


def b_of_n(n):
    return math.acos(n / 2) / math.pi


def _check_n(n):
    n = float(n)
    if not 0 < n < 2:
        raise WindowError("n must lie in (0, 2)")
    return n


def rho_window(n):
    n = _check_n(n)
    b = b_of_n(n)
    sp, sm = math.sqrt(2 + n), math.sqrt(2 - n)
    rmin = (math.sqrt(6 + n) - sm) / ((1 - b) * sp)
    rmax = sm / (b * sp)
    return rmin, rmax


@dataclass
class CriticalPoint:
    n: float
    alpha: float
    g: float
    h: float
    phase: str
    b: float
    c: float
    gamma_str: float
    a: float
    nu: float
    d_gasket: float
    kappa: float
    rho: float = None
    w_inf: float = None
    Delta: float = None
    Delta1: float = None

    @property
    def gamma_plus(self):
        return 1 / ((1 + self.alpha) * self.h)

    def as_dict(self):
        return asdict(self)


# ---------------------------------------------------------------- alpha = 1

def _alpha_one(n, rho):
    b = b_of_n(n)
    sp, sm = math.sqrt(2 + n), math.sqrt(2 - n)
    D = -rho ** 2 * (1 - b * b) * sm + 4 * rho * b * sp - 2 * sm
    goh = 4 * (rho * b * sp - sm) / D
    num = rho ** 2 * b * (1 - b * b) * sp - 4 * rho * (1 - b * b) * sm + 6 * b * sp
    h2 = rho ** 2 * b / (24 * math.sqrt(4 - n * n)) * num / D
    return goh, h2


def alpha_one_printed(n, rho):
    """(g/h, h^2) with the h^2 numerator exactly as printed (no (1-b^2) on
    the middle term); kept for comparison only."""
    b = b_of_n(n)
    sp, sm = math.sqrt(2 + n), math.sqrt(2 - n)
    D = -rho ** 2 * (1 - b * b) * sm + 4 * rho * b * sp - 2 * sm
    num = rho ** 2 * b * (1 - b * b) * sp - 4 * rho * sm + 6 * b * sp
    return 4 * (rho * b * sp - sm) / D, rho ** 2 * b / (24 * math.sqrt(4 - n * n)) * num / D


# ---------------------------------------------------------------- general alpha

def tables_general(n, alpha, w):
    """(g/h, h^2) from the polynomial tables, evaluated as printed."""
    S, Cc = math.sin, math.cos
    b = b_of_n(n)
    al = alpha
    x = math.pi * w
    s2, c2, cb2 = S(x) ** 2, Cc(x) ** 2, Cc(b * x) ** 2
    Pt1 = S(2 * x) * (al * s2 - 1 - 2 * cb2)
    Pt0 = S(2 * b * x) * (-al * s2 + 1 + 2 * c2)
    P2 = S(2 * x) ** 2 * (b * S(2 * x) - 3 * S(2 * b * x))
    P1 = -2 * S(2 * x) * (3 * al ** 2 * s2 ** 2 - 6 * al * s2 * (2 * cb2 + 1)
                          + c2 ** 2 + 2 * c2 + 3 + 12 * cb2 * (c2 + 1))
    P0 = 6 * S(2 * b * x) * (al ** 2 * s2 ** 2 - 2 * al * s2 * (2 * c2 + 1) + 3 * c2 ** 2 + 6 * c2 + 1)
    Q3 = S(x) * S(2 * x) * (-b * S(2 * x) + S(2 * b * x))
    Q2 = -2 * S(x) * S(2 * x) * (3 * al ** 2 * s2 ** 2 + 2 * al * s2 * (2 * cb2 - 5)
                                 - c2 ** 2 - 6 * c2 + 7 - 4 * cb2 * (2 * c2 + 1))
    Q1 = -2 * S(x) * S(2 * b * x) * (3 * al ** 2 * s2 ** 2 - 6 * al * s2 * (2 * c2 + 1)
                                     + 7 * c2 ** 2 + 14 * c2 + 3)
    Q0 = 2 * Cc(x) * S(b * x) ** 2 * (3 * al ** 2 * s2 ** 2 - 4 * al * s2 * (c2 + 2)
                                      - c2 ** 2 + 2 * c2 + 5)
    D = b * b * P2 + b * P1 + P0
    goh = 6 * (1 - al * al) * s2 * (b * Pt1 + Pt0) / D
    h2 = (2 * b * c2 / ((1 - al * al) ** 2 * (2 - n) * S(x) ** 3)
          * (b ** 3 * Q3 + b * b * Q2 + b * Q1 + Q0) / D)
    return goh, h2


def _log_jet(f, g, order=3):
    """Y^(k)/Y for Y = f/g given Taylor coefficients of f and g."""
    y = [0.0] * (order + 1)
    for k in range(order + 1):
        acc = f[k] - sum(y[j] * g[k - j] for j in range(k))
        y[k] = acc / g[0]
    return [math.factorial(k) * y[k] / y[0] for k in range(order + 1)]


def _sin_taylor(a, x, order=3):
    return [a ** k * math.sin(a * x + k * math.pi / 2) / math.factorial(k) for k in range(order + 1)]


def _general(n, alpha, w):
    """q -> 0 endpoint conditions as a linear system in (g/h, h^2)."""
    b = b_of_n(n)
    d = 4 - n * n
    c = math.cos(math.pi * w)
    a = (1 - alpha) / (1 + alpha)
    y = (a - c) / ((1 - alpha) * (1 + c))
    gp = 1 / (1 + alpha)
    sig = lambda t: (1 - alpha * t) / (alpha + (1 - alpha * alpha) * t)
    ends = [y, gp, gp, sig(y)]
    e1 = sum(ends)
    e2 = sum(ends[i] * ends[j] for i in range(4) for j in range(i + 1, 4))
    th = math.sqrt((sig(y) - gp) * (gp - y))
    W = math.pi * w
    one = [1.0, 0.0, 0.0, 0.0]
    profiles = (
        _log_jet(_sin_taylor(b, W + math.pi / (2 * b)) if b else one, one),
        _log_jet(_sin_taylor(1 - b, W), _sin_taylor(1.0, W)),
    )
    rows = []
    for yk in profiles:
        A = -6 * e1 / (12 * d) * th * yk[1] + 2 / d * th ** 2 / 2 * yk[2]
        B = ((3 * e1 ** 2 - 4 * e2) / (12 * d) * th * yk[1] - e1 / d * th ** 2 / 2 * yk[2]
             + 2 / d * th ** 3 / 6 * yk[3])
        rows.append((A, B))
    (A0, B0), (A1, B1) = rows
    goh = (A0 - A1) / (B1 - B0)
    h2 = (A0 + goh * B0) * (2 + n) / 2
    return goh, h2


def w_of_rho(rho, alpha):
    """Confluent reparametrisation near alpha = 1."""
    return 0.5 - (1 - alpha) * rho / (2 * math.pi)


def confluence(n, rho, eps=(2e-4, 1e-4)):
    """Richardson limit alpha -> 1 of the general-alpha line at fixed rho."""
    e1, e2 = eps
    v1 = _general(n, 1 - e1, w_of_rho(rho, 1 - e1))
    v2 = _general(n, 1 - e2, w_of_rho(rho, 1 - e2))
    return tuple((e1 * y - e2 * x) / (e1 - e2) for x, y in zip(v1, v2))


def critical_line(n, alpha=1.0, param=None, route="solver"):
    """Critical point parametrised by rho (alpha = 1) or w_inf* (otherwise).

    route="tables" takes h^2 from the printed polynomial tables instead of
    the linear-system construction."""
    n = _check_n(n)
    alpha = float(alpha)
    if param is None:
        raise WindowError("missing critical-line parameter")
    param = float(param)
    if alpha == 1:
        rmin, rmax = rho_window(n)
        tol = 1e-12 * rmax
        if not rmin - tol <= param <= rmax + tol:
            raise WindowError("rho outside [%.15g, %.15g]" % (rmin, rmax))
        goh, h2 = _alpha_one(n, param)
        phase = "dilute" if abs(param - rmin) <= tol else "dense"
        rho, w = param, None
    else:
        if not 0 < param < 1:
            raise WindowError("w_inf must lie in (0, 1)")
        goh, h2 = _general(n, alpha, param)
        if route == "tables":
            goh, h2 = tables_general(n, alpha, param)
        phase = "dense"
        rho, w = None, param
    if h2 <= 0 or goh < -1e-12:
        raise WindowError("parameter gives g/h = %.6g, h^2 = %.6g" % (goh, h2))
    h = math.sqrt(h2)
    g = max(goh, 0.0) * h
    ex = exponents(n, phase)
    pt = CriticalPoint(n=n, alpha=alpha, g=g, h=h, phase=phase, rho=rho, w_inf=w,
                       **{k: float(ex[k]) for k in
                          ("b", "c", "gamma_str", "a", "nu", "d_gasket", "kappa")})
    if alpha == 1:
        dc = delta_constants(n, rho)
        pt.Delta, pt.Delta1 = dc["Delta"], dc["Delta1"]
    return pt


# ---------------------------------------------------------------- exponents


def exact_b(n):
    """b = arccos(n/2)/pi as a Fraction when it is rational with a small
    denominator, else a float."""
    b = b_of_n(n)
    fr = Fraction(b).limit_denominator(120)
    if abs(float(fr) - b) < 1e-12:
        return fr
    return b


def exponents(n=None, phase="dense", b=None):
    """Exponent record for one phase; exact when b is a Fraction."""
    if b is None:
        b = exact_b(float(n))
    one = Fraction(1) if isinstance(b, Fraction) else 1.0
    half = one / 2
    rec = dict(b=None, gamma_str=None, central_charge=None, c=None, a=None,
               d_H=None, d_gasket=None, nu=None, kappa=None)
    if phase == "subcritical":
        rec.update(a=3 * half, d_H=2 * one, d_gasket=2 * one, nu=0 * one)
    elif phase == "generic":
        rec.update(gamma_str=-half, central_charge=0 * one, a=5 * half, d_H=4 * one,
                   d_gasket=4 * one, nu=0 * one)
    elif phase == "dilute":
        rec.update(b=b * one, gamma_str=-b * one, central_charge=one - 6 * b * b / (1 + b),
                   c=one, a=2 + b * one, d_gasket=3 + 2 * b * one, nu=half - b,
                   kappa=4 * one / (1 + b))
    elif phase == "dense":
        c = one / (1 - b)
        rec.update(b=b * one, gamma_str=-b * c, central_charge=one - 6 * b * b / (1 - b),
                   c=c, a=2 - b * one, d_gasket=3 - 2 * b * one, nu=c * (half - b),
                   kappa=4 * c)
        if b == Fraction(1, 3):
            rec["d_H"] = 4 * one
    else:
        raise ValueError("unknown phase %r" % (phase,))
    return rec


# ---------------------------------------------------------------- Delta

def delta_dense_printed(n, rho):
    """The dense constant with the displayed 6(n+2)/b prefactor
    (opposite sign to the measured one)."""
    b = b_of_n(n)
    N, D1 = _delta_parts(n, rho)
    return 6 * (n + 2) / b * N / D1


def _delta_parts(n, rho):
    b = b_of_n(n)
    sp, sm = math.sqrt(2 + n), math.sqrt(2 - n)
    N = rho ** 2 * (1 - b) ** 2 * sp + 2 * rho * (1 - b) * sm - 2 * sp
    D1 = rho ** 2 * b * (1 - b * b) * sp - 4 * rho * (1 - b * b) * sm + 6 * b * sp
    return N, D1


def delta_constants(n, rho):
    """Near-critical constants at alpha = 1: q ~ ((1-u)/Delta)^c."""
    n = _check_n(n)
    rmin, rmax = rho_window(n)
    tol = 1e-12 * rmax
    if not rmin - tol <= rho <= rmax + tol:
        raise WindowError("rho outside the critical window")
    b = b_of_n(n)
    N, D1 = _delta_parts(n, rho)
    delta = -12 / b * N / D1
    dilute = abs(rho - rmin) <= tol
    d1 = 24 / (b * (1 - b) * (2 - b))
    return dict(Delta=0.0 if dilute else delta, Delta_formula=delta,
                Delta1=d1, Delta1_measured=(1 + b) * d1,
                phase="dilute" if dilute else "dense",
                c=1.0 if dilute else 1 / (1 - b))


# ---------------------------------------------------------------- volume

def volume_prefactors(n, param, alpha=1.0, h=None):
    """A and A_gasket; A is the measured prefactor of the q^b term of
    [x^-4]F-bullet, the *_printed entries are the displayed variants."""
    n = float(n)
    alpha = float(alpha)
    b = b_of_n(n)
    if h is None:
        h = critical_line(n, alpha, param).h
    if alpha == 1:
        rho = float(param)
        sp, sm = math.sqrt(2 + n), math.sqrt(2 - n)
        aspe = rho * (-rho ** 2 * (1 - b * b) * sm + 6 * rho * b * sp - 6 * sm) / (2 * h ** 3)
        thv = rho * (rho ** 2 * (1 - b * b) * sm - 6 * rho * b * sp + 6 * sm) / (2 * h ** 3)
        return dict(A=aspe / (4 * sp), A_printed=aspe, A_printed_alt=thv,
                    A_gasket=rho * (rho / 4 - 1) / h ** 2)
    w = math.pi * float(param)
    s1 = 1 - alpha * math.sin(w) ** 2
    A2 = math.sin(2 * w) ** 2 * math.sin(b * w)
    A1 = 6 * math.sin(2 * w) * math.cos(b * w) * s1
    A0 = 2 * math.sin(b * w) * (-3 * s1 ** 2 + math.cos(w) ** 2 * (math.cos(w) ** 2 - 2))
    agen = (16 * math.cos(b * w) * math.cos(w) * (b * b * A2 + b * A1 + A0)
            / ((1 - alpha * alpha) ** 3 * h ** 3 * (2 + n) * math.sin(w) ** 5))
    c = math.cos(w)
    gas = 4 * ((1 - 2 * alpha) * c + 2 - 2 * alpha) / ((1 - alpha * alpha) ** 2 * h ** 2 * (c + 1))
    return dict(A=agen / 2, A_printed=agen, A_gasket=gas)


def pointed_count_asymptotic(V, A, Delta, b, c):
    """[u^V x^-4] F-bullet ~ A/(Delta^{bc} Gamma(-bc) V^{1+bc})."""
    return A / (Delta ** (b * c) * math.gamma(-b * c) * V ** (1 + b * c))


# ---------------------------------------------------------------- profiles

def _ns(beta):
    return 2 * math.cos(math.pi * beta)


def scaling_profile(kind, w, beta, point, printed=False):
    """Parametric scaling functions near the critical point.

    kind is one of Phi, Psi, Psi~, Xi3, Xi4, Xi5; w is a float (pair for Xi).
    Returns (argument, value). printed=True reproduces the displayed forms."""
    ns = _ns(beta)
    h, alpha = point.h, point.alpha
    pi = math.pi
    sr = lambda t, bb=beta: math.sin(pi * bb * t) / math.sin(pi * t)
    one = alpha == 1
    if not one:
        ci = math.cos(pi * point.w_inf)
        k = (1 - alpha * alpha) / ci
    else:
        rho = point.rho
    gplus = 1 / ((1 + alpha) * h)

    def X(t):
        if one:
            return gplus + (8 * rho if printed else rho / 2) / (h * math.cos(pi * t))
        return gplus + 2 / (h * k * (math.cos(pi * t) - ci))

    def xi(t):
        if one:
            return 4 * rho / h * (math.cos(pi * t) ** 2 if printed else math.cos(pi * t / 2) ** 2)
        return 16 / (k * h) * math.cos(pi * t / 2) ** 2

    def psi(t, bb):
        if one:
            return 8 * h / (rho * math.sqrt(2 + ns)) / math.tan(pi * t) * math.sin(pi * (1 - bb) * t)
        wi = point.w_inf
        br = (math.cos(pi * (1 - bb) * (t + wi)) / math.sin(pi * (t + wi))
              + math.cos(pi * (1 - bb) * (t - wi)) / math.sin(pi * (t - wi)))
        return -2 / (2 + ns) * h * k * (math.cos(pi * t) - ci) ** 2 / math.sin(pi * t) * br

    half = 1.0 if printed else 0.5
    if kind in ("Phi", "Psi", "Psi~"):
        w = float(w)
        if w <= 0 or w >= 1:
            raise ValueError("w must lie in (0, 1)")
        if kind == "Phi":
            if one:
                val = 4 * h / (rho * math.sqrt(2 + ns)) * sr(w)
            else:
                val = 2 * h * (1 - alpha * alpha) / (2 + ns) * math.cos(pi * beta * point.w_inf) / ci * sr(w)
            return xi(w), half * val
        if kind == "Psi":
            return X(w), half * psi(w, beta)
        if one:
            val = 16 * h / (rho * math.sqrt(2 + ns)) * math.cos(pi * w) ** 2 * sr(w)
        else:
            val = (8 / (2 + ns) * h * k * math.cos(pi * beta * point.w_inf)
                   * (math.cos(pi * w) - ci) ** 2 * sr(w))
        return X(w), half * val
    w1, w2 = (float(t) for t in w)
    for t in (w1, w2):
        if t <= 0 or t >= 1:
            raise ValueError("w must lie in (0, 1)")
    d = 4 - ns * ns
    if kind == "Xi3":
        if one:
            val = (-32 if printed else 32) * h * h / (rho ** 2 * d)
            val *= math.prod(math.cos(pi * t) ** 2 * sr(t) for t in (w1, w2))
        else:
            val = 2 * h * h * (1 - alpha * alpha) ** 2 / d * math.prod(
                (math.cos(pi * t) - ci) ** 2 * sr(t) / ci for t in (w1, w2))
        return (X(w1), X(w2)), val
    if kind == "Xi4":
        if one:
            val = 8 * h * h / (rho ** 2 * d) * math.cos(pi * w1) ** 2
        else:
            val = (1 - alpha * alpha) ** 2 * h * h * (math.cos(pi * w1) - ci) ** 2 / (2 * d * ci * ci)
        return (X(w1), xi(w2)), val * sr(w1) * sr(w2)
    if kind == "Xi5":
        if one:
            val = 4 * h * h / (rho ** 2 * d)
        else:
            val = (1 - alpha * alpha) ** 2 * h * h / (4 * d * ci * ci)
        return (xi(w1), xi(w2)), (1.0 if printed else -0.5) * val * sr(w1) * sr(w2)
    raise ValueError("unknown profile %r" % (kind,))


# ---------------------------------------------------------------- saddle maps

def saddle_maps(p, n):
    if p <= 0:
        raise ValueError("p must be positive")
    return 2 / n * p / math.sqrt(1 + p * p), math.atan2(1, p) / math.pi


# ---------------------------------------------------------------- CSV

def fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def to_csv(header, rows):
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([fmt(v) for v in r])
    return out.getvalue()


def phase_line_csv(points):
    first = "rho" if all(p.rho is not None for p in points) else "w_inf"
    return to_csv([first, "g", "h", "phase", "b", "c", "Delta"],
                [(p.rho if p.rho is not None else p.w_inf, p.g, p.h, p.phase, p.b, p.c, p.Delta)
                 for p in points])


EXPONENT_MODELS = (
    ("n=0", Fraction(1, 2)), ("percolation", Fraction(1, 3)), ("ising", Fraction(1, 4)),
    ("3-potts", Fraction(1, 6)), ("KT", Fraction(0)),
)


def exponent_table_csv(models=EXPONENT_MODELS, phase="dense"):
    rows = []
    for name, b in models:
        e = exponents(phase=phase, b=b)
        rows.append((name, e["b"], e["gamma_str"], e["c"], e["a"], e["nu"], e["kappa"]))
    return to_csv(["model", "b", "gamma_str", "c", "a", "nu", "kappa"], rows)
