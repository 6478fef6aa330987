"""Exact truncated generating series of the O(n) loop model on triangulations.

Coefficients live in Q[n, g, h, alpha] (any of g, h, alpha, n may be fixed to a
rational instead).  Series are graded by the vertex weight u; refined series
carry a second variable s counting separating loops.

A polynomial is a plain dict mapping a packed exponent key to an int or
Fraction.  Exponents of (u, s, n, g, h, alpha) occupy 8 bits each, so adding
keys multiplies monomials.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

VARS = ("u", "s", "n", "g", "h", "alpha")
_BITS = 8
_MASK = (1 << _BITS) - 1
_SHIFT = {name: i * _BITS for i, name in enumerate(VARS)}


class BudgetError(ValueError):
    pass


class GradingError(ValueError):
    pass


class EmptySectorError(ValueError):
    pass


def monomial(**exps):
    key = 0
    for name, e in exps.items():
        if e < 0 or e > _MASK:
            raise ValueError("exponent out of range for %s" % name)
        key += e << _SHIFT[name]
    return key


def unpack(key):
    return tuple((key >> (i * _BITS)) & _MASK for i in range(len(VARS)))


def degree(key, name):
    return (key >> _SHIFT[name]) & _MASK


def _clean(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


def padd(a, b, scale=1):
    """a + scale*b as a new dict."""
    out = dict(a)
    for k, c in b.items():
        v = out.get(k, 0) + scale * c
        if v:
            out[k] = v
        else:
            out.pop(k, None)
    return out


def piadd(acc, b, scale=1):
    for k, c in b.items():
        v = acc.get(k, 0) + scale * c
        if v:
            acc[k] = v
        else:
            del acc[k]
    return acc


def pmul(a, b):
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    out = {}
    get = out.get
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = ka + kb
            out[k] = get(k, 0) + ca * cb
    return {k: c for k, c in out.items() if c}


def pimuladd(acc, a, b):
    """acc += a*b in place."""
    if not a or not b:
        return acc
    get = acc.get
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = ka + kb
            acc[k] = get(k, 0) + ca * cb
    return acc


def pscale(a, c):
    if not c:
        return {}
    return {k: v * c for k, v in a.items()}


def pconst(c):
    return {0: c} if c else {}


def pprune(a):
    return {k: _clean(c) for k, c in a.items() if c}


def pshift(a, **exps):
    sh = monomial(**exps)
    return {k + sh: c for k, c in a.items()}


def peval(a, **values):
    """Substitute numbers for some variables (exact if the values are exact)."""
    out = {}
    names = [(name, _SHIFT[name], values[name]) for name in values]
    for k, c in a.items():
        for name, sh, val in names:
            e = (k >> sh) & _MASK
            if e:
                c = c * val ** e
                k -= e << sh
        out[k] = out.get(k, 0) + c
    return {k: c for k, c in out.items() if c}


def _param(value, name):
    """Polynomial for a model parameter: formal variable when value is None."""
    if value is None:
        return {monomial(**{name: 1}): 1}
    return pconst(Fraction(value))


@dataclass(frozen=True)
class LoopModelSpec:
    """Model weights.  None means the parameter stays formal."""

    n: object = None
    g: object = None
    h: object = None
    alpha: object = None
    face_weights: dict = field(default=None, hash=False, compare=False)

    def __post_init__(self):
        for name in ("n", "g", "h", "alpha"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, Fraction(v))
        if self.n is not None and not 0 <= self.n <= 2:
            raise ValueError("numeric n must lie in [0, 2]")

    def poly(self, name):
        return _param(getattr(self, name), name)


class TruncatedSeries:
    """Polynomial in (u, s) over Q[n, ...] truncated above max_u in u."""

    __slots__ = ("terms", "max_u")

    def __init__(self, terms=None, max_u=1):
        if max_u < 1:
            raise ValueError("max_u must be positive")
        self.max_u = max_u
        self.terms = {k: _clean(c) for k, c in (terms or {}).items()
                      if c and degree(k, "u") <= max_u}

    @property
    def has_s(self):
        return any(degree(k, "s") for k in self.terms)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.max_u == other.max_u and self.terms == other.terms

    def __add__(self, other):
        return TruncatedSeries(padd(self.terms, other.terms), min(self.max_u, other.max_u))

    def __sub__(self, other):
        return TruncatedSeries(padd(self.terms, other.terms, -1), min(self.max_u, other.max_u))

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries(pscale(self.terms, other), self.max_u)
        m = min(self.max_u, other.max_u)
        out = {}
        for ka, ca in self.terms.items():
            da = degree(ka, "u")
            for kb, cb in other.terms.items():
                if da + degree(kb, "u") <= m:
                    out[ka + kb] = out.get(ka + kb, 0) + ca * cb
        return TruncatedSeries(out, m)

    __rmul__ = __mul__

    def coeff(self, **exps):
        """Sum of all terms with the given exponents (others free)."""
        out = {}
        for k, c in self.terms.items():
            if all(degree(k, name) == e for name, e in exps.items()):
                k2 = k - sum(e << _SHIFT[name] for name, e in exps.items())
                out[k2] = out.get(k2, 0) + c
        return pprune(out)

    def subs(self, **values):
        return TruncatedSeries(peval(self.terms, **values), self.max_u)

    def u_derivative(self):
        """u d/du (pointing a vertex)."""
        return TruncatedSeries({k: c * degree(k, "u") for k, c in self.terms.items()}, self.max_u)

    def evaluate(self, **values):
        """Value at numeric arguments for every variable present."""
        rest = peval(self.terms, **values)
        if any(k for k in rest):
            raise ValueError("unassigned variables remain")
        return rest.get(0, 0)

    def to_json(self):
        return dump_series(self)


def dump_series(series):
    """JSON dump with coefficients listed as polynomials in n."""
    extra = [v for v in VARS if v not in ("u", "s", "n")
             and any(degree(k, v) for k in series.terms)]
    names = ["u", "s"] + extra
    grouped = {}
    for k, c in series.terms.items():
        exp = tuple(degree(k, v) for v in names)
        grouped.setdefault(exp, {})[degree(k, "n")] = c
    terms = []
    for exp in sorted(grouped):
        coefs = grouped[exp]
        top = max(coefs)
        poly = [str(Fraction(coefs.get(i, 0))) for i in range(top + 1)]
        terms.append({"exp": list(exp), "coef_n_poly": poly})
    return json.dumps({"vars": names, "max_u": series.max_u, "terms": terms},
                      sort_keys=True)


def load_series(text):
    data = json.loads(text)
    names = data["vars"]
    terms = {}
    for t in data["terms"]:
        base = sum(e << _SHIFT[v] for v, e in zip(names, t["exp"]))
        for i, c in enumerate(t["coef_n_poly"]):
            c = Fraction(c)
            if c:
                terms[base + (i << _SHIFT["n"])] = c
    return TruncatedSeries(terms, data["max_u"])


# ---------------------------------------------------------------- annuli

class AnnulusMatrix:
    """A[k][l] for 1 <= k <= K, 0 <= l <= L, and R[k][l] = A[k][l]/k."""

    def __init__(self, A, K, L):
        self.A = A
        self.K = K
        self.L = L

    def R(self, k, l):
        return pscale(self.A[k][l], Fraction(1, k))

    def is_zero(self):
        return not any(self.A[k][l] for k in self.A for l in self.A[k])


def _expand_power(base, e):
    out = {0: 1}
    for _ in range(e):
        out = pmul(out, base)
    return out


def annulus_coeffs(spec, K, L, budget=64):
    """Taylor coefficients of n ln 1/(1 - a h (x+z) - (1-a^2) h^2 x z).

    R_{k,l} = n h^{k+l} sum_c (m-1)!/(a! b! c!) alpha^{a+b} (1-alpha^2)^c
    with a = k-c, b = l-c, m = k+l-c (multinomial expansion of the log).
    """
    if K < 1 or L < 1:
        raise ValueError("K and L must be positive")
    if K > budget or L > budget:
        raise BudgetError("annulus expansion beyond budget")
    n = spec.poly("n")
    h = spec.poly("h")
    al = spec.poly("alpha")
    one_minus = padd(pconst(1), pmul(al, al), -1)
    A = {}
    for k in range(1, K + 1):
        A[k] = {}
        for l in range(0, L + 1):
            acc = {}
            for c in range(0, min(k, l) + 1):
                a, b = k - c, l - c
                m = k + l - c
                w = Fraction(factorial(m - 1), factorial(a) * factorial(b) * factorial(c))
                term = pmul(_expand_power(al, a + b), _expand_power(one_minus, c))
                piadd(acc, term, w)
            acc = pmul(pmul(acc, _expand_power(h, k + l)), n)
            A[k][l] = pprune(pscale(acc, k))
    return AnnulusMatrix(A, K, L)


def annulus_alpha_one(k, l):
    """Closed form at alpha = 1 (coefficient of n h^{k+l})."""
    return comb(k + l - 1, k - 1)


# ---------------------------------------------------------------- graded recursions
#
# Graded objects are lists indexed [l][V] holding the u^V slice of a
# perimeter-l family as a polynomial without the u exponent.

def _zeros(L, N):
    return [[{} for _ in range(N + 1)] for _ in range(L + 1)]


def _graded_weights(face_weights, N):
    """face weights {k: value or polynomial} as {k: [slice_0]} (u-degree 0)."""
    out = {}
    for k, w in face_weights.items():
        poly = w if isinstance(w, dict) else pconst(Fraction(w))
        if any(degree(key, "u") for key in poly):
            raise ValueError("face weights must not contain u")
        if poly:
            out[k] = [poly] + [{} for _ in range(N)]
    return out


def _check_grading(W):
    for k, slices in W.items():
        if k <= 2 and slices and slices[0]:
            raise GradingError(
                "face of degree %d with u-independent weight: infinitely many "
                "maps at fixed volume" % k)


def _tutte_step(F, W, V, l, L):
    """u^V slice of the Tutte recursion for perimeter l >= 1."""
    acc = {}
    for k, slices in W.items():
        j = l + k - 2
        if j < 0 or j > L:
            continue
        for d, w in enumerate(slices):
            if d >= V:
                break
            if w and F[j][V - d]:
                pimuladd(acc, w, F[j][V - d])
    for l1 in range(0, l - 1):
        l2 = l - 2 - l1
        if l2 < l1:
            break
        mult = 1 if l1 == l2 else 2
        for V1 in range(1, V):
            a, b = F[l1][V1], F[l2][V - V1]
            if a and b:
                if mult == 1:
                    pimuladd(acc, a, b)
                else:
                    pimuladd(acc, pscale(a, 2), b)
    return {k: c for k, c in acc.items() if c}


def _disk_levels(W, N, L, annuli=None, G=None):
    """Disk family; when annuli are given, W is updated in place into the
    renormalised weights G_k = g_k + sum_l A_{k,l} F_l slice by slice."""
    F = _zeros(L, N)
    F[0][1] = {0: 1}
    for V in range(1, N + 1):
        for l in range(L, 0, -1):
            if V >= 2 or l == 0:
                F[l][V] = _tutte_step(F, W, V, l, L)
        if annuli is not None:
            for k in range(1, annuli.K + 1):
                acc = {}
                for lp in range(0, min(annuli.L, L) + 1):
                    a = annuli.A[k].get(lp)
                    if a and F[lp][V]:
                        pimuladd(acc, a, F[lp][V])
                acc = {kk: c for kk, c in acc.items() if c}
                if acc:
                    slices = W.setdefault(k, [{} for _ in range(N + 1)])
                    slices[V] = acc
    return F


def _pointed_usual(F, W, N, L):
    """u d/du of usual maps at fixed face weights, evaluated at W."""
    P = _zeros(L, N)
    P[0][1] = {0: 1}
    for V in range(1, N + 1):
        for l in range(L, 0, -1):
            acc = {}
            for k, slices in W.items():
                j = l + k - 2
                if j < 0 or j > L:
                    continue
                for d, w in enumerate(slices):
                    if d >= V:
                        break
                    if w and P[j][V - d]:
                        pimuladd(acc, w, P[j][V - d])
            for l1 in range(0, l - 1):
                l2 = l - 2 - l1
                for V1 in range(1, V):
                    a, b = P[l1][V1], F[l2][V - V1]
                    if a and b:
                        pimuladd(acc, pscale(a, 2), b)
            P[l][V] = {k: c for k, c in acc.items() if c}
    return P


def _face_derivative(F, W, N, L, m):
    """d/dg_m of usual maps evaluated at W (marked unrooted face of degree m)."""
    D = _zeros(L, N)
    for V in range(1, N + 1):
        for l in range(L, 0, -1):
            acc = {}
            j = l + m - 2
            if 0 <= j <= L and F[j][V]:
                piadd(acc, F[j][V])
            for k, slices in W.items():
                j = l + k - 2
                if j < 0 or j > L:
                    continue
                for d, w in enumerate(slices):
                    if d >= V:
                        break
                    if w and D[j][V - d]:
                        pimuladd(acc, w, D[j][V - d])
            for l1 in range(0, l - 1):
                l2 = l - 2 - l1
                for V1 in range(1, V):
                    a, b = F[l1][V1], D[l2][V - V1]
                    if a and b:
                        pimuladd(acc, pscale(a, 2), b)
            D[l][V] = {k: c for k, c in acc.items() if c}
    return D


def _to_series(levels, l, N, s_exp=0):
    terms = {}
    u_sh = _SHIFT["u"]
    for V in range(N + 1):
        for k, c in levels[l][V].items():
            terms[k + (V << u_sh)] = c
    return TruncatedSeries(terms, N)


class PerimeterFamily:
    """Perimeter-indexed series, entries[l] for 0 <= l <= L_max."""

    def __init__(self, entries, L_max):
        self.entries = entries
        self.L_max = L_max

    def __getitem__(self, l):
        return self.entries[l]

    def __len__(self):
        return self.L_max + 1


def _budget(value, default):
    import os
    cap = os.environ.get("LOOPNEST_BUDGET")
    limit = int(cap) if cap else default
    if value > limit:
        raise BudgetError("truncation %d exceeds budget %d" % (value, limit))


def tutte_disk_series(face_weights, u_truncation, L_max=None):
    """Usual rooted planar maps with weight g_k per inner face of degree k."""
    if u_truncation < 1:
        raise ValueError("u_truncation must be >= 1")
    _budget(u_truncation, 40)
    N = u_truncation
    W = _graded_weights(face_weights, N)
    _check_grading(W)
    L = 2 * N if L_max is None else max(L_max, 2 * N)
    F = _disk_levels(W, N, L)
    Lout = L if L_max is None else L_max
    return PerimeterFamily([_to_series(F, l, N) for l in range(Lout + 1)], Lout)


class NestedSolution:
    """Graded data of the nested-loop fixed point for one model."""

    def __init__(self, spec, N):
        _budget(N, 40)
        self.spec = spec
        self.N = N
        self.L = 2 * N + 2
        self.K = 2 * N + 2
        fw = spec.face_weights or {3: spec.poly("g")}
        self.W = _graded_weights(fw, N)
        _check_grading(self.W)
        self.annuli = annulus_coeffs(spec, self.K, self.L, budget=4 * N + 8)
        self.F = _disk_levels(self.W, N, self.L, annuli=self.annuli)
        self._D = {}
        self._M = None
        self._P = None

    def G(self, k):
        """Renormalised face weight G_k as a truncated series."""
        slices = self.W.get(k, [])
        terms = {}
        for V, sl in enumerate(slices):
            for key, c in sl.items():
                terms[key + (V << _SHIFT["u"])] = c
        return TruncatedSeries(terms, self.N)

    def disk(self, l):
        return _to_series(self.F, l, self.N)

    def D(self, m):
        if m not in self._D:
            self._D[m] = _face_derivative(self.F, self.W, self.N, self.L, m)
        return self._D[m]

    def usual_cylinder(self, l1, m):
        """m d/dg_m of usual disks of perimeter l1 at the renormalised weights."""
        D = self.D(m)
        return [pscale(D[l1][V], m) for V in range(self.N + 1)]

    def transfer(self):
        """M[l][lp][d] = sum_k Fcal2_{l,k} R_{k,lp} (u^d slices)."""
        if self._M is not None:
            return self._M
        N, L = self.N, self.L
        M = [[None] * (L + 1) for _ in range(L + 1)]
        cyl = {k: [self.usual_cylinder(l, k) for l in range(L + 1)]
               for k in range(1, self.K + 1)}
        Rk = {(k, lp): self.annuli.R(k, lp)
              for k in range(1, self.K + 1) for lp in range(0, L + 1)}
        for l in range(L + 1):
            for lp in range(L + 1):
                row = []
                for d in range(N + 1):
                    acc = {}
                    for k in range(1, self.K + 1):
                        c = cyl[k][l][d]
                        r = Rk[(k, lp)]
                        if c and r:
                            pimuladd(acc, c, r)
                    row.append({kk: v for kk, v in acc.items() if v})
                M[l][lp] = row
        self._M = M
        return M

    def pointed_usual(self):
        if self._P is None:
            self._P = _pointed_usual(self.F, self.W, self.N, self.L)
        return self._P


def nested_fixed_point(spec, u_truncation, L_max=None):
    """(G, F): renormalised weights {k: series} and the disk family."""
    sol = NestedSolution(spec, u_truncation)
    Lout = L_max if L_max is not None else 2 * u_truncation
    F = PerimeterFamily([sol.disk(l) for l in range(Lout + 1)], Lout)
    G = {k: sol.G(k) for k in range(1, sol.K + 1)}
    return G, F


def _refined_levels(sol, seed, s_weight=True):
    """X_l = seed_l + s sum_{lp} M_{l,lp} X_lp, solved by u-grading."""
    N, L = sol.N, sol.L
    M = sol.transfer()
    s_key = monomial(s=1) if s_weight else 0
    X = _zeros(L, N)
    for V in range(1, N + 1):
        for l in range(L + 1):
            acc = dict(seed[l][V])
            for lp in range(L + 1):
                row = M[l][lp]
                for d in range(1, V):
                    m, x = row[d], X[lp][V - d]
                    if m and x:
                        pimuladd(acc, pshift(m, s=1) if s_key else m, x)
            X[l][V] = {k: c for k, c in acc.items() if c}
    return X


def refined_pointed_disk(spec, u_truncation, L_max=None, solution=None):
    """F^bullet_l[s]: pointed disks with weight s per separating loop."""
    sol = solution or NestedSolution(spec, u_truncation)
    X = _refined_levels(sol, sol.pointed_usual())
    Lout = L_max if L_max is not None else 2 * sol.N
    return PerimeterFamily([_to_series(X, l, sol.N) for l in range(Lout + 1)], Lout)


def refined_cylinder(spec, u_truncation, l2, L_max=None, solution=None):
    """F^(2)_{l1,l2}[s] for all l1 <= L_max at fixed second perimeter l2."""
    sol = solution or NestedSolution(spec, u_truncation)
    if l2 < 1 or l2 > sol.K:
        raise BudgetError("second perimeter out of range")
    seed = [sol.usual_cylinder(l, l2) for l in range(sol.L + 1)]
    X = _refined_levels(sol, seed)
    Lout = L_max if L_max is not None else 2 * sol.N
    return PerimeterFamily([_to_series(X, l, sol.N) for l in range(Lout + 1)], Lout)


def depth_distribution(spec, V, L, l2=None, solution=None):
    """Exact law of the number of separating loops in the (V, L) sector.

    Pointed disks by default; cylinders with second perimeter l2 otherwise.
    All parameters of spec must be numeric rationals.
    """
    for name in ("n", "g", "h", "alpha"):
        if getattr(spec, name) is None:
            raise ValueError("depth_distribution needs numeric %s" % name)
    sol = solution or NestedSolution(spec, V)
    if l2 is None:
        fam = refined_pointed_disk(spec, V, solution=sol)
    else:
        fam = refined_cylinder(spec, V, l2, solution=sol)
    if L > fam.L_max:
        raise EmptySectorError("perimeter beyond the computed range")
    slice_ = fam[L].coeff(u=V)
    by_p = {}
    for k, c in slice_.items():
        p = degree(k, "s")
        by_p[p] = by_p.get(p, 0) + c
    total = sum(by_p.values())
    if total == 0:
        raise EmptySectorError("no configuration with volume %d and perimeter %d" % (V, L))
    top = max(by_p)
    return [Fraction(by_p.get(p, 0)) / total for p in range(top + 1)]


def edges_of(key, perimeters):
    """Edge count of a triangulation monomial with the given boundary perimeters."""
    t = degree(key, "g") + degree(key, "h")
    twice = 3 * t + sum(perimeters)
    return twice // 2
