"""Batch front end: tables, series dumps and check reports."""

import argparse
import json
import math
import os
import sys
from fractions import Fraction

from . import critical_geometry as cg
from . import large_deviations as ld
from . import series_core as sc
from .critical_geometry import to_csv

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InvariantError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _budget(default):
    raw = os.environ.get("LOOPNEST_BUDGET")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError("LOOPNEST_BUDGET must be an integer")


def _rational(text):
    """Exact rational from '1/50', '0.02' or 'sqrt2'-free decimal text."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError("not a rational: %r" % text)


def _real(text):
    t = str(text).strip()
    if t.startswith("sqrt"):
        return math.sqrt(float(t[4:].strip("()")))
    try:
        return float(Fraction(t))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError("not a number: %r" % text)


def emit(args, header, rows, extra=None):
    if args.format == "json":
        obj = {h: [r[i] if isinstance(r[i], str) or r[i] is None else float(r[i])
                   for r in rows] for i, h in enumerate(header)}
        if extra:
            obj.update(extra)
        text = json.dumps(obj, sort_keys=True, allow_nan=False) + "\n"
    else:
        text = to_csv(header, rows)
    _write(args, text)


def _write(args, text):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid(lo, hi, k):
    if k < 1:
        raise UsageError("--points must be positive")
    if k == 1:
        return [lo]
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


# ---------------------------------------------------------------- commands

def cmd_ldf(args):
    ps = _grid(args.p_min, args.p_max, args.points)
    if args.p_min <= 0:
        raise UsageError("--p-min must be positive")
    if args.n is None and not args.kappa:
        raise UsageError("ldf needs --n or --kappa")
    if args.bivariate:
        law = (ld.WeightLaw("gaussian", sigma2=args.sigma2) if args.law == "gaussian"
               else ld.WeightLaw("bernoulli_pm1"))
        model = ("cle", args.kappa) if args.kappa else ("map", args.n)
        rows = []
        for p in ps:
            q = args.q_ratio * p
            base = ld.theta(p, args.kappa) if args.kappa else ld.J(p, args.n)
            rows.append((p, q, base, ld.bivariate_rate(p, q, model, law)))
        return emit(args, ["p", "q", "rate", "bivariate_rate"], rows)
    if args.kappa:
        rows = [(p, ld.theta(p, args.kappa), ld.theta(p, args.kappa, "sphere")) for p in ps]
        return emit(args, ["p", "theta_disk", "theta_sphere"], rows)
    emit(args, ["p", "J"], [(p, ld.J(p, args.n)) for p in ps])


def cmd_phase(args):
    n, alpha = args.n, args.alpha
    if alpha == 1:
        if args.sweep:
            lo, hi = cg.rho_window(n)
            params = _grid(lo, hi, args.points)
        elif args.rho is not None:
            params = [args.rho]
        else:
            raise UsageError("phase at alpha=1 needs --rho or --sweep")
    else:
        if args.sweep:
            params = _grid(args.winf_min, args.winf_max, args.points)
        elif args.winf is not None:
            params = [args.winf]
        else:
            raise UsageError("phase at alpha != 1 needs --winf or --sweep")
    pts = [cg.critical_line(n, alpha, p) for p in params]
    ex = cg.exponents(n, "dense")
    extra = {"exponents": {k: (None if v is None else float(v)) for k, v in ex.items()}}
    if args.format == "json":
        rows = [(p.rho if p.rho is not None else p.w_inf, p.g, p.h, p.phase, p.b, p.c, p.Delta)
                for p in pts]
        first = "rho" if alpha == 1 else "w_inf"
        return emit(args, [first, "g", "h", "phase", "b", "c", "Delta"], rows, extra)
    _write(args, cg.phase_line_csv(pts))


def _spec(args):
    return sc.LoopModelSpec(n=args.n, g=args.g, h=args.h, alpha=args.alpha)


def cmd_series(args):
    cap = _budget(12)
    if args.max_volume < 1 or args.max_volume > cap:
        raise UsageError("--max-volume must lie in [1, %d]" % cap)
    spec = _spec(args)
    sol = sc.NestedSolution(spec, args.max_volume)
    L = args.perimeter
    if args.cylinder is not None:
        fam = sc.refined_cylinder(spec, args.max_volume, args.cylinder, solution=sol)
    elif args.refined:
        fam = sc.refined_pointed_disk(spec, args.max_volume, solution=sol)
    else:
        fam = sc.PerimeterFamily([sol.disk(l) for l in range(sol.L + 1)], sol.L)
    if not 0 <= L <= fam.L_max:
        raise UsageError("--perimeter must lie in [0, %d]" % fam.L_max)
    _write(args, sc.dump_series(fam[L]) + "\n")


def cmd_depth(args):
    cap = _budget(12)
    if args.volume < 1 or args.volume > cap:
        raise UsageError("--volume must lie in [1, %d]" % cap)
    for name in ("n", "g", "h", "alpha"):
        if getattr(args, name) is None:
            raise UsageError("depth needs numeric --%s" % name)
    law = sc.depth_distribution(_spec(args), args.volume, args.perimeter, l2=args.l2)
    if sum(law) != 1:
        raise InvariantError("depth law does not sum to 1")
    rows = [(P, str(pr), float(pr)) for P, pr in enumerate(law)]
    emit(args, ["P", "probability", "probability_float"], rows)


def cmd_kpz(args):
    kp = ld.kpz_params(args.kappa)
    if args.quadrature:
        As = [args.A, 2 * args.A, 4 * args.A]
        p_typ = kp.c / (2 * math.pi) * ld.p_opt(kp.n)
        rows = []
        for p in (0.5 * p_typ, p_typ, 3 * p_typ):
            vals = [ld.quantum_quadrature(p, args.kappa, A) for A in As]
            est = ld.richardson(vals, As)
            th = ld.theta(p, args.kappa)
            if abs(est - th) > max(0.02 * abs(th), 0.01):
                raise InvariantError("quadrature rate %.6g vs theta %.6g at p=%.6g" % (est, th, p))
            rows.append((p, th, vals[-1], est))
        return emit(args, ["p", "theta_disk", "quadrature", "richardson"], rows)
    lo, hi = ld.quantum_domain(args.kappa)
    rows = []
    for lp in _grid(lo, hi, args.points + 1)[:-1]:
        lq = ld.lambda_quantum(lp, args.kappa)
        lam = 2 * ld.kpz_U(lp, kp.gamma)
        lk = ld.lambda_kappa(lam, args.kappa)
        if abs(lq - lk) > 1e-12 * max(1.0, abs(lk)):
            raise InvariantError("Lambda^Q composition identity fails at %.6g" % lp)
        rows.append((lp, lam, lk, lq))
    emit(args, ["lambda_prime", "lambda", "Lambda", "LambdaQ"], rows)


def _oracle_rows(E, kinds):
    from .oracle_enum import weighted_census
    spec = sc.LoopModelSpec()
    N = E + 1
    sol = sc.NestedSolution(spec, N)
    keep = lambda poly, per: {k: c for k, c in poly.items() if sc.edges_of(k, per) <= E}
    rows = []
    if "disk" in kinds:
        for l in range(2 * E + 1):
            a = keep(sol.disk(l).terms, [l])
            b = keep(weighted_census("disk", l, max_edges=E), [l])
            rows.append(("disk", l, "", len(b), a == b))
    if "pointed" in kinds:
        fam = sc.refined_pointed_disk(spec, N, solution=sol)
        for l in range(2 * E + 1):
            a = keep(fam[l].terms, [l])
            b = keep(weighted_census("pointed", l, max_edges=E), [l])
            rows.append(("pointed", l, "", len(b), a == b))
    if "cylinder" in kinds:
        for l2 in range(1, 2 * E):
            fam = sc.refined_cylinder(spec, N, l2, solution=sol)
            for l in range(1, 2 * E + 1 - l2):
                a = keep(fam[l].terms, [l, l2])
                b = keep(weighted_census("cylinder", l, max_edges=E, l2=l2), [l, l2])
                rows.append(("cylinder", l, l2, len(b), a == b))
    return rows


def cmd_oracle(args):
    from .oracle_enum import edge_budget
    cap = edge_budget()
    if not 1 <= args.max_edges <= cap:
        raise UsageError("--max-edges must lie in [1, %d]" % cap)
    kinds = [k.strip() for k in args.constraints.split(",") if k.strip()]
    bad = [k for k in kinds if k not in ("disk", "pointed", "cylinder")]
    if bad:
        raise UsageError("unknown census kind(s): %s" % ",".join(bad))
    rows = _oracle_rows(args.max_edges, kinds)
    emit(args, ["kind", "l1", "l2", "terms", "match"],
         [(k, str(l1), str(l2), str(t), "yes" if m else "no") for k, l1, l2, t, m in rows])
    if not all(r[-1] for r in rows):
        raise InvariantError("series and census disagree")


def _checks():
    from .special_functions import theta1, upsilon
    out = []

    def add(name, ok):
        out.append((name, bool(ok)))

    for n in (0.5, 1.0, math.sqrt(2), math.sqrt(3)):
        add("J(p_opt)=0 n=%.4g" % n, abs(ld.J(ld.p_opt(n), n)) <= 1e-12)
        add("J sup form n=%.4g" % n,
            max(abs(ld.J(p, n) - ld.J_sup(p, n)) for p in _grid(0.05, 10, 25)) <= 1e-10)
        lo, hi = cg.rho_window(n)
        top = cg.critical_line(n, 1, hi)
        bot = cg.critical_line(n, 1, lo)
        add("fully packed endpoint n=%.4g" % n,
            abs(top.g) <= 1e-12 and abs(top.h - 1 / (2 * math.sqrt(2) * math.sqrt(2 + n))) <= 1e-12)
        add("dilute endpoint n=%.4g" % n,
            abs(bot.g / bot.h - 1 - math.sqrt((2 - n) / (6 + n))) <= 1e-12)
    for name, b in cg.EXPONENT_MODELS:
        e = cg.exponents(phase="dense", b=b)
        add("exponent algebra %s" % name,
            e["gamma_str"] == -b * e["c"] and e["nu"] == e["c"] * (Fraction(1, 2) - b))
    for kappa in (3.0, 4.5, 6.0, 7.0):
        kp = ld.kpz_params(kappa)
        lo, hi = ld.quantum_domain(kappa)
        err = max(abs(ld.lambda_quantum(l, kappa) - ld.lambda_kappa(2 * ld.kpz_U(l, kp.gamma), kappa))
                  for l in _grid(lo, hi, 21)[1:-1])
        add("LambdaQ composition kappa=%g" % kappa, err <= 1e-12)
        add("sphere doubling kappa=%g" % kappa,
            abs(ld.theta(0.8, kappa, "sphere") - 2 * ld.theta(0.4, kappa)) <= 1e-15)
    tau = 0.9j
    v = 0.31 + 0.2j
    add("theta1 quasi-periodicity",
        abs(theta1(v + tau, tau) + theta1(v, tau) * complex(math.e) ** (-1j * math.pi * (2 * v + tau)))
        <= 1e-11 * abs(theta1(v, tau)))
    add("upsilon multiplier",
        abs(upsilon(0.3, v + tau, tau) - complex(math.e) ** (1j * math.pi * 0.3) * upsilon(0.3, v, tau))
        <= 1e-11 * abs(upsilon(0.3, v, tau)))
    rows = _oracle_rows(4, ("disk", "pointed"))
    add("series = census up to 4 edges", all(r[-1] for r in rows))
    spec = sc.LoopModelSpec(n=1, g=Fraction(1, 50), h=Fraction(1, 50), alpha=1)
    law = sc.depth_distribution(spec, 4, 3)
    add("depth law normalised", sum(law) == 1)
    return out


def cmd_check(args):
    res = _checks()
    lines = ["%s %s" % ("PASS" if ok else "FAIL", name) for name, ok in res]
    if args.format == "json":
        _write(args, json.dumps({name: ok for name, ok in res}, sort_keys=True) + "\n")
    else:
        _write(args, "\n".join(lines) + "\n")
    if not all(ok for _, ok in res):
        raise InvariantError("%d check(s) failed" % sum(1 for _, ok in res if not ok))


# ---------------------------------------------------------------- parser

def build_parser():
    p = _Parser(prog="loopnest", description=__doc__)
    p.add_argument("--config", help="JSON file mirroring the flags")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--output")

    s = sub.add_parser("ldf")
    common(s)
    s.add_argument("--n", type=_real)
    s.add_argument("--kappa", type=_real)
    s.add_argument("--p-min", type=_real, default=0.05)
    s.add_argument("--p-max", type=_real, default=5.0)
    s.add_argument("--points", type=int, default=100)
    s.add_argument("--bivariate", action="store_true")
    s.add_argument("--law", choices=("bernoulli", "gaussian"), default="bernoulli")
    s.add_argument("--sigma2", type=_real, default=1.0)
    s.add_argument("--q-ratio", type=_real, default=0.5)
    s.set_defaults(func=cmd_ldf)

    s = sub.add_parser("phase")
    common(s)
    s.add_argument("--n", type=_real, required=True)
    s.add_argument("--alpha", type=_real, default=1.0)
    s.add_argument("--rho", type=_real)
    s.add_argument("--winf", type=_real)
    s.add_argument("--sweep", action="store_true")
    s.add_argument("--points", type=int, default=21)
    s.add_argument("--winf-min", type=_real, default=0.2)
    s.add_argument("--winf-max", type=_real, default=0.35)
    s.set_defaults(func=cmd_phase)

    for name, func in (("series", cmd_series), ("depth", cmd_depth)):
        s = sub.add_parser(name)
        common(s)
        for w in ("n", "g", "h", "alpha"):
            s.add_argument("--" + w, type=_rational)
        if name == "series":
            s.add_argument("--max-volume", type=int, required=True)
            s.add_argument("--perimeter", type=int, required=True)
            s.add_argument("--refined", action="store_true")
            s.add_argument("--cylinder", type=int)
        else:
            s.add_argument("--volume", type=int, required=True)
            s.add_argument("--perimeter", type=int, required=True)
            s.add_argument("--l2", type=int)
        s.set_defaults(func=func)

    s = sub.add_parser("kpz")
    common(s)
    s.add_argument("--kappa", type=_real, required=True)
    s.add_argument("--quadrature", action="store_true")
    s.add_argument("--A", type=_real, default=100.0)
    s.add_argument("--points", type=int, default=50)
    s.set_defaults(func=cmd_kpz)

    s = sub.add_parser("oracle")
    common(s)
    s.add_argument("--max-edges", type=int, required=True)
    s.add_argument("--constraints", default="disk,pointed,cylinder")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("check")
    common(s)
    s.set_defaults(func=cmd_check)
    return p


def _with_config(parser, argv):
    """Prepend flags from a JSON config; explicit flags win."""
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return rest
    try:
        with open(known.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as e:
        raise UsageError("cannot read config: %s" % e)
    if not isinstance(cfg, dict) or "command" not in cfg:
        raise UsageError("config must be an object with a 'command' key")
    if rest and not rest[0].startswith("-"):
        if rest[0] != cfg["command"]:
            raise UsageError("config command %r disagrees with %r" % (cfg["command"], rest[0]))
        rest = rest[1:]
    flags = [cfg["command"]]
    for key, val in cfg.items():
        if key == "command" or val is None or val is False:
            continue
        flag = "--" + key.replace("_", "-")
        flags.append(flag) if val is True else flags.extend([flag, str(val)])
    return flags + rest


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_with_config(parser, argv))
        if not getattr(args, "command", None):
            raise UsageError("missing subcommand")
        args.func(args)
        return EXIT_OK
    except UsageError as e:
        return _fail("usage", e, EXIT_USAGE)
    except ValueError as e:
        return _fail(type(e).__name__, e, EXIT_USAGE)
    except InvariantError as e:
        return _fail("invariant", e, EXIT_INVARIANT)
    except (RuntimeError, ArithmeticError) as e:
        return _fail(type(e).__name__, e, EXIT_NUMERIC)


def _fail(kind, err, code):
    sys.stderr.write(json.dumps({"error": kind, "message": str(err), "exit_code": code},
                                sort_keys=True) + "\n")
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
