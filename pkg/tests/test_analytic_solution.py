import math
from fractions import Fraction as Fr

import pytest

from loopnest import analytic_solution as an
from loopnest import series_core as sc
from loopnest.special_functions import varsigma

U = 0.1


@pytest.fixture(scope="module", params=[Fr(1), Fr(1, 2)], ids=["alpha1", "alpha_half"])
def model(request):
    spec = sc.LoopModelSpec(n=1, g=Fr(1, 50), h=Fr(1, 50), alpha=request.param)
    frame = an.endpoint_solve(spec, U)
    sol = sc.NestedSolution(spec, 12)
    return spec, frame, sol


def test_disk_coefficients_match_series(model):
    spec, frame, sol = model
    coeffs = an.disk_coefficients(spec, frame, U, 7)
    for l, c in enumerate(coeffs):
        exact = float(sol.disk(l).evaluate(u=Fr(1, 10)))
        assert c == pytest.approx(exact, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("s", [1.0, 0.5])
def test_pointed_coefficients_match_series(model, s):
    spec, frame, sol = model
    fam = sc.refined_pointed_disk(spec, 12, solution=sol)
    coeffs = an.pointed_coefficients(spec, frame, U, 7, s=s)
    for l, c in enumerate(coeffs):
        exact = float(fam[l].evaluate(u=Fr(1, 10), s=Fr(s)))
        assert c == pytest.approx(exact, rel=1e-7, abs=1e-11)


def test_disk_value_off_the_cut(model):
    spec, frame, sol = model
    x = 2.0 + 1.0j
    series = sum(float(sol.disk(l).evaluate(u=Fr(1, 10))) / x ** (l + 1) for l in range(25))
    assert abs(an.analytic_F_disk(x, spec, frame, U) - series) <= 1e-6


@pytest.mark.parametrize("s", [1.0, 0.5])
def test_cylinder_matches_series(s):
    spec = sc.LoopModelSpec(n=1, g=Fr(1, 50), h=Fr(1, 50), alpha=1)
    N = 8
    sol = sc.NestedSolution(spec, N)
    frame = an.endpoint_solve(spec, U)
    x1, x2 = 3.0 + 0.5j, -2.5 + 1.0j
    total = 0
    for l2 in range(1, sol.K + 1):
        fam = sc.refined_cylinder(spec, N, l2, solution=sol)
        for l1 in range(2 * N + 1):
            c = fam[l1].evaluate(u=Fr(1, 10), s=Fr(s))
            total += float(c) * x1 ** (-l1 - 1) * x2 ** (-l2 - 1)
    value = an.analytic_F_cylinder(x1, x2, spec, frame, s)
    assert abs(value - total) <= 1e-6 * max(1.0, abs(total))


def gap_of(frame):
    return varsigma(frame.gamma_plus, frame.h, frame.alpha) - frame.gamma_plus


def test_endpoint_restart_reproduces_frame(model):
    spec, frame, _ = model
    again = an.endpoint_solve(spec, U, start=(frame.gamma_minus, math.log(gap_of(frame))))
    assert again.gamma_minus == pytest.approx(frame.gamma_minus, abs=1e-10)
    assert again.gamma_plus == pytest.approx(frame.gamma_plus, abs=1e-10)


def test_solve_at_gap_inverts_endpoint_solve(model):
    spec, frame, _ = model
    f, u = an.solve_at_gap(spec, gap_of(frame), frame.gamma_minus + 0.01)
    assert u == pytest.approx(U, abs=1e-9)
    assert f.gamma_minus == pytest.approx(frame.gamma_minus, abs=1e-8)


def test_b_of():
    assert an.b_of(1.0) == pytest.approx(1 / 3)
    assert an.b_of(0.0) == pytest.approx(0.5)
