import math
from fractions import Fraction as Fr

import pytest
from hypothesis import given, strategies as st

from loopnest import critical_geometry as cg

NS = [0.5, 1.0, math.sqrt(2), math.sqrt(3)]
F = Fr

# dense columns of the exponent summary: n=0, percolation, Ising, 3-Potts, KT
TABLE = {
    "b": [F(1, 2), F(1, 3), F(1, 4), F(1, 6), F(0)],
    "gamma_str": [F(-1), F(-1, 2), F(-1, 3), F(-1, 5), F(0)],
    "central_charge": [F(-2), F(0), F(1, 2), F(4, 5), F(1)],
    "c": [F(2), F(3, 2), F(4, 3), F(6, 5), F(1)],
    "a": [F(3, 2), F(5, 3), F(7, 4), F(11, 6), F(2)],
    "d_gasket": [F(2), F(7, 3), F(5, 2), F(8, 3), F(3)],
    "nu": [F(0), F(1, 4), F(1, 3), F(4, 10), F(1, 2)],
    "kappa": [F(8), F(6), F(16, 3), F(24, 5), F(4)],
}


def test_exponent_table_exact():
    for i, (_, b) in enumerate(cg.EXPONENT_MODELS):
        e = cg.exponents(phase="dense", b=b)
        for key, col in TABLE.items():
            assert isinstance(e[key], Fr)
            assert e[key] == col[i], (key, b)
    assert cg.exponents(phase="dense", b=F(1, 3))["d_H"] == 4


@pytest.mark.parametrize("n,b", [(1.0, F(1, 3)), (math.sqrt(2), F(1, 4)), (math.sqrt(3), F(1, 6))])
def test_exact_b_recognised(n, b):
    assert cg.exact_b(n) == b


def test_dilute_kappa():
    # Ising interfaces: dilute n = 1
    assert cg.exponents(phase="dilute", b=F(1, 3))["kappa"] == 3
    # pure gravity limit: dilute n = 0
    assert cg.exponents(phase="dilute", b=F(1, 2))["kappa"] == F(8, 3)


@given(st.fractions(min_value=0, max_value=Fr(99, 100), max_denominator=100))
def test_dense_relations(b):
    e = cg.exponents(phase="dense", b=b)
    assert e["gamma_str"] == -b * e["c"]
    assert e["nu"] == e["c"] * (Fr(1, 2) - b)
    assert e["kappa"] == 4 * e["c"]
    assert e["a"] + e["b"] == 2


def test_fixed_phases():
    assert cg.exponents(phase="generic", b=F(1, 3))["gamma_str"] == F(-1, 2)
    assert cg.exponents(phase="subcritical", b=F(1, 3))["a"] == F(3, 2)
    with pytest.raises(ValueError):
        cg.exponents(phase="nope", b=F(1, 3))


@pytest.mark.parametrize("n", NS)
def test_endpoints(n):
    lo, hi = cg.rho_window(n)
    top = cg.critical_line(n, 1, hi)
    assert abs(top.g) <= 1e-12
    assert abs(top.h - 1 / (2 * math.sqrt(2) * math.sqrt(2 + n))) <= 1e-12
    bot = cg.critical_line(n, 1, lo)
    assert abs(bot.g / bot.h - 1 - math.sqrt((2 - n) / (6 + n))) <= 1e-12
    assert bot.phase == "dilute" and top.phase == "dense"


@pytest.mark.parametrize("n", NS)
def test_confluence(n):
    lo, hi = cg.rho_window(n)
    for rho in (lo + 0.3 * (hi - lo), 0.5 * (lo + hi), hi - 0.1 * (hi - lo)):
        goh, h2 = cg.confluence(n, rho)
        goh1, h21 = cg._alpha_one(n, rho)
        assert abs(goh - goh1) <= 1e-6
        assert abs(h2 - h21) <= 1e-6


def test_general_alpha_routes_agree_on_g_over_h():
    for w in (0.25, 0.3, 0.35):
        a = cg.critical_line(1.0, 0.5, w)
        goh, h2 = cg.tables_general(1.0, 0.5, w)
        assert a.g / a.h == pytest.approx(goh, abs=1e-10)
        # the printed h^2 table is the defective one
        assert h2 < 0
        with pytest.raises(cg.WindowError):
            cg.critical_line(1.0, 0.5, w, route="tables")


def test_window_errors():
    with pytest.raises(cg.WindowError):
        cg.critical_line(1.0, 1, 10.0)
    with pytest.raises(cg.WindowError):
        cg.critical_line(2.5, 1, 1.5)
    with pytest.raises(cg.WindowError):
        cg.critical_line(1.0, 0.5, 1.5)


def test_delta_dense_value():
    d = cg.delta_constants(1.0, 1.5)
    assert d["Delta"] == pytest.approx(13.5, rel=1e-12)
    assert d["phase"] == "dense"
    assert cg.delta_dense_printed(1.0, 1.5) < 0


def test_delta_dilute_constants():
    lo, _ = cg.rho_window(1.0)
    d = cg.delta_constants(1.0, lo)
    b = 1 / 3
    assert d["Delta"] == 0.0 and d["phase"] == "dilute"
    assert d["Delta1"] == pytest.approx(24 / (b * (1 - b) * (2 - b)))
    assert d["Delta1_measured"] == pytest.approx((1 + b) * d["Delta1"])


def test_volume_prefactor_sign_and_count():
    v = cg.volume_prefactors(1.0, 1.5)
    assert v["A"] < 0
    b, c = 1 / 3, 1.5
    # Gamma(-bc) < 0 so the count is positive
    assert cg.pointed_count_asymptotic(1000, v["A"], 13.5, b, c) > 0


def test_profiles_alpha_one():
    pt = cg.critical_line(1.0, 1, 1.5)
    beta = 1 / 3
    arg, val = cg.scaling_profile("Phi", 0.4, beta, pt)
    arg_p, val_p = cg.scaling_profile("Phi", 0.4, beta, pt, printed=True)
    assert val_p == pytest.approx(2 * val)
    assert arg == pytest.approx(4 * 1.5 / pt.h * math.cos(0.2 * math.pi) ** 2)
    xa, _ = cg.scaling_profile("Psi", 0.2, beta, pt)
    assert xa - pt.gamma_plus == pytest.approx(1.5 / (2 * pt.h * math.cos(0.2 * math.pi)))
    for kind in ("Xi3", "Xi4", "Xi5"):
        cg.scaling_profile(kind, (0.3, 0.6), beta, pt)
    with pytest.raises(ValueError):
        cg.scaling_profile("Phi", 1.0, beta, pt)


def test_profiles_general_alpha_run():
    pt = cg.critical_line(1.0, 0.5, 0.3)
    for kind in ("Phi", "Psi", "Psi~"):
        arg, val = cg.scaling_profile(kind, 0.45, 1 / 3, pt)
        assert math.isfinite(val)


def test_saddle_maps():
    s, b = cg.saddle_maps(1 / math.sqrt(3), 1.0)
    assert s == pytest.approx(1.0)
    assert b == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        cg.saddle_maps(0, 1.0)


def test_csv_round_trip():
    text = cg.exponent_table_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "model,b,gamma_str,c,a,nu,kappa"
    assert lines[2].split(",")[0] == "percolation"
    assert float(lines[2].split(",")[3]) == 1.5
    assert cg.fmt(0.1) == "0.10000000000000001"
