import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from gkdeform.brackets import d_L, d_L_derived, schouten, schouten_classical
from gkdeform.fields import FourierSection, section_from_json, sobolev_norm_sq
from gkdeform.hodge import harmonic
from gkdeform.mc import (MajorantConfig, ObstructionNonzero, TruncatedSeries, bracket_coeff, calibrate,
                         convolution_rows, fixed_point_residual, kuranishi, kuranishi_equivalence,
                         majorant_certify, majorant_coeff, mc_residual, mc_solve, mc_step, obstructed_pair_search)
from gkdeform.scalar import HALF, ONE, Q, S

from conftest import const_mv, mono_mv

SCEN = Path(__file__).resolve().parent.parent / "scenarios"
ZERO4 = (0, 0, 0, 0)


def scenario_section(name, key):
    doc = json.loads((SCEN / name).read_text())
    return section_from_json({"n": doc["n"], "fiber_kind": "multivector", "terms": doc[key]})


def nonconstant_eps1():
    return scenario_section("mc_nonconstant.json", "eps1")


def brute_force_residual(coeffs, N):
    """Residual of d_L eps + 1/2 [eps, eps] from the classical bracket, summing all ordered pairs."""
    out = {}
    zero = next(iter(coeffs.values())).zero_like()
    for k in range(1, N + 1):
        r = d_L_derived(coeffs.get(k, zero))
        for i in range(1, k):
            a, b = coeffs.get(i), coeffs.get(k - i)
            if a and b:
                r = r + schouten_classical(a, b).scale(HALF)
        out[k] = r
    return out


def test_constant_series_is_linear():
    eps1 = const_mv(2, {3: ONE, 1 | 8: S(2, -1)})
    series, rep = mc_solve(eps1, 6)
    assert set(series.coeffs) == {(1,)}
    assert series.coeff(1) == eps1
    assert not mc_residual(series)
    assert all(r.obstruction_zero and r.bracket_closed for r in rep.rows)
    assert all(not v for v in brute_force_residual({1: eps1}, 6).values())


def test_nonconstant_solution_brute_force():
    eps1 = nonconstant_eps1()
    assert any(k != ZERO4 for k in eps1.terms)
    series, rep = mc_solve(eps1, 4)
    coeffs = {k: series.coeff(k) for k in range(1, 5)}
    assert any(coeffs[k] for k in range(2, 5))
    assert all(not v for v in brute_force_residual(coeffs, 4).values())
    assert not mc_residual(series)
    assert not fixed_point_residual(series, {(1,): eps1})


def test_bracket_coeff_matches_direct_sum():
    eps1 = nonconstant_eps1()
    series, _ = mc_solve(eps1, 4)
    for k in range(2, 5):
        direct = eps1.zero_like()
        for i in range(1, k):
            direct = direct + schouten(series.coeff(i), series.coeff(k - i))
        assert bracket_coeff(series, (k,)) == direct


def test_solver_input_errors():
    with pytest.raises(ValueError):
        mc_solve(const_mv(2, {1: ONE}), 3)  # odd degree
    with pytest.raises(ValueError):
        mc_solve(mono_mv(2, (1, 0, 0, 0), {3: ONE}), 3)  # not closed


def obstructed_basis():
    doc = json.loads((SCEN / "kuranishi_obstructed.json").read_text())
    return [section_from_json({"n": doc["n"], "fiber_kind": "multivector", "terms": b}) for b in doc["basis"]]


def test_obstruction_raises():
    # the order-2 bracket of the obstructed pair is closed with a nonzero harmonic part
    series = TruncatedSeries(1, 2, 2, "multivector", {(1,): sum(obstructed_basis()[1:], obstructed_basis()[0])})
    assert not d_L(bracket_coeff(series, (2,)))
    with pytest.raises(ObstructionNonzero) as info:
        mc_step(series, 2)
    assert info.value.order == 2 and info.value.witness


# ---------------------------------------------------------------- Kuranishi


def test_kuranishi_constant_basis_unobstructed():
    basis = [const_mv(2, {3: ONE}), const_mv(2, {1 | 8: ONE})]
    series, rep = kuranishi(basis, 3)
    assert rep.vanishing
    assert all(not h for h in rep.polynomial.values())
    assert all(kuranishi_equivalence(series, rep).values())


def test_kuranishi_obstructed_pair():
    basis = obstructed_basis()
    br = schouten(basis[0], basis[1])
    # independent projection: on the flat torus the harmonics are the constant coefficients
    direct = FourierSection(2, "multivector", {ZERO4: br.terms[ZERO4]} if ZERO4 in br.terms else {})
    assert direct
    _, rep = kuranishi(basis, 2)
    assert rep.polynomial[(1, 1)] == direct.scale(Q(2))
    assert rep.polynomial[(1, 1)] == harmonic(br).scale(Q(2))
    assert not rep.vanishing


def test_obstructed_pair_search_finds_pair():
    pair = obstructed_pair_search(2)
    assert pair is not None
    assert harmonic(schouten(*pair))


@given(st.lists(st.builds(S, st.integers(-3, 3), st.integers(-3, 3)), min_size=2, max_size=2))
def test_restrict_to_line_matches_single_solve(c):
    basis = [const_mv(2, {3: ONE}), mono_mv(2, (0, 0, 0, 0), {1 | 8: ONE})]
    series, _ = kuranishi(basis, 3)
    line = series.restrict_to_line(c)
    eps1 = basis[0].scale(c[0]) + basis[1].scale(c[1])
    if not eps1:
        return
    single, _ = mc_solve(eps1, 3)
    for k in range(1, 4):
        assert line.coeff(k) == single.coeff(k)


# ---------------------------------------------------------------- majorant


def test_majorant_order_two_instance():
    for c in (2, 4, 8):
        row = convolution_rows(Fraction(c), 2)[0]
        assert row["lhs"] == Fraction(1, 256) and row["rhs"] == Fraction(1, 64)


@pytest.mark.parametrize("c", [2, 4, 8])
def test_majorant_convolution_through_12(c):
    rows = convolution_rows(Fraction(c), 12)
    assert [r["k"] for r in rows] == list(range(2, 13))
    assert all(r["pass"] for r in rows)
    # independent recomputation from the closed form c^nu / (16 c nu^2)
    for r in rows:
        k = r["k"]
        lhs = sum(Fraction(c) ** k / (256 * c * c * i * i * (k - i) ** 2) for i in range(1, k))
        assert r["lhs"] == lhs


def test_majorant_coeff_closed_form():
    assert majorant_coeff(1, Fraction(4)) == Fraction(1, 16)
    assert majorant_coeff(3, Fraction(2)) == Fraction(8, 16 * 2 * 9)


@pytest.mark.parametrize("builder,N", [(lambda: const_mv(2, {3: ONE, 1 | 8: ONE}), 6), (nonconstant_eps1, 4)])
def test_solver_runs_satisfy_bound(builder, N):
    series, _ = mc_solve(builder(), N)
    cfg = calibrate(series, 2 * 2 + 2)
    cert = majorant_certify(series, cfg)
    assert cert["pass"]
    for r in cert["rows"]:
        assert r["norm_sq"] == sobolev_norm_sq(series.coeff(r["k"]), 6)


def test_inflated_coefficient_fails_certification():
    eps1 = const_mv(2, {3: ONE})
    series, _ = mc_solve(eps1, 3)
    cfg = calibrate(series, 6)
    series.coeffs[(3,)] = const_mv(2, {3: Q(10 ** 6)})
    cert = majorant_certify(series, cfg)
    assert not cert["pass"]
    assert "witness" in cert["rows"][2]


def test_majorant_config_dict():
    cfg = MajorantConfig(c=Fraction(4), K1=Fraction(1, 2), C1=Fraction(1), s_index=6)
    assert cfg.as_dict()["lambda"] == [1, 4]
