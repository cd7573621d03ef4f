"""Acceptance criteria 1-10, one printed pass/fail line each."""

import json
import time
from fractions import Fraction
from pathlib import Path

from gkdeform.biherm import (check_conditions, contraction_beta_omega, extract_bihermitian, figure1_loop,
                             first_order_check)
from gkdeform.brackets import IDENTITY_NAMES, d_L_derived, derived_bracket_oracle, schouten, \
    schouten_classical, verify_appendix_identities
from gkdeform.cli import run
from gkdeform.fields import FourierSection, PoissonData, TorusKahlerData, section_from_json
from gkdeform.gk import closedness_defect, purity_check, spinor_series
from gkdeform.mc import calibrate, convolution_rows, kuranishi, majorant_certify, mc_residual, mc_solve
from gkdeform.report import SCOPE
from gkdeform.scalar import HALF, ONE, Q
from gkdeform.surfaces import SurfaceLattice, minus_two_curve_scan, paper_table_report

from conftest import const_mv

SCEN = Path(__file__).resolve().parent.parent / "scenarios"
SEED = 20261017
Z4 = (0, 0, 0, 0)

def emit(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")

def load_terms(name, key):
    doc = json.loads((SCEN / name).read_text())
    val = doc[key]
    if key == "basis":
        return [section_from_json({"n": doc["n"], "fiber_kind": "multivector", "terms": b}) for b in val]
    return section_from_json({"n": doc["n"], "fiber_kind": "multivector", "terms": val})

_biherm = {}

def biherm_run():
    if not _biherm:
        torus = TorusKahlerData(2)
        beta = PoissonData(load_terms("biherm_constant.json", "beta"))
        state = figure1_loop(beta, torus, 4)
        _biherm.update(torus=torus, beta=beta, state=state, res=extract_bihermitian(state, torus))
    return _biherm

def test_criterion_1_identity_suite(capsys):
    t = time.perf_counter()
    rep = verify_appendix_identities(SEED, 100, (1, 2))
    elapsed = time.perf_counter() - t
    counts = {k: (rep[k]["trials"], rep[k]["failures"]) for k in IDENTITY_NAMES}
    ok = all(f == 0 and n == 200 for n, f in counts.values()) and elapsed < 60
    lc = rep["leibniz_sign_consistent"]
    emit(capsys, 1, ok, f"{elapsed:.1f}s; failures/trials " +
         ", ".join(f"{k} {f}/{n}" for k, (n, f) in counts.items()) +
         f"; d_L[e1,e2] = -([d_L e1,e2] + (-1)^|e1| [e1,d_L e2]) holds {lc['trials'] - lc['failures']}/{lc['trials']}")
    assert ok

def test_criterion_2_derived_bracket_oracle(capsys):
    rep = derived_bracket_oracle(SEED, 100, (1, 2))
    ok = all(v["pass"] and v["trials"] == 100 for v in rep.values())
    emit(capsys, 2, ok, ", ".join(f"{k}: {v['failures']} failures in {v['trials']}" for k, v in rep.items()))
    assert ok

def test_criterion_3_mc_solver(capsys):
    eps1 = load_terms("mc_constant.json", "eps1")
    series, _ = mc_solve(eps1, 6)
    const_ok = set(series.coeffs) == {(1,)} and series.coeff(1) == eps1 and not mc_residual(series)
    # nonconstant instance: residual recomputed with the coordinate bracket and d_L = [dbar, .]
    eps1 = load_terms("mc_nonconstant.json", "eps1")
    series, _ = mc_solve(eps1, 4)
    c = {k: series.coeff(k) for k in range(1, 5)}
    brute = []
    for k in range(1, 5):
        r = d_L_derived(c[k])
        for i in range(1, k):
            if c[i] and c[k - i]:
                r = r + schouten_classical(c[i], c[k - i]).scale(HALF)
        brute.append(not r)
    nonconst_ok = all(brute) and any(c[k] for k in range(2, 5))
    ok = const_ok and nonconst_ok
    emit(capsys, 3, ok, f"constant eps1 t through N=6 exact: {const_ok}; "
                        f"nonconstant brute-force residual zero through N=4: {nonconst_ok}")
    assert ok

def test_criterion_4_majorant(capsys):
    conv_ok = True
    for c in (2, 4, 8):
        rows = convolution_rows(Fraction(c), 12)
        conv_ok = conv_ok and len(rows) == 11 and all(r["pass"] for r in rows)
        conv_ok = conv_ok and rows[0]["lhs"] == Fraction(1, 256) and rows[0]["rhs"] == Fraction(1, 64)
    runs = []
    for name, N in (("mc_constant.json", 6), ("mc_nonconstant.json", 4)):
        series, _ = mc_solve(load_terms(name, "eps1"), N)
        cfg = calibrate(series, 2 * 2 + 2)
        cert = majorant_certify(series, cfg)
        runs.append((name, cfg.c, cfg.K1, all(r["pass"] for r in cert["rows"])))
    ok = conv_ok and all(r[3] for r in runs)
    emit(capsys, 4, ok, f"M^2 <= M/c through order 12 for c in 2,4,8: {conv_ok}; runs " +
         ", ".join(f"{n} (c={c}, K1={k1}): {p}" for n, c, k1, p in runs))
    assert ok

def test_criterion_5_closedness_and_purity(capsys):
    b = biherm_run()
    a, bb, torus = b["state"].a_series(), b["state"].b_series(), b["torus"]
    closed = all(not closedness_defect(a, bb, k, torus) for k in range(5))
    rows = purity_check(spinor_series(a, bb, torus.psi0))
    pure = [r["t"] for r in rows] == [0, Fraction(1, 8), Fraction(-1, 8)] and all(
        r["pure"] and r["nondegenerate"] and r["truncation_pure"] for r in rows)
    ok = closed and pure
    emit(capsys, 5, ok, f"d(e^Z psi_0) = 0 mod t^5: {closed}; pure and nondegenerate at 0, +-1/8 "
                        f"(normal form c(t) exp(sigma(t)) of the series): {pure}")
    assert ok

def test_criterion_6_loop_conditions(capsys):
    b = biherm_run()
    rows = check_conditions(b["state"], b["torus"], 4)
    ok = len(rows) == 5 and all(r["gamma_plus_commutes"] and r["cl1"] and r["closed"] for r in rows)
    emit(capsys, 6, ok, "orders 0..4: " + "; ".join(
        f"{r['order']}: commutes={r['gamma_plus_commutes']} CL1={r['cl1']}" for r in rows))
    assert ok

def test_criterion_7_first_order(capsys):
    b = biherm_run()
    res, torus, beta = b["res"], b["torus"], b["beta"]
    fo = first_order_check(b["state"], res, beta, torus)
    C = contraction_beta_omega(beta.beta, torus.omega_fiber)
    predicted = (C + C.conj()).scale(Q(-2))
    structural = all(res.checks[k] for k in ("J_plus_squared", "J_minus_squared", "torsion_plus_minus",
                                             "torsion_db"))
    ok = (fo["J_minus_order1"] == predicted and fo["predicted_via_bracket"] == predicted
          and fo["J_plus_order1_zero"] and structural)
    emit(capsys, 7, ok, f"J-_1 = -2(beta.omega + conj): {fo['J_minus_order1'] == predicted} "
                        f"(computed = {fo['factor_to_predicted']} x predicted); predicted routes agree: "
                        f"{fo['predicted_via_bracket'] == predicted}; J+_1 = 0: {fo['J_plus_order1_zero']}; "
                        f"J^2 = -1 and torsion mod t^5: {structural}")
    assert ok

def test_criterion_8_kuranishi(capsys):
    _, rep = kuranishi([const_mv(2, {3: ONE}), const_mv(2, {1 | 8: ONE})], 3)
    const_ok = all(not h for h in rep.polynomial.values())
    eta = load_terms("kuranishi_obstructed.json", "basis")
    _, rep = kuranishi(eta, 2)
    # coefficient of t1 t2 in [eps, eps] is [eta1, eta2] + [eta2, eta1]; harmonics are the constants
    br = schouten(eta[0], eta[1]) + schouten(eta[1], eta[0])
    direct = FourierSection(2, "multivector", {Z4: br.terms[Z4]} if Z4 in br.terms else {})
    obs_ok = bool(direct) and rep.polynomial[(1, 1)] == direct
    ok = const_ok and obs_ok
    emit(capsys, 8, ok, f"constant basis polynomial zero: {const_ok}; "
                        f"degree-2 coefficient equals projected bracket (nonzero): {obs_ok}")
    assert ok

def test_criterion_9_tables(capsys):
    t = time.perf_counter()
    rep = paper_table_report()
    by = {(r["surface"], r["quantity"]): r["value"] for r in rep["rows"]}
    checks = []
    for n in range(9):
        checks += [by[(f"S{n}", "h0(-K)")] == 10 - n, by[(f"S{n}", "h11")] == 1 + n]
    for n in range(5, 9):
        checks += [by[(f"S{n}", "h1(Theta)")] == 2 * n - 8, by[(f"S{n}", "h1(I_D (x) T)")] == n + 1,
                   10 - n < n + 1, tuple(by[(f"S{n}", "h0(D, i*T) bounds")]) == (9 - n, 10 - n)]
    checks += [by[(f"F{e}", "P^-1")] == (9 if e <= 2 else e + 6) for e in range(7)]
    checks += [by[(f"F{e}", "h1(-K)")] == e - 3 for e in range(3, 7)]
    L3, L6 = SurfaceLattice.del_pezzo(3), SurfaceLattice.del_pezzo(6)
    checks += [bool(minus_two_curve_scan(L3, [L3.cls(1, -1, -1, -1)])),
               bool(minus_two_curve_scan(L6, [L6.cls(2, -1, -1, -1, -1, -1, -1)]))]
    elapsed = time.perf_counter() - t
    ok = all(checks) and rep["pass"] and elapsed < 5
    emit(capsys, 9, ok, f"{sum(checks)}/{len(checks)} values exact, {len(rep['rows'])} table rows, {elapsed:.2f}s")
    assert ok

def test_criterion_10_scope_statement(capsys):
    _, doc = run("mc", str(SCEN / "mc_constant.json"))
    text = doc["scope"]["not_reproduced"]
    ok = doc["scope"] == SCOPE and "not reproduced" in text and "convergence radius" in text \
        and "biholomorphism" in text
    emit(capsys, 10, ok, "global existence statements declared out of scope in every report")
    assert ok
