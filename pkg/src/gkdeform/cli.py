"""Scenario-driven command line: ``gkdeform <mode> --scenario <path>``.

Exit codes: 0 all checks pass, 1 a mode check failed or an obstruction fired,
2 the scenario is invalid, 3 an internal invariant broke (the report carries
the witness).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

from .algebra import two_form_from_matrix
from .biherm import (DegenerateMetric, check_conditions, extract_bihermitian, figure1_loop,
                     first_order_check, kodaira_spencer_class)
from .brackets import IDENTITY_NAMES, derived_bracket_oracle, verify_appendix_identities
from .fields import InvalidKahlerData, PoissonData, TorusKahlerData, section_from_json, sobolev_norm_sq
from .gk import NoSolution, closedness_defect, purity_check, spinor_series
from .mc import (InvariantBreach, ObstructionNonzero, calibrate, fixed_point_residual, kuranishi,
                 kuranishi_equivalence, majorant_certify, mc_residual, mc_solve)
from .report import document, dumps
from .scalar import Q
from .surfaces import (InconsistentFlags, PointConfiguration, SurfaceLattice, exceptional_classes,
                       minus_two_curve_scan, paper_table_report, position_classify, text_table)

MODES = ("identities", "mc", "kuranishi", "biherm", "surfaces")
COMMON_KEYS = {"mode", "seed", "trials", "description"}
MODE_KEYS = {
    "identities": {"dims"},
    "mc": {"n", "N", "eps1", "s_index", "c"},
    "kuranishi": {"n", "N", "basis"},
    "biherm": {"n", "N", "omega", "beta"},
    "surfaces": {"hirzebruch_max", "configurations"},
}
EXCEPTIONAL_COUNTS = {1: 1, 2: 3, 3: 6, 4: 10, 5: 16, 6: 27, 7: 56, 8: 240}


class SchemaError(ValueError):
    pass


class ModeFailure(Exception):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------- scenario parsing


def _int(doc: dict, key: str, lo: int | None = None, hi: int | None = None, default=None) -> int:
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{key} must be an integer")
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise SchemaError(f"{key}={v} out of range")
    return v


def _fraction(v, key: str) -> Fraction:
    if (not isinstance(v, list) or len(v) != 2 or any(isinstance(x, bool) or not isinstance(x, int) for x in v)
            or v[1] == 0):
        raise SchemaError(f"{key} must be a [num, den] pair with den != 0")
    return Fraction(v[0], v[1])


def _section(terms, n: int, key: str):
    if not isinstance(terms, list):
        raise SchemaError(f"{key} must be a list of terms")
    try:
        return section_from_json({"n": n, "fiber_kind": "multivector", "terms": terms})
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
        raise SchemaError(f"{key}: {e}") from e


def _omega(doc: dict, n: int):
    if "omega" not in doc:
        return None
    W = doc["omega"]
    m = 2 * n
    if not isinstance(W, list) or len(W) != m or any(not isinstance(r, list) or len(r) != m for r in W):
        raise SchemaError(f"omega must be a {m}x{m} matrix of [num, den] pairs")
    F = [[_fraction(x, "omega") for x in r] for r in W]
    if any(F[i][j] != -F[j][i] for i in range(m) for j in range(m)):
        raise SchemaError("omega must be antisymmetric")
    return two_form_from_matrix(n, [[Q(x.numerator, x.denominator) for x in r] for r in F])


def load_scenario(path: str, mode: str, seed: int | None, trials: int | None) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise SchemaError(f"cannot read scenario: {e}") from e
    except json.JSONDecodeError as e:
        raise SchemaError(f"scenario is not JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError("scenario must be a JSON object")
    if doc.get("mode", mode) != mode:
        raise SchemaError(f"scenario is for mode {doc['mode']!r}, not {mode!r}")
    extra = set(doc) - COMMON_KEYS - MODE_KEYS[mode]
    if extra:
        raise SchemaError(f"unknown keys for mode {mode}: {sorted(extra)}")
    doc = dict(doc)
    doc["mode"] = mode
    if seed is not None:
        doc["seed"] = seed
    if trials is not None:
        doc["trials"] = trials
    doc.setdefault("seed", 0)
    _int(doc, "seed", 0, 2 ** 64 - 1)
    if "trials" in doc:
        _int(doc, "trials", 1)
    return doc


# ---------------------------------------------------------------- modes


def run_identities(doc: dict) -> tuple[dict, bool]:
    trials = _int(doc, "trials", 1, default=50)
    dims = doc.get("dims", [1, 2])
    if not isinstance(dims, list) or not dims or any(d not in (1, 2, 3) for d in dims):
        raise SchemaError("dims must be a nonempty list drawn from 1, 2, 3")
    suites = verify_appendix_identities(doc["seed"], trials, dims)
    oracle = derived_bracket_oracle(doc["seed"], trials, dims)
    ok = all(suites[k]["pass"] for k in IDENTITY_NAMES) and all(v["pass"] for v in oracle.values())
    return {"identities": suites, "derived_bracket_oracle": oracle}, ok


def run_mc(doc: dict) -> tuple[dict, bool]:
    n = _int(doc, "n", 1, 3)
    N = _int(doc, "N", 1)
    s_index = _int(doc, "s_index", 0, default=2 * n + 2)
    c = _fraction(doc["c"], "c") if "c" in doc else None
    if c is not None and c <= 0:
        raise SchemaError("c must be positive")
    if "eps1" not in doc:
        raise SchemaError("mc mode needs eps1")
    eps1 = _section(doc["eps1"], n, "eps1")
    try:
        series, rep = mc_solve(eps1, N)
    except ObstructionNonzero as e:
        raise ModeFailure(f"obstruction at order {e.order}", e.witness) from e
    except ValueError as e:
        raise SchemaError(f"eps1: {e}") from e
    residual = mc_residual(series)
    fixed = fixed_point_residual(series, {(1,): eps1})
    cfg = calibrate(series, s_index, c_override=c)
    cert = majorant_certify(series, cfg)
    rows = []
    for r in rep.rows:
        d = r.as_dict()
        d["mc_residual_zero"] = (r.k,) not in residual
        d["fixed_point_zero"] = (r.k,) not in fixed
        d["sobolev_norm_sq"] = sobolev_norm_sq(series.coeff(r.k), s_index)
        rows.append(d)
    ok = not residual and not fixed and cert["pass"]
    return {"series": series, "orders": rows, "majorant": cert}, ok


def run_kuranishi(doc: dict) -> tuple[dict, bool]:
    n = _int(doc, "n", 1, 3)
    N = _int(doc, "N", 1)
    basis_doc = doc.get("basis")
    if not isinstance(basis_doc, list) or not basis_doc:
        raise SchemaError("kuranishi mode needs a nonempty basis")
    basis = [_section(b, n, f"basis[{i}]") for i, b in enumerate(basis_doc)]
    try:
        series, rep = kuranishi(basis, N)
    except ValueError as e:
        raise SchemaError(str(e)) from e
    closed = all(r.bracket_closed for r in rep.rows)
    eq = kuranishi_equivalence(series, rep) if closed else {}
    poly = [{"index": list(a), "harmonic": h, "zero": not h} for a, h in sorted(rep.polynomial.items())]
    out = {"series": series, "orders": [r.as_dict() for r in rep.rows], "obstruction_polynomial": poly,
           "obstructed": not rep.vanishing, "equivalence_applicable": closed,
           "equivalence": [{"index": list(a), "holds": v} for a, v in sorted(eq.items())]}
    return out, all(eq.values())


def run_biherm(doc: dict) -> tuple[dict, bool]:
    n = _int(doc, "n", 1, 3)
    N = _int(doc, "N", 1)
    if "beta" not in doc:
        raise SchemaError("biherm mode needs beta")
    try:
        torus = TorusKahlerData(n, _omega(doc, n))
        beta = PoissonData(_section(doc["beta"], n, "beta"))
    except (InvalidKahlerData, ValueError) as e:
        raise SchemaError(str(e)) from e
    try:
        state = figure1_loop(beta, torus, N)
    except ObstructionNonzero as e:
        raise ModeFailure(f"obstruction at order {e.order}", e.witness) from e
    except NoSolution as e:
        raise ModeFailure(str(e), getattr(e, "witness", None)) from e
    loop_rows = check_conditions(state, torus)
    try:
        res = extract_bihermitian(state, torus)
    except DegenerateMetric as e:
        raise ModeFailure(str(e)) from e
    fo = first_order_check(state, res, beta, torus)
    psi = spinor_series(state.a_series(), state.b_series(), torus.psi0)
    closed = [{"order": k, "closed": not closedness_defect(state.a_series(), state.b_series(), k, torus)}
              for k in range(N + 1)]
    purity = purity_check(psi)
    ledger = [{"order": k, "eps": state.eps[k], "a_hat": state.a_hat[k], "b_hat": state.b_hat[k],
               "gamma": state.gamma[k], "a": state.a[k], "b": state.b[k]} for k in range(1, N + 1)]
    checks = dict(res.checks)
    ok = (all(all(v for k, v in r.items() if k != "order") for r in loop_rows)
          and all(checks.values()) and fo["pass"]
          and all(r["closed"] for r in closed) and all(r["pure"] and r["nondegenerate"] and r["truncation_pure"] for r in purity))
    out = {
        "state": ledger,
        "loop_conditions": loop_rows,
        "bihermitian": {"J_plus": res.J_plus, "J_minus": res.J_minus, "h": res.h, "b_field": res.b_field},
        "checks": checks,
        "torsion_condition": {"pass": checks["torsion_plus_minus"] and checks["torsion_db"]},
        "first_order_check": fo,
        "kodaira_spencer": kodaira_spencer_class(beta, torus),
        "spinor_closedness": closed,
        "purity": purity,
    }
    return out, ok


def _configuration(d) -> PointConfiguration:
    if not isinstance(d, dict):
        raise SchemaError("configuration must be an object")
    try:
        return PointConfiguration(
            n=int(d["n"]),
            lines=[frozenset(s) for s in d.get("lines", [])],
            conics=[frozenset(s) for s in d.get("conics", [])],
            nodal_cubics=[(int(p), frozenset(s)) for p, s in d.get("nodal_cubics", [])],
            infinitely_near=[(int(j), int(k)) for j, k in d.get("infinitely_near", [])],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"configuration: {e}") from e


def run_surfaces(doc: dict) -> tuple[dict, bool]:
    emax = _int(doc, "hirzebruch_max", 3, 64, default=6)
    rep = paper_table_report(range(0, emax + 1))
    exc = []
    for n, expected in EXCEPTIONAL_COUNTS.items():
        got = len(exceptional_classes(SurfaceLattice.del_pezzo(n), 6))
        exc.append({"n": n, "count": got, "expected": expected, "pass": got == expected})
    configs = []
    for d in doc.get("configurations", []):
        cfg = _configuration(d)
        try:
            cls = position_classify(cfg)
        except InconsistentFlags as e:
            raise SchemaError(str(e)) from e
        L = SurfaceLattice.del_pezzo(cfg.n)
        curves = minus_two_curve_scan(L, cfg.minus_two_candidates(L))
        configs.append({"input": d, "position": cls, "minus_two_curves": sorted({L.word(c) for c in curves})})
    out = {"table": rep, "exceptional_curves": exc, "configurations": configs, "text_table": text_table(rep)}
    return out, rep["pass"] and all(r["pass"] for r in exc)


RUNNERS = {"identities": run_identities, "mc": run_mc, "kuranishi": run_kuranishi, "biherm": run_biherm,
           "surfaces": run_surfaces}


# ---------------------------------------------------------------- entry point


def run(mode: str, scenario_path: str, seed: int | None = None, trials: int | None = None) -> tuple[int, dict]:
    echo = {"path": scenario_path}
    try:
        doc = load_scenario(scenario_path, mode, seed, trials)
        echo = doc
        results, ok = RUNNERS[mode](doc)
    except SchemaError as e:
        return 2, document(mode, echo, passed=False, exit_code=2, error={"kind": "schema", "message": str(e)})
    except ModeFailure as e:
        return 1, document(mode, echo, passed=False, exit_code=1,
                           error={"kind": "mode_failure", "message": str(e), "witness": e.witness})
    except InvariantBreach as e:
        return 3, document(mode, echo, passed=False, exit_code=3,
                           error={"kind": "invariant_breach", "message": str(e), "witness": repr(e.args)})
    code = 0 if ok else 1
    return code, document(mode, echo, results, passed=ok, exit_code=code)


def _u64(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("trials must be positive")
    return v


def main(argv: Sequence[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="gkdeform", description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=MODES)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--trials", type=_positive)
    args = p.parse_args(argv)
    code, doc = run(args.mode, args.scenario, args.seed, args.trials)
    text = dumps(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.mode == "surfaces" and "text_table" in doc["results"]:
        sys.stderr.write(doc["results"]["text_table"])
    if "error" in doc:
        sys.stderr.write(f"gkdeform: {doc['error']['message']}\n")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
