"""Deterministic JSON reports: exact rationals as integer pairs, sorted keys."""

from __future__ import annotations

import json
from dataclasses import asdict, is_dataclass
from fractions import Fraction

from .algebra import Mat
from .fields import FourierSection, section_to_json
from .mc import MajorantConfig, TruncatedSeries
from .scalar import Scalar, to_pairs

SCHEMA_VERSION = 1

SCOPE = {
    "reproduced": [
        "bracket identities by randomized exact trials",
        "Maurer-Cartan and Kuranishi series to a finite order",
        "formal majorant dominance to a finite order",
        "generalized Kahler and bihermitian deformations of flat tori to a finite order",
        "cohomology tables of rational surfaces",
    ],
    "not_reproduced": (
        "The global existence statements for bihermitian and generalized Kahler deformations "
        "(convergence radius, classification up to biholomorphism) are not reproduced. "
        "They are covered only by truncated-order and property-based verification."
    ),
}


def encode(obj):
    """Recursively turn exact values into JSON-ready data."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, Scalar):
        rn, rd, imn, imd = to_pairs(obj)
        return {"re_num": rn, "re_den": rd, "im_num": imn, "im_den": imd}
    if isinstance(obj, FourierSection):
        return section_to_json(obj)
    if isinstance(obj, TruncatedSeries):
        return {"m": obj.m, "N": obj.N, "n": obj.n, "kind": obj.kind,
                "coeffs": [{"index": list(a), "section": section_to_json(obj.coeffs[a])}
                           for a in sorted(obj.coeffs)]}
    if isinstance(obj, Mat):
        return [[encode(x) for x in r] for r in obj.rows]
    if isinstance(obj, MajorantConfig):
        return obj.as_dict()
    if is_dataclass(obj) and not isinstance(obj, type):
        return encode(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(x) for x in obj]
    raise TypeError(f"cannot encode {type(obj).__name__}")


def document(mode: str, scenario: dict, results: dict | None = None, passed: bool = True,
             exit_code: int = 0, error: dict | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "scenario": scenario,
        "results": encode(results or {}),
        "pass": passed,
        "exit_code": exit_code,
        "scope": SCOPE,
    }
    if error is not None:
        doc["error"] = encode(error)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n"
