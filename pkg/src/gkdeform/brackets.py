"""Graded commutators, the derived Schouten bracket and the Lie algebroid derivative.

Differential operators on form sections are kept symbolically: a
``GradedOperator`` is a finite sum ``sum_alpha a_alpha * D^alpha`` with
Clifford-valued section coefficients ``a_alpha`` and constant-coefficient
derivatives ``D^alpha = prod_j (d/dx^j)^{alpha_j}``.  Composition uses the
Leibniz rule, so graded commutators are computed exactly and can be tested for
being of order zero.
"""

from __future__ import annotations

import random
from functools import lru_cache
from math import comb
from typing import Iterable

from .algebra import (CliffordFiber, FormFiber, Multivector, holomorphic_volume, lbar_monomial,
                      popcount, wedge_operator)
from .fields import (FourierSection, Freq, apply_clifford, const, dz_form, dz_symbol, dzbar_form,
                     dzbar_symbol, to_clifford)
from .scalar import HALF, I, ONE, ZERO, Q, S, Scalar, inverse

Alpha = tuple[int, ...]


class NotZeroOrder(ValueError):
    pass


class NotInLbar(ValueError):
    pass


def _alpha_add(a: Alpha, b: Alpha) -> Alpha:
    return tuple(x + y for x, y in zip(a, b))


def _sub_alphas(a: Alpha):
    """All ``g <= a`` with the multinomial weight ``prod C(a_j, g_j)``."""
    out = [((), 1)]
    for x in a:
        out = [(g + (y,), w * comb(x, y)) for g, w in out for y in range(x + 1)]
    return out


def _deriv_power(s: FourierSection, g: Alpha) -> FourierSection:
    if not any(g):
        return s

    def f(k, v):
        c = ONE
        for kj, gj in zip(k, g):
            if gj:
                c = c * (I * kj) ** gj
        return v.scale(c)

    return s.map_k(f)


class GradedOperator:
    """Finite sum of Clifford coefficients times constant derivatives."""

    __slots__ = ("n", "parity", "terms")

    def __init__(self, n: int, parity: int, terms: dict[Alpha, FourierSection] | None = None):
        self.n = n
        self.parity = parity & 1
        self.terms = {a: s for a, s in (terms or {}).items() if s}

    @property
    def degree(self) -> int:
        return self.parity

    @classmethod
    def mult(cls, s: FourierSection, parity: int | None = None) -> "GradedOperator":
        """Multiplication (spin action) by a Clifford or Lbar-valued section."""
        if parity is None:
            if s.kind != "multivector":
                raise ValueError("parity is required for Clifford sections")
            degs = {popcount(m) & 1 for v in s.terms.values() for m in v.c}
            if len(degs) > 1:
                raise ValueError("section has mixed parity")
            parity = degs.pop() if degs else 0
        s = to_clifford(s)
        return cls(s.n, parity, {(0,) * (2 * s.n): s})

    @classmethod
    def identity(cls, n: int) -> "GradedOperator":
        return cls.mult(const(CliffordFiber.identity(n)), 0)

    def is_zero_order(self) -> bool:
        z = (0,) * (2 * self.n)
        return all(a == z for a in self.terms)

    def zero_order_part(self) -> FourierSection:
        z = (0,) * (2 * self.n)
        return self.terms.get(z, FourierSection.zero(self.n, "clifford"))

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, GradedOperator) and self.n == other.n and self.terms == other.terms

    def __add__(self, other: "GradedOperator") -> "GradedOperator":
        out = dict(self.terms)
        for a, s in other.terms.items():
            out[a] = out[a] + s if a in out else s
        return GradedOperator(self.n, self.parity, out)

    def __neg__(self) -> "GradedOperator":
        return GradedOperator(self.n, self.parity, {a: -s for a, s in self.terms.items()})

    def __sub__(self, other: "GradedOperator") -> "GradedOperator":
        return self + (-other)

    def scale(self, c: Scalar) -> "GradedOperator":
        return GradedOperator(self.n, self.parity, {a: s.scale(c) for a, s in self.terms.items()})

    def __matmul__(self, other: "GradedOperator") -> "GradedOperator":
        """Composition ``self o other``."""
        out: dict[Alpha, FourierSection] = {}
        for a, sa in self.terms.items():
            subs = _sub_alphas(a)
            for b, sb in other.terms.items():
                for g, w in subs:
                    coef = sa * _deriv_power(sb, g)
                    if not coef:
                        continue
                    if w != 1:
                        coef = coef.scale(Q(w))
                    rest = tuple(x - y for x, y in zip(a, g))
                    key = _alpha_add(rest, b)
                    out[key] = out[key] + coef if key in out else coef
        return GradedOperator(self.n, self.parity + other.parity, out)

    def apply(self, phi: FourierSection) -> FourierSection:
        out = FourierSection.zero(self.n, "form")
        for a, s in self.terms.items():
            out = out + apply_clifford(s, _deriv_power(phi, a))
        return out

    def __repr__(self) -> str:
        return f"GradedOperator(n={self.n}, parity={self.parity}, orders={sorted(self.terms)})"


def graded_comm(A: GradedOperator, B: GradedOperator) -> GradedOperator:
    """``AB - (-1)^{|A||B|} BA``."""
    if A.parity & B.parity:
        return (A @ B) + (B @ A)
    return (A @ B) - (B @ A)


def _first_order(n: int, coeffs: dict[int, CliffordFiber]) -> GradedOperator:
    terms = {}
    for j, c in coeffs.items():
        alpha = tuple(1 if i == j else 0 for i in range(2 * n))
        terms[alpha] = const(c)
    return GradedOperator(n, 1, terms)


@lru_cache(maxsize=None)
def d_operator(n: int) -> GradedOperator:
    """Exterior derivative ``sum_j dx^j ^ d/dx^j``."""
    return _first_order(n, {j: wedge_operator(FormFiber.dx(n, j + 1)) for j in range(2 * n)})


@lru_cache(maxsize=None)
def del_operator(n: int) -> GradedOperator:
    """``sum_a dz_a ^ d/dz_a`` with ``d/dz_a = (d/dx^{2a-1} - i d/dx^{2a}) / 2``."""
    coeffs = {}
    for a in range(n):
        w = wedge_operator(dz_form(n, a))
        coeffs[2 * a] = w.scale(HALF)
        coeffs[2 * a + 1] = w.scale(-I * HALF)
    return _first_order(n, coeffs)


@lru_cache(maxsize=None)
def delbar_operator(n: int) -> GradedOperator:
    """``sum_b dzbar_b ^ d/dzbar_b`` with ``d/dzbar_b = (d/dx^{2b-1} + i d/dx^{2b}) / 2``."""
    coeffs = {}
    for b in range(n):
        w = wedge_operator(dzbar_form(n, b))
        coeffs[2 * b] = w.scale(HALF)
        coeffs[2 * b + 1] = w.scale(I * HALF)
    return _first_order(n, coeffs)


# ---------------------------------------------------------------- Lbar <-> Clifford


@lru_cache(maxsize=None)
def _spinor_iso(n: int) -> tuple[list[list[Scalar]], int]:
    """Inverse of the matrix of ``eps -> eps . Omega`` on Lbar monomials."""
    omega0 = holomorphic_volume(n)
    d = 1 << (2 * n)
    cols = []
    for m in range(d):
        img = lbar_monomial(n, m).apply(omega0)
        cols.append([img.c.get(r, ZERO) for r in range(d)])
    M = [[cols[c][r] for c in range(d)] for r in range(d)]
    return inverse(M), d


def form_to_multivector(phi: FormFiber) -> Multivector:
    """The unique ``eps`` with ``eps . Omega = phi``."""
    Minv, d = _spinor_iso(phi.n)
    out = {}
    for m in range(d):
        v = ZERO
        row = Minv[m]
        for r, x in phi.c.items():
            if row[r]:
                v += row[r] * x
        if v:
            out[m] = v
    return Multivector(phi.n, out)


def clifford_to_multivector(c: CliffordFiber, check: bool = True) -> Multivector:
    """Read a Clifford element lying in the Lbar exterior algebra back as a multivector."""
    mv = form_to_multivector(c.apply(holomorphic_volume(c.n)))
    if check and mv.to_clifford() != c:
        raise NotInLbar("Clifford element is not in the exterior algebra of Lbar")
    return mv


def section_to_multivector(s: FourierSection, check: bool = True) -> FourierSection:
    return s.map(lambda v: clifford_to_multivector(v, check), "multivector")


def form_section_to_multivector(s: FourierSection) -> FourierSection:
    return s.map(form_to_multivector, "multivector")


def multivector_to_form_section(s: FourierSection) -> FourierSection:
    omega0 = holomorphic_volume(s.n)
    return s.map(lambda v: v.to_clifford().apply(omega0), "form")


# ---------------------------------------------------------------- brackets


def degree_parts(e: FourierSection) -> dict[int, FourierSection]:
    """Split a multivector section by polynomial degree."""
    acc: dict[int, dict[Freq, Multivector]] = {}
    for k, v in e.terms.items():
        for p in v.degrees():
            acc.setdefault(p, {})[k] = v.part(p)
    return {p: FourierSection(e.n, "multivector", t) for p, t in acc.items()}


def _require_mv(*es: FourierSection) -> None:
    for e in es:
        if e.kind != "multivector":
            raise NotInLbar("expected a multivector section")


def schouten(e1: FourierSection, e2: FourierSection, via: str = "del", check: bool = False) -> FourierSection:
    """Derived bracket ``[[D, e1]_G, e2]_G`` read back in the Lbar exterior algebra.

    ``via`` selects ``D``: ``"del"`` or ``"d"``.  Both give the same bracket.
    """
    _require_mv(e1, e2)
    n = e1.n
    D = del_operator(n) if via == "del" else d_operator(n)
    out = FourierSection.zero(n, "multivector")
    for p, a in degree_parts(e1).items():
        inner = graded_comm(D, GradedOperator.mult(a, p))
        for q, b in degree_parts(e2).items():
            op = graded_comm(inner, GradedOperator.mult(b, q))
            if not op.is_zero_order():
                raise NotZeroOrder("derived bracket left a differential part")
            out = out + section_to_multivector(op.zero_order_part(), check)
    return out


def schouten_classical(e1: FourierSection, e2: FourierSection) -> FourierSection:
    """Coordinate Schouten bracket in the flat frame.

    For monomials ``A`` (degree p), ``B`` (degree q) and functions f, g::

        [fA, gB] = sum_a f (d_a g) (dA/dtheta_a) B + (-1)^{pq} g (d_a f) (dB/dtheta_a) A

    with ``d_a = d/dz_a`` and left derivatives in the odd generators theta.
    """
    _require_mv(e1, e2)
    n = e1.n
    out: dict[Freq, Multivector] = {}

    def add(k, v):
        if v:
            out[k] = out[k] + v if k in out else v

    for k, A in e1.terms.items():
        for l, B in e2.terms.items():
            kl = tuple(x + y for x, y in zip(k, l))
            for mA, cA in A.c.items():
                p = popcount(mA)
                mA_mv = Multivector(n, {mA: cA})
                for mB, cB in B.c.items():
                    q = popcount(mB)
                    mB_mv = Multivector(n, {mB: cB})
                    sign = -ONE if (p * q) & 1 else ONE
                    for a in range(n):
                        sg = dz_symbol(l, a)
                        if sg:
                            add(kl, mA_mv.left_derivative(a).wedge(mB_mv).scale(sg))
                        sf = dz_symbol(k, a)
                        if sf:
                            add(kl, mB_mv.left_derivative(a).wedge(mA_mv).scale(sign * sf))
    return FourierSection(n, "multivector", out)


def d_L(e: FourierSection) -> FourierSection:
    """Lie algebroid derivative: ``sum_b (d/dzbar_b f) dzbar_b ^ A`` on ``f A``."""
    _require_mv(e)
    n = e.n

    def f(k, v):
        out = v.zero_like()
        for b in range(n):
            c = dzbar_symbol(k, b)
            if c:
                out = out + Multivector.zeta(n, b + 1).wedge(v).scale(c)
        return out

    return e.map_k(f)


def d_L_derived(e: FourierSection) -> FourierSection:
    """``[delbar, e]_G`` read back in the Lbar exterior algebra."""
    _require_mv(e)
    n = e.n
    out = FourierSection.zero(n, "multivector")
    for p, a in degree_parts(e).items():
        op = graded_comm(delbar_operator(n), GradedOperator.mult(a, p))
        if not op.is_zero_order():
            raise NotZeroOrder("[delbar, e] left a differential part")
        out = out + section_to_multivector(op.zero_order_part())
    return out


def mv_degree(e: FourierSection) -> int:
    degs = {p for v in e.terms.values() for p in v.degrees()}
    if len(degs) > 1:
        raise ValueError("inhomogeneous multivector")
    return degs.pop() if degs else 0


# ---------------------------------------------------------------- random data and identity suite


def random_scalar(rng: random.Random, bound: int = 3) -> Scalar:
    return S(rng.randint(-bound, bound), rng.randint(-bound, bound))


def random_multivector_section(rng: random.Random, n: int, degree: int, nterms: int = 2,
                               max_freq: int = 1, nmon: int = 2) -> FourierSection:
    masks = [m for m in range(1 << (2 * n)) if popcount(m) == degree]
    terms: dict[Freq, Multivector] = {}
    for _ in range(nterms):
        k = tuple(rng.randint(-max_freq, max_freq) for _ in range(2 * n))
        c = {}
        for _ in range(nmon):
            c[rng.choice(masks)] = random_scalar(rng)
        v = Multivector(n, c)
        terms[k] = terms[k] + v if k in terms else v
    return FourierSection(n, "multivector", terms)


def random_operator(rng: random.Random, n: int) -> GradedOperator:
    kind = rng.randrange(4)
    if kind == 0:
        return del_operator(n).scale(random_scalar(rng, 2) or ONE)
    if kind == 1:
        return delbar_operator(n).scale(random_scalar(rng, 2) or ONE)
    p = rng.randint(0, min(2 * n, 3))
    return GradedOperator.mult(random_multivector_section(rng, n, p), p)


def leibniz_sides(e1: FourierSection, e2: FourierSection, p1: int | None = None,
                  s12: FourierSection | None = None) -> tuple[FourierSection, FourierSection]:
    """``d_L [e1, e2]`` and ``[d_L e1, e2] + (-1)^{|e1|} [e1, d_L e2]``.

    With ``d_L = [dbar, .]`` and the derived bracket the identity that holds is
    ``lhs = -rhs``: graded Jacobi with ``[dbar, del] = 0`` gives
    ``[dbar, [del, e1]] = -[del, d_L e1]``.
    """
    p1 = mv_degree(e1) if p1 is None else p1
    s12 = schouten(e1, e2) if s12 is None else s12
    lhs = d_L(s12)
    rhs = schouten(d_L(e1), e2) + schouten(e1, d_L(e2)).scale(Q(-1) if p1 & 1 else ONE)
    return lhs, rhs


def _identity_checks(rng: random.Random, n: int) -> dict[str, tuple[bool, str]]:
    res: dict[str, tuple[bool, str]] = {}
    A, B, C = (random_operator(rng, n) for _ in range(3))
    sAB = -1 if A.parity & B.parity else 1
    lhs = graded_comm(A, B)
    rhs = graded_comm(B, A).scale(Q(-sAB))
    res["graded_antisymmetry"] = (lhs == rhs, f"A={A}, B={B}")

    def sgn(x, y):
        return Q(-1) if x.parity & y.parity else ONE

    jac = (graded_comm(graded_comm(A, B), C).scale(sgn(A, C))
           + graded_comm(graded_comm(B, C), A).scale(sgn(B, A))
           + graded_comm(graded_comm(C, A), B).scale(sgn(C, B)))
    res["graded_jacobi"] = (not jac, f"A={A}, B={B}, C={C}")

    ps = [rng.randint(0, min(2 * n, 3)) for _ in range(3)]
    e1, e2, e3 = (random_multivector_section(rng, n, p) for p in ps)
    p1, p2, p3 = ps
    s12 = schouten(e1, e2)
    s21 = schouten(e2, e1)
    ok = s12 == (s21.scale(Q(-1)) if (p1 * p2) & 1 else s21)
    res["schouten_symmetry"] = (ok, f"degrees={p1},{p2}")

    lhs, rhs = leibniz_sides(e1, e2, p1, s12)
    res["leibniz"] = (lhs == rhs, f"degrees={p1},{p2}, lhs == -rhs: {lhs == -rhs}")
    res["leibniz_sign_consistent"] = (lhs == -rhs, f"degrees={p1},{p2}")

    def s(x, y):
        return Q(-1) if (x * y) & 1 else ONE

    sj = (schouten(s12, e3).scale(s(p1, p3)) + schouten(schouten(e2, e3), e1).scale(s(p2, p1))
          + schouten(schouten(e3, e1), e2).scale(s(p3, p2)))
    res["schouten_jacobi"] = (not sj, f"degrees={p1},{p2},{p3}")
    return res


IDENTITY_NAMES = ("graded_antisymmetry", "graded_jacobi", "schouten_symmetry", "leibniz", "schouten_jacobi")
# reported next to the suite: the Leibniz relation with the sign forced by d_L = [dbar, .]
EXTRA_IDENTITY_NAMES = ("leibniz_sign_consistent",)


def verify_appendix_identities(seed: int, trials: int, dims: Iterable[int] = (1, 2)) -> dict:
    """Randomized exact checks of the bracket identities; failures carry a witness."""
    rng = random.Random(seed)
    report = {name: {"trials": 0, "failures": 0, "witnesses": []}
              for name in IDENTITY_NAMES + EXTRA_IDENTITY_NAMES}
    for n in dims:
        for _ in range(trials):
            for name, (ok, witness) in _identity_checks(rng, n).items():
                row = report[name]
                row["trials"] += 1
                if not ok:
                    row["failures"] += 1
                    if len(row["witnesses"]) < 3:
                        row["witnesses"].append(f"n={n}: {witness}")
    for row in report.values():
        row["pass"] = row["failures"] == 0
    return report


def derived_bracket_oracle(seed: int, trials: int, dims: Iterable[int] = (1, 2)) -> dict:
    """Compare the spin-operator bracket with the coordinate Schouten bracket on random bivector pairs."""
    rng = random.Random(seed)
    out = {}
    for n in dims:
        failures, witnesses = 0, []
        for _ in range(trials):
            e1 = random_multivector_section(rng, n, 2)
            e2 = random_multivector_section(rng, n, 2)
            if schouten(e1, e2) != schouten_classical(e1, e2):
                failures += 1
                if len(witnesses) < 3:
                    witnesses.append(f"n={n}: {e1!r}, {e2!r}")
        out[f"n{n}"] = {"trials": trials, "failures": failures, "witnesses": witnesses, "pass": failures == 0}
    return out
