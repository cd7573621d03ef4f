"""Trigonometric-polynomial sections over the flat torus R^{2n} / 2 pi Z^{2n}.

A section is a finite map from integer frequencies ``k`` to fiber values; the
term ``(k, v)`` stands for ``v * exp(i <k, x>)``.  Derivatives multiply by
``i k_j``, so every spectral quantity stays in the Gaussian rationals.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Mapping

from .algebra import (CliffordFiber, FormFiber, Mat, Multivector, form_exp, popcount,
                      standard_J, two_form_matrix)
from .scalar import (I, ONE, ZERO, Q, Scalar, from_pairs, leading_minors_positive, matmul,
                     to_pairs)
from .algebra import transpose

Freq = tuple[int, ...]

FIBER_TYPES = {
    "form": FormFiber,
    "multivector": Multivector,
    "clifford": CliffordFiber,
    "matrix": Mat,
}


def _neg(k: Freq) -> Freq:
    return tuple(-x for x in k)


def _add(k: Freq, l: Freq) -> Freq:
    return tuple(a + b for a, b in zip(k, l))


class FourierSection:
    """Finite Fourier sum of fiber values of one kind."""

    __slots__ = ("n", "kind", "terms")

    def __init__(self, n: int, kind: str, terms: Mapping[Freq, object] | None = None):
        if kind not in FIBER_TYPES:
            raise ValueError(f"unknown fiber kind {kind!r}")
        self.n = n
        self.kind = kind
        self.terms: dict[Freq, object] = {}
        for k, v in (terms or {}).items():
            k = tuple(int(x) for x in k)
            if len(k) != 2 * n:
                raise ValueError(f"frequency {k} has wrong length for n={n}")
            if v:
                self.terms[k] = v

    # construction
    @classmethod
    def zero(cls, n: int, kind: str) -> "FourierSection":
        return cls(n, kind, {})

    @classmethod
    def single(cls, k: Freq, fiber, n: int | None = None) -> "FourierSection":
        n = n if n is not None else len(k) // 2
        return cls(n, fiber.kind, {tuple(k): fiber})

    def zero_like(self) -> "FourierSection":
        return FourierSection(self.n, self.kind, {})

    # algebra
    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FourierSection) and self.n == other.n
                and self.kind == other.kind and self.terms == other.terms)

    def _compat(self, other: "FourierSection") -> None:
        if self.n != other.n or self.kind != other.kind:
            raise ValueError(f"incompatible sections ({self.n},{self.kind}) vs ({other.n},{other.kind})")

    def __add__(self, other: "FourierSection") -> "FourierSection":
        self._compat(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            cur = out.get(k)
            out[k] = v if cur is None else cur + v
        return FourierSection(self.n, self.kind, out)

    def __neg__(self) -> "FourierSection":
        return FourierSection(self.n, self.kind, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "FourierSection") -> "FourierSection":
        return self + (-other)

    def scale(self, s: Scalar) -> "FourierSection":
        if not s:
            return self.zero_like()
        return FourierSection(self.n, self.kind, {k: v.scale(s) for k, v in self.terms.items()})

    def __mul__(self, other: "FourierSection") -> "FourierSection":
        """Pointwise fiber product, i.e. convolution of coefficients."""
        self._compat(other)
        out: dict[Freq, object] = {}
        for k, v in self.terms.items():
            for l, w in other.terms.items():
                p = v * w
                if not p:
                    continue
                kl = _add(k, l)
                cur = out.get(kl)
                out[kl] = p if cur is None else cur + p
        return FourierSection(self.n, self.kind, out)

    def conj(self) -> "FourierSection":
        return FourierSection(self.n, self.kind, {_neg(k): v.conj() for k, v in self.terms.items()})

    def map(self, f: Callable, kind: str | None = None) -> "FourierSection":
        return FourierSection(self.n, kind or self.kind, {k: f(v) for k, v in self.terms.items()})

    def map_k(self, f: Callable, kind: str | None = None) -> "FourierSection":
        """Fiberwise map that may depend on the frequency: ``f(k, v)``."""
        return FourierSection(self.n, kind or self.kind, {k: f(k, v) for k, v in self.terms.items()})

    def deriv(self, j: int) -> "FourierSection":
        """``d/dx^{j+1}`` (0-based ``j``)."""
        return self.map_k(lambda k, v: v.scale(I * k[j]))

    def at(self, k: Freq):
        return self.terms.get(tuple(k))

    def constant_part(self) -> "FourierSection":
        z = (0,) * (2 * self.n)
        return FourierSection(self.n, self.kind, {z: self.terms[z]} if z in self.terms else {})

    def support(self) -> list[Freq]:
        return sorted(self.terms)

    def norm2(self) -> Fraction:
        return Fraction(sum((v.norm2() for v in self.terms.values()), 0))

    def __repr__(self) -> str:
        return f"FourierSection(n={self.n}, kind={self.kind}, support={self.support()})"


def const(fiber, n: int | None = None) -> FourierSection:
    """Constant section with value ``fiber``."""
    if fiber.kind == "matrix":
        if n is None:
            raise ValueError("matrix constants need n")
        return FourierSection(n, "matrix", {(0,) * (2 * n): fiber})
    return FourierSection(fiber.n, fiber.kind, {(0,) * (2 * fiber.n): fiber})


def apply_clifford(a: FourierSection, phi: FourierSection) -> FourierSection:
    """Pointwise spin action of a Clifford-valued section on a form section."""
    if a.kind != "clifford" or phi.kind != "form":
        raise ValueError("apply_clifford needs clifford and form sections")
    out: dict[Freq, FormFiber] = {}
    for k, v in a.terms.items():
        for l, w in phi.terms.items():
            p = v.apply(w)
            if p:
                kl = _add(k, l)
                cur = out.get(kl)
                out[kl] = p if cur is None else cur + p
    return FourierSection(a.n, "form", out)


def to_clifford(s: FourierSection) -> FourierSection:
    if s.kind == "clifford":
        return s
    if s.kind != "multivector":
        raise ValueError("only multivector sections embed in the Clifford bundle")
    return s.map(lambda v: v.to_clifford(), "clifford")


# ---------------------------------------------------------------- calculus


def _freq_one_form(n: int, k: Freq) -> FormFiber:
    return FormFiber(n, {1 << j: Q(k[j]) for j in range(2 * n) if k[j]})


def exterior_d(s: FourierSection) -> FourierSection:
    if s.kind != "form":
        raise ValueError("exterior_d acts on form sections")
    n = s.n
    return s.map_k(lambda k, v: _freq_one_form(n, k).wedge(v).scale(I))


def dz_symbol(k: Freq, a: int) -> Scalar:
    """Eigenvalue of ``d/dz_{a+1}`` on ``exp(i<k,x>)``."""
    return QQh(k[2 * a + 1]) + I * QQh(k[2 * a])


def dzbar_symbol(k: Freq, a: int) -> Scalar:
    """Eigenvalue of ``d/dzbar_{a+1}`` on ``exp(i<k,x>)``."""
    return I * QQh(k[2 * a]) - QQh(k[2 * a + 1])


def QQh(x: int) -> Scalar:
    return Q(x, 2)


def dz_form(n: int, a: int) -> FormFiber:
    return FormFiber(n, {1 << (2 * a): ONE, 1 << (2 * a + 1): I})


def dzbar_form(n: int, a: int) -> FormFiber:
    return FormFiber(n, {1 << (2 * a): ONE, 1 << (2 * a + 1): -I})


def dolbeault_split(s: FourierSection) -> tuple[FourierSection, FourierSection]:
    """``(del s, delbar s)`` for the standard complex structure."""
    if s.kind != "form":
        raise ValueError("dolbeault_split acts on form sections")
    n = s.n

    def part(sym, basis):
        def f(k, v):
            out = v.zero_like()
            for a in range(n):
                c = sym(k, a)
                if c:
                    out = out + basis(n, a).wedge(v).scale(c)
            return out
        return s.map_k(f)

    return part(dz_symbol, dz_form), part(dzbar_symbol, dzbar_form)


def freq_norm2(k: Freq) -> int:
    return sum(x * x for x in k)


def sobolev_norm_sq(s: FourierSection, s_index: int) -> Fraction:
    total = Fraction(0)
    for k, v in s.terms.items():
        total += (1 + freq_norm2(k)) ** s_index * Fraction(v.norm2())
    return total


def algebra_constant(a: FourierSection, b: FourierSection, s_index: int) -> int:
    """``C`` with ``||a b||_s^2 <= C ||a||_s^2 ||b||_s^2`` for these supports.

    From ``1 + |k + l|^2 <= 2 (1 + |k|^2)(1 + |l|^2)``, Cauchy-Schwarz over the
    frequency pairs, and the fiber bound: a wedge monomial arises from at most
    ``2^{2n}`` pairs, while Frobenius norms are submultiplicative.
    """
    fiber = 1 if a.kind in ("clifford", "matrix") else 1 << (2 * a.n)
    return 2 ** s_index * min(len(a.terms), len(b.terms)) * fiber


def reality_check(s: FourierSection) -> bool:
    if s.kind == "multivector":
        s = to_clifford(s)
    return s.conj() == s


# ---------------------------------------------------------------- torus data


class InvalidKahlerData(ValueError):
    pass


class TorusKahlerData:
    """Flat torus with the standard J and a constant compatible 2-form."""

    def __init__(self, n: int, omega: FormFiber | None = None):
        from .algebra import standard_omega

        self.n = n
        self.J = standard_J(n)
        self.omega_fiber = omega if omega is not None else standard_omega(n)
        if self.omega_fiber.degrees() - {2} or any(v.y for v in self.omega_fiber.c.values()):
            raise InvalidKahlerData("omega must be a real 2-form")
        W = two_form_matrix(self.omega_fiber)
        # omega(JX, JY) = omega(X, Y)
        JtWJ = matmul(matmul(transpose(self.J), W), self.J)
        if JtWJ != W:
            raise InvalidKahlerData("omega is not J-invariant")
        self.g = matmul(W, self.J)  # g(X, Y) = omega(X, JY)
        if transpose(self.g) != self.g or not leading_minors_positive(self.g):
            raise InvalidKahlerData("omega(., J.) is not positive definite")
        self.omega = const(self.omega_fiber)
        self.psi0_fiber = form_exp(self.omega_fiber.scale(I))
        self.psi0 = const(self.psi0_fiber)
        if exterior_d(self.psi0):
            raise InvalidKahlerData("psi0 is not closed")


class PoissonData:
    """A bivector of type (2,0) in the Lbar frame, checked holomorphic and Poisson."""

    def __init__(self, beta: FourierSection, check: bool = True):
        from .brackets import d_L, schouten

        if beta.kind != "multivector":
            raise ValueError("beta must be a multivector section")
        n = beta.n
        for v in beta.terms.values():
            for m in v.c:
                if popcount(m) != 2 or m >> n:
                    raise ValueError("beta must lie in the span of d/dz_a ^ d/dz_b")
        self.beta = beta
        if check:
            if d_L(beta):
                raise ValueError("beta is not holomorphic")
            if schouten(beta, beta):
                raise ValueError("[beta, beta] does not vanish")


# ---------------------------------------------------------------- JSON


def _clifford_word(n: int, r: int, c: int) -> str:
    return FormFiber.word(FormFiber(n), r) + "|" + FormFiber.word(FormFiber(n), c)


def section_to_json(s: FourierSection) -> dict:
    terms = []
    for k in sorted(s.terms):
        v = s.terms[k]
        if s.kind in ("form", "multivector"):
            entries = [(v.word(m), z) for m, z in sorted(v.c.items())]
        elif s.kind == "clifford":
            entries = [(_clifford_word(s.n, r, c), z)
                       for c in sorted(v.cols) for r, z in sorted(v.cols[c].items())]
        else:
            entries = [(f"m{i},{j}", z) for i, row in enumerate(v.rows) for j, z in enumerate(row) if z]
        for word, z in entries:
            rn, rd, imn, imd = to_pairs(z)
            terms.append({"k": list(k), "basis_word": word, "re_num": rn, "re_den": rd,
                          "im_num": imn, "im_den": imd})
    doc = {"n": s.n, "fiber_kind": s.kind, "terms": terms}
    if s.kind == "matrix":
        dims = {len(v.rows) for v in s.terms.values()}
        doc["dim"] = dims.pop() if dims else 0
    return doc


def section_from_json(doc: Mapping) -> FourierSection:
    n = int(doc["n"])
    kind = doc["fiber_kind"]
    if kind not in FIBER_TYPES:
        raise ValueError(f"unknown fiber kind {kind!r}")
    acc: dict[Freq, dict] = {}
    for t in doc["terms"]:
        k = tuple(int(x) for x in t["k"])
        z = from_pairs(int(t["re_num"]), int(t["re_den"]), int(t["im_num"]), int(t["im_den"]))
        acc.setdefault(k, {})[t["basis_word"]] = z
    terms = {}
    for k, words in acc.items():
        if kind == "form":
            terms[k] = FormFiber(n, {FormFiber.parse_word(n, w): z for w, z in words.items()})
        elif kind == "multivector":
            terms[k] = Multivector(n, {Multivector.parse_word(n, w): z for w, z in words.items()})
        elif kind == "clifford":
            cols: dict[int, dict[int, Scalar]] = {}
            for w, z in words.items():
                rw, cw = w.split("|")
                cols.setdefault(FormFiber.parse_word(n, cw), {})[FormFiber.parse_word(n, rw)] = z
            terms[k] = CliffordFiber(n, cols)
        else:
            d = int(doc["dim"])
            rows = [[ZERO] * d for _ in range(d)]
            for w, z in words.items():
                i, j = (int(x) for x in w[1:].split(","))
                rows[i][j] = z
            terms[k] = Mat(rows)
    return FourierSection(n, kind, terms)
