"""Exterior and Clifford algebra of T + T* over a single fiber.

Conventions
-----------
* Real coordinates x^1..x^{2n}; a form monomial is a bitmask, bit ``j`` standing
  for ``dx^{j+1}``.  Monomials are written in increasing index order.
* Pairing ``<X + xi, Y + eta> = (xi(Y) + eta(X)) / 2``.
* Spin action ``(X + xi) . phi = iota_X phi + xi ^ phi``.
* Clifford elements are stored through the faithful spin representation, as a
  sparse matrix acting on form monomials (``cols[c][r]`` is the coefficient of
  monomial ``r`` in the image of monomial ``c``).
* Standard complex structure: ``J d/dx^{2a-1} = d/dx^{2a}``.  The frame of
  Lbar = T^{1,0} + T*^{0,1} is ``theta_a = d/dz_a`` and ``zeta_b = dzbar_b``;
  a multivector monomial is a mask over 2n generators, theta bits first.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import factorial
from typing import Iterator, Sequence

from .scalar import (HALF, I, ONE, ZERO, Q, Scalar, abs2, conj, identity, inverse,
                     matmul, nullspace, rank)


class DimensionMismatch(ValueError):
    pass


class DegreeError(ValueError):
    pass


def popcount(m: int) -> int:
    return bin(m).count("1")


def bits(m: int) -> Iterator[int]:
    j = 0
    while m:
        if m & 1:
            yield j
        m >>= 1
        j += 1


def wedge_sign(a: int, b: int) -> int:
    """Sign of ``e_a ^ e_b`` relative to the sorted monomial ``e_{a|b}``."""
    s = 0
    for j in bits(b):
        s += popcount(a >> (j + 1))
    return -1 if s & 1 else 1


def below(m: int, j: int) -> int:
    return popcount(m & ((1 << j) - 1))


def _check(a, b) -> None:
    if a.n != b.n:
        raise DimensionMismatch(f"dimension {a.n} vs {b.n}")


def _clean(d: dict) -> dict:
    return {k: v for k, v in d.items() if v}


def _add_into(acc: dict, key, val) -> None:
    cur = acc.get(key)
    acc[key] = val if cur is None else cur + val


# ---------------------------------------------------------------- exterior algebras


class _Exterior:
    """Element of an exterior algebra on 2n generators (masks -> scalars)."""

    __slots__ = ("n", "c")
    kind = "exterior"

    def __init__(self, n: int, c: dict[int, Scalar] | None = None):
        self.n = n
        self.c = _clean(c) if c else {}

    @classmethod
    def zero(cls, n: int):
        return cls(n, {})

    @classmethod
    def one(cls, n: int):
        return cls(n, {0: ONE})

    @classmethod
    def monomial(cls, n: int, mask: int, coef: Scalar = ONE):
        return cls(n, {mask: coef})

    def zero_like(self):
        return type(self)(self.n, {})

    def __bool__(self) -> bool:
        return bool(self.c)

    def __eq__(self, other) -> bool:
        return type(other) is type(self) and self.n == other.n and self.c == other.c

    def __add__(self, other):
        _check(self, other)
        out = dict(self.c)
        for k, v in other.c.items():
            _add_into(out, k, v)
        return type(self)(self.n, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return type(self)(self.n, {k: -v for k, v in self.c.items()})

    def scale(self, s: Scalar):
        if not s:
            return self.zero_like()
        return type(self)(self.n, {k: s * v for k, v in self.c.items()})

    def wedge(self, other):
        _check(self, other)
        out: dict[int, Scalar] = {}
        for a, x in self.c.items():
            for b, y in other.c.items():
                if a & b:
                    continue
                v = x * y
                _add_into(out, a | b, v if wedge_sign(a, b) > 0 else -v)
        return type(self)(self.n, out)

    __mul__ = wedge

    def degrees(self) -> set[int]:
        return {popcount(m) for m in self.c}

    def part(self, p: int):
        return type(self)(self.n, {m: v for m, v in self.c.items() if popcount(m) == p})

    def norm2(self):
        return sum((abs2(v) for v in self.c.values()), 0)

    def items(self):
        return sorted(self.c.items())

    def __repr__(self) -> str:
        if not self.c:
            return "0"
        return " + ".join(f"({v})*{self.word(m)}" for m, v in self.items())

    def word(self, m: int) -> str:  # pragma: no cover - overridden
        raise NotImplementedError

    @classmethod
    def parse_word(cls, n: int, w: str) -> int:  # pragma: no cover - overridden
        raise NotImplementedError


class FormFiber(_Exterior):
    """A complex differential form at a point, in the dx basis."""

    __slots__ = ()
    kind = "form"

    @classmethod
    def dx(cls, n: int, j: int) -> "FormFiber":
        """``dx^j`` with ``j`` 1-based."""
        return cls(n, {1 << (j - 1): ONE})

    def conj(self) -> "FormFiber":
        return FormFiber(self.n, {k: conj(v) for k, v in self.c.items()})

    def word(self, m: int) -> str:
        if m == 0:
            return "1"
        return "^".join(f"dx{j + 1}" for j in bits(m))

    @classmethod
    def parse_word(cls, n: int, w: str) -> int:
        if w == "1":
            return 0
        m = 0
        for tok in w.split("^"):
            if not tok.startswith("dx"):
                raise ValueError(f"bad form word {w!r}")
            j = int(tok[2:]) - 1
            if not 0 <= j < 2 * n or m >> j & 1:
                raise ValueError(f"bad form word {w!r}")
            m |= 1 << j
        return m


class Multivector(_Exterior):
    """Element of the exterior algebra of Lbar in the frame (d/dz_a, dzbar_b)."""

    __slots__ = ()
    kind = "multivector"

    @classmethod
    def theta(cls, n: int, a: int) -> "Multivector":
        """``d/dz_a`` (1-based)."""
        return cls(n, {1 << (a - 1): ONE})

    @classmethod
    def zeta(cls, n: int, b: int) -> "Multivector":
        """``dzbar_b`` (1-based)."""
        return cls(n, {1 << (n + b - 1): ONE})

    def conj(self):
        raise TypeError("conjugation leaves the Lbar exterior algebra; use to_clifford()")

    def to_clifford(self) -> "CliffordFiber":
        out = CliffordFiber.zero(self.n)
        for m, v in self.c.items():
            out = out + lbar_monomial(self.n, m).scale(v)
        return out

    def word(self, m: int) -> str:
        if m == 0:
            return "1"
        toks = []
        for j in bits(m):
            toks.append(f"p{j + 1}" if j < self.n else f"zb{j - self.n + 1}")
        return "^".join(toks)

    @classmethod
    def parse_word(cls, n: int, w: str) -> int:
        if w == "1":
            return 0
        m = 0
        for tok in w.split("^"):
            if tok.startswith("zb"):
                j = n + int(tok[2:]) - 1
                ok = n <= j < 2 * n
            elif tok.startswith("p"):
                j = int(tok[1:]) - 1
                ok = 0 <= j < n
            else:
                ok = False
            if not ok or m >> j & 1:
                raise ValueError(f"bad multivector word {w!r}")
            m |= 1 << j
        return m

    def left_derivative(self, a: int) -> "Multivector":
        """Graded left derivative with respect to generator bit ``a``."""
        out = {}
        for m, v in self.c.items():
            if m >> a & 1:
                out[m ^ (1 << a)] = -v if below(m, a) & 1 else v
        return Multivector(self.n, out)


def wedge(a: FormFiber, b: FormFiber) -> FormFiber:
    return a.wedge(b)


# ---------------------------------------------------------------- T + T*


class TangentCotangentFiber:
    """``X + xi`` with components in the real coordinate frame."""

    __slots__ = ("n", "vec", "cov")

    def __init__(self, n: int, vec: Sequence[Scalar] | None = None, cov: Sequence[Scalar] | None = None):
        self.n = n
        self.vec = tuple(vec) if vec is not None else (ZERO,) * (2 * n)
        self.cov = tuple(cov) if cov is not None else (ZERO,) * (2 * n)
        if len(self.vec) != 2 * n or len(self.cov) != 2 * n:
            raise DimensionMismatch("component length must be 2n")

    @classmethod
    def from_coords(cls, n: int, x: Sequence[Scalar]) -> "TangentCotangentFiber":
        return cls(n, x[:2 * n], x[2 * n:])

    @classmethod
    def basis(cls, n: int, i: int) -> "TangentCotangentFiber":
        x = [ZERO] * (4 * n)
        x[i] = ONE
        return cls.from_coords(n, x)

    def coords(self) -> list[Scalar]:
        return list(self.vec) + list(self.cov)

    def __eq__(self, other) -> bool:
        return isinstance(other, TangentCotangentFiber) and self.coords() == other.coords()

    def __add__(self, other):
        _check(self, other)
        return TangentCotangentFiber.from_coords(self.n, [a + b for a, b in zip(self.coords(), other.coords())])

    def scale(self, s: Scalar):
        return TangentCotangentFiber.from_coords(self.n, [s * a for a in self.coords()])

    def conj(self):
        return TangentCotangentFiber.from_coords(self.n, [conj(a) for a in self.coords()])

    def to_clifford(self) -> "CliffordFiber":
        out = CliffordFiber.zero(self.n)
        for j in range(2 * self.n):
            if self.vec[j]:
                out = out + iota(self.n, j).scale(self.vec[j])
            if self.cov[j]:
                out = out + ext(self.n, j).scale(self.cov[j])
        return out

    def __repr__(self) -> str:
        return f"TangentCotangentFiber(vec={list(map(str, self.vec))}, cov={list(map(str, self.cov))})"


def pairing(u: TangentCotangentFiber, v: TangentCotangentFiber) -> Scalar:
    _check(u, v)
    s = sum((a * b for a, b in zip(u.cov, v.vec)), ZERO) + sum((a * b for a, b in zip(v.cov, u.vec)), ZERO)
    return s * HALF


def pairing_coords(n: int, x: Sequence[Scalar], y: Sequence[Scalar]) -> Scalar:
    m = 2 * n
    return HALF * sum((x[m + j] * y[j] + y[m + j] * x[j] for j in range(m)), ZERO)


def spin_action(u: TangentCotangentFiber, phi: FormFiber) -> FormFiber:
    _check(u, phi)
    out: dict[int, Scalar] = {}
    for m, v in phi.c.items():
        for j in range(2 * u.n):
            x = u.vec[j]
            if x and m >> j & 1:
                w = x * v
                _add_into(out, m ^ (1 << j), -w if below(m, j) & 1 else w)
            y = u.cov[j]
            if y and not m >> j & 1:
                w = y * v
                _add_into(out, m | (1 << j), -w if below(m, j) & 1 else w)
    return FormFiber(u.n, out)


# ---------------------------------------------------------------- Clifford algebra


class CliffordFiber:
    """Clifford element as a sparse endomorphism of forms (column storage)."""

    __slots__ = ("n", "cols")
    kind = "clifford"

    def __init__(self, n: int, cols: dict[int, dict[int, Scalar]] | None = None):
        self.n = n
        if cols:
            cols = {c: _clean(col) for c, col in cols.items()}
            cols = {c: col for c, col in cols.items() if col}
        self.cols = cols or {}

    @classmethod
    def zero(cls, n: int) -> "CliffordFiber":
        return cls(n, {})

    @classmethod
    def identity(cls, n: int) -> "CliffordFiber":
        return cls.scalar(n, ONE)

    @classmethod
    def scalar(cls, n: int, s: Scalar) -> "CliffordFiber":
        if not s:
            return cls(n, {})
        return cls(n, {m: {m: s} for m in range(1 << (2 * n))})

    def zero_like(self) -> "CliffordFiber":
        return CliffordFiber(self.n, {})

    def __bool__(self) -> bool:
        return bool(self.cols)

    def __eq__(self, other) -> bool:
        return isinstance(other, CliffordFiber) and self.n == other.n and self.cols == other.cols

    def __add__(self, other: "CliffordFiber") -> "CliffordFiber":
        _check(self, other)
        out = {c: dict(col) for c, col in self.cols.items()}
        for c, col in other.cols.items():
            tgt = out.setdefault(c, {})
            for r, v in col.items():
                _add_into(tgt, r, v)
        return CliffordFiber(self.n, out)

    def __neg__(self) -> "CliffordFiber":
        return CliffordFiber(self.n, {c: {r: -v for r, v in col.items()} for c, col in self.cols.items()})

    def __sub__(self, other: "CliffordFiber") -> "CliffordFiber":
        return self + (-other)

    def scale(self, s: Scalar) -> "CliffordFiber":
        if not s:
            return self.zero_like()
        return CliffordFiber(self.n, {c: {r: s * v for r, v in col.items()} for c, col in self.cols.items()})

    def __mul__(self, other: "CliffordFiber") -> "CliffordFiber":
        """Clifford product ``self * other`` (composition, ``other`` acts first)."""
        _check(self, other)
        A = self.cols
        out = {}
        for c, col in other.cols.items():
            acc: dict[int, Scalar] = {}
            for r, v in col.items():
                acol = A.get(r)
                if acol is None:
                    continue
                for r2, w in acol.items():
                    _add_into(acc, r2, v * w)
            out[c] = acc
        return CliffordFiber(self.n, out)

    def apply(self, phi: FormFiber) -> FormFiber:
        _check(self, phi)
        out: dict[int, Scalar] = {}
        for c, v in phi.c.items():
            col = self.cols.get(c)
            if col is None:
                continue
            for r, w in col.items():
                _add_into(out, r, v * w)
        return FormFiber(self.n, out)

    def conj(self) -> "CliffordFiber":
        return CliffordFiber(self.n, {c: {r: conj(v) for r, v in col.items()} for c, col in self.cols.items()})

    def commutator(self, other: "CliffordFiber") -> "CliffordFiber":
        return self * other - other * self

    def anticommutator(self, other: "CliffordFiber") -> "CliffordFiber":
        return self * other + other * self

    def norm2(self):
        return sum((abs2(v) for col in self.cols.values() for v in col.values()), 0)

    def dense(self) -> list[list[Scalar]]:
        d = 1 << (2 * self.n)
        M = [[ZERO] * d for _ in range(d)]
        for c, col in self.cols.items():
            for r, v in col.items():
                M[r][c] = v
        return M

    @classmethod
    def from_dense(cls, n: int, M: Sequence[Sequence[Scalar]]) -> "CliffordFiber":
        d = len(M)
        return cls(n, {c: {r: M[r][c] for r in range(d) if M[r][c]} for c in range(d)})

    def inverse(self) -> "CliffordFiber":
        try:
            inv = inverse(self.dense())
        except Exception as exc:  # sympy raises DMNonInvertibleMatrixError
            raise ValueError("Clifford element is not invertible") from exc
        return CliffordFiber.from_dense(self.n, inv)

    def trace(self) -> Scalar:
        return sum((col.get(c, ZERO) for c, col in self.cols.items()), ZERO)

    def degree1_part(self) -> TangentCotangentFiber:
        """Read off ``X + xi`` assuming this element has pure degree 1."""
        n = self.n
        one_img = self.cols.get(0, {})
        cov = [one_img.get(1 << j, ZERO) for j in range(2 * n)]
        vec = [self.cols.get(1 << j, {}).get(0, ZERO) for j in range(2 * n)]
        return TangentCotangentFiber(n, vec, cov)

    def is_degree1(self) -> bool:
        return self.degree1_part().to_clifford() == self

    def __repr__(self) -> str:
        nnz = sum(len(c) for c in self.cols.values())
        return f"CliffordFiber(n={self.n}, nnz={nnz})"


def clifford_mul(a: CliffordFiber, b: CliffordFiber) -> CliffordFiber:
    return a * b


@lru_cache(maxsize=None)
def ext(n: int, j: int) -> CliffordFiber:
    """Wedge by ``dx^{j+1}`` (0-based ``j``)."""
    cols = {}
    for m in range(1 << (2 * n)):
        if not m >> j & 1:
            cols[m] = {m | (1 << j): -ONE if below(m, j) & 1 else ONE}
    return CliffordFiber(n, cols)


@lru_cache(maxsize=None)
def iota(n: int, j: int) -> CliffordFiber:
    """Contraction with ``d/dx^{j+1}`` (0-based ``j``)."""
    cols = {}
    for m in range(1 << (2 * n)):
        if m >> j & 1:
            cols[m] = {m ^ (1 << j): -ONE if below(m, j) & 1 else ONE}
    return CliffordFiber(n, cols)


def wedge_operator(phi: FormFiber) -> CliffordFiber:
    """Left wedge multiplication by ``phi`` as an endomorphism of forms."""
    n = phi.n
    cols: dict[int, dict[int, Scalar]] = {}
    for m in range(1 << (2 * n)):
        col: dict[int, Scalar] = {}
        for a, v in phi.c.items():
            if a & m:
                continue
            _add_into(col, a | m, v if wedge_sign(a, m) > 0 else -v)
        cols[m] = col
    return CliffordFiber(n, cols)


def form_exp(phi: FormFiber) -> FormFiber:
    """``sum phi^k / k!`` for an even form without constant term."""
    if 0 in phi.c:
        raise DegreeError("form_exp needs a form without constant term")
    out = FormFiber.one(phi.n)
    power = FormFiber.one(phi.n)
    k = 0
    while True:
        k += 1
        power = power.wedge(phi)
        if not power:
            return out
        out = out + power.scale(Q(1, factorial(k)))


def exp_two_form(omega: FormFiber) -> CliffordFiber:
    """The operator ``e^{omega}`` (wedge by the exponential form)."""
    if omega.degrees() - {2}:
        raise DegreeError("exp_two_form expects a homogeneous 2-form")
    return wedge_operator(form_exp(omega))


def adjoint_action(g: CliffordFiber, E: CliffordFiber, g_inv: CliffordFiber | None = None) -> CliffordFiber:
    """``g E g^{-1}``."""
    _check(g, E)
    if g_inv is None:
        g_inv = g.inverse()
    return g * E * g_inv


# ---------------------------------------------------------------- Lbar frame


@lru_cache(maxsize=None)
def lbar_generator(n: int, j: int) -> CliffordFiber:
    """Generator ``j`` of the Lbar frame: theta_{j+1} for j < n, else zeta_{j-n+1}."""
    if j < n:
        return (iota(n, 2 * j) - iota(n, 2 * j + 1).scale(I)).scale(HALF)
    b = j - n
    return ext(n, 2 * b) - ext(n, 2 * b + 1).scale(I)


@lru_cache(maxsize=None)
def lbar_monomial(n: int, mask: int) -> CliffordFiber:
    out = CliffordFiber.identity(n)
    for j in bits(mask):
        out = out * lbar_generator(n, j)
    return out


def lbar_vectors(n: int) -> list[TangentCotangentFiber]:
    return [lbar_generator(n, j).degree1_part() for j in range(2 * n)]


# ---------------------------------------------------------------- filtration


@lru_cache(maxsize=None)
def _orth_generator(n: int, j: int) -> tuple[CliffordFiber, Scalar]:
    """Orthogonal generators ``d_j +- dx^j`` and their squares."""
    m = 2 * n
    if j < m:
        return iota(n, j) + ext(n, j), ONE
    k = j - m
    return iota(n, k) - ext(n, k), -ONE


@lru_cache(maxsize=None)
def _orth_monomial(n: int, subset: tuple[int, ...]) -> tuple[CliffordFiber, CliffordFiber]:
    """Monomial in orthogonal generators and its inverse."""
    w = CliffordFiber.identity(n)
    winv = CliffordFiber.identity(n)
    for j in subset:
        g, sq = _orth_generator(n, j)
        w = w * g
        winv = g.scale(sq) * winv
    return w, winv


def _trace_product(A: CliffordFiber, B: CliffordFiber) -> Scalar:
    t = ZERO
    for j, col in B.cols.items():
        for i, v in col.items():
            a = A.cols.get(i)
            if a is not None:
                w = a.get(j)
                if w is not None:
                    t += v * w
    return t


def clifford_components(c: CliffordFiber, max_degree: int | None = None) -> dict[tuple[int, ...], Scalar]:
    """Coefficients of ``c`` on monomials of the orthogonal generators."""
    n = c.n
    top = 4 * n if max_degree is None else max_degree
    dim = Q(1, 1 << (2 * n))
    out = {}
    for d in range(top + 1):
        for subset in combinations(range(4 * n), d):
            _, winv = _orth_monomial(n, subset)
            v = _trace_product(winv, c) * dim
            if v:
                out[subset] = v
    return out


def project_CL(c: CliffordFiber, max_degree: int) -> CliffordFiber:
    out = CliffordFiber.zero(c.n)
    for subset, v in clifford_components(c, max_degree).items():
        out = out + _orth_monomial(c.n, subset)[0].scale(v)
    return out


def project_CL2(c: CliffordFiber) -> CliffordFiber:
    """Component of ``c`` spanned by products of at most two generators."""
    return project_CL(c, 2)


def filtration_degree(c: CliffordFiber) -> int:
    comps = clifford_components(c)
    return max((len(s) for s in comps), default=0)


# ---------------------------------------------------------------- so(T + T*)


def ad_matrix(c: CliffordFiber) -> list[list[Scalar]]:
    """Matrix of ``u -> [c, u]`` on T + T* (basis d_1..d_2n, dx^1..dx^2n).

    Raises ``DegreeError`` if some bracket leaves degree 1.
    """
    n = c.n
    cols = []
    for i in range(4 * n):
        u = iota(n, i) if i < 2 * n else ext(n, i - 2 * n)
        br = c * u - u * c
        v = br.degree1_part()
        if v.to_clifford() != br:
            raise DegreeError("element does not act on T + T*")
        cols.append(v.coords())
    return [[cols[j][i] for j in range(4 * n)] for i in range(4 * n)]


def endo_to_ttstar(A: Sequence[Sequence[Scalar]]) -> CliffordFiber:
    """Element ``gamma`` of T.T* whose bracket action on T is ``A``.

    Uses the skew-symmetrized products ``(iota_i dx^j - dx^j iota_i) / 2``,
    whose bracket sends ``d_j`` to ``d_i`` and preserves T*.
    """
    m = len(A)
    n = m // 2
    out = CliffordFiber.zero(n)
    for i in range(m):
        for j in range(m):
            if A[i][j]:
                t = (iota(n, i) * ext(n, j) - ext(n, j) * iota(n, i)).scale(HALF)
                out = out + t.scale(A[i][j])
    return out


def restrict_to_T(M: Sequence[Sequence[Scalar]], n: int) -> list[list[Scalar]]:
    return [list(row[:2 * n]) for row in M[:2 * n]]


# ---------------------------------------------------------------- complex structures


def standard_J(n: int) -> list[list[Scalar]]:
    """Matrix of J on T, ``J[i][j]`` = component i of ``J d_j``."""
    J = [[ZERO] * (2 * n) for _ in range(2 * n)]
    for a in range(n):
        J[2 * a + 1][2 * a] = ONE
        J[2 * a][2 * a + 1] = -ONE
    return J


def transpose(M: Sequence[Sequence[Scalar]]) -> list[list[Scalar]]:
    return [list(r) for r in zip(*M)]


def block_diag(A, B) -> list[list[Scalar]]:
    a, b = len(A), len(B)
    out = [[ZERO] * (a + b) for _ in range(a + b)]
    for i in range(a):
        out[i][:a] = A[i]
    for i in range(b):
        out[a + i][a:] = B[i]
    return out


def gc_matrix_of_complex(J: Sequence[Sequence[Scalar]]) -> list[list[Scalar]]:
    """``diag(-J, J*)``; its +i eigenbundle is T^{0,1} + T*^{1,0}."""
    return block_diag([[-x for x in row] for row in J], transpose(J))


class NotPure(ValueError):
    pass


class Degenerate(ValueError):
    pass


class GCFiberStructure:
    """Generalized complex structure at a point, from its +i eigenbundle L."""

    __slots__ = ("n", "J_matrix", "L_projector", "Lbar_projector", "L_basis")

    def __init__(self, n: int, L_basis: Sequence[Sequence[Scalar]]):
        self.n = n
        d = 4 * n
        if len(L_basis) != 2 * n:
            raise NotPure(f"eigenbundle has rank {len(L_basis)}, expected {2 * n}")
        Lbar = [[conj(x) for x in v] for v in L_basis]
        B = transpose(list(L_basis) + Lbar)
        if rank(B, d) < d:
            raise Degenerate("L and its conjugate intersect")
        Binv = inverse(B)
        PL_diag = [[ONE if (i == j and i < 2 * n) else ZERO for j in range(d)] for i in range(d)]
        PL = matmul(matmul(B, PL_diag), Binv)
        self.L_basis = [list(v) for v in L_basis]
        self.L_projector = PL
        self.Lbar_projector = [[conj(x) for x in row] for row in PL]
        self.J_matrix = [[I * self.L_projector[i][j] - I * self.Lbar_projector[i][j] for j in range(d)]
                         for i in range(d)]

    @classmethod
    def from_spinor(cls, phi: FormFiber) -> "GCFiberStructure":
        return cls(phi.n, annihilator(phi))

    @classmethod
    def from_complex(cls, n: int) -> "GCFiberStructure":
        return cls.from_spinor(holomorphic_volume(n))

    def is_orthogonal(self) -> bool:
        n, d = self.n, 4 * self.n
        J = self.J_matrix
        for i in range(d):
            for j in range(i, d):
                ei = [J[r][i] for r in range(d)]
                ej = [J[r][j] for r in range(d)]
                bi = [ONE if r == i else ZERO for r in range(d)]
                bj = [ONE if r == j else ZERO for r in range(d)]
                if pairing_coords(n, ei, ej) != pairing_coords(n, bi, bj):
                    return False
        return True


def spin_matrix(n: int, phi: FormFiber) -> list[list[Scalar]]:
    """Matrix of ``u -> u . phi`` from T + T* coordinates to form monomials."""
    d = 1 << (2 * n)
    cols = []
    for i in range(4 * n):
        img = spin_action(TangentCotangentFiber.basis(n, i), phi)
        cols.append([img.c.get(m, ZERO) for m in range(d)])
    return [[cols[j][r] for j in range(4 * n)] for r in range(d)]


def annihilator(phi: FormFiber) -> list[list[Scalar]]:
    """Basis of ``{u : u . phi = 0}`` in T + T* coordinates."""
    n = phi.n
    return nullspace(spin_matrix(n, phi), 4 * n)


@lru_cache(maxsize=None)
def _holomorphic_volume(n: int) -> FormFiber:
    out = FormFiber.one(n)
    for a in range(n):
        dz = FormFiber(n, {1 << (2 * a): ONE, 1 << (2 * a + 1): I})
        out = out.wedge(dz)
    return out


def holomorphic_volume(n: int) -> FormFiber:
    """``dz_1 ^ ... ^ dz_n``."""
    return _holomorphic_volume(n)


def standard_omega(n: int) -> FormFiber:
    return FormFiber(n, {(1 << (2 * a)) | (1 << (2 * a + 1)): ONE for a in range(n)})


def two_form_matrix(omega: FormFiber) -> list[list[Scalar]]:
    """Antisymmetric matrix ``w[i][j] = omega(d_i, d_j)``."""
    m = 2 * omega.n
    W = [[ZERO] * m for _ in range(m)]
    for mask, v in omega.c.items():
        if popcount(mask) != 2:
            raise DegreeError("not a 2-form")
        i, j = list(bits(mask))
        W[i][j] = v
        W[j][i] = -v
    return W


def two_form_from_matrix(n: int, W: Sequence[Sequence[Scalar]]) -> FormFiber:
    m = 2 * n
    return FormFiber(n, {(1 << i) | (1 << j): W[i][j] for i in range(m) for j in range(i + 1, m)})


def mat_identity(n: int) -> list[list[Scalar]]:
    return identity(n)


class Mat:
    """Small dense matrix used as a fiber (endomorphisms of T or T + T*)."""

    __slots__ = ("rows",)
    kind = "matrix"

    def __init__(self, rows: Sequence[Sequence[Scalar]]):
        self.rows = [list(r) for r in rows]

    @property
    def n(self) -> int:
        return len(self.rows)

    @classmethod
    def zeros(cls, d: int) -> "Mat":
        return cls([[ZERO] * d for _ in range(d)])

    @classmethod
    def eye(cls, d: int) -> "Mat":
        return cls(identity(d))

    def zero_like(self) -> "Mat":
        return Mat.zeros(len(self.rows))

    def __bool__(self) -> bool:
        return any(x for r in self.rows for x in r)

    def __eq__(self, other) -> bool:
        return isinstance(other, Mat) and self.rows == other.rows

    def __add__(self, other: "Mat") -> "Mat":
        return Mat([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "Mat") -> "Mat":
        return Mat([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self) -> "Mat":
        return Mat([[-a for a in r] for r in self.rows])

    def scale(self, s: Scalar) -> "Mat":
        return Mat([[s * a for a in r] for r in self.rows])

    def __mul__(self, other: "Mat") -> "Mat":
        return Mat(matmul(self.rows, other.rows))

    def conj(self) -> "Mat":
        return Mat([[conj(a) for a in r] for r in self.rows])

    def T(self) -> "Mat":
        return Mat(transpose(self.rows))

    def norm2(self):
        return sum((abs2(a) for r in self.rows for a in r), 0)

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "Mat":
        return Mat([row[c0:c1] for row in self.rows[r0:r1]])

    def __repr__(self) -> str:
        return "Mat(" + str([[str(x) for x in r] for r in self.rows]) + ")"
