"""Gaussian-rational scalars and small exact linear algebra.

Scalars are sympy ``GaussianRational`` values (``QQ_I`` elements).  They are
hashable, immutable and exact.  One trap: ``QQ_I(0, 0) == 0`` is False, so
zero tests in this package use truthiness (``not z``).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

Scalar = type(QQ_I(0, 0))

ZERO: Scalar = QQ_I(0, 0)
ONE: Scalar = QQ_I(1, 0)
I: Scalar = QQ_I(0, 1)
HALF: Scalar = QQ_I(QQ(1, 2), 0)


def _rat(v) -> object:
    if isinstance(v, Fraction):
        return QQ(v.numerator, v.denominator)
    if isinstance(v, str):
        f = Fraction(v)
        return QQ(f.numerator, f.denominator)
    return QQ(v)


def S(re=0, im=0) -> Scalar:
    """Build a scalar from ints, Fractions, strings like ``"3/4"`` or rationals."""
    if isinstance(re, Scalar) and not im:
        return re
    return QQ_I(_rat(re), _rat(im))


def Q(num: int, den: int = 1) -> Scalar:
    return QQ_I(QQ(num, den), 0)


def conj(z: Scalar) -> Scalar:
    return QQ_I(z.x, -z.y)


def abs2(z: Scalar) -> Fraction:
    r = z.x * z.x + z.y * z.y
    return Fraction(int(r.numerator), int(r.denominator))


def re_part(z: Scalar) -> Fraction:
    return Fraction(int(z.x.numerator), int(z.x.denominator))


def im_part(z: Scalar) -> Fraction:
    return Fraction(int(z.y.numerator), int(z.y.denominator))


def to_pairs(z: Scalar) -> tuple[int, int, int, int]:
    return (int(z.x.numerator), int(z.x.denominator),
            int(z.y.numerator), int(z.y.denominator))


def from_pairs(re_num: int, re_den: int, im_num: int, im_den: int) -> Scalar:
    return QQ_I(QQ(re_num, re_den), QQ(im_num, im_den))


def to_fraction(z: Scalar) -> Fraction:
    """Real scalar as a Fraction; raises if the imaginary part is nonzero."""
    if z.y:
        raise ValueError(f"expected a real scalar, got {z}")
    return re_part(z)


# ---------------------------------------------------------------- linear algebra


def _dm(rows: Sequence[Sequence[Scalar]], ncols: int) -> DomainMatrix:
    return DomainMatrix([list(r) for r in rows], (len(rows), ncols), QQ_I)


def solve(A: Sequence[Sequence[Scalar]], b: Sequence[Scalar], ncols: int) -> list[Scalar] | None:
    """One exact solution of ``A x = b`` (free variables set to zero), or None."""
    m = len(A)
    if m == 0:
        return [ZERO] * ncols
    aug = _dm([list(A[i]) + [b[i]] for i in range(m)], ncols + 1)
    R, pivots = aug.rref()
    if ncols in pivots:
        return None
    rows = R.to_list()
    x = [ZERO] * ncols
    for r, p in enumerate(pivots):
        x[p] = rows[r][ncols]
    return x


def solve_min_norm(A: Sequence[Sequence[Scalar]], b: Sequence[Scalar], ncols: int) -> list[Scalar] | None:
    """Minimum-norm exact solution ``x = A^H y`` with ``A A^H y = b``, or None."""
    m = len(A)
    AH = [[conj(A[i][j]) for i in range(m)] for j in range(ncols)]
    AAH = [[sum((A[i][k] * AH[k][j] for k in range(ncols)), ZERO) for j in range(m)] for i in range(m)]
    y = solve(AAH, b, m)
    if y is None:
        return None
    x = [sum((AH[j][i] * y[i] for i in range(m)), ZERO) for j in range(ncols)]
    # A A^H y = b guarantees A x = b
    return x


def nullspace(A: Sequence[Sequence[Scalar]], ncols: int) -> list[list[Scalar]]:
    """Basis of the right kernel of ``A``."""
    if not A:
        return [[ONE if i == j else ZERO for i in range(ncols)] for j in range(ncols)]
    R, pivots = _dm(A, ncols).rref()
    rows = R.to_list()
    basis = []
    for f in range(ncols):
        if f in pivots:
            continue
        v = [ZERO] * ncols
        v[f] = ONE
        for r, p in enumerate(pivots):
            v[p] = -rows[r][f]
        basis.append(v)
    return basis


def rank(A: Sequence[Sequence[Scalar]], ncols: int) -> int:
    if not A:
        return 0
    return len(_dm(A, ncols).rref()[1])


def inverse(A: Sequence[Sequence[Scalar]]) -> list[list[Scalar]]:
    n = len(A)
    return _dm(A, n).inv().to_list()


def matmul(A: Sequence[Sequence[Scalar]], B: Sequence[Sequence[Scalar]]) -> list[list[Scalar]]:
    inner = len(B)
    cols = len(B[0]) if B else 0
    return [[sum((A[i][k] * B[k][j] for k in range(inner) if A[i][k] and B[k][j]), ZERO)
             for j in range(cols)] for i in range(len(A))]


def identity(n: int) -> list[list[Scalar]]:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def leading_minors_positive(A: Sequence[Sequence[Scalar]]) -> bool:
    """Sylvester test for a real symmetric matrix with rational entries."""
    n = len(A)
    for k in range(1, n + 1):
        sub = _dm([row[:k] for row in A[:k]], k)
        d = sub.det()
        if d.y or d.x <= 0:
            return False
    return True


def dot(u: Iterable[Scalar], v: Iterable[Scalar]) -> Scalar:
    return sum((a * b for a, b in zip(u, v)), ZERO)
