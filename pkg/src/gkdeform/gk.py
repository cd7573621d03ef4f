"""Generalized Kaehler co-deformation on the flat torus.

* U-grading of forms by the complex structure and the integrability test.
* Realification: a real Clifford family ``a(t)`` with the same deformed
  eigenbundle as a family ``eps(t)`` of Lbar bivectors, and the inverse map.
* The quad bundle ``L^-.Lbar^+ + Lbar^-.L^+`` and the order-by-order solver for
  the correction ``b(t)`` keeping ``e^{a} e^{b} psi_0`` closed.

One-variable series are ``TruncatedSeries`` with ``m = 1`` and plain Taylor
coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

from .algebra import (CliffordFiber, Degenerate, FormFiber, GCFiberStructure, Mat, Multivector, NotPure,
                      TangentCotangentFiber, ad_matrix, annihilator, form_exp, gc_matrix_of_complex,
                      holomorphic_volume, popcount, standard_J)
from .brackets import form_to_multivector
from .fields import (FourierSection, TorusKahlerData, apply_clifford, const, exterior_d,
                     reality_check, to_clifford)
from .mc import TruncatedSeries
from .scalar import I, ONE, ZERO, Q, Scalar, conj, nullspace, solve, solve_min_norm


class NoSolution(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------- U-grading


def u_project(s: FourierSection, p: int) -> FourierSection:
    """Component of a form section in ``U^{-n+p}`` (``p`` Lbar factors on K)."""
    omega0 = holomorphic_volume(s.n)

    def f(v):
        mv = form_to_multivector(v).part(p)
        return mv.to_clifford().apply(omega0) if mv else v.zero_like()

    return s.map(f)


def u_degrees(s: FourierSection) -> set[int]:
    out = set()
    for v in s.terms.values():
        out |= form_to_multivector(v).degrees()
    return out


class UGrading:
    """Projectors onto ``U^{-n+p} = wedge^p Lbar . K`` for the standard complex structure."""

    def __init__(self, n: int):
        self.n = n

    def project(self, s: FourierSection, p: int) -> FourierSection:
        return u_project(s, p)

    def degrees(self, s: FourierSection) -> set[int]:
        return u_degrees(s)


# ---------------------------------------------------------------- series helpers


def series_unit(n: int, kind: str, N: int, dim: int | None = None) -> TruncatedSeries:
    if kind == "clifford":
        unit = const(CliffordFiber.identity(n))
    elif kind == "matrix":
        unit = const(Mat.eye(dim), n)
    elif kind == "form":
        unit = const(FormFiber.one(n))
    else:
        raise ValueError(kind)
    return TruncatedSeries(1, N, n, kind, {(0,): unit})


def exp_series(a: TruncatedSeries, dim: int | None = None) -> TruncatedSeries:
    """``sum a^m / m!`` for a series without constant term."""
    if a.coeff((0,)):
        raise ValueError("exp_series needs a series without constant term")
    out = series_unit(a.n, a.kind, a.N, dim)
    term = out
    for m in range(1, a.N + 1):
        term = (term * a).scale(Q(1, m))
        if not term.coeffs:
            break
        out = out + term
    return out


def log_series(P: TruncatedSeries, dim: int | None = None) -> TruncatedSeries:
    """``log P`` for ``P = 1 + X`` with X of positive order."""
    X = P - series_unit(P.n, P.kind, P.N, dim)
    if X.coeff((0,)):
        raise ValueError("log_series needs constant term 1")
    out = TruncatedSeries(1, P.N, P.n, P.kind)
    term = series_unit(P.n, P.kind, P.N, dim)
    for m in range(1, P.N + 1):
        term = term * X
        if not term.coeffs:
            break
        out = out + term.scale(Q((-1) ** (m + 1), m))
    return out


def apply_series(P: TruncatedSeries, F: TruncatedSeries) -> TruncatedSeries:
    """Clifford series acting on a form series."""
    N = min(P.N, F.N)
    out: dict = {}
    for a, s in P.coeffs.items():
        for b, t in F.coeffs.items():
            if a[0] + b[0] > N:
                continue
            key = (a[0] + b[0],)
            v = apply_clifford(s, t)
            out[key] = out[key] + v if key in out else v
    return TruncatedSeries(1, N, P.n, "form", out)


def const_series(s: FourierSection, N: int) -> TruncatedSeries:
    return TruncatedSeries(1, N, s.n, s.kind, {(0,): s})


def ad_section(s: FourierSection) -> FourierSection:
    return s.map(lambda v: Mat(ad_matrix(v)), "matrix")


def ad_series(a: TruncatedSeries) -> TruncatedSeries:
    return a.map(ad_section, "matrix")


def Ad_series(a: TruncatedSeries) -> tuple[TruncatedSeries, TruncatedSeries]:
    """``exp(ad_a)`` and its inverse ``exp(-ad_a)`` as matrix series on T + T*."""
    d = 4 * a.n
    A = ad_series(a)
    return exp_series(A, d), exp_series(-A, d)


def cl_series(n: int, N: int, coeffs: dict[int, FourierSection] | None = None) -> TruncatedSeries:
    return TruncatedSeries(1, N, n, "clifford", {(k,): v for k, v in (coeffs or {}).items()})


def truncate_below(s: TruncatedSeries, k: int) -> TruncatedSeries:
    """Keep orders ``< k``, with truncation order ``k``."""
    return TruncatedSeries(s.m, k, s.n, s.kind, {a: v for a, v in s.coeffs.items() if sum(a) < k})


# ---------------------------------------------------------------- integrability


def twisted_d_on_K(P: TruncatedSeries, Pinv: TruncatedSeries) -> TruncatedSeries:
    """``P^{-1} d (P . Omega)`` as a form series, ``Omega = dz_1 ^ ... ^ dz_n``."""
    n = P.n
    F = apply_series(P, const_series(const(holomorphic_volume(n)), P.N))
    dF = F.map(exterior_d)
    return apply_series(Pinv, dF)


def integrability_defect(a_series: TruncatedSeries, k: int) -> FourierSection:
    """``pi_{U^{-n+3}} (e^{-a} d e^{a})_{[k]} Omega``; zero iff order-k integrability holds."""
    for s in a_series.coeffs.values():
        if not reality_check(s):
            raise ValueError("a(t) must be real")
    a = a_series.truncate(k)
    T = twisted_d_on_K(exp_series(a), exp_series(-a))
    return u_project(T.coeff((k,)), 3)


def cl1_defect(P: TruncatedSeries, Pinv: TruncatedSeries, k: int) -> FourierSection:
    """Part of ``(P^{-1} d P)_{[k]} Omega`` outside ``U^{-n+1}``."""
    c = twisted_d_on_K(P, Pinv).coeff((k,))
    return c - u_project(c, 1)


# ---------------------------------------------------------------- realification


@lru_cache(maxsize=None)
def _complex_gc(n: int) -> GCFiberStructure:
    return GCFiberStructure.from_complex(n)


@lru_cache(maxsize=None)
def _lbar2(n: int) -> tuple[list[int], list[list[list[Scalar]]]]:
    """Bivector monomials of Lbar and ``ad(beta_j)`` applied to the L basis."""
    L = _complex_gc(n).L_basis
    masks = [m for m in range(1 << (2 * n)) if popcount(m) == 2]
    mats = []
    for m in masks:
        ad = ad_matrix(Multivector(n, {m: ONE}).to_clifford())
        mats.append([[sum((ad[i][r] * L[c][r] for r in range(4 * n)), ZERO) for c in range(2 * n)]
                     for i in range(4 * n)])
    return masks, mats


def _L_columns(n: int) -> Mat:
    L = _complex_gc(n).L_basis
    return Mat([[L[c][i] for c in range(2 * n)] for i in range(4 * n)])


def eigenbundle_defect(a_series: TruncatedSeries, eps_series: TruncatedSeries) -> TruncatedSeries:
    """``(Ad_{e^a} J_0 - i) Ad_{e^eps} L`` as a series of 4n x 2n matrices.

    Vanishes to order N iff the +i eigenbundle of ``Ad_{e^a} J_0`` equals
    ``Ad_{e^eps} L`` to that order.
    """
    n = a_series.n
    N = min(a_series.N, eps_series.N)
    J0 = const_series(const(Mat(gc_matrix_of_complex(standard_J(n))), n), N)
    A, Ainv = Ad_series(a_series.truncate(N))
    E, _ = Ad_series(to_clifford_series(eps_series).truncate(N))
    V = E * const_series(const(_L_columns(n), n), N)
    Ja = A * J0 * Ainv
    return Ja * V - V.scale(I)


def to_clifford_series(s: TruncatedSeries) -> TruncatedSeries:
    if s.kind == "clifford":
        return s
    return s.map(to_clifford, "clifford")


def _solve_lbar2(n: int, target: Mat, factor: Scalar) -> list[Scalar] | None:
    """Coefficients ``x`` with ``factor * sum_j x_j ad(beta_j) L = target``."""
    masks, mats = _lbar2(n)
    A, b = [], []
    for i in range(4 * n):
        for c in range(2 * n):
            A.append([factor * M[i][c] for M in mats])
            b.append(target.rows[i][c])
    return solve(A, b, len(masks))


def _solve_order(n: int, defect: FourierSection, factor: Scalar, what: str) -> FourierSection:
    masks, _ = _lbar2(n)
    out = {}
    for k, M in defect.terms.items():
        x = _solve_lbar2(n, -M, factor)
        if x is None:
            raise NoSolution(f"{what}: inconsistent linear system at frequency {k}", witness=M)
        out[k] = Multivector(n, {m: v for m, v in zip(masks, x) if v})
    return FourierSection(n, "multivector", out)


def realify(eps: TruncatedSeries, N: int | None = None) -> tuple[TruncatedSeries, TruncatedSeries]:
    """Real ``a(t)`` in ``Re(wedge^2 Lbar + wedge^2 L)`` with the same deformed eigenbundle as ``eps(t)``.

    Returns ``(a, x)`` where ``a_k = x_k + conj(x_k)`` and ``x_k`` is the Lbar part.
    """
    n = eps.n
    N = eps.N if N is None else N
    if eps.coeff((0,)):
        raise ValueError("eps must have zero constant term")
    eps = eps.truncate(N)
    a = cl_series(n, N)
    x_series = TruncatedSeries(1, N, n, "multivector")
    for k in range(1, N + 1):
        D = eigenbundle_defect(truncate_below(a, k).truncate(k), eps.truncate(k)).coeff((k,))
        x = _solve_order(n, D, 2 * I, "realify")
        if x:
            xc = to_clifford(x)
            a.coeffs[(k,)] = xc + xc.conj()
            x_series.coeffs[(k,)] = x
    return a, x_series


def complexify(a: TruncatedSeries, N: int | None = None) -> TruncatedSeries:
    """Inverse of ``realify``: the Lbar bivector family with the same eigenbundle as ``a(t)``."""
    n = a.n
    N = a.N if N is None else N
    eps = TruncatedSeries(1, N, n, "multivector")
    for k in range(1, N + 1):
        D = eigenbundle_defect(a.truncate(k), truncate_below(eps, k).truncate(k)).coeff((k,))
        x = _solve_order(n, D, -2 * I, "complexify")
        if x:
            eps.coeffs[(k,)] = x
    return eps


# ---------------------------------------------------------------- quad bundle


def _intersect(U: Sequence[Sequence[Scalar]], W: Sequence[Sequence[Scalar]]) -> list[list[Scalar]]:
    d = len(U[0])
    A = [[U[i][r] for i in range(len(U))] + [-W[j][r] for j in range(len(W))] for r in range(d)]
    out = []
    for v in nullspace(A, len(U) + len(W)):
        out.append([sum((v[i] * U[i][r] for i in range(len(U))), ZERO) for r in range(d)])
    return out


def _conjv(B):
    return [[conj(x) for x in v] for v in B]


class QuadBundle:
    """Simultaneous eigenbundles of the complex and symplectic structures."""

    def __init__(self, torus: TorusKahlerData):
        n = torus.n
        self.n = n
        LJ = GCFiberStructure.from_complex(n).L_basis
        self.psi_structure = GCFiberStructure.from_spinor(torus.psi0_fiber)
        Lpsi = self.psi_structure.L_basis
        self.L_plus = _intersect(LJ, Lpsi)
        self.L_minus = _intersect(LJ, _conjv(Lpsi))
        self.Lbar_plus = _conjv(self.L_plus)
        self.Lbar_minus = _conjv(self.L_minus)
        for B in (self.L_plus, self.L_minus):
            if len(B) != n:
                raise Degenerate("eigenbundle intersections have the wrong rank")
        self.products = [TangentCotangentFiber.from_coords(n, u).to_clifford()
                         * TangentCotangentFiber.from_coords(n, w).to_clifford()
                         for u in self.L_minus for w in self.Lbar_plus]
        self.psi0 = torus.psi0_fiber
        self._images = [q.apply(self.psi0) for q in self.products]

    def contains(self, c: CliffordFiber) -> bool:
        """Membership in ``L^-.Lbar^+ + Lbar^-.L^+`` by an exact linear solve."""
        span = self.products + [q.conj() for q in self.products]
        d = 1 << (2 * self.n)
        keys = [(r, cc) for cc in range(d) for r in range(d)]
        A = [[q.cols.get(cc, {}).get(r, ZERO) for q in span] for r, cc in keys]
        b = [c.cols.get(cc, {}).get(r, ZERO) for r, cc in keys]
        return solve(A, b, len(span)) is not None

    def projector_bases(self) -> dict[str, list[list[Scalar]]]:
        return {"L+": self.L_plus, "L-": self.L_minus, "Lbar+": self.Lbar_plus, "Lbar-": self.Lbar_minus}


def _freq_one_form(n: int, k) -> FormFiber:
    return FormFiber(n, {1 << j: Q(k[j]) for j in range(2 * n) if k[j]})


def spinor_series(a: TruncatedSeries, b: TruncatedSeries, psi0: FourierSection) -> TruncatedSeries:
    """``e^{a} e^{b} psi_0`` as a form series."""
    P = exp_series(a) * exp_series(b)
    return apply_series(P, const_series(psi0, P.N))


def solve_b(a: TruncatedSeries, b_prefix: TruncatedSeries, k: int, torus: TorusKahlerData,
            quad: QuadBundle | None = None) -> FourierSection:
    """Real quad-bundle ``b_k`` making ``(d e^{a} e^{b} psi_0)_{[k]}`` vanish."""
    n = torus.n
    quad = quad or QuadBundle(torus)
    a_k = a.truncate(k)
    b_k = truncate_below(b_prefix, k).truncate(k)
    R = spinor_series(a_k, b_k, torus.psi0).coeff((k,))
    forcing = exterior_d(R)
    d = 1 << (2 * n)
    X = {}
    for kappa, F in forcing.terms.items():
        if not any(kappa):
            raise NoSolution("closedness forcing has a constant part", witness=F)
        kf = _freq_one_form(n, kappa)
        cols = [kf.wedge(img).scale(I) for img in quad._images]
        A = [[c.c.get(r, ZERO) for c in cols] for r in range(d)]
        rhs = [-F.c.get(r, ZERO) for r in range(d)]
        x = solve_min_norm(A, rhs, len(cols))
        if x is None:
            raise NoSolution(f"no quad-bundle correction at frequency {kappa}", witness=F)
        val = CliffordFiber.zero(n)
        for xi, q in zip(x, quad.products):
            if xi:
                val = val + q.scale(xi)
        X[kappa] = val
    Xs = FourierSection(n, "clifford", X)
    return Xs + Xs.conj()


def closedness_defect(a: TruncatedSeries, b: TruncatedSeries, k: int, torus: TorusKahlerData) -> FourierSection:
    """``(d e^{a} e^{b} psi_0)_{[k]}``."""
    return exterior_d(spinor_series(a.truncate(k), b.truncate(k), torus.psi0).coeff((k,)))


# ---------------------------------------------------------------- spinors


def gc_from_spinor(psi) -> GCFiberStructure:
    """Generalized complex structure of a pure nondegenerate spinor (constant section or fiber)."""
    if isinstance(psi, FourierSection):
        if psi.kind != "form":
            raise ValueError("expected a form section")
        if any(any(k) for k in psi.terms):
            raise ValueError("gc_from_spinor expects a constant section; evaluate pointwise first")
        psi = psi.terms.get((0,) * (2 * psi.n), FormFiber.zero(psi.n))
    if not psi:
        raise NotPure("zero spinor")
    return GCFiberStructure.from_spinor(psi)


def mukai_pairing(phi: FormFiber, psi: FormFiber) -> Scalar:
    """Top-degree coefficient of ``sigma(phi) ^ psi`` (sigma reverses monomials)."""
    n = phi.n
    top = (1 << (2 * n)) - 1
    rev = FormFiber(n, {m: (-v if (popcount(m) * (popcount(m) - 1) // 2) & 1 else v) for m, v in phi.c.items()})
    return rev.wedge(psi).c.get(top, ZERO)


def evaluate_series(s: TruncatedSeries, t: Fraction) -> FourierSection:
    out = FourierSection.zero(s.n, s.kind)
    tq = Q(Fraction(t).numerator, Fraction(t).denominator)
    for (k,), c in s.coeffs.items():
        out = out + c.scale(tq ** k if k else ONE)
    return out


def evaluate_at_quarter_point(s: FourierSection, m: Sequence[int]) -> object:
    """Value at ``x = (pi/2) m`` (exact, since ``exp(i pi/2 <k,m>)`` is a power of i)."""
    out = None
    for k, v in s.terms.items():
        ph = I ** (sum(a * b for a, b in zip(k, m)) % 4)
        w = v.scale(ph)
        out = w if out is None else out + w
    return out


def _form_part(phi: FormFiber, deg: int) -> FormFiber:
    return FormFiber(phi.n, {m: v for m, v in phi.c.items() if popcount(m) == deg})


def _series_wedge(A: list[FormFiber], B: list[FormFiber], N: int) -> list[FormFiber]:
    n = A[0].n
    out = [FormFiber.zero(n) for _ in range(N + 1)]
    for i, x in enumerate(A):
        if not x:
            continue
        for j, y in enumerate(B[:N + 1 - i]):
            if y:
                out[i + j] = out[i + j] + x.wedge(y)
    return out


def spinor_normal_form(coeffs: Sequence[FormFiber], N: int) -> tuple[list[Scalar], list[FormFiber], bool]:
    """Write ``sum f_k t^k`` as ``c(t) exp(sigma(t))`` mod ``t^{N+1}``.

    ``c`` is the degree-0 part and ``sigma`` the degree-2 part of ``f / c``.
    The flag says whether the whole series agrees with ``c e^sigma`` through order N,
    i.e. whether the truncated spinor is the truncation of a pure spinor.
    """
    n = coeffs[0].n
    f = list(coeffs) + [FormFiber.zero(n)] * (N + 1 - len(coeffs))
    c = [f[k].c.get(0, ZERO) for k in range(N + 1)]
    if not c[0]:
        raise Degenerate("spinor has no scalar part at t = 0")
    cinv = [ONE / c[0]] + [ZERO] * N
    for k in range(1, N + 1):
        cinv[k] = -sum((c[j] * cinv[k - j] for j in range(1, k + 1)), ZERO) / c[0]
    sigma = [FormFiber.zero(n) for _ in range(N + 1)]
    for k in range(N + 1):
        for j in range(k + 1):
            if cinv[j]:
                sigma[k] = sigma[k] + _form_part(f[k - j], 2).scale(cinv[j])
    # c e^sigma, accumulated as sum_j sigma^j / j!
    one = [FormFiber.one(n)] + [FormFiber.zero(n)] * N
    expo, power = list(one), list(one)
    for j in range(1, n + 1):
        power = [x.scale(Q(1, j)) for x in _series_wedge(power, sigma, N)]
        expo = [x + y for x, y in zip(expo, power)]
    cs = [FormFiber.one(n).scale(x) for x in c]
    rebuilt = _series_wedge(cs, expo, N)
    return c, sigma, rebuilt == f[:N + 1]


def purity_check(psi_t: TruncatedSeries, ts: Sequence[Fraction] = (Fraction(0), Fraction(1, 8), Fraction(-1, 8))
                 ) -> list[dict]:
    """Purity and nondegeneracy of ``psi_t`` at rational ``t``.

    Pointwise on the quarter-period grid the truncated series is written as
    ``c(t) exp(sigma(t))`` (``truncation_pure`` records that this matches
    through order N). At each ``t`` the representative ``exp(sigma(t))`` is
    evaluated exactly; pure means its annihilator has rank 2n, nondegenerate
    means a nonzero Mukai pairing with the conjugate.
    """
    n, N = psi_t.n, psi_t.N
    support = set()
    for cf in psi_t.coeffs.values():
        support |= set(cf.terms)
    grid = [(0,) * (2 * n)] if support <= {(0,) * (2 * n)} else list(product(range(4), repeat=2 * n))
    forms = {}
    for m in grid:
        coeffs = []
        for k in range(N + 1):
            v = evaluate_at_quarter_point(psi_t.coeff((k,)), m) if psi_t.coeff((k,)) else None
            coeffs.append(v or FormFiber.zero(n))
        forms[m] = spinor_normal_form(coeffs, N)
    rows = []
    for t in ts:
        tq = Q(Fraction(t).numerator, Fraction(t).denominator)
        pure = nondeg = consistent = True
        for m, (c, sigma, ok) in forms.items():
            consistent = consistent and ok
            s = FormFiber.zero(n)
            for k, x in enumerate(sigma):
                s = s + x.scale(tq ** k if k else ONE)
            v = form_exp(s)
            if len(annihilator(v)) != 2 * n:
                pure = False
            if not mukai_pairing(v, v.conj()):
                nondeg = False
        rows.append({"t": Fraction(t), "pure": pure, "nondegenerate": nondeg, "truncation_pure": consistent})
    return rows
