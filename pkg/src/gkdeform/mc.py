"""Order-by-order Maurer-Cartan solver, Kuranishi family and majorant certificate.

Series store plain Taylor coefficients: ``eps(t) = sum_alpha c_alpha t^alpha``,
so for one variable ``c_k = eps_k / k!``.  The recursion is

    c_k = -1/2 d_L^* G ( sum_{i+j=k} [c_i, c_j] ),

valid when the order-k bracket has no harmonic part.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import factorial
from typing import Callable, Sequence

from .brackets import d_L, schouten
from .fields import FourierSection, sobolev_norm_sq
from .hodge import SpectralHodge, standard_hodge
from .scalar import HALF, ONE, Q, Scalar

Index = tuple[int, ...]


class ObstructionNonzero(Exception):
    def __init__(self, order: int, witness: FourierSection):
        super().__init__(f"harmonic obstruction at order {order}")
        self.order = order
        self.witness = witness


class InvariantBreach(AssertionError):
    pass


def _compositions(total: int, m: int) -> list[Index]:
    """Multi-indices of length ``m`` with entries summing to ``total``."""
    if m == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        out.extend((first,) + rest for rest in _compositions(total - first, m - 1))
    return out


class TruncatedSeries:
    """Power series in ``m`` variables with section coefficients, truncated at total degree N."""

    def __init__(self, m: int, N: int, n: int, kind: str, coeffs: dict[Index, FourierSection] | None = None):
        self.m = m
        self.N = N
        self.n = n
        self.kind = kind
        self.coeffs: dict[Index, FourierSection] = {}
        for a, s in (coeffs or {}).items():
            a = tuple(a)
            if len(a) != m:
                raise ValueError("multi-index has wrong length")
            if sum(a) <= N and s:
                if s.kind != kind:
                    raise ValueError("coefficient kind mismatch")
                self.coeffs[a] = s

    @classmethod
    def single(cls, N: int, coeffs: Sequence[FourierSection]) -> "TruncatedSeries":
        """One-variable series from the list ``[c_1, c_2, ...]``."""
        s0 = coeffs[0]
        return cls(1, N, s0.n, s0.kind, {(k + 1,): c for k, c in enumerate(coeffs)})

    def zero_section(self) -> FourierSection:
        return FourierSection.zero(self.n, self.kind)

    def coeff(self, a: Index | int) -> FourierSection:
        if isinstance(a, int):
            a = (a,)
        return self.coeffs.get(tuple(a), self.zero_section())

    def eps(self, k: int) -> FourierSection:
        """``eps_k = k! c_k`` for a one-variable series."""
        return self.coeff((k,)).scale(Q(factorial(k)))

    def indices(self, total: int) -> list[Index]:
        return _compositions(total, self.m)

    def __eq__(self, other) -> bool:
        return (isinstance(other, TruncatedSeries) and self.m == other.m and self.N == other.N
                and self.coeffs == other.coeffs)

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        out = dict(self.coeffs)
        for a, s in other.coeffs.items():
            out[a] = out[a] + s if a in out else s
        return TruncatedSeries(self.m, min(self.N, other.N), self.n, self.kind, out)

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(self.m, self.N, self.n, self.kind, {a: -s for a, s in self.coeffs.items()})

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return self + (-other)

    def scale(self, c: Scalar) -> "TruncatedSeries":
        return TruncatedSeries(self.m, self.N, self.n, self.kind, {a: s.scale(c) for a, s in self.coeffs.items()})

    def __mul__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        N = min(self.N, other.N)
        out: dict[Index, FourierSection] = {}
        for a, s in self.coeffs.items():
            for b, t in other.coeffs.items():
                ab = tuple(x + y for x, y in zip(a, b))
                if sum(ab) > N:
                    continue
                p = s * t
                out[ab] = out[ab] + p if ab in out else p
        return TruncatedSeries(self.m, N, self.n, self.kind, out)

    def map(self, f: Callable[[FourierSection], FourierSection], kind: str | None = None) -> "TruncatedSeries":
        return TruncatedSeries(self.m, self.N, self.n, kind or self.kind,
                               {a: f(s) for a, s in self.coeffs.items()})

    def truncate(self, N: int) -> "TruncatedSeries":
        return TruncatedSeries(self.m, N, self.n, self.kind, self.coeffs)

    def restrict_to_line(self, c: Sequence[Scalar]) -> "TruncatedSeries":
        """Substitute ``t_i = c_i t``."""
        out: dict[Index, FourierSection] = {}
        for a, s in self.coeffs.items():
            w = ONE
            for ci, ai in zip(c, a):
                w = w * ci ** ai if ai else w
            if not w:
                continue
            key = (sum(a),)
            out[key] = out[key] + s.scale(w) if key in out else s.scale(w)
        return TruncatedSeries(1, self.N, self.n, self.kind, out)


def bracket_coeff(series: TruncatedSeries, a: Index,
                  bracket: Callable[[FourierSection, FourierSection], FourierSection] = schouten
                  ) -> FourierSection:
    """Coefficient of ``t^a`` in ``[eps(t), eps(t)]`` (both factors of positive degree)."""
    total = series.zero_section()
    items = [(b, s) for b, s in series.coeffs.items() if sum(b) >= 1 and all(x <= y for x, y in zip(b, a))]
    keys = {b for b, _ in items}
    done = set()
    for b, s in items:
        c = tuple(x - y for x, y in zip(a, b))
        if c not in keys or sum(c) < 1 or (c, b) in done:
            continue
        t = series.coeffs[c]
        if b == c:
            total = total + bracket(s, t)
        else:
            # even-degree sections: [x, y] = [y, x]
            total = total + bracket(s, t).scale(Q(2))
        done.add((b, c))
    return total


def _require_even(s: FourierSection) -> None:
    for v in s.terms.values():
        if any(p & 1 for p in v.degrees()):
            raise ValueError("Maurer-Cartan data must have even degree")


# ---------------------------------------------------------------- one-parameter solver


@dataclass
class OrderRow:
    k: int
    bracket_closed: bool
    harmonic_norm2: Fraction
    obstruction_zero: bool
    residual_zero: bool

    def as_dict(self) -> dict:
        return {"k": self.k, "bracket_closed": self.bracket_closed,
                "harmonic_norm2": [self.harmonic_norm2.numerator, self.harmonic_norm2.denominator],
                "obstruction_zero": self.obstruction_zero, "residual_zero": self.residual_zero}


@dataclass
class ObstructionReport:
    rows: list[OrderRow] = field(default_factory=list)
    polynomial: dict[Index, FourierSection] = field(default_factory=dict)

    @property
    def vanishing(self) -> bool:
        return all(r.obstruction_zero for r in self.rows) and not any(self.polynomial.values())


def mc_step(series: TruncatedSeries, k: int, hodge: SpectralHodge | None = None,
            raise_on_obstruction: bool = True) -> tuple[FourierSection, OrderRow]:
    """Coefficient ``c_k`` from ``c_1..c_{k-1}`` (one variable)."""
    hodge = hodge or standard_hodge(series.n)
    br = bracket_coeff(series, (k,))
    closed = not d_L(br)
    if not closed:
        raise InvariantBreach(f"order-{k} bracket is not d_L-closed")
    h = hodge.harmonic(br)
    row = OrderRow(k, closed, h.norm2(), not h, False)
    if h and raise_on_obstruction:
        raise ObstructionNonzero(k, h)
    ck = hodge.d_L_star(hodge.green(br)).scale(-HALF)
    row.residual_zero = not (d_L(ck) + br.scale(HALF))
    if not h and not row.residual_zero:
        raise InvariantBreach(f"order-{k} equation fails after the Green step")
    return ck, row


def mc_solve(eps1: FourierSection, N: int, hodge: SpectralHodge | None = None
             ) -> tuple[TruncatedSeries, ObstructionReport]:
    """Solve ``d_L eps + 1/2 [eps, eps] = 0`` through order ``N`` from ``eps(t) = eps1 t + ...``.

    ``eps1`` must be d_L-closed; its harmonic part parametrizes the family.
    """
    if eps1.kind != "multivector":
        raise ValueError("eps1 must be a multivector section")
    _require_even(eps1)
    if d_L(eps1):
        raise ValueError("eps1 is not d_L-closed")
    hodge = hodge or standard_hodge(eps1.n)
    series = TruncatedSeries(1, N, eps1.n, "multivector", {(1,): eps1})
    report = ObstructionReport([OrderRow(1, True, Fraction(0), True, True)])
    for k in range(2, N + 1):
        ck, row = mc_step(series, k, hodge)
        report.rows.append(row)
        if ck:
            series.coeffs[(k,)] = ck
    return series, report


def mc_residual(series: TruncatedSeries,
                bracket: Callable[[FourierSection, FourierSection], FourierSection] = schouten,
                derivative: Callable[[FourierSection], FourierSection] = d_L) -> dict[Index, FourierSection]:
    """Coefficients of ``d_L eps + 1/2 [eps, eps]`` up to total degree N."""
    out = {}
    for total in range(1, series.N + 1):
        for a in series.indices(total):
            r = derivative(series.coeff(a)) + bracket_coeff(series, a, bracket).scale(HALF)
            if r:
                out[a] = r
    return out


def fixed_point_residual(series: TruncatedSeries, linear: dict[Index, FourierSection],
                         hodge: SpectralHodge | None = None) -> dict[Index, FourierSection]:
    """Coefficients of ``eps - eps_lin + 1/2 d_L^* G [eps, eps]`` up to degree N."""
    hodge = hodge or standard_hodge(series.n)
    out = {}
    for total in range(1, series.N + 1):
        for a in series.indices(total):
            lin = linear.get(a, series.zero_section())
            r = series.coeff(a) - lin + hodge.d_L_star(hodge.green(bracket_coeff(series, a))).scale(HALF)
            if r:
                out[a] = r
    return out


# ---------------------------------------------------------------- Kuranishi family


def kuranishi(basis: Sequence[FourierSection], N: int, hodge: SpectralHodge | None = None
              ) -> tuple[TruncatedSeries, ObstructionReport]:
    """Fixed point of ``eps = sum eta_i t_i - 1/2 d_L^* G [eps, eps]`` with its obstruction map.

    The report's ``polynomial`` maps each multi-index to the harmonic part of
    the corresponding coefficient of ``[eps(t), eps(t)]``.
    """
    if not basis:
        raise ValueError("empty basis")
    n = basis[0].n
    for eta in basis:
        if eta.kind != "multivector" or eta.n != n:
            raise ValueError("basis must consist of multivector sections of one dimension")
        _require_even(eta)
    hodge = hodge or standard_hodge(n)
    m = len(basis)
    coeffs = {}
    for i, eta in enumerate(basis):
        coeffs[tuple(1 if j == i else 0 for j in range(m))] = eta
    series = TruncatedSeries(m, N, n, "multivector", coeffs)
    report = ObstructionReport()
    for total in range(2, N + 1):
        new = {}
        closed = True
        for a in series.indices(total):
            br = bracket_coeff(series, a)
            closed = closed and not d_L(br)
            h = hodge.harmonic(br)
            report.polynomial[a] = h
            new[a] = hodge.d_L_star(hodge.green(br)).scale(-HALF)
        hn = Fraction(0)
        for a, c in new.items():
            if c:
                series.coeffs[a] = c
            hn += report.polynomial[a].norm2()
        report.rows.append(OrderRow(total, closed, hn, hn == 0, True))
    return series, report


def kuranishi_equivalence(series: TruncatedSeries, report: ObstructionReport) -> dict[Index, bool]:
    """Per coefficient: the MC residual equals half the harmonic obstruction.

    This holds whenever the bracket coefficient is d_L-closed (e.g. for closed
    bases), which is the regime where residual and obstruction vanish together.
    """
    res = mc_residual(series)
    out = {}
    for a, h in report.polynomial.items():
        r = res.get(a, series.zero_section())
        out[a] = r == h.scale(HALF)
    return out


def obstructed_pair_search(n: int, max_freq: int = 1) -> tuple[FourierSection, FourierSection] | None:
    """Find single-frequency bivector sections whose bracket has a harmonic part.

    Candidates are ``exp(i<k,x>) A`` and ``exp(-i<k,x>) B`` over bivector
    monomials ``A, B`` and frequencies in a small box, scanned in a fixed order.
    """
    from .algebra import Multivector, popcount
    from .hodge import harmonic

    masks = [mk for mk in range(1 << (2 * n)) if popcount(mk) == 2]
    freqs = sorted((k for k in product(range(-max_freq, max_freq + 1), repeat=2 * n) if any(k)),
                   key=lambda k: (sum(x * x for x in k), [-x for x in k]))
    for k in freqs:
        mk = tuple(-x for x in k)
        for A in masks:
            for B in masks:
                e1 = FourierSection(n, "multivector", {k: Multivector(n, {A: ONE})})
                e2 = FourierSection(n, "multivector", {mk: Multivector(n, {B: ONE})})
                if harmonic(schouten(e1, e2)):
                    return e1, e2
    return None


# ---------------------------------------------------------------- majorant


def majorant_coeff(nu: int, c: Fraction) -> Fraction:
    """``M_nu = c^nu / (16 c nu^2)``."""
    c = Fraction(c)
    return c ** nu / (16 * c * nu * nu)


def convolution_rows(c: Fraction, N: int) -> list[dict]:
    """Coefficientwise check of ``M(t)^2 <= M(t) / c`` through order N."""
    c = Fraction(c)
    rows = []
    for k in range(2, N + 1):
        lhs = sum((majorant_coeff(i, c) * majorant_coeff(k - i, c) for i in range(1, k)), Fraction(0))
        rhs = majorant_coeff(k, c) / c
        rows.append({"k": k, "lhs": lhs, "rhs": rhs, "pass": lhs <= rhs})
    return rows


@dataclass
class MajorantConfig:
    c: Fraction
    K1: Fraction
    C1: Fraction
    s_index: int
    K2: Fraction | None = None

    @property
    def lam(self) -> Fraction:
        return 1 / self.c

    def as_dict(self) -> dict:
        def pair(x):
            return None if x is None else [x.numerator, x.denominator]
        return {"c": pair(self.c), "K1": pair(self.K1), "C1": pair(self.C1), "lambda": pair(self.lam),
                "K2": pair(self.K2), "s_index": self.s_index}


def _pow2_at_least_sq(x2: Fraction) -> Fraction:
    """Smallest power of two ``p`` (possibly < 1) with ``p^2 >= x2``."""
    p = Fraction(1)
    if x2 <= 0:
        return p
    while p * p < x2:
        p *= 2
    while (p / 2) * (p / 2) >= x2:
        p /= 2
    return p


def calibrate(series: TruncatedSeries, s_index: int, hodge: SpectralHodge | None = None,
              c_override: Fraction | None = None) -> MajorantConfig:
    """Per-run constants: the bilinear constant C1, the scale K1 and the majorant parameter c."""
    hodge = hodge or standard_hodge(series.n)
    N = series.N
    cs = {k: series.coeff(k) for k in range(1, N + 1)}
    norms = {k: sobolev_norm_sq(v, s_index) for k, v in cs.items()}
    ratio = Fraction(0)
    for i in range(1, N):
        for j in range(i, N + 1 - i):
            if not norms[i] or not norms[j]:
                continue
            t = hodge.d_L_star(hodge.green(schouten(cs[i], cs[j])))
            r = sobolev_norm_sq(t, s_index) / (norms[i] * norms[j])
            ratio = max(ratio, r)
    C1 = _pow2_at_least_sq(ratio)
    M1 = majorant_coeff(1, Fraction(1))
    K1 = _pow2_at_least_sq(norms[1] / (M1 * M1)) if norms[1] else Fraction(1)
    if c_override is not None:
        c = Fraction(c_override)
    else:
        bound = max(C1, C1 * K1 / 2)
        c = Fraction(1)
        while not c > bound:
            c *= 2
    return MajorantConfig(c=c, K1=K1, C1=C1, s_index=s_index)


def majorant_certify(series: TruncatedSeries, cfg: MajorantConfig) -> dict:
    """Rows ``||c_k||_s^2 <= (K1 M_k)^2`` plus the convolution inequality, through N."""
    rows = []
    for k in range(1, series.N + 1):
        lhs = sobolev_norm_sq(series.coeff(k), cfg.s_index)
        rhs = (cfg.K1 * majorant_coeff(k, cfg.c)) ** 2
        row = {"k": k, "norm_sq": lhs, "bound_sq": rhs, "pass": lhs <= rhs}
        if not row["pass"]:
            row["witness"] = f"||c_{k}||^2 = {lhs} exceeds {rhs}"
        rows.append(row)
    conv = convolution_rows(cfg.c, max(series.N, 2))
    return {"config": cfg, "rows": rows, "convolution": conv,
            "pass": all(r["pass"] for r in rows) and all(r["pass"] for r in conv)}
