"""Picard-lattice arithmetic for rational surfaces.

Blow-ups ``S_n`` of the projective plane (basis H, E_1..E_n) and Hirzebruch
surfaces ``F_e`` (basis b, f). Riemann-Roch for line bundles and rank-2 bundles,
sections of line bundles on ``F_e``, point-position classification and
(-2)-curve scans. The table report derives each number from lattice
arithmetic plus named vanishing rules and compares it with the expected value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import sympy


class LatticeMismatch(ValueError):
    pass


class InconsistentFlags(ValueError):
    pass


@dataclass(frozen=True)
class DivisorClass:
    coords: tuple[int, ...]
    lattice: str

    def __add__(self, other: "DivisorClass") -> "DivisorClass":
        _same(self, other)
        return DivisorClass(tuple(a + b for a, b in zip(self.coords, other.coords)), self.lattice)

    def __sub__(self, other: "DivisorClass") -> "DivisorClass":
        _same(self, other)
        return DivisorClass(tuple(a - b for a, b in zip(self.coords, other.coords)), self.lattice)

    def __neg__(self) -> "DivisorClass":
        return DivisorClass(tuple(-a for a in self.coords), self.lattice)

    def __rmul__(self, k: int) -> "DivisorClass":
        return DivisorClass(tuple(k * a for a in self.coords), self.lattice)


def _same(a: DivisorClass, b: DivisorClass) -> None:
    if a.lattice != b.lattice or len(a.coords) != len(b.coords):
        raise LatticeMismatch(f"{a.lattice} vs {b.lattice}")


class SurfaceLattice:
    """Picard lattice with intersection form, canonical class and topological Euler number."""

    def __init__(self, name: str, names: Sequence[str], gram: Sequence[Sequence[int]], K: Sequence[int],
                 c2_top: int):
        self.name = name
        self.names = list(names)
        self.gram = [list(r) for r in gram]
        self.K = DivisorClass(tuple(K), name)
        self.c2_top = c2_top
        if any(self.gram[i][j] != self.gram[j][i] for i in range(self.rank) for j in range(self.rank)):
            raise ValueError("intersection form must be symmetric")

    @classmethod
    def del_pezzo(cls, n: int) -> "SurfaceLattice":
        """Blow-up of the plane at n points: H^2 = 1, E_i^2 = -1, K = -3H + sum E_i."""
        if not 0 <= n:
            raise ValueError("n must be nonnegative")
        r = n + 1
        gram = [[0] * r for _ in range(r)]
        gram[0][0] = 1
        for i in range(1, r):
            gram[i][i] = -1
        return cls(f"S{n}", ["H"] + [f"E{i}" for i in range(1, r)], gram, [-3] + [1] * n, 3 + n)

    @classmethod
    def hirzebruch(cls, e: int) -> "SurfaceLattice":
        """``F_e``: b^2 = -e, b.f = 1, f^2 = 0, K = -2b - (e+2) f."""
        if e < 0:
            raise ValueError("e must be nonnegative")
        return cls(f"F{e}", ["b", "f"], [[-e, 1], [1, 0]], [-2, -(e + 2)], 4)

    @property
    def rank(self) -> int:
        return len(self.names)

    def cls(self, *coords: int) -> DivisorClass:
        if len(coords) != self.rank:
            raise LatticeMismatch(f"expected {self.rank} coordinates")
        return DivisorClass(tuple(coords), self.name)

    def basis(self, i: int) -> DivisorClass:
        return self.cls(*[1 if j == i else 0 for j in range(self.rank)])

    def zero(self) -> DivisorClass:
        return self.cls(*([0] * self.rank))

    def _check(self, a: DivisorClass) -> None:
        if a.lattice != self.name or len(a.coords) != self.rank:
            raise LatticeMismatch(f"class from {a.lattice} used on {self.name}")

    def intersect(self, a: DivisorClass, b: DivisorClass) -> int:
        self._check(a)
        self._check(b)
        return sum(a.coords[i] * self.gram[i][j] * b.coords[j] for i in range(self.rank) for j in range(self.rank))

    def square(self, a: DivisorClass) -> int:
        return self.intersect(a, a)

    def degree(self, a: DivisorClass) -> int:
        """``-K . a``."""
        return -self.intersect(self.K, a)

    @cached_property
    def signature(self) -> tuple[int, int]:
        """(positive, negative) inertia, exact: the characteristic polynomial of a
        symmetric matrix has only real roots, so Descartes' rule counts them."""
        x = sympy.Symbol("x")
        p = sympy.Matrix(self.gram).charpoly(x)
        pos = _sign_changes(p.all_coeffs())
        neg = _sign_changes(sympy.Poly(p.as_expr().subs(x, -x), x).all_coeffs())
        return pos, neg

    def word(self, a: DivisorClass) -> str:
        parts = []
        for c, name in zip(a.coords, self.names):
            if c:
                parts.append(f"{'+' if c > 0 else '-'}{abs(c) if abs(c) != 1 else ''}{name}")
        s = "".join(parts) or "0"
        return s[1:] if s.startswith("+") else s


def _sign_changes(coeffs) -> int:
    signs = [1 if c > 0 else -1 for c in coeffs if c != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


# ---------------------------------------------------------------- Riemann-Roch


def chi_line_bundle(L: SurfaceLattice, D: DivisorClass) -> int:
    """``chi(O(D)) = 1 + (D^2 - D.K) / 2`` on a rational surface."""
    num = L.square(D) - L.intersect(D, L.K)
    if num % 2:
        raise ValueError("D^2 - D.K must be even")
    return 1 + num // 2


def chi_rank2(L: SurfaceLattice, c1: DivisorClass, c2: int) -> int:
    """``chi(E) = 2 + c1.(c1 - K) / 2 - c2`` for a rank-2 bundle on a rational surface."""
    num = L.intersect(c1, c1 - L.K)
    if num % 2:
        raise ValueError("c1.(c1 - K) must be even")
    return 2 + num // 2 - c2


def hirzebruch_h0(alpha: int, gamma: int, e: int) -> int:
    """``h^0(F_e, O(alpha b + gamma f)) = sum_{j=0}^{alpha} max(0, gamma - j e + 1)``."""
    if alpha < 0:
        return 0
    return sum(max(0, gamma - j * e + 1) for j in range(alpha + 1))


# ---------------------------------------------------------------- curve searches


def exceptional_classes(L: SurfaceLattice, bound: int) -> list[DivisorClass]:
    """Classes ``dH - sum m_i E_i`` on S_n with ``C^2 = K.C = -1`` and ``|coords| <= bound``."""
    n = L.rank - 1
    out = []
    for d in range(-bound, bound + 1):
        target_sq = d * d + 1       # sum m_i^2
        target_lin = 3 * d - 1      # sum m_i
        for ms in _bounded_vectors(n, bound, target_sq, target_lin):
            out.append(L.cls(d, *[-m for m in ms]))
    return [c for c in out if L.square(c) == -1 and L.intersect(L.K, c) == -1]


def _bounded_vectors(n: int, bound: int, sq: int, lin: int):
    """Integer vectors in ``[-bound, bound]^n`` with given sum of squares and sum."""
    def rec(i, sq_left, lin_left, acc):
        if i == n:
            if sq_left == 0 and lin_left == 0:
                yield tuple(acc)
            return
        rest = n - i - 1
        for m in range(-bound, bound + 1):
            s = sq_left - m * m
            if s < 0:
                continue
            l = lin_left - m
            # Cauchy-Schwarz: l^2 <= rest * s
            if l * l > rest * s:
                continue
            acc.append(m)
            yield from rec(i + 1, s, l, acc)
            acc.pop()
    yield from rec(0, sq, lin, [])


def minus_two_curve_scan(L: SurfaceLattice, candidates: Iterable[DivisorClass]) -> list[DivisorClass]:
    """Candidates with ``C^2 = -2`` and ``K.C = 0``."""
    return [c for c in candidates if L.square(c) == -2 and L.intersect(L.K, c) == 0]


def root_classes(L: SurfaceLattice, bound: int = 4) -> list[DivisorClass]:
    """All classes with ``C^2 = -2``, ``K.C = 0`` in the box ``|coords| <= bound`` (S_n only)."""
    n = L.rank - 1
    out = []
    for d in range(-bound, bound + 1):
        for ms in _bounded_vectors(n, bound, d * d + 2, 3 * d):
            out.append(L.cls(d, *[-m for m in ms]))
    return out


# ---------------------------------------------------------------- point positions


@dataclass
class PointConfiguration:
    """Incidence flags for n points of the plane (indices 1..n).

    ``lines``: point sets lying on a common line; ``conics``: sets on a common
    conic; ``nodal_cubics``: (double point, 8-set) on a cubic singular at that
    point; ``infinitely_near``: pairs ``(j, k)`` meaning x_k lies on E_j.
    """

    n: int
    lines: list[frozenset[int]] = field(default_factory=list)
    conics: list[frozenset[int]] = field(default_factory=list)
    nodal_cubics: list[tuple[int, frozenset[int]]] = field(default_factory=list)
    infinitely_near: list[tuple[int, int]] = field(default_factory=list)

    def validate(self) -> None:
        if not 0 <= self.n <= 8:
            raise InconsistentFlags("at most 8 points")
        idx = set(range(1, self.n + 1))
        for s in self.lines:
            if not s <= idx or len(s) < 3:
                raise InconsistentFlags(f"line flag {sorted(s)}")
        for s in self.conics:
            if not s <= idx or len(s) < 6:
                raise InconsistentFlags(f"conic flag {sorted(s)}")
        for p, s in self.nodal_cubics:
            if not s <= idx or len(s) != 8 or p not in s:
                raise InconsistentFlags(f"cubic flag {p}, {sorted(s)}")
        for j, k in self.infinitely_near:
            if j not in idx or k not in idx or not j < k:
                raise InconsistentFlags(f"infinitely near flag {(j, k)}")
        for s in self.lines:
            for t in self.lines:
                if s != t and len(s & t) >= 2 and not (s <= t or t <= s):
                    raise InconsistentFlags("two distinct lines share two points")

    def star_condition(self) -> bool:
        """No point lies on an exceptional curve that an earlier point already made a (-2)-curve."""
        parents: dict[int, int] = {}
        for j, _ in self.infinitely_near:
            parents[j] = parents.get(j, 0) + 1
        return all(c <= 1 for c in parents.values())

    def minus_two_candidates(self, L: SurfaceLattice) -> list[DivisorClass]:
        """Strict-transform classes of flagged curves."""
        n = self.n

        def cls(d, ms):
            return L.cls(d, *[-ms.get(i, 0) for i in range(1, n + 1)])

        out = []
        for s in self.lines:
            for t in combinations(sorted(s), 3):
                out.append(cls(1, {i: 1 for i in t}))
        for s in self.conics:
            for t in combinations(sorted(s), 6):
                out.append(cls(2, {i: 1 for i in t}))
        for p, s in self.nodal_cubics:
            ms = {i: 1 for i in s}
            ms[p] = 2
            out.append(cls(3, ms))
        for j, k in self.infinitely_near:
            out.append(L.basis(j) - L.basis(k))
        return out


ORDER = {"general": 0, "almost_general": 1, "neither": 2}


def position_classify(cfg: PointConfiguration) -> str:
    cfg.validate()
    almost = (cfg.star_condition()
              and all(len(s) < 4 for s in cfg.lines)
              and all(len(s) < 7 for s in cfg.conics))
    if not almost:
        return "neither"
    general = not cfg.lines and not cfg.conics and not cfg.nodal_cubics and not cfg.infinitely_near
    return "general" if general else "almost_general"


# ---------------------------------------------------------------- table report

RULES = {
    "rr_line": "Riemann-Roch for line bundles: chi(D) = 1 + (D^2 - D.K)/2",
    "rr_rank2": "Riemann-Roch for rank-2 bundles: chi(E) = 2 + c1.(c1 - K)/2 - c2",
    "h1_anticanonical_vanishing": "H^i(-K) = 0 for i > 0 when -K is a positive multiple of a smooth curve "
                                  "of positive square and H^1(O) = 0",
    "h2_serre_anticanonical": "H^2(-K) is dual to H^0(2K) = 0 when -K is effective and nonzero",
    "h2_theta_vanishing": "H^2(Theta) = 0 for a surface with effective anticanonical divisor and H^0(Omega^1) = 0",
    "h0_theta_vanishing": "H^0(Theta) = 0 for the blow-up at n >= 5 points in general position",
    "h1_theta_small_n": "H^1(Theta) = 0 for n < 5 (rigid blow-ups of at most four general points)",
    "rational_no_forms": "H^0(Omega^1) = 0 and H^2(Omega^1) dual to H^0(Theta (x) K) = 0 on a rational surface",
    "ideal_twist": "I_D = K for an anticanonical D, and Theta (x) K = Omega^1 on a surface",
    "normal_bundle_rr": "h^0(D, N_D) = D.D on the elliptic anticanonical curve (degree > 0, H^1 = 0)",
    "elliptic_tangent": "h^0(D, T_D) = h^1(D, T_D) = 1 on an elliptic curve",
    "exact_sequence_bound": "0 -> T_D -> i*T -> N_D -> 0 gives h^0(N_D) - 1 <= h^0(i*T) - 1 + ... i.e. "
                            "D.D <= h^0(D, i*T) <= D.D + 1",
    "hirzebruch_sections": "h^0(F_e, alpha b + gamma f) = sum_j max(0, gamma - j e + 1)",
    "hirzebruch_h2": "H^2(F_e, -K) is dual to H^0(2K) = 0",
    "minus_two": "a (-2)-curve has C^2 = -2 and K.C = 0",
}


@dataclass
class Row:
    surface: str
    quantity: str
    value: object
    expected: object
    chain: list[str]

    @property
    def ok(self) -> bool:
        return self.value == self.expected

    def as_dict(self) -> dict:
        return {"surface": self.surface, "quantity": self.quantity, "value": _jsonable(self.value),
                "expected": _jsonable(self.expected), "chain": list(self.chain), "pass": self.ok}


def _jsonable(v):
    if isinstance(v, tuple):
        return list(v)
    return v


def del_pezzo_rows(n: int) -> list[Row]:
    L = SurfaceLattice.del_pezzo(n)
    K = L.K
    rows = []
    chi_ak = chi_line_bundle(L, -K)
    rows.append(Row(L.name, "h0(-K)", chi_ak, 10 - n,
                    [f"rr_line: chi(-K) = 1 + ({L.square(K)} + {L.square(K)})/2 = {chi_ak}",
                     "h1_anticanonical_vanishing", "h2_serre_anticanonical", f"h0(-K) = chi(-K) = {chi_ak}"]))
    chi_cot = chi_rank2(L, K, L.c2_top)
    rows.append(Row(L.name, "h11", -chi_cot, 1 + n,
                    [f"rr_rank2: chi(Omega^1) with c1 = K, c2 = {L.c2_top} is {chi_cot}", "rational_no_forms",
                     f"h^{{1,1}} = -chi(Omega^1) = {-chi_cot}"]))
    chi_t = chi_rank2(L, -K, L.c2_top)
    if n >= 5:
        rows.append(Row(L.name, "h1(Theta)", -chi_t, 2 * n - 8,
                        [f"rr_rank2: chi(Theta) with c1 = -K, c2 = {L.c2_top} is {chi_t}", "h0_theta_vanishing",
                         "h2_theta_vanishing", f"h1(Theta) = -chi(Theta) = {-chi_t}"]))
        h1_id = -chi_cot
        rows.append(Row(L.name, "h1(I_D (x) T)", h1_id, n + 1,
                        ["ideal_twist: I_D (x) T = Omega^1", f"rr_rank2: chi(Omega^1) = {chi_cot}",
                         "rational_no_forms", f"h1 = {h1_id}"]))
        lo, hi = L.square(-K), L.square(-K) + 1
        rows.append(Row(L.name, "h0(D, i*T) bounds", (lo, hi), (9 - n, 10 - n),
                        [f"normal_bundle_rr: h0(N_D) = D.D = {lo}", "elliptic_tangent", "exact_sequence_bound"]))
        rows.append(Row(L.name, "h0(D,i*T) < h1(I_D (x) T)", hi < h1_id, True,
                        [f"upper bound {hi} < {h1_id}"]))
    else:
        rows.append(Row(L.name, "h1(Theta)", 0, 0,
                        ["h1_theta_small_n", f"consistency: h0(Theta) = chi(Theta) = {chi_t} >= 0"]))
    return rows


def hirzebruch_rows(e: int) -> list[Row]:
    L = SurfaceLattice.hirzebruch(e)
    K = L.K
    alpha, gamma = (-K).coords
    h0 = hirzebruch_h0(alpha, gamma, e)
    expected = 9 if e <= 2 else e + 6
    rows = [Row(L.name, "P^-1", h0, expected, [f"hirzebruch_sections: alpha = {alpha}, gamma = {gamma}"])]
    chi = chi_line_bundle(L, -K)
    rows.append(Row(L.name, "chi(-K)", chi, 9, [f"rr_line: 1 + K^2 = 1 + {L.square(K)}"]))
    if e >= 3:
        rows.append(Row(L.name, "h1(-K)", h0 - chi, e - 3,
                        ["hirzebruch_h2", f"h1 = h0 - chi = {h0} - {chi}"]))
    return rows


def remark_minus_two_rows() -> list[Row]:
    rows = []
    L3 = SurfaceLattice.del_pezzo(3)
    c = L3.cls(1, -1, -1, -1)
    rows.append(Row(L3.name, f"(-2)-curve {L3.word(c)}", bool(minus_two_curve_scan(L3, [c])), True,
                    [f"minus_two: C^2 = {L3.square(c)}, K.C = {L3.intersect(L3.K, c)}"]))
    L6 = SurfaceLattice.del_pezzo(6)
    c = L6.cls(2, -1, -1, -1, -1, -1, -1)
    rows.append(Row(L6.name, f"(-2)-curve {L6.word(c)}", bool(minus_two_curve_scan(L6, [c])), True,
                    [f"minus_two: C^2 = {L6.square(c)}, K.C = {L6.intersect(L6.K, c)}"]))
    return rows


def paper_table_report(hirzebruch_range: Iterable[int] = range(0, 7)) -> dict:
    rows: list[Row] = []
    for n in range(0, 9):
        rows += del_pezzo_rows(n)
    for e in hirzebruch_range:
        rows += hirzebruch_rows(e)
    rows += remark_minus_two_rows()
    return {
        "rows": [r.as_dict() for r in rows],
        "rules": dict(RULES),
        "assumptions": ["(-2)-curve scans cover the flagged strict transforms and a box |coords| <= 4; "
                        "completeness beyond the box is assumed, not proved"],
        "pass": all(r.ok for r in rows),
    }


def text_table(report: dict) -> str:
    rows = [("surface", "quantity", "value", "expected", "ok")]
    for r in report["rows"]:
        rows.append((r["surface"], r["quantity"], str(r["value"]), str(r["expected"]), "yes" if r["pass"] else "NO"))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"
