"""Spectral Hodge theory for the complex of Lbar multivectors on the flat torus.

Everything is done one frequency at a time: the symbol of ``d_L`` at ``k`` is a
``2^{2n}``-square Gaussian-rational matrix, its adjoint is taken for the fiber
metric induced by the flat metric ``g``, and the Green operator is the exact
pseudo-inverse of the Laplacian symbol.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

from .algebra import Multivector, bits, lbar_vectors, popcount
from .brackets import d_L
from .fields import FourierSection, Freq
from .scalar import (ONE, ZERO, Scalar, conj, identity, inverse, matmul, nullspace)
from sympy.polys.domains import QQ_I
from sympy.polys.matrices import DomainMatrix


def _det(M: list[list[Scalar]]) -> Scalar:
    if not M:
        return ONE
    return DomainMatrix(M, (len(M), len(M)), QQ_I).det()


def _conjT(M: Sequence[Sequence[Scalar]]) -> list[list[Scalar]]:
    return [[conj(M[i][j]) for i in range(len(M))] for j in range(len(M[0]))]


def _add(A, B):
    return [[a + b for a, b in zip(r, s)] for r, s in zip(A, B)]


def _sub(A, B):
    return [[a - b for a, b in zip(r, s)] for r, s in zip(A, B)]


def _matvec(M, v):
    return [sum((M[i][j] * v[j] for j in range(len(v)) if M[i][j] and v[j]), ZERO) for i in range(len(M))]


class SpectralHodge:
    """Per-frequency Hodge data for one torus dimension and flat metric."""

    def __init__(self, n: int, g: Sequence[Sequence[Scalar]] | None = None):
        self.n = n
        self.dim = 1 << (2 * n)
        self.g = [list(r) for r in g] if g is not None else identity(2 * n)
        self.H = self._fiber_metric()
        self.Hinv = inverse(self.H)
        self._cache: dict[Freq, dict] = {}

    # fiber metric --------------------------------------------------------
    def _fiber_metric(self) -> list[list[Scalar]]:
        n, m = self.n, 2 * self.n
        ginv = inverse(self.g)
        gens = [v.coords() for v in lbar_vectors(n)]

        def h(u, v):
            s = ZERO
            for i in range(m):
                for j in range(m):
                    s += conj(u[i]) * self.g[i][j] * v[j]
                    s += conj(u[m + i]) * ginv[i][j] * v[m + j]
            return s

        G1 = [[h(a, b) for b in gens] for a in gens]
        H = [[ZERO] * self.dim for _ in range(self.dim)]
        for a in range(self.dim):
            for b in range(self.dim):
                if popcount(a) != popcount(b):
                    continue
                ia, ib = list(bits(a)), list(bits(b))
                H[a][b] = _det([[G1[i][j] for j in ib] for i in ia])
        return H

    def inner(self, a: FourierSection, b: FourierSection) -> Scalar:
        """L^2 inner product (conjugate-linear in ``a``), normalized by the torus volume."""
        s = ZERO
        for k, v in a.terms.items():
            w = b.terms.get(k)
            if w is None:
                continue
            for m1, x in v.c.items():
                row = self.H[m1]
                for m2, y in w.c.items():
                    if row[m2]:
                        s += conj(x) * row[m2] * y
        return s

    # symbols ------------------------------------------------------------
    def symbol(self, k: Freq) -> dict:
        k = tuple(k)
        data = self._cache.get(k)
        if data is not None:
            return data
        n, d = self.n, self.dim
        D = [[ZERO] * d for _ in range(d)]
        for m in range(d):
            img = d_L(FourierSection(n, "multivector", {k: Multivector(n, {m: ONE})}))
            v = img.terms.get(k)
            if v is not None:
                for r, x in v.c.items():
                    D[r][m] = x
        Dstar = matmul(matmul(self.Hinv, _conjT(D)), self.H)
        Lap = _add(matmul(D, Dstar), matmul(Dstar, D))
        N = nullspace(Lap, d)
        if N:
            Nm = [[N[j][i] for j in range(len(N))] for i in range(d)]  # d x r
            NhH = matmul(_conjT(Nm), self.H)
            P = matmul(matmul(Nm, inverse(matmul(NhH, Nm))), NhH)
        else:
            P = [[ZERO] * d for _ in range(d)]
        Gr = _sub(inverse(_add(Lap, P)), P)
        data = {"D": D, "Dstar": Dstar, "Lap": Lap, "P": P, "G": Gr, "kernel_dim": len(N)}
        self._cache[k] = data
        return data

    def _apply(self, e: FourierSection, key: str) -> FourierSection:
        if e.kind != "multivector":
            raise ValueError("expected a multivector section")
        out = {}
        for k, v in e.terms.items():
            M = self.symbol(k)[key]
            vec = [v.c.get(m, ZERO) for m in range(self.dim)]
            res = _matvec(M, vec)
            out[k] = Multivector(self.n, {m: x for m, x in enumerate(res) if x})
        return FourierSection(self.n, "multivector", out)

    def d_L_star(self, e: FourierSection) -> FourierSection:
        return self._apply(e, "Dstar")

    def laplacian(self, e: FourierSection) -> FourierSection:
        return self._apply(e, "Lap")

    def green(self, e: FourierSection) -> FourierSection:
        return self._apply(e, "G")

    def harmonic(self, e: FourierSection) -> FourierSection:
        return self._apply(e, "P")


@lru_cache(maxsize=None)
def standard_hodge(n: int) -> SpectralHodge:
    return SpectralHodge(n)


def d_L_star(e: FourierSection) -> FourierSection:
    return standard_hodge(e.n).d_L_star(e)


def laplacian(e: FourierSection) -> FourierSection:
    return standard_hodge(e.n).laplacian(e)


def green(e: FourierSection) -> FourierSection:
    return standard_hodge(e.n).green(e)


def harmonic(e: FourierSection) -> FourierSection:
    return standard_hodge(e.n).harmonic(e)


def l2_inner(a: FourierSection, b: FourierSection) -> Scalar:
    return standard_hodge(a.n).inner(a, b)


def harmonic_basis(n: int, p: int) -> list[FourierSection]:
    """Constant monomials of degree ``p``; on the flat torus they span the harmonics."""
    z = (0,) * (2 * n)
    return [FourierSection(n, "multivector", {z: Multivector(n, {m: ONE})})
            for m in range(1 << (2 * n)) if popcount(m) == p]
