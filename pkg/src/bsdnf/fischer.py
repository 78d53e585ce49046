"""Fischer star operator, Fischer inner product and generalized Fischer decompositions.

The inner product is extended multiplicatively to mixed monomials,
``<Z^a Zbar^b, Z^a Zbar^b> = a! b!``, which makes ``star_apply(q, .)`` the
adjoint of multiplication by ``q``.  Decompositions are solved from the
kernel conditions ``t*(P - sum d_i s_i) = 0`` directly, so no Gram matrix is
ever formed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Mapping, Sequence

from .errors import BidegreeError, ShapeError
from .exactalg import GR, ZERO, min_norm_point, solve_sparse
from .polyring import (
    WKIND,
    MultiIndex,
    Polynomial,
    VarSpace,
    enumerate_exponents,
    enumerate_multiindices,
)

__all__ = [
    "star_apply",
    "fischer_inner",
    "fischer_weight",
    "hermitian_form",
    "hermitian_form_product",
    "FischerDecomposition",
    "decompose_high",
    "decompose_low",
    "kernel_basis",
    "bihomogeneous_basis",
]


def fischer_weight(key: Sequence[int]) -> int:
    out = 1
    for e in key:
        if e > 1:
            out *= factorial(e)
    return out


def fischer_inner(p: Polynomial, q: Polynomial) -> GR:
    """Sesquilinear Fischer product, conjugate-linear in ``q``."""
    if not p.space.same_shape(q.space):
        raise ShapeError("polynomials live in different variable spaces")
    small, big = (p, q) if len(p) <= len(q) else (q, p)
    acc = ZERO
    for k in small.terms:
        if k in big.terms:
            acc = acc + p.terms[k] * q.terms[k].conjugate() * fischer_weight(k)
    return acc


def star_apply(P: Polynomial, target: Polynomial) -> Polynomial:
    """Apply ``P* = sum conj(p_I) d^I`` to ``target``."""
    if not P.space.same_shape(target.space):
        raise ShapeError("operator and target live in different variable spaces")
    if P.has_w() or target.has_w():
        raise ShapeError("star_apply acts on (Z, Zbar) polynomials only")
    out: dict = {}
    for kp, cp in P.terms.items():
        ccp = cp.conjugate()
        support = [(i, e) for i, e in enumerate(kp) if e]
        for kt, ct in target.terms.items():
            f = 1
            ok = True
            for i, e in support:
                have = kt[i]
                if have < e:
                    ok = False
                    break
                for t in range(e):
                    f *= have - t
            if not ok:
                continue
            nk = list(kt)
            for i, e in support:
                nk[i] -= e
            nk = tuple(nk)
            v = out.get(nk, ZERO) + ccp * ct * f
            if v:
                out[nk] = v
            else:
                out.pop(nk, None)
    return Polynomial(P.space, out, _trusted=True)


def hermitian_form(space: VarSpace, a: int, b: int) -> Polynomial:
    """<l_a, l_b> = sum_c z_{a c} conj(z_{b c}) for 0-based row indices."""
    terms = {}
    for c in range(space.N):
        key = [0] * space.nvars
        key[space.z(a, c)] += 1
        key[space.zbar(b, c)] += 1
        terms[tuple(key)] = GR(1)
    return Polynomial(space, terms)


def hermitian_form_product(space: VarSpace, J: MultiIndex) -> Polynomial:
    if J.kind != WKIND:
        raise ShapeError("hermitian_form_product takes a W-kind multi-index")
    J.check(space)
    out = Polynomial.constant(space, 1)
    for a, row in enumerate(J.exponents):
        for b, e in enumerate(row):
            if e:
                out = out * hermitian_form(space, a, b) ** e
    return out


def bihomogeneous_basis(space: VarSpace, p: int, n: int) -> list[tuple]:
    """Monomial keys of bidegree (p, n) in (Z, Zbar), deterministic order."""
    nz = space.nz
    tail = (0,) * space.nw
    return [a + b + tail for a in enumerate_exponents(nz, p) for b in enumerate_exponents(nz, n)]


@dataclass(eq=False)
class FischerDecomposition:
    bidegree: tuple[int, int]
    quotients: dict[MultiIndex, Polynomial]
    remainder: Polynomial
    diagonal_index: int | None = None
    dependency_dim: int = 0
    forms: dict[MultiIndex, Polynomial] = field(default_factory=dict, repr=False)

    @property
    def variant(self) -> str:
        return "high" if self.diagonal_index is None else f"low:{self.diagonal_index}"

    def multiplier(self, J: MultiIndex) -> Polynomial:
        """The operator whose star must annihilate the remainder."""
        q = self.forms[J]
        if self.diagonal_index is None:
            return q
        j = self.diagonal_index - 1
        return Polynomial.z(q.space, j, j) * q

    def reconstruct(self) -> Polynomial:
        acc = self.remainder
        for J, Q in self.quotients.items():
            if self.diagonal_index is None:
                acc = acc + Q * self.forms[J]
            else:
                acc = acc + self.multiplier(J) * Q.conjugate()
        return acc

    def to_json(self) -> dict:
        return {
            "bidegree": list(self.bidegree),
            "variant": self.variant,
            "quotients": [{"J": J.to_list(), "Q": Q.to_json()} for J, Q in self.quotients.items()],
            "remainder": self.remainder.to_json(),
            "dependency_dim": self.dependency_dim,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "FischerDecomposition":
        R = Polynomial.from_json(doc["remainder"])
        space = R.space
        quotients = {}
        for item in doc.get("quotients", []):
            J = MultiIndex(WKIND, item["J"])
            J.check(space)
            quotients[J] = Polynomial.from_json(item["Q"], space)
        variant = doc.get("variant", "high")
        j = None if variant == "high" else int(variant.split(":", 1)[1])
        forms = {J: hermitian_form_product(space, J) for J in quotients}
        return cls(tuple(doc["bidegree"]), quotients, R, j, int(doc.get("dependency_dim", 0)), forms)

    def __eq__(self, other):
        if not isinstance(other, FischerDecomposition):
            return NotImplemented
        return (self.bidegree, self.variant, self.quotients, self.remainder) == (
            other.bidegree, other.variant, other.quotients, other.remainder)

    def annihilation_defects(self) -> dict[MultiIndex, Polynomial]:
        """Nonzero values of multiplier(J)* applied to the remainder."""
        out = {}
        for J in self.forms:
            v = star_apply(self.multiplier(J), self.remainder)
            if v:
                out[J] = v
        return out


def _check_bihomogeneous(P: Polynomial, p: int, n: int):
    if p < 0 or n < 0:
        raise BidegreeError("bidegree entries must be non-negative")
    if not P.is_bihomogeneous(p, n):
        raise BidegreeError(f"polynomial is not bihomogeneous of bidegree ({p}, {n})")


def _solve_quotients(P: Polynomial, tests: list[Polynomial], spanning: list[Polynomial],
                     weights: list[int]):
    """Coefficients d with t*(P - sum d_i s_i) = 0 for every t, min weighted norm.

    The operator matrix t*(s_i) is real for our spanning sets, so the real and
    imaginary parts of d are solved as two rational systems.
    """
    rows: dict[tuple, dict[int, Fraction]] = {}
    for ti, t in enumerate(tests):
        for i, s in enumerate(spanning):
            for k, c in star_apply(t, s).terms.items():
                if c.im:
                    raise ShapeError("operator matrix is not real")
                rows.setdefault((ti, k), {})[i] = c.re
    rhs_keys = {}
    for ti, t in enumerate(tests):
        for k, c in star_apply(t, P).terms.items():
            rhs_keys[(ti, k)] = c
            rows.setdefault((ti, k), {})
    order = sorted(rows)
    A = [rows[key] for key in order]
    b = [rhs_keys.get(key, ZERO) for key in order]
    n = len(spanning)
    parts = []
    kernel = None
    for comp in ("re", "im"):
        sol = solve_sparse([dict(r) for r in A], [getattr(x, comp) for x in b], n)
        if sol.particular is None:
            raise ArithmeticError("Fischer system unexpectedly inconsistent")
        kernel = sol.kernel
        part = [sol.particular.get(i, Fraction(0)) for i in range(n)]
        if kernel:
            dense_k = [[v.get(i, Fraction(0)) for i in range(n)] for v in kernel]
            part = list(min_norm_point(part, dense_k, weights))
        parts.append(part)
    d = [GR(r, i) for r, i in zip(*parts)]
    return d, len(kernel)


def decompose_high(P: Polynomial, p: int, n: int) -> FischerDecomposition:
    """P = sum_J Q_J(Z) q_J + R with q_J* R = 0, for bidegree (p, n), p >= n."""
    _check_bihomogeneous(P, p, n)
    if p < n:
        raise BidegreeError("decompose_high needs p >= n; use decompose_low")
    space = P.space
    Js = enumerate_multiindices(WKIND, space, n)
    forms = {J: hermitian_form_product(space, J) for J in Js}
    hs = enumerate_exponents(space.nz, p - n)
    pad = (0,) * (space.nz + space.nw)
    labels, spanning, weights = [], [], []
    for J in Js:
        for h in hs:
            mono = Polynomial(space, {h + pad: GR(1)}, _trusted=True)
            labels.append((J, h))
            spanning.append(forms[J] * mono)
            weights.append(fischer_weight(h))
    d, dep = _solve_quotients(P, [forms[J] for J in Js], spanning, weights)
    quotients = {J: Polynomial.zero(space) for J in Js}
    for (J, h), c in zip(labels, d):
        if c:
            quotients[J] = quotients[J] + Polynomial(space, {h + pad: c}, _trusted=True)
    R = P
    for s, c in zip(spanning, d):
        if c:
            R = R - s.scale(c)
    return FischerDecomposition((p, n), quotients, R, None, dep, forms)


def decompose_low(P: Polynomial, p: int, n: int, j: int) -> FischerDecomposition:
    """P = z_jj sum_J conj(Q_J) q_J + R with (z_jj q_J)* R = 0, for p < n.

    ``j`` is 1-based and must satisfy 1 <= j <= min(m, N).
    """
    _check_bihomogeneous(P, p, n)
    if p >= n:
        raise BidegreeError("decompose_low needs p < n; use decompose_high")
    space = P.space
    if not 1 <= j <= min(space.m, space.N):
        raise IndexError(f"diagonal index j={j} outside 1..{min(space.m, space.N)}")
    Js = enumerate_multiindices(WKIND, space, p - 1)
    forms = {J: hermitian_form_product(space, J) for J in Js}
    if not Js:
        return FischerDecomposition((p, n), {}, P, j, 0, forms)
    zjj = Polynomial.z(space, j - 1, j - 1)
    hs = enumerate_exponents(space.nz, n - p + 1)
    nz, nw = space.nz, space.nw
    labels, spanning, weights = [], [], []
    tests = [zjj * forms[J] for J in Js]
    for J, t in zip(Js, tests):
        for h in hs:
            mono = Polynomial(space, {(0,) * nz + h + (0,) * nw: GR(1)}, _trusted=True)
            labels.append((J, h))
            spanning.append(t * mono)
            weights.append(fischer_weight(h))
    d, dep = _solve_quotients(P, tests, spanning, weights)
    quotients = {J: Polynomial.zero(space) for J in Js}
    for (J, h), c in zip(labels, d):
        if c:
            # the stored quotient is holomorphic; its conjugate multiplies z_jj q_J
            quotients[J] = quotients[J] + Polynomial(space, {h + (0,) * (nz + nw): c.conjugate()}, _trusted=True)
    R = P
    for s, c in zip(spanning, d):
        if c:
            R = R - s.scale(c)
    return FischerDecomposition((p, n), quotients, R, j, dep, forms)


def kernel_basis(space: VarSpace, p: int, n: int, index_set: Sequence[MultiIndex] | None = None,
                 variant: str = "high") -> list[Polynomial]:
    """Basis of the bihomogeneous (p, n) polynomials killed by every multiplier star.

    ``variant`` is ``"high"`` or ``"low:j"``.  The basis is read off the reduced
    echelon form over the monomial order of :func:`bihomogeneous_basis`.
    """
    if variant == "high":
        if p < n:
            raise BidegreeError("high variant needs p >= n")
        Js = list(index_set) if index_set is not None else enumerate_multiindices(WKIND, space, n)
        tests = [hermitian_form_product(space, J) for J in Js]
    elif variant.startswith("low:"):
        j = int(variant[4:])
        if p >= n:
            raise BidegreeError("low variant needs p < n")
        if not 1 <= j <= min(space.m, space.N):
            raise IndexError(f"diagonal index j={j} outside 1..{min(space.m, space.N)}")
        Js = list(index_set) if index_set is not None else enumerate_multiindices(WKIND, space, p - 1)
        zjj = Polynomial.z(space, j - 1, j - 1)
        tests = [zjj * hermitian_form_product(space, J) for J in Js]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    basis = bihomogeneous_basis(space, p, n)
    rows: dict[tuple, dict[int, Fraction]] = {}
    for i, key in enumerate(basis):
        mono = Polynomial(space, {key: GR(1)}, _trusted=True)
        for ti, t in enumerate(tests):
            for k, c in star_apply(t, mono).terms.items():
                rows.setdefault((ti, k), {})[i] = c.re
    sol = solve_sparse([rows[k] for k in sorted(rows)], None, len(basis))
    return [Polynomial(space, {basis[i]: GR(v) for i, v in vec.items()}) for vec in sol.kernel]
