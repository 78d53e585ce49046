"""Exact Gaussian-rational scalars and exact linear solving.

Two solvers live here.  ``solve_exact`` is the dense Gauss-Jordan routine
over :class:`GaussianRational` used by the Fischer projections; ``solve_sparse``
works on real rational systems stored as sparse rows and splits them into
connected blocks first, which is what keeps the degree-step systems tractable.
Both return the kernel in the canonical form read off the reduced row echelon
form (identity on the free columns), so kernels are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

from .errors import DegenerateScalar, ParseError, ShapeError

__all__ = [
    "GaussianRational",
    "GR",
    "ZERO",
    "ONE",
    "I",
    "LinearSolution",
    "SparseSolution",
    "scalar_arith",
    "parse_rational",
    "format_rational",
    "solve_exact",
    "solve_sparse",
    "rank",
    "min_norm_point",
]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"`` or ``"p"``; decimals are rejected to keep inputs exact."""
    s = text.strip()
    if not s or any(ch in s for ch in ".eE"):
        raise ParseError(f"not an exact rational string: {text!r}")
    try:
        return Fraction(s)
    except ValueError:
        raise ParseError(f"not an exact rational string: {text!r}")


def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class GaussianRational:
    """Exact complex number ``re + im*i`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational):
            if im:
                raise TypeError("im must be omitted when copying a GaussianRational")
            self.re, self.im = re.re, re.im
            return
        if isinstance(re, complex):
            raise TypeError("floating complex values are not exact")
        self.re = _frac(re)
        self.im = _frac(im)

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        return x if isinstance(x, GaussianRational) else cls(x)

    @classmethod
    def parse(cls, re: str, im: str = "0") -> "GaussianRational":
        return cls(parse_rational(re), parse_rational(im))

    # arithmetic

    def __add__(self, other):
        if not isinstance(other, GaussianRational):
            if isinstance(other, (int, Rational)):
                return GaussianRational(self.re + other, self.im)
            return NotImplemented
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, GaussianRational):
            if isinstance(other, (int, Rational)):
                return GaussianRational(self.re - other, self.im)
            return NotImplemented
        return GaussianRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        if not isinstance(other, GaussianRational):
            if isinstance(other, (int, Rational)):
                return GaussianRational(self.re * other, self.im * other)
            return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussianRational(a * c, 0)
        return GaussianRational(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        """Squared modulus ``re**2 + im**2``."""
        return self.re * self.re + self.im * self.im

    def inverse(self) -> "GaussianRational":
        n = self.norm()
        if not n:
            raise DegenerateScalar("division by zero Gaussian rational")
        return GaussianRational(self.re / n, -self.im / n)

    def __truediv__(self, other):
        if not isinstance(other, GaussianRational):
            if isinstance(other, (int, Rational)):
                if not other:
                    raise DegenerateScalar("division by zero")
                return GaussianRational(self.re / other, self.im / other)
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) * self.inverse()

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out, base = ONE, self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # comparisons

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Rational)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return not self.im

    def __repr__(self):
        return f"GaussianRational({self})"

    def __str__(self):
        re, im = format_rational(self.re), format_rational(self.im)
        if not self.im:
            return re
        unit = {Fraction(1): "i", Fraction(-1): "-i"}
        if not self.re:
            return unit.get(self.im, f"{im}*i")
        sign = "-" if self.im < 0 else "+"
        mag = abs(self.im)
        return f"{re} {sign} " + ("i" if mag == 1 else f"{format_rational(mag)}*i")


GR = GaussianRational
ZERO = GR(0)
ONE = GR(1)
I = GR(0, 1)


def scalar_arith(a: GR, b: GR | None, op: str) -> GR:
    a = GR.coerce(a)
    if op == "conj":
        return a.conjugate()
    b = GR.coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown scalar op {op!r}")


# ---------------------------------------------------------------------------
# dense solving over any exact field (Fraction or GaussianRational entries)


@dataclass(frozen=True)
class LinearSolution:
    particular: tuple | None
    kernel_basis: tuple[tuple, ...]
    rank: int
    pivots: tuple[int, ...] = ()

    @property
    def consistent(self) -> bool:
        return self.particular is not None


def _rref(rows: list[list], ncols: int, rhs: list | None):
    """In-place Gauss-Jordan; returns pivot columns.

    Pivot rule: columns left to right, first row (in row order) with a nonzero
    entry at or below the current pivot row.
    """
    pivots = []
    r = 0
    nrows = len(rows)
    for c in range(ncols):
        if r == nrows:
            break
        sel = next((i for i in range(r, nrows) if rows[i][c]), None)
        if sel is None:
            continue
        if sel != r:
            rows[r], rows[sel] = rows[sel], rows[r]
            if rhs is not None:
                rhs[r], rhs[sel] = rhs[sel], rhs[r]
        inv = 1 / rows[r][c]
        prow = [x * inv for x in rows[r]]
        rows[r] = prow
        if rhs is not None:
            rhs[r] = rhs[r] * inv
        for i in range(nrows):
            if i == r:
                continue
            f = rows[i][c]
            if not f:
                continue
            row = rows[i]
            for j in range(c, ncols):
                if prow[j]:
                    row[j] = row[j] - f * prow[j]
            if rhs is not None:
                rhs[i] = rhs[i] - f * rhs[r]
        pivots.append(c)
        r += 1
    return pivots


def solve_exact(A: Sequence[Sequence], b: Sequence | None = None, ncols: int | None = None) -> LinearSolution:
    """Solve ``A x = b`` exactly; ``b=None`` means the homogeneous system.

    Entries may be ints, Fractions or GaussianRationals; the zero and one of
    the result follow the entry type (GaussianRational as soon as any entry is).
    """
    nrows = len(A)
    if ncols is None:
        if not nrows:
            raise ShapeError("cannot infer column count of an empty matrix")
        ncols = len(A[0])
    for row in A:
        if len(row) != ncols:
            raise ShapeError("ragged matrix")
    if b is not None and len(b) != nrows:
        raise ShapeError(f"rhs has length {len(b)}, matrix has {nrows} rows")

    complex_mode = any(isinstance(x, GR) for row in A for x in row) or (
        b is not None and any(isinstance(x, GR) for x in b)
    )
    conv = GR.coerce if complex_mode else _frac
    zero = ZERO if complex_mode else Fraction(0)
    one = ONE if complex_mode else Fraction(1)

    rows = [[conv(x) for x in row] for row in A]
    rhs = [conv(x) for x in b] if b is not None else [zero] * nrows
    pivots = _rref(rows, ncols, rhs)
    rk = len(pivots)
    if any(rhs[i] for i in range(rk, nrows)):
        particular = None
    else:
        x = [zero] * ncols
        for i, c in enumerate(pivots):
            x[c] = rhs[i]
        particular = tuple(x)
    pivot_set = set(pivots)
    kernel = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        v = [zero] * ncols
        v[f] = one
        for i, c in enumerate(pivots):
            if rows[i][f]:
                v[c] = -rows[i][f]
        kernel.append(tuple(v))
    return LinearSolution(particular, tuple(kernel), rk, tuple(pivots))


def rank(vectors: Sequence[Sequence]) -> int:
    if not vectors:
        return 0
    return solve_exact([list(v) for v in vectors]).rank


def min_norm_point(particular: Sequence, kernel: Sequence[Sequence], weights: Sequence | None = None):
    """Point of ``particular + span(kernel)`` of least weighted norm.

    The norm is ``sum(w_i * |x_i|**2)`` with positive rational weights; the
    minimizer is unique and does not depend on which point or basis of the
    affine space is passed in.
    """
    n = len(particular)
    if not kernel:
        return tuple(particular)
    w = [Fraction(1)] * n if weights is None else [_frac(x) for x in weights]
    complex_mode = any(isinstance(x, GR) for x in particular) or any(
        isinstance(x, GR) for v in kernel for x in v
    )

    def cj(x):
        return x.conjugate() if complex_mode else x

    # normal equations  (K^* W K) y = K^* W p
    k = len(kernel)
    support = [[i for i in range(n) if v[i]] for v in kernel]
    gram = [[0] * k for _ in range(k)]
    for a in range(k):
        va = kernel[a]
        sa = set(support[a])
        for bb in range(a, k):
            vb = kernel[bb]
            s = sum((w[i] * cj(va[i]) * vb[i] for i in support[bb] if i in sa), 0)
            gram[a][bb] = s
            gram[bb][a] = cj(s) if complex_mode else s
    rhs = [sum((w[i] * cj(kernel[a][i]) * particular[i] for i in support[a]), 0) for a in range(k)]
    sol = solve_exact(gram, rhs, ncols=k)
    if sol.particular is None:
        raise ShapeError("kernel vectors are not linearly independent")
    y = sol.particular
    out = list(particular)
    for a in range(k):
        if y[a]:
            for i in support[a]:
                out[i] = out[i] - y[a] * kernel[a][i]
    return tuple(out)


# ---------------------------------------------------------------------------
# sparse rational solving with block decomposition


@dataclass
class SparseSolution:
    """Solution of a sparse rational system.

    ``particular`` and kernel vectors are dicts ``column -> Fraction``;
    absent columns are zero.
    """

    ncols: int
    particular: dict | None
    kernel: list[dict]
    pivots: list[int]
    blocks: list[tuple[list[int], list[int]]] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.particular is not None

    @property
    def rank(self) -> int:
        return len(self.pivots)


def _components(rows: list[dict], ncols: int):
    parent = list(range(ncols))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for row in rows:
        it = iter(row)
        first = next(it, None)
        if first is None:
            continue
        ra = find(first)
        for c in it:
            rc = find(c)
            if rc != ra:
                parent[rc] = ra
    groups: dict[int, list[int]] = {}
    for c in range(ncols):
        groups.setdefault(find(c), []).append(c)
    row_groups: dict[int, list[int]] = {}
    for i, row in enumerate(rows):
        if row:
            row_groups.setdefault(find(next(iter(row))), []).append(i)
    out = []
    for root, cols in groups.items():
        out.append((cols, row_groups.get(root, [])))
    out.sort(key=lambda t: t[0][0])
    return out


def _sparse_rref_block(cols: list[int], rows: list[dict], rhs: list[Fraction]):
    col_rows: dict[int, set[int]] = {c: set() for c in cols}
    for i, row in enumerate(rows):
        for c in row:
            col_rows[c].add(i)
    active = set(range(len(rows)))
    pivot_of: dict[int, int] = {}
    for c in cols:
        cand = [i for i in col_rows[c] if i in active]
        if not cand:
            continue
        r = min(cand, key=lambda i: (len(rows[i]), i))
        prow = rows[r]
        inv = 1 / prow[c]
        if inv != 1:
            for j in prow:
                prow[j] *= inv
            rhs[r] *= inv
        for i in list(col_rows[c]):
            if i == r:
                continue
            row = rows[i]
            f = row[c]
            for j, v in prow.items():
                nv = row.get(j, 0) - f * v
                if nv:
                    if j not in row:
                        col_rows[j].add(i)
                    row[j] = nv
                elif j in row:
                    del row[j]
                    col_rows[j].discard(i)
            rhs[i] -= f * rhs[r]
        active.discard(r)
        pivot_of[c] = r
    consistent = not any(rhs[i] for i in active)
    return pivot_of, consistent


def solve_sparse(rows: Iterable[dict], rhs: Sequence | None, ncols: int) -> SparseSolution:
    """Solve a sparse rational system ``rows . x = rhs``.

    Each row is a dict ``column -> rational``.  The result is identical to the
    dense reduced-echelon solution with the same column order.
    """
    rows = [{c: _frac(v) for c, v in r.items() if v} for r in rows]
    for r in rows:
        for c in r:
            if not 0 <= c < ncols:
                raise ShapeError(f"column {c} out of range")
    b = [Fraction(0)] * len(rows) if rhs is None else [_frac(x) for x in rhs]
    if len(b) != len(rows):
        raise ShapeError("rhs length does not match row count")
    consistent = not any(b[i] for i, r in enumerate(rows) if not r)
    particular: dict = {}
    kernel: list[dict] = []
    pivots: list[int] = []
    blocks = _components(rows, ncols)
    for cols, ridx in blocks:
        brows = [rows[i] for i in ridx]
        brhs = [b[i] for i in ridx]
        pivot_of, ok = _sparse_rref_block(cols, brows, brhs)
        consistent = consistent and ok
        for c, r in pivot_of.items():
            if brhs[r]:
                particular[c] = brhs[r]
        pivots.extend(pivot_of)
        for f in cols:
            if f in pivot_of:
                continue
            v = {f: Fraction(1)}
            for c, r in pivot_of.items():
                x = brows[r].get(f)
                if x:
                    v[c] = -x
            kernel.append(v)
    kernel.sort(key=lambda v: max(v))
    return SparseSolution(ncols, particular if consistent else None, kernel, sorted(pivots), blocks)
