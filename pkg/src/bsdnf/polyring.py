"""Sparse polynomials in the matrix variables Z (m x N), Zbar and W (m x m).

Zbar is an independent formal variable block; reality of an expression is a
predicate checked on demand, never a storage constraint.

A monomial key is one flat exponent tuple laid out as
``Z entries (row major) + Zbar entries (row major) + W entries (row major)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, factorial
from typing import Iterator, Mapping, Sequence

from .errors import ShapeError
from .exactalg import GR, ZERO, format_rational, parse_rational

__all__ = [
    "VarSpace",
    "MultiIndex",
    "ZKIND",
    "WKIND",
    "Polynomial",
    "MatrixPolynomial",
    "monomial",
    "poly_arith",
    "bidegree_component",
    "conjugate",
    "enumerate_multiindices",
    "enumerate_exponents",
    "multiindex_count",
]

ZKIND = "Z"
WKIND = "W"
Z_ZBAR = "Z_Zbar"
Z_W = "Z_W"


@dataclass(frozen=True)
class VarSpace:
    m: int
    N: int
    s: int = 1  # split parameter; stored only, no arithmetic effect

    def __post_init__(self):
        if self.m < 1 or self.N < 1:
            raise ShapeError(f"VarSpace needs m, N >= 1, got m={self.m}, N={self.N}")
        if not 1 <= self.s <= self.N:
            raise ShapeError(f"split parameter s={self.s} outside 1..{self.N}")

    @property
    def nz(self) -> int:
        return self.m * self.N

    @property
    def nw(self) -> int:
        return self.m * self.m

    @property
    def nvars(self) -> int:
        return 2 * self.nz + self.nw

    def z(self, a: int, c: int) -> int:
        """Flat slot of z_{a c} (0-based row a, column c)."""
        return a * self.N + c

    def zbar(self, a: int, c: int) -> int:
        return self.nz + a * self.N + c

    def w(self, a: int, b: int) -> int:
        return 2 * self.nz + a * self.m + b

    def zero_key(self) -> tuple:
        return (0,) * self.nvars

    def same_shape(self, other: "VarSpace") -> bool:
        return self.m == other.m and self.N == other.N


@dataclass(frozen=True)
class MultiIndex:
    """Exponent matrix of Z-type (m x N) or W-type (m x m)."""

    kind: str
    exponents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.kind not in (ZKIND, WKIND):
            raise ShapeError(f"unknown multi-index kind {self.kind!r}")
        exps = tuple(tuple(int(e) for e in row) for row in self.exponents)
        if not exps or len({len(r) for r in exps}) != 1:
            raise ShapeError("exponent matrix must be a non-empty rectangle")
        if any(e < 0 for r in exps for e in r):
            raise ShapeError("negative exponent")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def from_flat(cls, kind: str, space: VarSpace, flat: Sequence[int]) -> "MultiIndex":
        ncol = space.N if kind == ZKIND else space.m
        if len(flat) != space.m * ncol:
            raise ShapeError("flat exponent vector has the wrong length")
        return cls(kind, tuple(tuple(flat[a * ncol:(a + 1) * ncol]) for a in range(space.m)))

    @classmethod
    def zero(cls, kind: str, space: VarSpace) -> "MultiIndex":
        ncol = space.N if kind == ZKIND else space.m
        return cls(kind, ((0,) * ncol,) * space.m)

    @property
    def flat(self) -> tuple[int, ...]:
        return tuple(e for row in self.exponents for e in row)

    @property
    def length(self) -> int:
        return sum(self.flat)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.exponents), len(self.exponents[0])

    def factorial(self) -> int:
        out = 1
        for e in self.flat:
            out *= factorial(e)
        return out

    def check(self, space: VarSpace):
        want = (space.m, space.N) if self.kind == ZKIND else (space.m, space.m)
        if self.shape != want:
            raise ShapeError(f"{self.kind}-index has shape {self.shape}, expected {want}")

    def to_list(self) -> list[list[int]]:
        return [list(r) for r in self.exponents]


def enumerate_exponents(nvars: int, total: int) -> list[tuple[int, ...]]:
    """All exponent vectors of given length, descending lexicographic."""
    if nvars == 0:
        return [()] if total == 0 else []
    out = []
    # stars and bars, bars placed so the first slot is largest first
    for bars in combinations(range(total + nvars - 1), nvars - 1):
        prev = -1
        vec = []
        for b in bars:
            vec.append(b - prev - 1)
            prev = b
        vec.append(total + nvars - 2 - prev)
        out.append(tuple(vec))
    out.sort(reverse=True)
    return out


def multiindex_count(kind: str, space: VarSpace, p: int) -> int:
    d = space.nz if kind == ZKIND else space.nw
    return comb(p + d - 1, p)


def enumerate_multiindices(kind: str, space: VarSpace, p: int) -> list[MultiIndex]:
    if p < 0:
        return []
    d = space.nz if kind == ZKIND else space.nw
    return [MultiIndex.from_flat(kind, space, e) for e in enumerate_exponents(d, p)]


def _add_keys(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


class Polynomial:
    """Immutable sparse polynomial with Gaussian-rational coefficients."""

    __slots__ = ("space", "terms", "_hash")

    def __init__(self, space: VarSpace, terms: Mapping[tuple, GR] | None = None, *, _trusted=False):
        self.space = space
        if _trusted:
            self.terms = terms
        else:
            clean = {}
            n = space.nvars
            for k, c in (terms or {}).items():
                k = tuple(int(e) for e in k)
                if len(k) != n:
                    raise ShapeError("monomial key has the wrong length for this space")
                c = GR.coerce(c)
                if c:
                    clean[k] = clean.get(k, ZERO) + c
                    if not clean[k]:
                        del clean[k]
            self.terms = clean
        self._hash = None

    # constructors

    @classmethod
    def zero(cls, space: VarSpace) -> "Polynomial":
        return cls(space, {}, _trusted=True)

    @classmethod
    def constant(cls, space: VarSpace, c=1) -> "Polynomial":
        c = GR.coerce(c)
        return cls(space, {space.zero_key(): c} if c else {}, _trusted=True)

    @classmethod
    def var(cls, space: VarSpace, slot: int, c=1) -> "Polynomial":
        key = [0] * space.nvars
        key[slot] = 1
        return cls(space, {tuple(key): GR.coerce(c)})

    @classmethod
    def z(cls, space, a, c):
        return cls.var(space, space.z(a, c))

    @classmethod
    def zbar(cls, space, a, c):
        return cls.var(space, space.zbar(a, c))

    @classmethod
    def w(cls, space, a, b):
        return cls.var(space, space.w(a, b))

    # basic protocol

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[tuple, GR]]:
        return iter(self.terms.items())

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.space.same_shape(other.space) and self.terms == other.terms
        if isinstance(other, (int, GR)) or hasattr(other, "denominator"):
            return self == Polynomial.constant(self.space, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.space.m, self.space.N, frozenset(self.terms.items())))
        return self._hash

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if not self.space.same_shape(other.space):
                raise ShapeError("polynomials live in different variable spaces")
            return other
        return Polynomial.constant(self.space, other)

    def coeff(self, key: tuple) -> GR:
        return self.terms.get(tuple(key), ZERO)

    def sorted_terms(self) -> list[tuple[tuple, GR]]:
        return sorted(self.terms.items(), key=lambda kv: term_sort_key(self.space, kv[0]))

    # arithmetic

    def __add__(self, other):
        other = self._coerce(other)
        if len(other.terms) > len(self.terms):
            big, small = other.terms, self.terms
        else:
            big, small = self.terms, other.terms
        out = dict(big)
        for k, c in small.items():
            v = out.get(k)
            if v is None:
                out[k] = c
            else:
                v = v + c
                if v:
                    out[k] = v
                else:
                    del out[k]
        return Polynomial(self.space, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.space, {k: -c for k, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = GR.coerce(c)
        if not c:
            return Polynomial.zero(self.space)
        return Polynomial(self.space, {k: v * c for k, v in self.terms.items()}, _trusted=True)

    def mul(self, other, maxdeg: int | None = None) -> "Polynomial":
        """Product, optionally dropping terms of weighted degree above ``maxdeg``."""
        other = self._coerce(other)
        if not self.terms or not other.terms:
            return Polynomial.zero(self.space)
        out: dict = {}
        space = self.space
        if maxdeg is not None:
            wd = lambda k: weighted_degree(space, k)
            a_items = [(k, c, wd(k)) for k, c in self.terms.items()]
            b_items = [(k, c, wd(k)) for k, c in other.terms.items()]
            b_items.sort(key=lambda t: t[2])
        else:
            a_items = [(k, c, 0) for k, c in self.terms.items()]
            b_items = [(k, c, 0) for k, c in other.terms.items()]
        for ka, ca, da in a_items:
            for kb, cb, db in b_items:
                if maxdeg is not None and da + db > maxdeg:
                    break
                k = tuple(x + y for x, y in zip(ka, kb))
                v = out.get(k)
                p = ca * cb
                if v is None:
                    out[k] = p
                else:
                    v = v + p
                    if v:
                        out[k] = v
                    else:
                        del out[k]
        return Polynomial(space, out, _trusted=True)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return self.mul(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.space, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # gradings

    def z_degree(self, key) -> int:
        return sum(key[: self.space.nz])

    def degrees(self, key) -> tuple[int, int, int]:
        nz = self.space.nz
        return sum(key[:nz]), sum(key[nz: 2 * nz]), sum(key[2 * nz:])

    def filter(self, pred) -> "Polynomial":
        return Polynomial(self.space, {k: c for k, c in self.terms.items() if pred(k)}, _trusted=True)

    def truncate(self, maxdeg: int) -> "Polynomial":
        return self.filter(lambda k: weighted_degree(self.space, k) <= maxdeg)

    def homogeneous_part(self, d: int) -> "Polynomial":
        """Terms of weighted degree d (z, zbar weight 1; w weight 2)."""
        return self.filter(lambda k: weighted_degree(self.space, k) == d)

    def max_degree(self) -> int:
        return max((weighted_degree(self.space, k) for k in self.terms), default=-1)

    def bidegrees(self) -> set[tuple[int, int]]:
        return {self.degrees(k)[:2] for k in self.terms}

    def is_bihomogeneous(self, p: int, n: int) -> bool:
        return all(self.degrees(k) == (p, n, 0) for k in self.terms)

    def has_w(self) -> bool:
        nz2 = 2 * self.space.nz
        return any(any(k[nz2:]) for k in self.terms)

    # calculus and conjugation

    def derivative(self, slot: int, times: int = 1) -> "Polynomial":
        out = {}
        for k, c in self.terms.items():
            e = k[slot]
            if e < times:
                continue
            f = 1
            for t in range(times):
                f *= e - t
            nk = list(k)
            nk[slot] = e - times
            out[tuple(nk)] = c * f
        return Polynomial(self.space, out, _trusted=True)

    def conjugate(self) -> "Polynomial":
        if self.has_w():
            raise ShapeError("conjugate() is defined on (Z, Zbar) polynomials; W has no conjugate block")
        nz = self.space.nz
        out = {}
        for k, c in self.terms.items():
            out[k[nz: 2 * nz] + k[:nz] + k[2 * nz:]] = c.conjugate()
        return Polynomial(self.space, out, _trusted=True)

    def is_real(self) -> bool:
        return not self.has_w() and self.conjugate() == self

    def with_space(self, space: VarSpace) -> "Polynomial":
        """Reattach to a space of identical shape (e.g. differing only in s)."""
        if not space.same_shape(self.space):
            raise ShapeError("with_space needs an identically shaped space")
        return Polynomial(space, self.terms, _trusted=True)

    def substitute(self, images: Sequence["Polynomial | None"], target: VarSpace, maxdeg: int | None = None) -> "Polynomial":
        """Replace every variable slot by a polynomial over ``target``.

        ``images[slot] is None`` keeps nothing for that slot: monomials using
        it must not occur.  Terms above ``maxdeg`` (weighted, in ``target``)
        are dropped along the way.
        """
        if len(images) != self.space.nvars:
            raise ShapeError("need one image per variable slot")
        cache: dict[tuple[int, int], Polynomial] = {}

        def power(slot, e):
            key = (slot, e)
            if key not in cache:
                img = images[slot]
                if img is None:
                    raise ShapeError(f"variable slot {slot} has no image")
                cache[key] = img if e == 1 else power(slot, e - 1).mul(img, maxdeg)
            return cache[key]

        acc = Polynomial.zero(target)
        one = Polynomial.constant(target, 1)
        for k, c in self.sorted_terms():
            t = one
            for slot, e in enumerate(k):
                if e:
                    t = t.mul(power(slot, e), maxdeg)
                    if not t:
                        break
            if t:
                acc = acc + t.scale(c)
        return acc

    # display

    def __repr__(self):
        return f"Polynomial({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k, c in self.sorted_terms():
            mono = monomial_str(self.space, k)
            cs = str(c)
            if mono:
                if c == 1:
                    parts.append(mono)
                elif c == -1:
                    parts.append("-" + mono)
                else:
                    parts.append(f"({cs})*{mono}" if " " in cs else f"{cs}*{mono}")
            else:
                parts.append(f"({cs})" if " " in cs else cs)
        return " + ".join(parts).replace("+ -", "- ")

    # serialization

    def to_json(self) -> dict:
        sp = self.space
        terms = []
        for k, c in self.sorted_terms():
            zk, zbk, wk = split_key(sp, k)
            t = {}
            if any(zk):
                t["zexp"] = MultiIndex.from_flat(ZKIND, sp, zk).to_list()
            if any(zbk):
                t["zbarexp"] = MultiIndex.from_flat(ZKIND, sp, zbk).to_list()
            if any(wk):
                t["wexp"] = MultiIndex.from_flat(WKIND, sp, wk).to_list()
            t["re"] = format_rational(c.re)
            t["im"] = format_rational(c.im)
            terms.append(t)
        return {"m": sp.m, "N": sp.N, "terms": terms}

    @classmethod
    def from_json(cls, doc: Mapping, space: VarSpace | None = None) -> "Polynomial":
        if space is None:
            space = VarSpace(int(doc["m"]), int(doc["N"]), int(doc.get("s", 1)))
        elif "m" in doc and (int(doc["m"]), int(doc["N"])) != (space.m, space.N):
            raise ShapeError("polynomial document dimensions do not match")
        out = {}
        for t in doc.get("terms", []):
            key = []
            for name, kind in (("zexp", ZKIND), ("zbarexp", ZKIND), ("wexp", WKIND)):
                if name in t:
                    mi = MultiIndex(kind, t[name])
                    mi.check(space)
                    key.extend(mi.flat)
                else:
                    key.extend(MultiIndex.zero(kind, space).flat)
            c = GR(parse_rational(str(t.get("re", "0"))), parse_rational(str(t.get("im", "0"))))
            k = tuple(key)
            out[k] = out.get(k, ZERO) + c
        return cls(space, out)


def split_key(space: VarSpace, key: tuple) -> tuple[tuple, tuple, tuple]:
    nz = space.nz
    return key[:nz], key[nz: 2 * nz], key[2 * nz:]


def weighted_degree(space: VarSpace, key: tuple) -> int:
    nz2 = 2 * space.nz
    return sum(key[:nz2]) + 2 * sum(key[nz2:])


def term_sort_key(space: VarSpace, key: tuple):
    # graded lex, highest first; Z block before Zbar before W
    return (-weighted_degree(space, key), tuple(-e for e in key))


def monomial_str(space: VarSpace, key: tuple) -> str:
    names = []
    for a in range(space.m):
        for c in range(space.N):
            names.append(f"z{a + 1}{c + 1}")
    names += [n.replace("z", "zb") for n in names]
    for a in range(space.m):
        for b in range(space.m):
            names.append(f"w{a + 1}{b + 1}")
    parts = []
    for n, e in zip(names, key):
        if e == 1:
            parts.append(n)
        elif e > 1:
            parts.append(f"{n}^{e}")
    return "*".join(parts)


def monomial(space: VarSpace, I_Z: MultiIndex | None = None, I_Zbar: MultiIndex | None = None,
             J_W: MultiIndex | None = None, c=1) -> Polynomial:
    key = []
    for mi, kind in ((I_Z, ZKIND), (I_Zbar, ZKIND), (J_W, WKIND)):
        if mi is None:
            mi = MultiIndex.zero(kind, space)
        if mi.kind != kind:
            raise ShapeError(f"expected a {kind}-kind multi-index, got {mi.kind}")
        mi.check(space)
        key.extend(mi.flat)
    c = GR.coerce(c)
    return Polynomial(space, {tuple(key): c} if c else {}, _trusted=True)


def poly_arith(p: Polynomial, q: Polynomial, op: str) -> Polynomial:
    if not p.space.same_shape(q.space):
        raise ShapeError("polynomials live in different variable spaces")
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown polynomial op {op!r}")


def bidegree_component(p: Polynomial, k: int, l: int, grading: str = Z_ZBAR) -> Polynomial:
    if grading == Z_ZBAR:
        return p.filter(lambda key: p.degrees(key)[:2] == (k, l))
    if grading == Z_W:
        return p.filter(lambda key: (p.degrees(key)[0], p.degrees(key)[2]) == (k, l))
    raise ValueError(f"unknown grading {grading!r}")


def conjugate(p: Polynomial) -> Polynomial:
    return p.conjugate()


class MatrixPolynomial:
    """Rectangular grid of polynomials over one variable space."""

    __slots__ = ("space", "rows", "cols", "entries")

    def __init__(self, space: VarSpace, entries: Sequence[Sequence[Polynomial]]):
        entries = tuple(tuple(r) for r in entries)
        if not entries or not entries[0] or len({len(r) for r in entries}) != 1:
            raise ShapeError("matrix entries must form a non-empty rectangle")
        for r in entries:
            for e in r:
                if not e.space.same_shape(space):
                    raise ShapeError("matrix entry lives in a different variable space")
        self.space = space
        self.rows = len(entries)
        self.cols = len(entries[0])
        self.entries = entries

    @classmethod
    def zeros(cls, space: VarSpace, rows: int, cols: int) -> "MatrixPolynomial":
        z = Polynomial.zero(space)
        return cls(space, [[z] * cols for _ in range(rows)])

    @classmethod
    def from_function(cls, space, rows, cols, fn) -> "MatrixPolynomial":
        return cls(space, [[fn(a, b) for b in range(cols)] for a in range(rows)])

    def __getitem__(self, ab):
        a, b = ab
        return self.entries[a][b]

    def __iter__(self):
        for a in range(self.rows):
            for b in range(self.cols):
                yield (a, b), self.entries[a][b]

    def __eq__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def is_zero(self) -> bool:
        return not any(e for r in self.entries for e in r)

    def _same(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ShapeError("matrix shapes differ")

    def __add__(self, other):
        self._same(other)
        return MatrixPolynomial(self.space, [[x + y for x, y in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __sub__(self, other):
        self._same(other)
        return MatrixPolynomial(self.space, [[x - y for x, y in zip(r, s)] for r, s in zip(self.entries, other.entries)])

    def __neg__(self):
        return self.map(lambda e: -e)

    def map(self, fn) -> "MatrixPolynomial":
        return MatrixPolynomial(self.space, [[fn(e) for e in r] for r in self.entries])

    def matmul(self, other: "MatrixPolynomial", maxdeg: int | None = None) -> "MatrixPolynomial":
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        out = []
        for a in range(self.rows):
            row = []
            for b in range(other.cols):
                acc = Polynomial.zero(self.space)
                for c in range(self.cols):
                    x, y = self.entries[a][c], other.entries[c][b]
                    if x and y:
                        acc = acc + x.mul(y, maxdeg)
                row.append(acc)
            out.append(row)
        return MatrixPolynomial(self.space, out)

    def transpose(self) -> "MatrixPolynomial":
        return MatrixPolynomial(self.space, [[self.entries[a][b] for a in range(self.rows)] for b in range(self.cols)])

    def conjugate_transpose(self) -> "MatrixPolynomial":
        return self.transpose().map(lambda e: e.conjugate())

    def is_hermitian(self) -> bool:
        return self.rows == self.cols and self == self.conjugate_transpose()

    def __repr__(self):
        return "MatrixPolynomial([" + ", ".join("[" + ", ".join(str(e) for e in r) + "]" for r in self.entries) + "])"

    def to_json(self) -> list:
        return [[e.to_json()["terms"] for e in r] for r in self.entries]

    @classmethod
    def from_json(cls, space: VarSpace, doc) -> "MatrixPolynomial":
        return cls(space, [[Polynomial.from_json({"terms": e}, space) for e in r] for r in doc])
