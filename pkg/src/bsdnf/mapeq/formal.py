"""Truncated formal maps (F, G) between BSD models."""

from __future__ import annotations

from dataclasses import dataclass

from ..bsd import LinearAuto, ModelDims, _const_sandwich, conj_transpose
from ..errors import ShapeError, TruncationError
from ..exactalg import GR, ZERO, format_rational
from ..polyring import WKIND, ZKIND, MatrixPolynomial, MultiIndex, Polynomial, VarSpace, split_key

__all__ = ["FormalMap"]


def _holomorphic(p: Polynomial) -> bool:
    nz = p.space.nz
    return not any(any(k[nz: 2 * nz]) for k in p.terms)


def _encode_matrix(M) -> list:
    return [[[format_rational(x.re), format_rational(x.im)] for x in r] for r in M]


@dataclass(eq=False)
class FormalMap:
    """Z' = F(Z, W), W' = G(Z, W), truncated: F to weighted degree D, G to D + 1.

    Entries are polynomials over the source variable space with no Zbar.
    """

    src: ModelDims
    dst: ModelDims
    D: int
    F: MatrixPolynomial
    G: MatrixPolynomial

    def __post_init__(self):
        if self.D < 1:
            raise TruncationError("truncation degree must be at least 1")
        sp = self.src.space
        if (self.F.rows, self.F.cols) != (self.dst.m, self.dst.N):
            raise ShapeError(f"F must be {self.dst.m}x{self.dst.N}")
        if (self.G.rows, self.G.cols) != (self.dst.m, self.dst.m):
            raise ShapeError(f"G must be {self.dst.m}x{self.dst.m}")
        for M, top in ((self.F, self.D), (self.G, self.D + 1)):
            if not M.space.same_shape(sp):
                raise ShapeError("map entries must live in the source variable space")
            for _, e in M:
                if not _holomorphic(e):
                    raise ShapeError("map entries must be holomorphic (no Zbar)")
                if sp.zero_key() in e.terms:
                    raise ShapeError("formal maps have no constant terms")
                if e.max_degree() > top:
                    raise TruncationError(f"entry of weighted degree {e.max_degree()} exceeds truncation {top}")

    # constructors

    @classmethod
    def standard(cls, src: ModelDims, dst: ModelDims, D: int = 1) -> "FormalMap":
        from ..errors import DimsError

        if src.m > dst.m or src.N > dst.N:
            raise DimsError(f"source {src} does not fit into target {dst}")
        sp = src.space
        zero = Polynomial.zero(sp)
        F = MatrixPolynomial.from_function(
            sp, dst.m, dst.N, lambda a, c: Polynomial.z(sp, a, c) if a < src.m and c < src.N else zero)
        G = MatrixPolynomial.from_function(
            sp, dst.m, dst.m, lambda a, b: Polynomial.w(sp, a, b) if a < src.m and b < src.m else zero)
        return cls(src, dst, D, F, G)

    @classmethod
    def identity(cls, dims: ModelDims, D: int = 1) -> "FormalMap":
        return cls.standard(dims, dims, D)

    @property
    def space(self) -> VarSpace:
        return self.src.space

    def replace(self, F=None, G=None, D=None) -> "FormalMap":
        return FormalMap(self.src, self.dst, self.D if D is None else D,
                         self.F if F is None else F, self.G if G is None else G)

    def truncated(self, D: int) -> "FormalMap":
        return FormalMap(self.src, self.dst, D, self.F.map(lambda e: e.truncate(D)),
                         self.G.map(lambda e: e.truncate(D + 1)))

    def extended(self, D: int) -> "FormalMap":
        """Same coefficients, larger truncation degree (new coefficients zero)."""
        if D < self.D:
            raise TruncationError("extended() cannot lower the truncation degree")
        return FormalMap(self.src, self.dst, D, self.F, self.G)

    def F_part(self, d: int) -> MatrixPolynomial:
        return self.F.map(lambda e: e.homogeneous_part(d))

    def G_part(self, d: int) -> MatrixPolynomial:
        return self.G.map(lambda e: e.homogeneous_part(d))

    def __eq__(self, other):
        if not isinstance(other, FormalMap):
            return NotImplemented
        return (self.src, self.dst, self.D) == (other.src, other.dst, other.D) and self.F == other.F and self.G == other.G

    def same_coefficients(self, other: "FormalMap") -> bool:
        return self.src == other.src and self.dst == other.dst and self.F == other.F and self.G == other.G

    # coefficient view

    def _coeffs(self, M: MatrixPolynomial) -> dict:
        sp = self.space
        out: dict = {}
        for (a, b), e in M:
            for key, c in e.terms.items():
                zk, _, wk = split_key(sp, key)
                label = (sum(zk), sum(wk), zk, wk)
                mat = out.setdefault(label, [[ZERO] * M.cols for _ in range(M.rows)])
                mat[a][b] = c
        return out

    def f_coeffs(self) -> dict:
        """(k, l, I, J) -> m' x N' matrix, with k = |I| and l = |J| (flat I, J)."""
        return self._coeffs(self.F)

    def g_coeffs(self) -> dict:
        return self._coeffs(self.G)

    # composition

    def compose_linear(self, source: LinearAuto | None = None, target: LinearAuto | None = None) -> "FormalMap":
        """target o self o source, with both automorphisms linear."""
        sp = self.space
        F, G = self.F, self.G
        if source is not None:
            images = source.z_images(sp) + [None] * sp.nz + source.w_images(sp)
            F = F.map(lambda e: e.substitute(images, sp))
            G = G.map(lambda e: e.substitute(images, sp))
        if target is not None:
            if (target.m, target.N) != (self.dst.m, self.dst.N):
                raise ShapeError("target automorphism does not match the target model")
            A = [list(r) for r in target.A]
            U = [list(r) for r in target.U]
            F = _const_sandwich(A, F, U)
            G = _const_sandwich(A, G, conj_transpose(A))
        return FormalMap(self.src, self.dst, self.D, F, G)

    def substitute_into(self, p: Polynomial, maxdeg: int) -> Polynomial:
        """p(F, G) for p over the target space (holomorphic in Z', W')."""
        sp = self.space
        dsp = self.dst.space
        images = [self.F[a, c] for a in range(self.dst.m) for c in range(self.dst.N)]
        images += [None] * dsp.nz
        images += [self.G[a, b] for a in range(self.dst.m) for b in range(self.dst.m)]
        return p.substitute(images, sp, maxdeg)

    def compose(self, inner: "FormalMap | None" = None, outer: "FormalMap | None" = None) -> "FormalMap":
        """outer o self o inner, truncated at self.D."""
        H = self
        D = self.D
        if inner is not None:
            if inner.dst != self.src or inner.src != self.src:
                raise ShapeError("inner map must be a self-map of the source model")
            F = H.F.map(lambda e: inner.substitute_into(e.with_space(inner.dst.space), D))
            G = H.G.map(lambda e: inner.substitute_into(e.with_space(inner.dst.space), D + 1))
            H = FormalMap(self.src, self.dst, D, F, G)
        if outer is not None:
            if outer.src != self.dst or outer.dst != self.dst:
                raise ShapeError("outer map must be a self-map of the target model")
            sp = self.space
            F = MatrixPolynomial(sp, [[H.substitute_into(e, D) for e in r] for r in outer.F.entries])
            G = MatrixPolynomial(sp, [[H.substitute_into(e, D + 1) for e in r] for r in outer.G.entries])
            H = FormalMap(self.src, self.dst, D, F, G)
        return H

    # serialization

    def to_json(self) -> dict:
        def items(M):
            out = []
            for (k, l, zk, wk), mat in sorted(self._coeffs(M).items(), key=lambda kv: (kv[0][0] + 2 * kv[0][1], kv[0])):
                out.append({
                    "k": k,
                    "l": l,
                    "I": MultiIndex.from_flat(ZKIND, self.space, zk).to_list(),
                    "J": MultiIndex.from_flat(WKIND, self.space, wk).to_list(),
                    "entries": _encode_matrix(mat),
                })
            return out

        return {"src": self.src.to_json(), "dst": self.dst.to_json(), "D": self.D, "f": items(self.F), "g": items(self.G)}

    @classmethod
    def from_json(cls, doc) -> "FormalMap":
        src = ModelDims.from_json(doc["src"])
        dst = ModelDims.from_json(doc["dst"])
        sp = src.space
        nz = sp.nz

        def build(items, rows, cols):
            acc = [[{} for _ in range(cols)] for _ in range(rows)]
            for it in items:
                I = MultiIndex(ZKIND, it["I"])
                J = MultiIndex(WKIND, it["J"])
                I.check(sp)
                J.check(sp)
                if ("k" in it and int(it["k"]) != I.length) or ("l" in it and int(it["l"]) != J.length):
                    raise ShapeError("k, l must equal the lengths of I, J")
                key = I.flat + (0,) * nz + J.flat
                ent = it["entries"]
                if len(ent) != rows or any(len(r) != cols for r in ent):
                    raise ShapeError("coefficient matrix has the wrong shape")
                for a in range(rows):
                    for b in range(cols):
                        c = GR.parse(str(ent[a][b][0]), str(ent[a][b][1]))
                        if c:
                            acc[a][b][key] = acc[a][b].get(key, ZERO) + c
            return MatrixPolynomial(sp, [[Polynomial(sp, acc[a][b]) for b in range(cols)] for a in range(rows)])

        return cls(src, dst, int(doc["D"]), build(doc.get("f", []), dst.m, dst.N), build(doc.get("g", []), dst.m, dst.m))

    def __repr__(self):
        return f"FormalMap({self.src}->{self.dst}, D={self.D}, F={self.F!r}, G={self.G!r})"

