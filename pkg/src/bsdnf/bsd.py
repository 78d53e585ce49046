"""BSD models W = Z conj(Z)^t, perturbed submanifolds and exact linear automorphisms."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Sequence

from sympy import factorint
from sympy.ntheory import sqrt_mod

from .errors import BidegreeError, DimsError, NormalizationError, ShapeError
from .exactalg import GR, ONE, ZERO, format_rational, solve_exact
from .fischer import hermitian_form
from .polyring import MatrixPolynomial, Polynomial, VarSpace

__all__ = [
    "ModelDims",
    "BsdModel",
    "Submanifold",
    "LinearAuto",
    "model_defining_matrix",
    "check_embedding_condition",
    "standard_embedding",
    "apply_linear_auto",
    "random_unitary",
    "random_invertible",
    "complete_unitary",
    "gaussian_sqrt_norm",
    "mat_mul",
    "conj_transpose",
    "identity",
]


@dataclass(frozen=True)
class ModelDims:
    m: int
    N: int
    s: int = 1

    def __post_init__(self):
        if self.m < 1 or self.N < 1:
            raise DimsError(f"model dimensions must be positive, got ({self.m}, {self.N})")
        if not 1 <= self.s <= self.N:
            raise DimsError(f"split parameter s={self.s} outside 1..{self.N}")

    @property
    def space(self) -> VarSpace:
        return VarSpace(self.m, self.N, self.s)

    @property
    def ambient_dim(self) -> int:
        return self.m * self.N + self.m * self.m

    def to_json(self) -> dict:
        return {"m": self.m, "N": self.N, "s": self.s}

    @classmethod
    def from_json(cls, doc) -> "ModelDims":
        return cls(int(doc["m"]), int(doc["N"]), int(doc.get("s", 1)))

    def __str__(self):
        return f"({self.m},{self.N})"


@dataclass(frozen=True)
class BsdModel:
    dims: ModelDims

    def defining_matrix(self) -> MatrixPolynomial:
        return model_defining_matrix(self)


def model_defining_matrix(model: BsdModel | ModelDims) -> MatrixPolynomial:
    dims = model.dims if isinstance(model, BsdModel) else model
    sp = dims.space
    return MatrixPolynomial.from_function(sp, dims.m, dims.m, lambda a, b: hermitian_form(sp, a, b))


def check_embedding_condition(src: ModelDims, dst: ModelDims) -> tuple[bool, dict]:
    lhs = dst.N - dst.m
    rhs = 2 * (src.N - src.m)
    report = {
        "m<=m'": src.m <= dst.m,
        "N<=N'": src.N <= dst.N,
        "N'-m'<2(N-m)": lhs < rhs,
        "N'-m'": lhs,
        "2(N-m)": rhs,
    }
    ok = report["m<=m'"] and report["N<=N'"] and report["N'-m'<2(N-m)"]
    return ok, report


def standard_embedding(src: ModelDims, dst: ModelDims, D: int = 1):
    """Z -> [[Z,0],[0,0]], W -> [[W,0],[0,0]]."""
    from .mapeq import FormalMap

    return FormalMap.standard(src, dst, D)


# ---------------------------------------------------------------------------
# exact matrices over Q(i) as lists of lists of GR


def identity(n: int) -> list[list[GR]]:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def mat_mul(A, B):
    if len(A[0]) != len(B):
        raise ShapeError("matrix shapes do not compose")
    return [[sum((A[i][k] * B[k][j] for k in range(len(B)) if A[i][k] and B[k][j]), ZERO)
             for j in range(len(B[0]))] for i in range(len(A))]


def conj_transpose(A):
    return [[A[i][j].conjugate() for i in range(len(A))] for j in range(len(A[0]))]


def mat_inverse(A):
    n = len(A)
    if any(len(r) != n for r in A):
        raise ShapeError("only square matrices are invertible")
    cols = []
    for j in range(n):
        e = [ONE if i == j else ZERO for i in range(n)]
        sol = solve_exact(A, e, ncols=n)
        if sol.particular is None or sol.rank < n:
            raise NormalizationError("matrix is singular")
        cols.append(sol.particular)
    return [[GR.coerce(cols[j][i]) for j in range(n)] for i in range(n)]


def _mat(rows) -> tuple[tuple[GR, ...], ...]:
    return tuple(tuple(GR.coerce(x) for x in r) for r in rows)


@dataclass(frozen=True)
class LinearAuto:
    """Z -> A Z U, W -> A W conj(A)^t with A invertible and U exactly unitary."""

    A: tuple
    U: tuple

    def __post_init__(self):
        A, U = _mat(self.A), _mat(self.U)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "U", U)
        if any(len(r) != len(A) for r in A) or any(len(r) != len(U) for r in U):
            raise ShapeError("A and U must be square")
        if mat_mul(U, conj_transpose(U)) != identity(len(U)):
            raise ShapeError("U is not exactly unitary")
        if solve_exact([list(r) for r in A], ncols=len(A)).rank < len(A):
            raise ShapeError("A is singular")

    @classmethod
    def identity(cls, m: int, N: int) -> "LinearAuto":
        return cls(identity(m), identity(N))

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def N(self) -> int:
        return len(self.U)

    def is_identity(self) -> bool:
        return self.A == _mat(identity(self.m)) and self.U == _mat(identity(self.N))

    def inverse(self) -> "LinearAuto":
        return LinearAuto(mat_inverse([list(r) for r in self.A]), conj_transpose(self.U))

    def then(self, other: "LinearAuto") -> "LinearAuto":
        """Apply self first, then other: Z -> A2 (A1 Z U1) U2."""
        return LinearAuto(mat_mul(other.A, self.A), mat_mul(self.U, other.U))

    def z_images(self, space: VarSpace) -> list[Polynomial]:
        """Polynomials (A Z U)_{ac} for every z slot, in the given space."""
        m, N = self.m, self.N
        if (space.m, space.N) != (m, N):
            raise ShapeError("automorphism size does not match the variable space")
        out = []
        for a in range(m):
            for c in range(N):
                terms = {}
                for b in range(m):
                    if not self.A[a][b]:
                        continue
                    for d in range(N):
                        coef = self.A[a][b] * self.U[d][c]
                        if coef:
                            key = [0] * space.nvars
                            key[space.z(b, d)] = 1
                            terms[tuple(key)] = terms.get(tuple(key), ZERO) + coef
                out.append(Polynomial(space, terms))
        return out

    def w_images(self, space: VarSpace) -> list[Polynomial]:
        """Polynomials (A W A^*)_{ab} for every w slot."""
        m = self.m
        Ah = conj_transpose([list(r) for r in self.A])
        out = []
        for a in range(m):
            for b in range(m):
                terms = {}
                for c in range(m):
                    for d in range(m):
                        coef = self.A[a][c] * Ah[d][b]
                        if coef:
                            key = [0] * space.nvars
                            key[space.w(c, d)] = 1
                            terms[tuple(key)] = terms.get(tuple(key), ZERO) + coef
                out.append(Polynomial(space, terms))
        return out

    def to_json(self) -> dict:
        enc = lambda M: [[[format_rational(x.re), format_rational(x.im)] for x in r] for r in M]
        return {"A": enc(self.A), "U": enc(self.U)}

    @classmethod
    def from_json(cls, doc) -> "LinearAuto":
        dec = lambda M: [[GR.parse(x[0], x[1]) for x in r] for r in M]
        return cls(dec(doc["A"]), dec(doc["U"]))


def apply_linear_auto(auto: LinearAuto, obj, side: str = "source"):
    """Transform a model, submanifold or formal map by ``auto``.

    For a BsdModel the transformed defining matrix is returned (it equals the
    original one).  For a FormalMap ``side`` selects precomposition
    (``"source"``) or postcomposition (``"target"``).
    """
    if isinstance(obj, (BsdModel, ModelDims)):
        dims = obj.dims if isinstance(obj, BsdModel) else obj
        return _transform_model_equation(auto, dims)
    if isinstance(obj, Submanifold):
        return obj.transformed(auto)
    if hasattr(obj, "compose_linear"):
        if side == "source":
            return obj.compose_linear(source=auto)
        if side == "target":
            return obj.compose_linear(target=auto)
        raise ValueError(f"side must be 'source' or 'target', got {side!r}")
    raise TypeError(f"cannot apply a linear automorphism to {type(obj).__name__}")


def _transform_model_equation(auto: LinearAuto, dims: ModelDims) -> MatrixPolynomial:
    """(A Z U)(conj(A Z U))^t expressed in the original variables, times A^{-1} ... A^{-*}.

    Returns A^{-1} Z' conj(Z')^t A^{-*} with Z' = A Z U, which must equal Z conj(Z)^t.
    """
    sp = dims.space
    if (auto.m, auto.N) != (dims.m, dims.N):
        raise ShapeError("automorphism size does not match the model")
    zimg = auto.z_images(sp)
    Zp = MatrixPolynomial(sp, [[zimg[a * dims.N + c] for c in range(dims.N)] for a in range(dims.m)])
    W = Zp.matmul(Zp.conjugate_transpose())
    Ainv = mat_inverse([list(r) for r in auto.A])
    return _const_sandwich(Ainv, W, conj_transpose(Ainv))


def _const_sandwich(L, M: MatrixPolynomial, R) -> MatrixPolynomial:
    sp = M.space
    rows = []
    for a in range(len(L)):
        row = []
        for b in range(len(R[0])):
            acc = Polynomial.zero(sp)
            for c in range(M.rows):
                if not L[a][c]:
                    continue
                for d in range(M.cols):
                    if R[d][b] and M[c, d]:
                        acc = acc + M[c, d].scale(L[a][c] * R[d][b])
            row.append(acc)
        rows.append(row)
    return MatrixPolynomial(sp, rows)


# ---------------------------------------------------------------------------
# submanifolds


@dataclass
class Submanifold:
    """W = Z conj(Z)^t + sum_{k+l>=3} phi_{k,l}(Z, conj Z), truncated at total degree D."""

    model: BsdModel
    phi: dict[tuple[int, int], MatrixPolynomial] = field(default_factory=dict)
    D: int = 3

    def __post_init__(self):
        dims = self.model.dims
        clean = {}
        for (k, l), M in self.phi.items():
            if k + l < 3:
                raise BidegreeError(f"phi_{k},{l}: perturbations start at total degree 3")
            if k + l > self.D:
                raise BidegreeError(f"phi_{k},{l} exceeds truncation degree {self.D}")
            if (M.rows, M.cols) != (dims.m, dims.m):
                raise ShapeError("phi matrices must be m x m")
            for _, e in M:
                if not e.is_bihomogeneous(k, l):
                    raise BidegreeError(f"phi_{k},{l} has an entry that is not of bidegree ({k},{l})")
            if not M.is_zero():
                clean[(k, l)] = M
        self.phi = clean
        for (k, l), M in clean.items():
            other = clean.get((l, k))
            mirror = other.conjugate_transpose() if other is not None else MatrixPolynomial.zeros(M.space, M.rows, M.cols)
            if M != mirror:
                raise ShapeError(f"phi_{k},{l} violates Hermitian symmetry with phi_{l},{k}")

    @classmethod
    def model_only(cls, dims: ModelDims, D: int = 3) -> "Submanifold":
        return cls(BsdModel(dims), {}, D)

    @property
    def dims(self) -> ModelDims:
        return self.model.dims

    @property
    def space(self) -> VarSpace:
        return self.dims.space

    def is_model(self) -> bool:
        return not self.phi

    def perturbation(self, maxdeg: int | None = None) -> MatrixPolynomial:
        """sum phi_{k,l} as one matrix, optionally truncated."""
        d = self.dims
        out = MatrixPolynomial.zeros(self.space, d.m, d.m)
        for (k, l), M in sorted(self.phi.items()):
            if maxdeg is None or k + l <= maxdeg:
                out = out + M
        return out

    def w_substitution(self, maxdeg: int | None = None) -> MatrixPolynomial:
        """Z conj(Z)^t + phi: the value of W on the submanifold."""
        return model_defining_matrix(self.model) + self.perturbation(maxdeg)

    def transformed(self, auto: LinearAuto) -> "Submanifold":
        """Equation in the new coordinates Z' = A Z U, W' = A W A^*."""
        if not self.phi:
            return self
        inv = auto.inverse()
        sp = self.space
        zimg = inv.z_images(sp)
        images = zimg + [p.conjugate() for p in zimg] + [None] * sp.nw
        phi = {}
        for (k, l), M in self.phi.items():
            sub = M.map(lambda e: e.substitute(images, sp))
            phi[(k, l)] = _const_sandwich([list(r) for r in auto.A], sub, conj_transpose([list(r) for r in auto.A]))
        return Submanifold(self.model, phi, self.D)

    def to_json(self) -> dict:
        return {
            "dims": self.dims.to_json(),
            "D": self.D,
            "phi": [{"k": k, "l": l, "entries": M.to_json()} for (k, l), M in sorted(self.phi.items())],
        }

    @classmethod
    def from_json(cls, doc) -> "Submanifold":
        dims = ModelDims.from_json(doc["dims"])
        phi = {}
        for item in doc.get("phi", []):
            phi[(int(item["k"]), int(item["l"]))] = MatrixPolynomial.from_json(dims.space, item["entries"])
        return cls(BsdModel(dims), phi, int(doc.get("D", 3)))

    def __eq__(self, other):
        if not isinstance(other, Submanifold):
            return NotImplemented
        return self.dims == other.dims and self.D == other.D and self.phi == other.phi


# ---------------------------------------------------------------------------
# exact unitaries


_PYTHAGOREAN = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (7, 24, 25), (20, 21, 29), (12, 35, 37)]


def random_unitary(n: int, rng: random.Random, steps: int = 3) -> list[list[GR]]:
    """Product of signed permutations, unit Gaussian diagonals and rational rotations."""
    U = identity(n)
    for _ in range(steps):
        perm = list(range(n))
        rng.shuffle(perm)
        P = [[ZERO] * n for _ in range(n)]
        for i, j in enumerate(perm):
            P[i][j] = GR(rng.choice((1, -1)))
        a, b, c = rng.choice(_PYTHAGOREAN)
        Dg = identity(n)
        for i in range(n):
            choice = rng.randrange(4)
            if choice == 0:
                Dg[i][i] = GR(Fraction(a, c), Fraction(b, c) * rng.choice((1, -1)))
            elif choice == 1:
                Dg[i][i] = GR(0, rng.choice((1, -1)))
        R = identity(n)
        if n >= 2:
            i, j = rng.sample(range(n), 2)
            a, b, c = rng.choice(_PYTHAGOREAN)
            R[i][i] = GR(Fraction(a, c))
            R[j][j] = GR(Fraction(a, c))
            R[i][j] = GR(Fraction(b, c))
            R[j][i] = GR(Fraction(-b, c))
        U = mat_mul(mat_mul(mat_mul(U, P), Dg), R)
    return U


def random_invertible(n: int, rng: random.Random, bound: int = 3) -> list[list[GR]]:
    while True:
        A = [[GR(rng.randint(-bound, bound), rng.randint(-bound, bound)) for _ in range(n)] for _ in range(n)]
        if solve_exact(A, ncols=n).rank == n:
            return A


def _prime_two_squares(p: int) -> tuple[int, int]:
    """x^2 + y^2 = p for a prime p = 2 or p = 1 mod 4 (Hermite-Serret)."""
    if p == 2:
        return 1, 1
    r = min(sqrt_mod(-1, p, all_roots=True))
    a, b = p, r
    while b * b > p:
        a, b = b, a % b
    return b, isqrt(p - b * b)


def _two_squares(n: int) -> tuple[int, int] | None:
    """(x, y) with x^2 + y^2 = n, or None when n is not a sum of two squares."""
    if n < 0:
        return None
    if n == 0:
        return 0, 0
    acc = (1, 0)
    for p, e in factorint(n).items():
        if p % 4 == 3:
            if e % 2:
                return None
            g = (p ** (e // 2), 0)
        else:
            x, y = _prime_two_squares(p)
            g = (1, 0)
            for _ in range(e):
                g = (g[0] * x - g[1] * y, g[0] * y + g[1] * x)
        acc = (acc[0] * g[0] - acc[1] * g[1], acc[0] * g[1] + acc[1] * g[0])
    return abs(acc[0]), abs(acc[1])


def gaussian_sqrt_norm(nu: Fraction) -> GR | None:
    """A Gaussian rational c with |c|^2 = nu, or None when none exists.

    A real c is returned whenever nu is a rational square.
    """
    nu = Fraction(nu)
    if nu <= 0:
        return None
    a, b = nu.numerator, nu.denominator
    ra, rb = isqrt(a), isqrt(b)
    if ra * ra == a and rb * rb == b:
        return GR(Fraction(ra, rb))
    sa, sb = _two_squares(a), _two_squares(b)
    if sa is None or sb is None:
        return None
    return GR(*sa) / GR(*sb)


def _inner(u, v) -> GR:
    return sum((x * y.conjugate() for x, y in zip(u, v) if x and y), ZERO)


def complete_unitary(rows: Sequence[Sequence[GR]], n: int, seed: int = 0, tries: int = 400) -> list[list[GR]]:
    """Extend orthonormal rows to an exactly unitary n x n matrix over Q(i)."""
    basis = [[GR.coerce(x) for x in r] for r in rows]
    for i, u in enumerate(basis):
        for j, v in enumerate(basis):
            if _inner(u, v) != (1 if i == j else 0):
                raise NormalizationError("rows are not orthonormal")
    rng = random.Random(seed)
    candidates = [[ONE if i == j else ZERO for i in range(n)] for j in range(n)]
    attempt = 0
    while len(basis) < n:
        if candidates:
            v = candidates.pop(0)
        else:
            attempt += 1
            if attempt > tries:
                raise NormalizationError("no exact orthonormal completion found")
            v = [GR(rng.randint(-3, 3), rng.randint(-3, 3)) for _ in range(n)]
        for r in basis:
            c = _inner(v, r)
            if c:
                v = [x - c * y for x, y in zip(v, r)]
        nu = _inner(v, v).re
        if not nu:
            continue
        c = gaussian_sqrt_norm(nu)
        if c is None:
            continue
        inv = c.inverse()
        basis.append([x * inv for x in v])
    return basis
