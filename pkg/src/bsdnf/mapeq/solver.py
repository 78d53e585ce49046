"""Degree-by-degree linear solves for the mapping equation, and gauge fixing.

Step ``d`` has as unknowns the weighted-degree-``d`` part of F and the
weighted-degree-``d+1`` part of G (z has weight 1, w weight 2).  With the
lower-degree data fixed, the total-degree-``d+1`` block of the residual is

    dG(Z, Z Zbar^t) - F_1 conj(dF)^t - dF conj(F_1)^t  +  b,

which is real-linear in the unknowns.  Every complex unknown is split into
its real and imaginary part and the system is solved over Q.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from ..bsd import ModelDims, Submanifold
from ..errors import InconsistentSystem, ShapeError
from ..exactalg import GR, min_norm_point, solve_sparse
from ..fischer import fischer_weight
from ..polyring import MatrixPolynomial, Polynomial, VarSpace, enumerate_exponents, split_key
from .formal import FormalMap
from .residual import residual_matrix

__all__ = [
    "Label",
    "DegreeStepSolution",
    "step_labels",
    "degree_step_solve",
    "gauge_fix",
    "identity_kernel",
    "gauge_directions",
    "gauge_generators",
    "analyze_gauge",
    "GaugeAnalysis",
    "monomials_of_weight",
    "assign_step",
]

# (block, row, col, monomial key over the source space, part) with
# block "F" or "G" and part 0 = real, 1 = imaginary.
Label = tuple


def monomials_of_weight(space: VarSpace, d: int) -> list[tuple]:
    """Holomorphic monomial keys Z^I W^J with |I| + 2|J| = d."""
    nz, nw = space.nz, space.nw
    out = []
    for l in range(d // 2 + 1):
        for I in enumerate_exponents(nz, d - 2 * l):
            for J in enumerate_exponents(nw, l):
                out.append(I + (0,) * nz + J)
    return out


def step_labels(src: ModelDims, dst: ModelDims, d: int) -> list[Label]:
    sp = src.space
    labels = []
    fk = monomials_of_weight(sp, d)
    gk = monomials_of_weight(sp, d + 1)
    for a in range(dst.m):
        for b in range(dst.N):
            for key in fk:
                labels.append(("F", a, b, key, 0))
                labels.append(("F", a, b, key, 1))
    for a in range(dst.m):
        for b in range(dst.m):
            for key in gk:
                labels.append(("G", a, b, key, 0))
                labels.append(("G", a, b, key, 1))
    return labels


def label_weight(label: Label) -> int:
    """Fischer weight I! J! of the monomial carried by a label."""
    return fischer_weight(label[3])


def _model_w_images(sp: VarSpace) -> list:
    images = [Polynomial.z(sp, a, c) for a in range(sp.m) for c in range(sp.N)]
    images += [None] * sp.nz
    W = [[Polynomial.zero(sp)] * sp.m for _ in range(sp.m)]
    for a in range(sp.m):
        for b in range(sp.m):
            acc = Polynomial.zero(sp)
            for c in range(sp.N):
                acc = acc + Polynomial.z(sp, a, c) * Polynomial.zbar(sp, b, c)
            W[a][b] = acc
    images += [W[a][b] for a in range(sp.m) for b in range(sp.m)]
    return images


def _unit_contributions(F1: MatrixPolynomial, dst: ModelDims, label_base, mono_sub: Polynomial):
    """Contributions of one complex unknown u to the residual.

    Returns (u_terms, ubar_terms): lists of ((row, col), polynomial) such that
    the residual changes by sum u*poly + sum conj(u)*poly.
    """
    blk, a, b = label_base
    u_terms, ubar_terms = [], []
    if blk == "G":
        u_terms.append(((a, b), mono_sub))
        return u_terms, ubar_terms
    conj_sub = mono_sub.conjugate()
    # -dF conj(F_1)^t : entry (a, r) gets -u mono * conj(F_1[r, b])
    for r in range(dst.m):
        f = F1[r, b]
        if f:
            u_terms.append(((a, r), -(mono_sub * f.conjugate())))
    # -F_1 conj(dF)^t : entry (r, a) gets -F_1[r, b] * conj(u) conj(mono)
    for r in range(dst.m):
        f = F1[r, b]
        if f:
            ubar_terms.append(((r, a), -(f * conj_sub)))
    return u_terms, ubar_terms


@dataclass
class DegreeStepSolution:
    d: int
    labels: list[Label]
    particular: dict[int, Fraction]
    kernel: list[dict[int, Fraction]]
    blocks: list
    rows: list[dict[int, Fraction]]
    rhs: list[Fraction]
    row_keys: list[tuple]
    src: ModelDims
    dst: ModelDims
    gauge_fixed: dict[Label, Fraction] = field(default_factory=dict)

    @property
    def index(self) -> dict[Label, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    @property
    def kernel_dim(self) -> int:
        return len(self.kernel)

    def by_label(self, vec: dict[int, Fraction]) -> dict[Label, Fraction]:
        return {self.labels[i]: v for i, v in vec.items() if v}

    def from_label(self, vec: dict[Label, Fraction]) -> dict[int, Fraction]:
        idx = self.index
        out = {}
        for lab, v in vec.items():
            if v:
                if lab not in idx:
                    raise ShapeError(f"label {lab!r} is not an unknown of this step")
                out[idx[lab]] = Fraction(v)
        return out

    def apply(self, vec: dict[int, Fraction]) -> list[Fraction]:
        """Rows of the linear operator applied to a coefficient vector."""
        return [sum((c * vec[j] for j, c in row.items() if j in vec), Fraction(0)) for row in self.rows]

    def solves(self, vec: dict[int, Fraction]) -> bool:
        return self.apply(vec) == list(self.rhs)

    def extract(self, map_: FormalMap) -> dict[int, Fraction]:
        """The map's own coefficients for this step's unknowns."""
        out = {}
        for i, (blk, a, b, key, part) in enumerate(self.labels):
            M = map_.F if blk == "F" else map_.G
            c = M[a, b].terms.get(key)
            if c is not None:
                v = c.im if part else c.re
                if v:
                    out[i] = v
        return out

    def assign(self, map_: FormalMap, vec: dict[int, Fraction]) -> FormalMap:
        """Replace the step's coefficient block of ``map_`` by ``vec``."""
        return assign_step(map_, self.d, self.by_label(vec))

    def weights(self) -> list[int]:
        return [label_weight(l) for l in self.labels]


def assign_step(map_: FormalMap, d: int, vec: dict[Label, Fraction]) -> FormalMap:
    """Copy of ``map_`` whose step-d block (F at degree d, G at d+1) is ``vec``."""
    sp = map_.space
    Fe = [[dict(map_.F[a, b].filter(lambda k: _wd(sp, k) != d).terms) for b in range(map_.F.cols)]
          for a in range(map_.F.rows)]
    Ge = [[dict(map_.G[a, b].filter(lambda k: _wd(sp, k) != d + 1).terms) for b in range(map_.G.cols)]
          for a in range(map_.G.rows)]
    acc: dict = {}
    for (blk, a, b, key, part), v in vec.items():
        slot = acc.setdefault((blk, a, b, key), [Fraction(0), Fraction(0)])
        slot[part] += v
    for (blk, a, b, key), (re, im) in acc.items():
        c = GR(re, im)
        if c:
            (Fe if blk == "F" else Ge)[a][b][key] = c
    F = MatrixPolynomial(sp, [[Polynomial(sp, e) for e in r] for r in Fe])
    G = MatrixPolynomial(sp, [[Polynomial(sp, e) for e in r] for r in Ge])
    return FormalMap(map_.src, map_.dst, max(map_.D, d), F, G)


def _wd(sp: VarSpace, key) -> int:
    nz2 = 2 * sp.nz
    return sum(key[:nz2]) + 2 * sum(key[nz2:])


def degree_step_solve(map_: FormalMap, d: int, source: Submanifold | None = None,
                      target: Submanifold | None = None, order: Sequence[Label] | None = None) -> DegreeStepSolution:
    """Solve for the step-``d`` coefficients given the map's lower-degree data.

    ``order`` permutes the unknowns; results keyed by label do not depend on it.
    Raises InconsistentSystem when the prefix does not extend.
    """
    if d < 2:
        raise ValueError("degree steps start at d = 2; the linear part is fixed by normalize_initial")
    if map_.D < d:
        map_ = map_.extended(d)
    src, dst = map_.src, map_.dst
    sp = map_.space
    labels = step_labels(src, dst, d)
    if order is not None:
        if sorted(order) != sorted(labels):
            raise ShapeError("order must be a permutation of the step's unknowns")
        labels = list(order)
    idx = {lab: i for i, lab in enumerate(labels)}

    # prefix residual with the step's unknowns zeroed
    zeroed = FormalMap(src, dst, map_.D,
                       map_.F.map(lambda e: e.filter(lambda k: _wd(sp, k) != d)),
                       map_.G.map(lambda e: e.filter(lambda k: _wd(sp, k) != d + 1)))
    R = residual_matrix(zeroed, source, target, Dmax=d + 1)
    for _, e in R:
        if e.truncate(d):
            raise InconsistentSystem(f"residual does not vanish below degree {d + 1}; the prefix is not an embedding")
    F1 = map_.F_part(1)
    w_images = _model_w_images(sp)

    rows: dict[tuple, dict[int, Fraction]] = {}
    seen = set()
    for lab in labels:
        base = lab[:4]
        if base in seen:
            continue
        seen.add(base)
        blk, a, b, key = base
        mono = Polynomial(sp, {key: GR(1)}, _trusted=True)
        mono_sub = mono.substitute(w_images, sp)
        u_terms, ubar_terms = _unit_contributions(F1, dst, (blk, a, b), mono_sub)
        cx, cy = idx[base + (0,)], idx[base + (1,)]
        # u = x + i y: c*u -> re: c.re x - c.im y ; im: c.im x + c.re y
        for (r, s), poly in u_terms:
            for k, c in poly.terms.items():
                _acc(rows, (r, s, k, 0), cx, c.re)
                _acc(rows, (r, s, k, 0), cy, -c.im)
                _acc(rows, (r, s, k, 1), cx, c.im)
                _acc(rows, (r, s, k, 1), cy, c.re)
        # conj(u) = x - i y: c*conj(u) -> re: c.re x + c.im y ; im: c.im x - c.re y
        for (r, s), poly in ubar_terms:
            for k, c in poly.terms.items():
                _acc(rows, (r, s, k, 0), cx, c.re)
                _acc(rows, (r, s, k, 0), cy, c.im)
                _acc(rows, (r, s, k, 1), cx, c.im)
                _acc(rows, (r, s, k, 1), cy, -c.re)
    bvals: dict[tuple, Fraction] = {}
    for (r, s), e in R:
        for k, c in e.homogeneous_part(d + 1).terms.items():
            if c.re:
                bvals[(r, s, k, 0)] = c.re
            if c.im:
                bvals[(r, s, k, 1)] = c.im
    for key in bvals:
        rows.setdefault(key, {})
    order_rows = sorted(rows)
    A = [{j: v for j, v in rows[k].items() if v} for k in order_rows]
    rhs = [-bvals.get(k, Fraction(0)) for k in order_rows]
    sol = solve_sparse([dict(r) for r in A], rhs, len(labels))
    if sol.particular is None:
        raise InconsistentSystem(f"degree step {d}: no extension of the prefix solves the mapping equation")
    out = DegreeStepSolution(d, labels, sol.particular, sol.kernel, sol.blocks, A, rhs, order_rows, src, dst)
    out.gauge_fixed = gauge_fix(out)
    return out


def _acc(rows, key, col, val):
    if val:
        row = rows.setdefault(key, {})
        v = row.get(col, 0) + val
        if v:
            row[col] = v
        else:
            row.pop(col, None)


def gauge_fix(sol: DegreeStepSolution, particular: dict[int, Fraction] | None = None) -> dict[Label, Fraction]:
    """Minimum-Fischer-norm point of ``particular + span(kernel)``, keyed by label.

    The weights are I! J! of each unknown's monomial, so the result is the
    Fischer-orthogonal representative of the affine solution set; it does not
    depend on the particular solution, the kernel basis or the unknown order.
    """
    p = sol.particular if particular is None else particular
    if not sol.kernel:
        return sol.by_label(p)
    w = sol.weights()
    col_block = {}
    for bi, (cols, _) in enumerate(sol.blocks):
        for c in cols:
            col_block[c] = bi
    kern_by_block: dict[int, list] = {}
    for v in sol.kernel:
        kern_by_block.setdefault(col_block[next(iter(v))], []).append(v)
    p_by_block: dict[int, dict] = {}
    for c, v in p.items():
        if v:
            p_by_block.setdefault(col_block[c], {})[c] = v
    out: dict[int, Fraction] = {}
    for bi, pv in p_by_block.items():
        kv = kern_by_block.get(bi)
        if not kv:
            out.update(pv)
            continue
        cols = sol.blocks[bi][0]
        pos = {c: i for i, c in enumerate(cols)}
        dense_p = [Fraction(0)] * len(cols)
        for c, v in pv.items():
            dense_p[pos[c]] = v
        dense_k = []
        for vec in kv:
            row = [Fraction(0)] * len(cols)
            for c, v in vec.items():
                row[pos[c]] = v
            dense_k.append(row)
        x = min_norm_point(dense_p, dense_k, [w[c] for c in cols])
        for i, v in enumerate(x):
            if v:
                out[cols[i]] = v
    return sol.by_label(out)


# ---------------------------------------------------------------------------
# automorphism (gauge) directions


@lru_cache(maxsize=64)
def _identity_kernel_cached(dims: ModelDims, d: int):
    sol = degree_step_solve(FormalMap.identity(dims, d), d)
    return tuple(tuple(sorted(sol.by_label(v).items())) for v in sol.kernel)


def identity_kernel(dims: ModelDims, d: int) -> list[dict[Label, Fraction]]:
    """Infinitesimal automorphism directions of the model at step d."""
    return [dict(v) for v in _identity_kernel_cached(ModelDims(dims.m, dims.N), d)]


def _pull_back_key(key: tuple, src: VarSpace, dst: VarSpace) -> tuple | None:
    """Z'^I W'^J restricted to Z' = [[Z,0],[0,0]], W' = [[W,0],[0,0]]."""
    zk, _, wk = split_key(dst, key)
    z = [0] * src.nz
    for a in range(dst.m):
        for c in range(dst.N):
            e = zk[a * dst.N + c]
            if e:
                if a >= src.m or c >= src.N:
                    return None
                z[a * src.N + c] = e
    w = [0] * src.nw
    for a in range(dst.m):
        for b in range(dst.m):
            e = wk[a * dst.m + b]
            if e:
                if a >= src.m or b >= src.m:
                    return None
                w[a * src.m + b] = e
    return tuple(z) + (0,) * src.nz + tuple(w)


def gauge_generators(src: ModelDims, dst: ModelDims, d: int) -> list[tuple[str, dict, dict]]:
    """(side, automorphism jet, induced change of the map's step-d data) triples.

    A source jet X acts on H = standard as [[X, 0], [0, 0]]; a target jet X'
    acts as X' restricted to the image of the standard embedding.  Target
    jets that restrict to zero are dropped.
    """
    out = [("source", v, dict(v)) for v in identity_kernel(src, d)]
    ssp, dsp = src.space, dst.space
    for v in identity_kernel(dst, d):
        pulled: dict = {}
        for (blk, a, b, key, part), c in v.items():
            nk = _pull_back_key(key, ssp, dsp)
            if nk is not None:
                lab = (blk, a, b, nk, part)
                pulled[lab] = pulled.get(lab, 0) + c
        pulled = {k: c for k, c in pulled.items() if c}
        if pulled:
            out.append(("target", v, pulled))
    return out


def gauge_directions(src: ModelDims, dst: ModelDims, d: int) -> tuple[list[dict], list[dict]]:
    """(source-side, target-side) automorphism directions at step d, in the map's unknowns."""
    gens = gauge_generators(src, dst, d)
    return [g for side, _, g in gens if side == "source"], [g for side, _, g in gens if side == "target"]


@dataclass
class GaugeAnalysis:
    d: int
    kernel_dim: int
    gauge_dim: int
    gauge_in_kernel: bool
    nongauge: list[dict[Label, Fraction]]

    @property
    def nongauge_dim(self) -> int:
        return len(self.nongauge)


def analyze_gauge(sol: DegreeStepSolution, sdirs: list[dict], tdirs: list[dict]) -> GaugeAnalysis:
    """Compare the solver kernel with the span of automorphism directions.

    The non-gauge directions are the kernel elements Fischer-orthogonal to
    every gauge direction.
    """
    gens = [sol.from_label(v) for v in sdirs + tdirs]
    zero = [Fraction(0)] * len(sol.rows)
    ok = all(_homogeneous_apply(sol, g) == zero for g in gens)
    gauge_rank = solve_sparse(gens, None, len(sol.labels)).rank if gens else 0
    w = sol.weights()
    kernel = sol.kernel
    col_to_k: dict[int, list[int]] = {}
    for ki, v in enumerate(kernel):
        for c in v:
            col_to_k.setdefault(c, []).append(ki)
    rows = []
    for g in gens:
        row: dict[int, Fraction] = {}
        for c, gv in g.items():
            for ki in col_to_k.get(c, ()):
                row[ki] = row.get(ki, 0) + w[c] * gv * kernel[ki][c]
        rows.append({k: v for k, v in row.items() if v})
    ortho = solve_sparse(rows, None, len(kernel))
    nongauge = []
    for y in ortho.kernel:
        vec: dict[int, Fraction] = {}
        for ki, yv in y.items():
            for c, kv in kernel[ki].items():
                vec[c] = vec.get(c, 0) + yv * kv
        nongauge.append(sol.by_label({c: v for c, v in vec.items() if v}))
    return GaugeAnalysis(sol.d, len(kernel), gauge_rank, ok, nongauge)


def _homogeneous_apply(sol: DegreeStepSolution, vec: dict[int, Fraction]) -> list[Fraction]:
    return sol.apply(vec)
