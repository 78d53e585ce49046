"""Initial normalization, rigidity certificates and equivalence of embeddings."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..bsd import (
    LinearAuto,
    ModelDims,
    Submanifold,
    check_embedding_condition,
    complete_unitary,
    conj_transpose,
    gaussian_sqrt_norm,
    identity,
    mat_inverse,
    mat_mul,
)
from ..errors import ConditionError, InconsistentSystem, NormalizationError, RankError, ResidualError
from ..exactalg import ONE, ZERO, format_rational, min_norm_point, solve_exact, solve_sparse
from ..polyring import monomial_str
from .formal import FormalMap
from .residual import residual_matrix
from .solver import (
    DegreeStepSolution,
    analyze_gauge,
    assign_step,
    degree_step_solve,
    gauge_directions,
    gauge_generators,
    label_weight,
)

__all__ = [
    "Certificate",
    "normalize_initial",
    "rigidity_check",
    "compare_embeddings",
    "normal_form",
    "is_embedding",
    "labels_to_json",
]

RIGID = "RIGID"
NOT_RIGID = "NOT RIGID"
UNDETERMINED = "UNDETERMINED"
EQUIVALENT = "EQUIVALENT"
NOT_EQUIVALENT = "NOT EQUIVALENT"


@dataclass
class Certificate:
    verdict: str
    per_degree: list[dict] = field(default_factory=list)
    autos: dict = field(default_factory=dict)
    witness: FormalMap | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict in (RIGID, EQUIVALENT)

    def to_json(self) -> dict:
        doc = {"verdict": self.verdict, "per_degree": self.per_degree, "autos": self.autos}
        if self.witness is not None:
            doc["witness"] = self.witness.to_json()
        if self.notes:
            doc["notes"] = self.notes
        return doc


def labels_to_json(space, vec: dict) -> list[dict]:
    """Readable form of a step vector: one item per (block, entry, monomial)."""
    acc: dict = {}
    for (blk, a, b, key, part), v in vec.items():
        slot = acc.setdefault((blk, a, b, key), [Fraction(0), Fraction(0)])
        slot[part] += v
    out = []
    for (blk, a, b, key), (re, im) in sorted(acc.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2], kv[0][3])):
        out.append({"block": blk, "entry": [a, b], "monomial": monomial_str(space, key),
                    "re": format_rational(re), "im": format_rational(im)})
    return out


# ---------------------------------------------------------------------------
# first-order normalization


def _linear_tensor(H: FormalMap):
    """T[(i, j')][(a, c)] = coefficient of z_{ac} in F[i, j']."""
    sp = H.space
    F1 = H.F_part(1)
    T = {}
    for (i, j), e in F1:
        for key, c in e.terms.items():
            slot = key.index(1)
            a, cc = divmod(slot, sp.N)
            T[(i, j, a, cc)] = c
    return T


def _factor_product(H: FormalMap):
    """F_1 = P Z Q, or NormalizationError when F_1 is not of that shape."""
    src, dst = H.src, H.dst
    T = _linear_tensor(H)
    if not T:
        raise RankError("linear part of F vanishes; not an embedding at first order")
    i0, j0, a0, c0 = min(T)
    piv = T[(i0, j0, a0, c0)]
    P = [[T.get((i, j0, a, c0), ZERO) for a in range(src.m)] for i in range(dst.m)]
    Q = [[T.get((i0, j, a0, c), ZERO) / piv for j in range(dst.N)] for c in range(src.N)]
    for i in range(dst.m):
        for j in range(dst.N):
            for a in range(src.m):
                for c in range(src.N):
                    if T.get((i, j, a, c), ZERO) != P[i][a] * Q[c][j]:
                        raise NormalizationError("linear part of F is not of the form P Z Q")
    return P, Q


def _rank(M) -> int:
    return solve_exact([list(r) for r in M], ncols=len(M[0])).rank


def normalize_initial(H: FormalMap) -> tuple[FormalMap, LinearAuto, LinearAuto]:
    """Bring F_1 to [[Z, 0], [0, 0]] by linear automorphisms.

    Returns (T o H o S, S, T) with S acting on the source and T on the target.
    """
    src, dst = H.src, H.dst
    P, Q = _factor_product(H)
    if _rank(P) < src.m:
        raise RankError(f"rank of the row factor is below m = {src.m}")
    QQ = mat_mul(Q, conj_transpose(Q))
    lam = QQ[0][0]
    if any(QQ[i][j] != (lam if i == j else ZERO) for i in range(src.N) for j in range(src.N)) or not lam:
        raise NormalizationError("column factor Q is not a multiple of an isometry")
    c = gaussian_sqrt_norm(lam.re)
    if c is None:
        raise NormalizationError(f"scale {lam.re} is not a norm from Q(i)")
    cinv = c.inverse()
    Qn = [[x * cinv for x in r] for r in Q]
    Pn = [[x * c for x in r] for r in P]
    # complete the columns of Pn to an invertible matrix with unit vectors
    cols = [list(col) for col in zip(*Pn)]
    for k in range(dst.m):
        if len(cols) == dst.m:
            break
        e = [ONE if i == k else ZERO for i in range(dst.m)]
        if _rank(cols + [e]) == len(cols) + 1:
            cols.append(e)
    At = mat_inverse([list(r) for r in zip(*cols)])
    if src.N == dst.N:
        S = LinearAuto(identity(src.m), conj_transpose(Qn))
        Tt = LinearAuto(At, identity(dst.N))
    else:
        full = complete_unitary(Qn, dst.N)
        S = LinearAuto.identity(src.m, src.N)
        Tt = LinearAuto(At, conj_transpose(full))
    out = H.compose_linear(source=S, target=Tt)
    if out.F_part(1) != FormalMap.standard(src, dst, 1).F:
        raise NormalizationError("initial normalization did not reach the standard linear part")
    return out, S, Tt


# ---------------------------------------------------------------------------
# rigidity


def is_embedding(H: FormalMap, source: Submanifold | None = None, target: Submanifold | None = None,
                 Dmax: int | None = None) -> bool:
    return residual_matrix(H, source, target, Dmax).is_zero()


def _extend(H: FormalMap, start: int, D: int, source=None, target=None) -> FormalMap:
    """Solve steps start..D with gauge-fixed data; raises InconsistentSystem."""
    for e in range(start, D + 1):
        sol = degree_step_solve(H, e, source, target)
        H = assign_step(H, e, sol.gauge_fixed)
    return H


def _search_witness(H: FormalMap, d: int, D: int, directions: list[dict]):
    for n in directions:
        cand = assign_step(H, d, n)
        try:
            cand = _extend(cand, d + 1, D)
        except InconsistentSystem:
            continue
        if is_embedding(cand, Dmax=D + 1):
            return cand, n
    return None, None


def rigidity_check(src: ModelDims, dst: ModelDims, D: int, exploratory: bool = False,
                   find_witness: bool = True) -> Certificate:
    """Degree-by-degree rigidity certificate for embeddings src -> dst through degree D.

    RIGID when, at every step, every solution of the linearized equation is
    an automorphism direction.  Otherwise each non-gauge direction is tried as
    a witness: NOT RIGID comes with a map that solves the equation through
    degree D + 1 and differs from the standard embedding modulo automorphisms.
    """
    holds, report = check_embedding_condition(src, dst)
    # equidimensional pairs are always admitted: there the claim is uniqueness up to automorphisms
    holds = holds or src == dst
    if not holds and not exploratory:
        raise ConditionError(
            f"embedding condition fails for {src} -> {dst}: need m <= m', N <= N' and "
            f"N'-m' = {dst.N - dst.m} < 2(N-m) = {2 * (src.N - src.m)}")
    H, S, Tt = normalize_initial(FormalMap.standard(src, dst, D))
    cert = Certificate(RIGID, autos={"source": S.to_json(), "target": Tt.to_json()})
    if not holds:
        cert.notes.append("exploratory: the embedding condition fails, rigidity is not claimed here")
    witness_found = False
    any_nongauge = False
    for d in range(2, D + 1):
        sol = degree_step_solve(H, d)
        sdirs, tdirs = gauge_directions(src, dst, d)
        ga = analyze_gauge(sol, sdirs, tdirs)
        entry = {
            "d": d,
            "kernel_dim": ga.kernel_dim,
            "gauge_fixed_nonzero_count": len(sol.gauge_fixed),
            "gauge_dim": ga.gauge_dim,
            "nongauge_dim": ga.nongauge_dim,
        }
        if not ga.gauge_in_kernel:
            raise NormalizationError(f"degree {d}: an automorphism direction fails the linearized equation")
        if ga.nongauge:
            any_nongauge = True
            if exploratory:
                entry["directions"] = [labels_to_json(src.space, v) for v in ga.nongauge]
            if find_witness and not witness_found:
                w, n = _search_witness(H, d, D, ga.nongauge)
                if w is not None:
                    witness_found = True
                    cert.witness = w
                    entry["witness_direction"] = labels_to_json(src.space, n)
        cert.per_degree.append(entry)
        H = assign_step(H, d, sol.gauge_fixed)
    if witness_found:
        cert.verdict = NOT_RIGID
    elif any_nongauge or any(e["gauge_fixed_nonzero_count"] for e in cert.per_degree):
        cert.verdict = UNDETERMINED
    return cert


# ---------------------------------------------------------------------------
# equivalence


def _independent(vectors: list[dict], index: dict) -> list[int]:
    """Indices of a maximal independent subset (first-come order)."""
    cols: list[dict] = [{} for _ in index]
    for k, v in enumerate(vectors):
        for lab, x in v.items():
            cols[index[lab]][k] = x
    sol = solve_sparse(cols, None, len(vectors))
    return sorted(sol.pivots)


def _representative(sol: DegreeStepSolution, x: dict, gens: list[dict]) -> dict:
    """Fischer-orthogonal point of x + span(gens)."""
    idx = sol.index
    support = sorted({idx[l] for g in gens for l in g} | set(sol.from_label(x)))
    pos = {c: i for i, c in enumerate(support)}
    xv = sol.from_label(x)
    p = [Fraction(0)] * len(support)
    for c, v in xv.items():
        p[pos[c]] = v
    K = []
    for g in gens:
        row = [Fraction(0)] * len(support)
        for lab, v in g.items():
            row[pos[idx[lab]]] = v
        K.append(row)
    w = [label_weight(sol.labels[c]) for c in support]
    y = min_norm_point(p, K, w)
    return {sol.labels[support[i]]: v for i, v in enumerate(y) if v}


def _jet_automorphism(dims: ModelDims, d: int, jet: dict, D: int, manifold: Submanifold | None) -> FormalMap:
    phi = assign_step(FormalMap.identity(dims, D), d, jet)
    return _extend(phi, d + 1, D, manifold, manifold)


def normal_form(H: FormalMap, D: int, source: Submanifold | None = None, target: Submanifold | None = None):
    """Normalize H through degree D; returns (normal form, S, T, per-degree log)."""
    H, S, Tt = normalize_initial(H.truncated(D))
    src, dst = H.src, H.dst
    log = []
    for d in range(2, D + 1):
        sol = degree_step_solve(H, d, source, target)
        x = sol.by_label(sol.extract(H))
        entry = {"d": d, "kernel_dim": sol.kernel_dim, "gauge_fixed_nonzero_count": len(sol.gauge_fixed)}
        log.append(entry)
        if not x:
            entry["normalized_nonzero_count"] = 0
            continue
        gens = gauge_generators(src, dst, d)
        if not gens:
            entry["normalized_nonzero_count"] = len(x)
            continue
        keep = _independent([g for _, _, g in gens], sol.index)
        gens = [gens[k] for k in keep]
        y = _representative(sol, x, [g for _, _, g in gens])
        shift = {l: y.get(l, 0) - x.get(l, 0) for l in set(x) | set(y)}
        shift = {l: v for l, v in shift.items() if v}
        if shift:
            H = _apply_gauge(H, d, D, shift, gens, sol, source, target)
            got = sol.by_label(sol.extract(H))
            if got != y:
                raise NormalizationError(f"degree {d}: gauge shift did not reach the normal form")
        entry["normalized_nonzero_count"] = len(y)
    return H, S, Tt, log


def _apply_gauge(H, d, D, shift, gens, sol, source, target) -> FormalMap:
    idx = sol.index
    cols: list[dict] = [{} for _ in idx]
    for k, (_, _, g) in enumerate(gens):
        for lab, v in g.items():
            cols[idx[lab]][k] = v
    rhs = [Fraction(0)] * len(idx)
    for lab, v in shift.items():
        rhs[idx[lab]] = v
    coef = solve_sparse(cols, rhs, len(gens))
    if coef.particular is None:
        raise NormalizationError(f"degree {d}: shift is not in the span of automorphism directions")
    sjet: dict = {}
    tjet: dict = {}
    for k, a in coef.particular.items():
        side, raw, _ = gens[k]
        acc = sjet if side == "source" else tjet
        for lab, v in raw.items():
            acc[lab] = acc.get(lab, 0) + a * v
    inner = outer = None
    if any(sjet.values()):
        inner = _jet_automorphism(H.src, d, sjet, D, source)
    if any(tjet.values()):
        outer = _jet_automorphism(H.dst, d, tjet, D, target)
    return H.compose(inner=inner, outer=outer)


def compare_embeddings(H1: FormalMap, H2: FormalMap, D: int, source: Submanifold | None = None,
                       target: Submanifold | None = None) -> Certificate:
    """EQUIVALENT iff both normal forms agree exactly through degree D."""
    for name, H in (("first", H1), ("second", H2)):
        if H.D < D:
            raise ResidualError(f"{name} map is truncated below D = {D}")
        if not is_embedding(H.truncated(D), source, target, Dmax=D + 1):
            raise ResidualError(f"{name} map does not solve the mapping equation through degree {D + 1}")
    if (H1.src, H1.dst) != (H2.src, H2.dst):
        raise ResidualError("maps have different source or target models")
    N1, S1, T1, log1 = normal_form(H1, D, source, target)
    N2, S2, T2, log2 = normal_form(H2, D, source, target)
    per = []
    for a, b in zip(log1, log2):
        d = a["d"]
        same = N1.F_part(d) == N2.F_part(d) and N1.G_part(d + 1) == N2.G_part(d + 1)
        per.append({"d": d, "kernel_dim": a["kernel_dim"], "gauge_fixed_nonzero_count": a["gauge_fixed_nonzero_count"],
                    "normal_forms_agree": same})
    verdict = EQUIVALENT if N1.same_coefficients(N2) else NOT_EQUIVALENT
    cert = Certificate(verdict, per)
    if verdict == EQUIVALENT:
        cert.autos = {"source": S2.inverse().then(S1).to_json(), "target": T1.then(T2.inverse()).to_json()}
    return cert
