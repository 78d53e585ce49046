"""Mapping-equation residuals  G(Z, W) - F conj(F)^t - phi'(F, conj F)  on W = Z conj(Z)^t + phi."""

from __future__ import annotations

from ..bsd import Submanifold
from ..errors import ShapeError, TruncationError
from ..polyring import MatrixPolynomial, Polynomial, bidegree_component
from .formal import FormalMap

__all__ = ["substitute_defining", "residual", "residual_matrix", "residual_blocks", "max_residual_degree"]


def _source(map_: FormalMap, source: Submanifold | None) -> Submanifold:
    if source is None:
        return Submanifold.model_only(map_.src, map_.D + 1)
    if source.dims.m != map_.src.m or source.dims.N != map_.src.N:
        raise ShapeError("source submanifold does not match the map's source model")
    return source


def _target(map_: FormalMap, target: Submanifold | None) -> Submanifold | None:
    if target is None or target.is_model():
        return None
    if target.dims.m != map_.dst.m or target.dims.N != map_.dst.N:
        raise ShapeError("target submanifold does not match the map's target model")
    return target


def max_residual_degree(map_: FormalMap, source: Submanifold | None = None, target: Submanifold | None = None) -> int:
    """Highest total degree at which the residual is fully determined by stored data."""
    top = map_.D + 1
    if source is not None and not source.is_model():
        top = min(top, source.D)
    if target is not None and not target.is_model():
        top = min(top, target.D)
    return top


def substitute_defining(map_: FormalMap, source: Submanifold | None = None, Dmax: int | None = None,
                        target: Submanifold | None = None) -> tuple[MatrixPolynomial, MatrixPolynomial]:
    """Both sides of the mapping equation as (Z, Zbar) polynomials through total degree Dmax."""
    top = max_residual_degree(map_, source, target)
    if Dmax is None:
        Dmax = top
    if Dmax > top:
        raise TruncationError(f"Dmax={Dmax} exceeds the stored data (determined through degree {top})")
    src = _source(map_, source)
    tgt = _target(map_, target)
    sp = map_.space
    Wsub = src.w_substitution(Dmax)
    images = [Polynomial.z(sp, a, c) for a in range(sp.m) for c in range(sp.N)]
    images += [None] * sp.nz
    images += [Wsub[a, b] for a in range(sp.m) for b in range(sp.m)]
    Fs = map_.F.map(lambda e: e.substitute(images, sp, Dmax))
    Gs = map_.G.map(lambda e: e.substitute(images, sp, Dmax))
    rhs = Fs.matmul(Fs.conjugate_transpose(), Dmax)
    if tgt is not None:
        tsp = tgt.space
        fimg = [Fs[a, c] for a in range(tsp.m) for c in range(tsp.N)]
        timages = fimg + [p.conjugate() for p in fimg] + [None] * tsp.nw
        pert = tgt.perturbation(Dmax)
        rhs = rhs + pert.map(lambda e: e.substitute(timages, sp, Dmax))
    return Gs, rhs


def residual_matrix(map_: FormalMap, source: Submanifold | None = None, target: Submanifold | None = None,
                    Dmax: int | None = None) -> MatrixPolynomial:
    lhs, rhs = substitute_defining(map_, source, Dmax, target)
    return lhs - rhs


def residual(map_: FormalMap, source: Submanifold | None, target: Submanifold | None, k: int, l: int) -> MatrixPolynomial:
    """Bidegree (k, l) block of LHS - RHS."""
    R = residual_matrix(map_, source, target, Dmax=k + l)
    return R.map(lambda e: bidegree_component(e, k, l))


def residual_blocks(map_: FormalMap, source: Submanifold | None = None, target: Submanifold | None = None,
                    Dmax: int | None = None) -> dict[tuple[int, int], MatrixPolynomial]:
    """All nonzero bidegree blocks of the residual through Dmax."""
    R = residual_matrix(map_, source, target, Dmax)
    bidegs = set()
    for _, e in R:
        bidegs |= e.bidegrees()
    return {kl: R.map(lambda e, kl=kl: bidegree_component(e, *kl)) for kl in sorted(bidegs)}
