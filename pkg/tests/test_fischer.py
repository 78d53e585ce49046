import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bsdnf.errors import BidegreeError, ShapeError
from bsdnf.exactalg import GR, I
from bsdnf.fischer import (
    FischerDecomposition,
    decompose_high,
    decompose_low,
    fischer_inner,
    hermitian_form_product,
    kernel_basis,
    star_apply,
)
from bsdnf.polyring import WKIND, MultiIndex, Polynomial, VarSpace
from oracles import gram_remainder_high, gram_remainder_low
from strategies import bihomogeneous, polynomials, random_bihomogeneous

S11, S12, S21 = VarSpace(1, 1), VarSpace(1, 2), VarSpace(2, 1)


def z(sp, a=0, c=0):
    return Polynomial.z(sp, a, c)


def zb(sp, a=0, c=0):
    return Polynomial.zbar(sp, a, c)


def q12():
    return z(S12) * zb(S12) + z(S12, 0, 1) * zb(S12, 0, 1)


def test_star_examples():
    assert star_apply(z(S11) * zb(S11), z(S11) ** 2 * zb(S11)) == z(S11) * 2
    assert star_apply(z(S11) * zb(S11) * I, z(S11) * zb(S11)) == Polynomial.constant(S11, GR(0, -1))
    assert not star_apply(q12(), z(S12) * zb(S12, 0, 1))


def test_star_rejects_mismatch():
    with pytest.raises(ShapeError):
        star_apply(z(S11), z(S12))


def test_inner_examples():
    assert fischer_inner(z(S12) ** 2, z(S12) ** 2) == 2
    assert fischer_inner(z(S12), z(S12, 0, 1)) == 0
    m = z(S12) * zb(S12, 0, 1)
    assert fischer_inner(m, m) == 1


@given(st.data())
def test_adjunction(data):
    sp = data.draw(st.sampled_from([S11, S12, S21, VarSpace(2, 2)]))
    p, n = data.draw(st.integers(0, 2)), data.draw(st.integers(0, 2))
    q = data.draw(bihomogeneous(sp, p, n))
    f = data.draw(polynomials(sp, maxdeg=3))
    g = data.draw(polynomials(sp, maxdeg=5))
    assert fischer_inner(q * f, g) == fischer_inner(f, star_apply(q, g))


def test_inner_is_hermitian():
    a = z(S12) * GR(1, 2) + zb(S12, 0, 1) * GR(0, 3)
    b = z(S12) * GR(3, -1)
    assert fischer_inner(a, b) == fischer_inner(b, a).conjugate()


def test_form_product_examples():
    assert hermitian_form_product(S12, MultiIndex(WKIND, [[1]])) == q12()
    assert hermitian_form_product(S12, MultiIndex(WKIND, [[0]])) == Polynomial.constant(S12, 1)
    assert hermitian_form_product(S21, MultiIndex(WKIND, [[0, 1], [0, 0]])) == z(S21, 0, 0) * zb(S21, 1, 0)


def test_decompose_high_examples():
    J = MultiIndex(WKIND, [[1]])
    d = decompose_high(q12(), 1, 1)
    assert d.quotients[J] == Polynomial.constant(S12, 1) and not d.remainder

    d = decompose_high(z(S12) * zb(S12), 1, 1)
    assert d.quotients[J] == Polynomial.constant(S12, Fraction(1, 2))
    assert d.remainder == (z(S12) * zb(S12) - z(S12, 0, 1) * zb(S12, 0, 1)).scale(Fraction(1, 2))
    assert not d.annihilation_defects()

    P = z(S12) * zb(S12, 0, 1)
    d = decompose_high(P, 1, 1)
    assert not d.quotients[J] and d.remainder == P


def test_decompose_high_errors():
    with pytest.raises(BidegreeError):
        decompose_high(z(S12) * zb(S12) + z(S12), 1, 1)
    with pytest.raises(BidegreeError):
        decompose_high(z(S12) * zb(S12) ** 2, 1, 2)


def test_decompose_low_examples():
    P = zb(S11) ** 2
    d = decompose_low(P, 0, 2, 1)
    assert d.quotients == {} and d.remainder == P

    d = decompose_low(z(S11) * zb(S11) ** 2, 1, 2, 1)
    (Q,) = d.quotients.values()
    assert Q == z(S11) ** 2 and not d.remainder

    P = z(S12) * zb(S12) * zb(S12, 0, 1)
    d = decompose_low(P, 1, 2, 1)
    assert d.reconstruct() == P and not d.annihilation_defects()
    assert d.remainder == gram_remainder_low(P, 1, 2, 1)


def test_decompose_low_index_range():
    P = z(S12) * zb(S12) * zb(S12, 0, 1)
    with pytest.raises(IndexError):
        decompose_low(P, 1, 2, 2)


def test_kernel_basis_examples():
    basis = kernel_basis(S12, 1, 1)
    assert len(basis) == 3
    assert all(not star_apply(q12(), b) for b in basis)
    assert kernel_basis(S11, 1, 1) == []
    for sp in (S11, S12, VarSpace(2, 2)):
        assert kernel_basis(sp, 2, 0) == []


@pytest.mark.parametrize("sp,p,n", [(S12, 2, 1), (VarSpace(2, 2), 1, 1), (S21, 2, 2)])
def test_remainders_lie_in_kernel_span(sp, p, n):
    rng = random.Random(p * 10 + n)
    basis = kernel_basis(sp, p, n)
    for _ in range(3):
        R = decompose_high(random_bihomogeneous(rng, sp, p, n), p, n).remainder
        # R minus its projection onto span(basis) must vanish: decompose R again
        again = decompose_high(R, p, n)
        assert again.remainder == R and all(not Q for Q in again.quotients.values())
    assert len(basis) == len({tuple(sorted(b.terms)) for b in basis})


@pytest.mark.parametrize("seed", range(6))
def test_high_matches_gram_oracle(seed):
    rng = random.Random(seed)
    sp = rng.choice([S11, S12, S21, VarSpace(2, 2)])
    n = rng.randint(0, 2)
    p = rng.randint(n, 3)
    P = random_bihomogeneous(rng, sp, p, n)
    d = decompose_high(P, p, n)
    assert d.reconstruct() == P
    assert d.remainder == gram_remainder_high(P, p, n)


def test_idempotence_and_round_trip():
    rng = random.Random(7)
    P = random_bihomogeneous(rng, VarSpace(2, 2), 2, 1)
    d = decompose_high(P, 2, 1)
    again = decompose_high(d.remainder, 2, 1)
    assert again.remainder == d.remainder and all(not Q for Q in again.quotients.values())
    assert FischerDecomposition.from_json(d.to_json()) == d
    low = decompose_low(random_bihomogeneous(rng, S12, 1, 3), 1, 3, 1)
    assert FischerDecomposition.from_json(low.to_json()) == low


def test_dependent_spanning_set_reports_dependency():
    # m=2, N=1: q_J for |J|=2 are products of <l_a,l_b> which satisfy
    # <l1,l1><l2,l2> = <l1,l2><l2,l1>
    sp = S21
    rng = random.Random(3)
    P = random_bihomogeneous(rng, sp, 2, 2)
    d = decompose_high(P, 2, 2)
    assert d.dependency_dim > 0
    assert d.reconstruct() == P and not d.annihilation_defects()
