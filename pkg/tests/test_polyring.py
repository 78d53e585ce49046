from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bsdnf.errors import ShapeError
from bsdnf.exactalg import GR, I
from bsdnf.polyring import (
    WKIND,
    Z_W,
    Z_ZBAR,
    ZKIND,
    MatrixPolynomial,
    MultiIndex,
    Polynomial,
    VarSpace,
    bidegree_component,
    conjugate,
    enumerate_multiindices,
    monomial,
    multiindex_count,
    poly_arith,
)
from strategies import polynomials, spaces

S12 = VarSpace(1, 2)
S11 = VarSpace(1, 1)


def z(sp, a=0, c=0):
    return Polynomial.z(sp, a, c)


def zb(sp, a=0, c=0):
    return Polynomial.zbar(sp, a, c)


def test_monomial_single_variable():
    assert monomial(S12, MultiIndex(ZKIND, [[1, 0]]), c=1) == z(S12)


def test_monomial_mixed():
    p = monomial(S11, MultiIndex(ZKIND, [[2]]), MultiIndex(ZKIND, [[1]]), c=I)
    assert p == z(S11) ** 2 * zb(S11) * I
    assert str(p) == "i*z11^2*zb11"


def test_monomial_zero_coefficient():
    p = monomial(S12, MultiIndex(ZKIND, [[1, 0]]), c=0)
    assert not p and p.terms == {}


def test_monomial_shape_mismatch():
    with pytest.raises(ShapeError):
        monomial(S12, MultiIndex(ZKIND, [[1]]), c=1)


def test_arith_examples():
    assert poly_arith(z(S12), zb(S12), "mul") == Polynomial(S12, {(1, 0, 1, 0, 0): GR(1)})
    assert poly_arith(z(S12) + z(S12, 0, 1), -z(S12, 0, 1), "add") == z(S12)
    q = z(S12) * zb(S12) + z(S12, 0, 1) * zb(S12, 0, 1)
    expected = (z(S12) ** 2 * zb(S12) ** 2 + z(S12) * z(S12, 0, 1) * zb(S12) * zb(S12, 0, 1) * 2
                + z(S12, 0, 1) ** 2 * zb(S12, 0, 1) ** 2)
    assert q * q == expected


def test_space_mismatch():
    with pytest.raises(ShapeError):
        poly_arith(z(S12), z(S11), "add")


def test_bidegree_component_examples():
    zz = z(S11)
    p = zz + zz * zb(S11) + zz * zz * zb(S11)
    assert bidegree_component(p, 1, 1, Z_ZBAR) == zz * zb(S11)
    w = Polynomial.w(S11, 0, 0)
    assert bidegree_component(zz * w + zz * zz, 1, 1, Z_W) == zz * w


@given(polynomials(maxdeg=4))
def test_bidegree_partition_and_idempotence(p):
    total = Polynomial.zero(p.space)
    for k in range(5):
        for l in range(5):
            c = bidegree_component(p, k, l)
            assert bidegree_component(c, k, l) == c
            total = total + c
    assert total == p


def test_conjugate_examples():
    assert conjugate(z(S12) * I) == zb(S12) * GR(0, -1)
    assert conjugate(z(S12) * zb(S12, 0, 1)) == z(S12, 0, 1) * zb(S12)


@given(polynomials())
def test_conjugate_involution(p):
    assert conjugate(conjugate(p)) == p


def test_conjugate_refuses_w():
    with pytest.raises(ShapeError):
        conjugate(Polynomial.w(S11, 0, 0))


@given(spaces.flatmap(lambda sp: st.tuples(polynomials(sp), polynomials(sp), polynomials(sp))))
def test_ring_axioms(t):
    a, b, c = t
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a + b) - b == a


def test_enumerate_examples():
    assert [J.to_list() for J in enumerate_multiindices(WKIND, S11, 2)] == [[[2]]]
    assert [I.to_list() for I in enumerate_multiindices(ZKIND, S12, 1)] == [[[1, 0]], [[0, 1]]]
    assert len(enumerate_multiindices(WKIND, VarSpace(2, 1), 1)) == 4


@pytest.mark.parametrize("m,N,p", [(1, 1, 3), (1, 2, 2), (2, 2, 2), (2, 3, 1), (2, 1, 3)])
def test_enumerate_counts(m, N, p):
    sp = VarSpace(m, N)
    for kind, d in ((ZKIND, m * N), (WKIND, m * m)):
        got = enumerate_multiindices(kind, sp, p)
        assert len(got) == comb(p + d - 1, p) == multiindex_count(kind, sp, p)
        assert len({J.flat for J in got}) == len(got)
        assert all(J.length == p for J in got)


@given(polynomials(with_w=True))
def test_json_round_trip(p):
    assert Polynomial.from_json(p.to_json()) == p


def test_matrix_round_trip_and_hermitian():
    sp = VarSpace(2, 2)
    M = MatrixPolynomial.from_function(sp, 2, 2, lambda a, b: sum(
        (Polynomial.z(sp, a, c) * Polynomial.zbar(sp, b, c) for c in range(2)), Polynomial.zero(sp)))
    assert M.is_hermitian()
    assert MatrixPolynomial.from_json(sp, M.to_json()) == M
