import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bsdnf.bsd import (
    BsdModel,
    LinearAuto,
    ModelDims,
    Submanifold,
    apply_linear_auto,
    check_embedding_condition,
    gaussian_sqrt_norm,
    model_defining_matrix,
    random_invertible,
    random_unitary,
    standard_embedding,
)
from bsdnf.errors import BidegreeError, DimsError, ShapeError
from bsdnf.exactalg import GR
from bsdnf.mapeq import residual_matrix
from bsdnf.polyring import MatrixPolynomial, Polynomial, VarSpace


def test_defining_matrix_examples():
    d = ModelDims(1, 1)
    sp = d.space
    z, zb = Polynomial.z(sp, 0, 0), Polynomial.zbar(sp, 0, 0)
    assert model_defining_matrix(BsdModel(d))[0, 0] == z * zb

    sp = VarSpace(1, 2)
    M = model_defining_matrix(ModelDims(1, 2))
    assert M[0, 0] == sum((Polynomial.z(sp, 0, c) * Polynomial.zbar(sp, 0, c) for c in range(2)),
                          Polynomial.zero(sp))

    sp = VarSpace(2, 1)
    M = model_defining_matrix(ModelDims(2, 1))
    for a, b in itertools.product(range(2), repeat=2):
        assert M[a, b] == Polynomial.z(sp, a, 0) * Polynomial.zbar(sp, b, 0)


@pytest.mark.parametrize("m,N", [(m, N) for m in range(1, 4) for N in range(1, 5)])
def test_defining_matrix_hermitian(m, N):
    M = model_defining_matrix(ModelDims(m, N))
    assert M == M.conjugate_transpose()


def test_embedding_condition_examples():
    ok, report = check_embedding_condition(ModelDims(1, 2), ModelDims(1, 2))
    assert ok and report["N'-m'"] == 1 and report["2(N-m)"] == 2
    assert not check_embedding_condition(ModelDims(1, 1), ModelDims(1, 2))[0]
    assert check_embedding_condition(ModelDims(2, 3), ModelDims(2, 3))[0]


def test_embedding_condition_monotone():
    grid = range(1, 6)
    for m, N, mp, Np in itertools.product(grid, repeat=4):
        ok = check_embedding_condition(ModelDims(m, N), ModelDims(mp, Np))[0]
        if ok and N < 5:
            assert check_embedding_condition(ModelDims(m, N + 1), ModelDims(mp, Np))[0] or N + 1 > Np
        if ok and Np > 1:
            assert check_embedding_condition(ModelDims(m, N), ModelDims(mp, Np - 1))[0] or N > Np - 1


def test_model_dims_validation():
    with pytest.raises(DimsError):
        ModelDims(0, 1)
    with pytest.raises(DimsError):
        ModelDims(1, 2, s=3)
    assert ModelDims(2, 3).ambient_dim == 10
    assert ModelDims.from_json(ModelDims(2, 3, 2).to_json()) == ModelDims(2, 3, 2)


def test_standard_embedding_shapes():
    H = standard_embedding(ModelDims(1, 1), ModelDims(1, 1))
    sp = H.space
    assert H.F[0, 0] == Polynomial.z(sp, 0, 0) and H.G[0, 0] == Polynomial.w(sp, 0, 0)

    H = standard_embedding(ModelDims(1, 1), ModelDims(2, 2))
    assert (H.F.rows, H.F.cols, H.G.rows) == (2, 2, 2)
    assert H.F[0, 0] == Polynomial.z(sp, 0, 0)
    assert all(not H.F[a, c] for a, c in [(0, 1), (1, 0), (1, 1)])
    assert residual_matrix(H).is_zero()

    with pytest.raises(DimsError):
        standard_embedding(ModelDims(2, 2), ModelDims(1, 3))


def test_standard_embedding_residual_2_3_into_3_4():
    H = standard_embedding(ModelDims(2, 3), ModelDims(3, 4), D=3)
    assert residual_matrix(H).is_zero()


@pytest.mark.parametrize("seed", range(4))
def test_standard_embedding_with_autos(seed):
    rng = random.Random(seed)
    src, dst = ModelDims(1, 2), ModelDims(2, 3)
    S = LinearAuto(random_invertible(1, rng), random_unitary(2, rng))
    T = LinearAuto(random_invertible(2, rng), random_unitary(3, rng))
    H = standard_embedding(src, dst, D=2)
    H = apply_linear_auto(S, H, "source")
    H = apply_linear_auto(T, H, "target")
    assert residual_matrix(H).is_zero()


def test_linear_auto_identity_unchanged():
    sub = _sample_submanifold()
    assert apply_linear_auto(LinearAuto.identity(1, 1), sub) == sub
    H = standard_embedding(ModelDims(1, 2), ModelDims(1, 2), D=2)
    assert apply_linear_auto(LinearAuto.identity(1, 2), H) == H


def test_rescaling_preserves_model():
    auto = LinearAuto([[GR(2)]], [[GR(1)]])
    d = ModelDims(1, 1)
    sp = d.space
    assert auto.z_images(sp)[0] == Polynomial.z(sp, 0, 0).scale(2)
    assert auto.w_images(sp)[0] == Polynomial.w(sp, 0, 0).scale(4)
    assert apply_linear_auto(auto, BsdModel(d)) == model_defining_matrix(d)


def test_rotation_preserves_model():
    r = Fraction(3, 5), Fraction(4, 5)
    U = [[GR(r[0]), GR(r[1])], [GR(-r[1]), GR(r[0])]]
    auto = LinearAuto([[GR(1)]], U)
    assert apply_linear_auto(auto, ModelDims(1, 2)) == model_defining_matrix(ModelDims(1, 2))


@given(st.integers(0, 10**6), st.sampled_from([(1, 1), (1, 3), (2, 2), (2, 3), (3, 2)]))
def test_random_autos_preserve_model(seed, mN):
    rng = random.Random(seed)
    m, N = mN
    auto = LinearAuto(random_invertible(m, rng), random_unitary(N, rng))
    assert apply_linear_auto(auto, ModelDims(m, N)) == model_defining_matrix(ModelDims(m, N))


def test_linear_auto_validation():
    with pytest.raises(ShapeError):
        LinearAuto([[GR(0)]], [[GR(1)]])
    with pytest.raises(ShapeError):
        LinearAuto([[GR(1)]], [[GR(2)]])
    a = LinearAuto([[GR(1, 1)]], [[GR(Fraction(3, 5), Fraction(4, 5))]])
    assert a.then(a.inverse()).is_identity()
    assert LinearAuto.from_json(a.to_json()) == a


@pytest.mark.parametrize("nu,expect_real", [(Fraction(4), True), (Fraction(9, 4), True), (Fraction(2), False),
                                            (Fraction(5, 13), False), (Fraction(10**12 + 2 * 10**6 + 2), False)])
def test_gaussian_sqrt_norm(nu, expect_real):
    c = gaussian_sqrt_norm(nu)
    assert c is not None and c.norm() == nu
    assert (c.im == 0) == expect_real


def test_gaussian_sqrt_norm_missing():
    assert gaussian_sqrt_norm(Fraction(3)) is None
    assert gaussian_sqrt_norm(Fraction(0)) is None
    assert gaussian_sqrt_norm(Fraction(-1)) is None


def _sample_submanifold():
    d = ModelDims(1, 1)
    sp = d.space
    z, zb = Polynomial.z(sp, 0, 0), Polynomial.zbar(sp, 0, 0)
    c = GR(1, 2)
    phi = {(2, 1): MatrixPolynomial(sp, [[(z * z * zb).scale(c)]]),
           (1, 2): MatrixPolynomial(sp, [[(z * zb * zb).scale(c.conjugate())]])}
    return Submanifold(BsdModel(d), phi, 3)


def test_submanifold_validation():
    sub = _sample_submanifold()
    sp = sub.space
    z, zb = Polynomial.z(sp, 0, 0), Polynomial.zbar(sp, 0, 0)
    with pytest.raises(ShapeError):
        Submanifold(sub.model, {(2, 1): sub.phi[(2, 1)]}, 3)
    with pytest.raises(BidegreeError):
        Submanifold(sub.model, {(1, 1): MatrixPolynomial(sp, [[z * zb]])}, 3)
    with pytest.raises(BidegreeError):
        Submanifold(sub.model, {(2, 1): MatrixPolynomial(sp, [[z * zb * zb]])}, 3)


def test_submanifold_round_trips():
    sub = _sample_submanifold()
    assert Submanifold.from_json(sub.to_json()) == sub
    auto = LinearAuto([[GR(1, 1)]], [[GR(0, 1)]])
    moved = apply_linear_auto(auto, sub)
    assert moved != sub
    assert moved.transformed(auto.inverse()) == sub
