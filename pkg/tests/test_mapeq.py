import random
from fractions import Fraction

import pytest
import sympy

from bsdnf.bsd import LinearAuto, ModelDims, random_invertible, random_unitary
from bsdnf.errors import ConditionError, InconsistentSystem, RankError, ResidualError
from bsdnf.exactalg import GR
from bsdnf.mapeq import (
    FormalMap,
    compare_embeddings,
    degree_step_solve,
    gauge_fix,
    normalize_initial,
    residual,
    residual_blocks,
    residual_matrix,
    rigidity_check,
)
from bsdnf.polyring import MatrixPolynomial, Polynomial
from oracles import brute_force_step_rows

D11, D12, D22, D23 = ModelDims(1, 1), ModelDims(1, 2), ModelDims(2, 2), ModelDims(2, 3)


def whitney(a=Fraction(1), b=Fraction(1), D=3):
    sp = D11.space
    z, w = Polynomial.z(sp, 0, 0), Polynomial.w(sp, 0, 0)
    F = MatrixPolynomial(sp, [[z.scale(a), (z * z).scale(b)]])
    G = MatrixPolynomial(sp, [[w.scale(a * a) + (w * w).scale(b * b)]])
    return FormalMap(D11, D12, D, F, G)


def one_by_one(f, g, D=2):
    sp = D11.space
    return FormalMap(D11, D11, D, MatrixPolynomial(sp, [[f]]), MatrixPolynomial(sp, [[g]]))


def test_json_round_trip():
    H = whitney(Fraction(2, 3), Fraction(-1, 2))
    assert FormalMap.from_json(H.to_json()) == H


def test_standard_residual_zero():
    H = FormalMap.standard(D12, D23, D=3)
    assert residual_matrix(H).is_zero()
    for k in range(3):
        for l in range(3):
            assert residual(H, None, None, k, l).is_zero()


def test_whitney_residual_zero_through_4():
    H = whitney(Fraction(3), Fraction(-2, 5))
    assert residual_matrix(H, Dmax=4).is_zero()
    assert residual(H, None, None, 2, 2).is_zero()


def test_perturbation_gives_residual():
    rng = random.Random(1)
    sp = D11.space
    z, w = Polynomial.z(sp, 0, 0), Polynomial.w(sp, 0, 0)
    c = GR(rng.randint(1, 9), rng.randint(-9, 9))
    H = one_by_one(z + (z * z).scale(c), w)
    blocks = residual_blocks(H, Dmax=3)
    assert any(k + l <= 3 and not M.is_zero() for (k, l), M in blocks.items())


def test_residual_of_doubled_w():
    sp = D11.space
    z, zb, w = Polynomial.z(sp, 0, 0), Polynomial.zbar(sp, 0, 0), Polynomial.w(sp, 0, 0)
    H = one_by_one(z, w.scale(2), D=1)
    assert residual(H, None, None, 1, 1)[0, 0] == z * zb


def test_blocks_partition_residual():
    H = one_by_one(*(lambda sp: (Polynomial.z(sp, 0, 0).scale(GR(1, 1)),
                                 Polynomial.w(sp, 0, 0) + Polynomial.w(sp, 0, 0) ** 2))(D11.space), D=3)
    total = None
    for M in residual_blocks(H).values():
        total = M if total is None else total + M
    assert total == residual_matrix(H)


def _rank(rows, labels):
    return sympy.Matrix([[r.get(l, 0) for l in labels] for r in rows.values()]).rank() if rows else 0


@pytest.mark.parametrize("src,dst,d", [(D11, D11, 2), (D11, D11, 3), (D12, D12, 2), (D11, ModelDims(1, 2), 2)])
def test_step_matches_brute_force(src, dst, d):
    H = FormalMap.standard(src, dst, D=d - 1)
    sol = degree_step_solve(H, d)
    rows = brute_force_step_rows(H, d)
    assert sol.kernel_dim == len(sol.labels) - _rank(rows, sol.labels)
    for v in sol.kernel:
        lab = sol.by_label(v)
        assert all(sum(c * lab.get(l, 0) for l, c in r.items()) == 0 for r in rows.values())


def test_identity_step_two():
    sol = degree_step_solve(FormalMap.identity(D11, 1), 2)
    assert not any(sol.particular.values())
    assert sol.kernel_dim == 2
    assert gauge_fix(sol) == {}


def test_whitney_direction_in_kernel():
    H = FormalMap.standard(D11, D12, D=1)
    sol = degree_step_solve(H, 2)
    z2 = (2, 0, 0)
    vec = sol.from_label({("F", 0, 1, z2, 0): 1})
    assert all(v == 0 for v in sol.apply(vec))
    assert sol.solves(vec)


def test_inconsistent_prefix():
    sp = D11.space
    H = one_by_one(Polynomial.z(sp, 0, 0).scale(2), Polynomial.w(sp, 0, 0), D=1)
    with pytest.raises(InconsistentSystem):
        degree_step_solve(H, 2)


@pytest.mark.parametrize("src,dst,d", [(D11, D12, 2), (D12, D12, 2), (D12, D23, 2), (D11, D11, 3)])
def test_solutions_zero_the_residual(src, dst, d):
    rng = random.Random(d)
    H = FormalMap.standard(src, dst, D=d - 1).extended(d)
    sol = degree_step_solve(H, d)
    vec = dict(sol.particular)
    for k in sol.kernel:
        t = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
        for i, v in k.items():
            vec[i] = vec.get(i, 0) + t * v
    R = residual_matrix(sol.assign(H, vec), Dmax=d + 1)
    assert R.is_zero()


def test_gauge_fix_affine_and_order_invariant():
    H = FormalMap.standard(D11, D12, D=1)
    sol = degree_step_solve(H, 2)
    base = gauge_fix(sol)
    shifted = dict(sol.particular)
    for j, k in enumerate(sol.kernel):
        for i, v in k.items():
            shifted[i] = shifted.get(i, 0) + (j + 2) * v
    assert gauge_fix(sol, shifted) == base
    order = list(sol.labels)
    random.Random(5).shuffle(order)
    assert gauge_fix(degree_step_solve(H, 2, order=order)) == base


def test_normalize_rescaling():
    sp = D11.space
    H = one_by_one(Polynomial.z(sp, 0, 0).scale(2), Polynomial.w(sp, 0, 0).scale(4), D=1)
    Hn, S, T = normalize_initial(H)
    assert Hn.same_coefficients(FormalMap.identity(D11, 1))
    assert (S.A[0][0] * T.A[0][0]) == GR(Fraction(1, 2))


def test_normalize_standard_unchanged():
    H = FormalMap.standard(D12, D23, D=2)
    Hn, S, T = normalize_initial(H)
    assert Hn == H and S.is_identity() and T.is_identity()


def test_normalize_absorbs_rotation():
    r = Fraction(3, 5), Fraction(4, 5)
    U = [[GR(r[0]), GR(r[1])], [GR(-r[1]), GR(r[0])]]
    H = FormalMap.identity(D12, 1).compose_linear(source=LinearAuto([[GR(1)]], U))
    assert H != FormalMap.identity(D12, 1)
    Hn, S, T = normalize_initial(H)
    assert Hn.same_coefficients(FormalMap.identity(D12, 1))
    assert H.compose_linear(source=S, target=T).same_coefficients(Hn)


@pytest.mark.parametrize("seed", range(3))
def test_normalize_idempotent(seed):
    rng = random.Random(seed)
    S = LinearAuto(random_invertible(1, rng), random_unitary(2, rng))
    T = LinearAuto(random_invertible(2, rng), random_unitary(3, rng))
    H = FormalMap.standard(D12, D23, D=2).compose_linear(source=S, target=T)
    Hn, _, _ = normalize_initial(H)
    again, S2, T2 = normalize_initial(Hn)
    assert again == Hn and S2.is_identity() and T2.is_identity()


def test_normalize_rank_error():
    sp = D11.space
    H = one_by_one(Polynomial.zero(sp), Polynomial.zero(sp), D=1)
    with pytest.raises(RankError):
        normalize_initial(H)


def test_rigidity_small():
    assert rigidity_check(D11, D11, 3).verdict == "RIGID"
    assert rigidity_check(D12, D12, 3).verdict == "RIGID"


def test_rigidity_condition_and_exploratory():
    with pytest.raises(ConditionError):
        rigidity_check(D11, D12, 2)
    cert = rigidity_check(D11, D12, 2, exploratory=True)
    assert cert.verdict == "NOT RIGID" and not cert.ok
    assert cert.witness is not None and residual_matrix(cert.witness).is_zero()
    step = next(e for e in cert.per_degree if e["d"] == 2)
    assert step["nongauge_dim"] >= 1
    dirs = step["witness_direction"]
    assert any(item["block"] == "F" and list(item["entry"]) == [0, 1] for item in dirs)


def test_compare_standard_with_itself():
    H = FormalMap.standard(D12, D23, D=3)
    cert = compare_embeddings(H, H, 3)
    assert cert.verdict == "EQUIVALENT"
    assert LinearAuto.from_json(cert.autos["source"]).is_identity()
    assert LinearAuto.from_json(cert.autos["target"]).is_identity()


@pytest.mark.parametrize("seed", range(3))
def test_compare_recovers_linear_autos(seed):
    rng = random.Random(100 + seed)
    S = LinearAuto(random_invertible(1, rng), random_unitary(2, rng))
    T = LinearAuto(random_invertible(2, rng), random_unitary(3, rng))
    H1 = FormalMap.standard(D12, D23, D=3)
    H2 = H1.compose_linear(source=S, target=T)
    cert = compare_embeddings(H1, H2, 3)
    assert cert.verdict == "EQUIVALENT"
    Sr = LinearAuto.from_json(cert.autos["source"])
    Tr = LinearAuto.from_json(cert.autos["target"])
    assert H1.compose_linear(source=Sr, target=Tr).F_part(1) == H2.F_part(1)


def test_compare_whitney_boundary():
    cert = compare_embeddings(FormalMap.standard(D11, D12, D=3), whitney(), 3)
    assert cert.verdict == "NOT EQUIVALENT"
    assert not next(e for e in cert.per_degree if e["d"] == 2)["normal_forms_agree"]


def test_compare_rejects_non_embedding():
    H = FormalMap.standard(D12, D12, D=2)
    sp = H.space
    F = [[H.F[0, c] for c in range(2)]]
    F[0][0] = F[0][0] + Polynomial.z(sp, 0, 0) ** 2
    bad = H.replace(F=MatrixPolynomial(sp, F))
    with pytest.raises(ResidualError):
        compare_embeddings(H, bad, 2)
