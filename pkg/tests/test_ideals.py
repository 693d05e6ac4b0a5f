from math import gcd

import pytest

from ordsmith.algebra import AlgebraError, Place
from ordsmith.ideals import (
    class_group_quadratic,
    class_sum_is_trivial,
    ideal_equal,
    ideal_from_generators,
    ideal_from_lattice,
    ideal_product,
    ideal_sum,
    is_principal,
    unit_ideal,
)
from ordsmith.lattice import hnf, short_vectors
from ordsmith.localsnf import local_profile
from common import H2, H3, disc17_order, qsqrt


def reduced_form_count(D):
    # brute-force oracle for the class number of a negative discriminant
    count = 0
    a = 1
    while 3 * a * a <= -D:
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or gcd(gcd(a, b), c) != 1:
                continue
            if b < 0 and a == c:
                continue
            count += 1
        a += 1
    return count


def test_ideal_norms_quadratic():
    Q = qsqrt(-6)
    P2 = ideal_from_generators(Q, [(2, 0), (0, 1)])
    assert P2.norm == 2
    assert P2.rows == ((2, 0), (0, 1))
    assert ideal_from_generators(Q, [(1, 0)]).norm == 1
    assert str(P2) == "(2, rho)"


def test_ideal_product_and_sum():
    Q = qsqrt(-6)
    P2 = ideal_from_generators(Q, [(2, 0), (0, 1)])
    P3 = ideal_from_generators(Q, [(3, 0), (0, 1)])
    assert ideal_equal(ideal_product(P2, P3), ideal_from_generators(Q, [(0, 1)]))
    assert ideal_equal(ideal_sum(P2, unit_ideal(Q)), unit_ideal(Q))
    six = ideal_from_generators(Q, [(6, 0), (0, 2)])
    assert ideal_equal(six, ideal_product(ideal_from_generators(Q, [(2, 0)]), P3))


def test_rebuild_is_idempotent():
    Q = qsqrt(-6)
    I = ideal_from_generators(Q, [(6, 0), (0, 2)])
    again = ideal_from_generators(Q, I.basis())
    assert again.rows == I.rows
    assert ideal_from_lattice(Q, I.basis()).rows == I.rows


def test_disc17_maximal_ideals():
    H = disc17_order()
    m2 = ideal_from_generators(H, [(2, 0, 0, 0), H2])
    m3 = ideal_from_generators(H, [(3, 0, 0, 0), H3])
    assert m2.norm == 2
    assert m3.norm == 3
    assert not is_principal(m2)
    assert not is_principal(m3)
    # exhausted search: nothing of reduced norm 2 in m2
    assert is_principal(m2).searched == 0


def test_principal_detection():
    Q = qsqrt(-6)
    res = is_principal(ideal_from_generators(Q, [(0, 1)]))
    assert res.principal
    assert ideal_equal(ideal_from_generators(Q, [res.generator]), ideal_from_generators(Q, [(0, 1)]))
    assert not is_principal(ideal_from_generators(Q, [(2, 0), (0, 1)]))


@pytest.mark.parametrize("d", [-1, -2, -3, -5, -6, -7, -11, -14, -23, -47])
def test_class_numbers_match_oracle(d):
    G = class_group_quadratic(qsqrt(d))
    assert G.order == reduced_form_count(G.discriminant)


def test_class_numbers_frozen():
    assert class_group_quadratic(qsqrt(-6)).order == 2
    assert class_group_quadratic(qsqrt(-1)).order == 1
    assert class_group_quadratic(qsqrt(-5)).order == 2


def test_class_sum_quadratic():
    Q = qsqrt(-6)
    P2 = ideal_from_generators(Q, [(2, 0), (0, 1)])
    E2 = ideal_from_generators(Q, [(6, 0), (0, 2)])
    assert class_sum_is_trivial(Q, [P2, E2], 2).status == "trivial"
    P3 = ideal_from_generators(Q, [(3, 0), (0, 1)])
    assert class_sum_is_trivial(Q, [unit_ideal(Q), P3], 2).status == "nontrivial"
    assert class_sum_is_trivial(Q, [unit_ideal(Q), ideal_from_generators(Q, [(2, 0)])], 2).status == "trivial"


def test_class_sum_quaternion_needs_rank_two():
    H = disc17_order()
    with pytest.raises(AlgebraError):
        class_sum_is_trivial(H, [unit_ideal(H)], 1)


def test_class_sum_quaternion_m2_two():
    # a free basis exists for m2 + (2) (see the ledger); the witness must generate it
    H = disc17_order()
    m2 = ideal_from_generators(H, [(2, 0, 0, 0), H2])
    two = ideal_from_generators(H, [(2, 0, 0, 0)])
    res = class_sum_is_trivial(H, [m2, two], 2)
    assert res.status == "trivial"
    prof = local_profile(H, res.witness)
    assert prof.as_dict() == {Place(2, "split"): ((0, 1), (1, 1))}


def test_short_vectors_simple():
    vecs = short_vectors([[2, 1], [1, 2]], 2)
    # one vector per +- pair: (1,0), (0,1), (1,-1)
    assert sorted(v for v, _ in vecs) == [2, 2, 2]


def test_hnf_basic():
    H = [list(r) for r in hnf([[2, 4], [6, 3]])]
    assert H == [[2, 4], [0, 9]]
