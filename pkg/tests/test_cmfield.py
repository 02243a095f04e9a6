import math
from fractions import Fraction as F
from itertools import product

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import assume, given, settings, strategies as st

from cmbounds import InvalidInput
from cmbounds.cmfield import (CMQuartic, decomposition_condition, is_galois_numeric,
                              is_isomorphic, prime_decomposition, reflex_field)

x = sympy.Symbol("x")


@st.composite
def primitive_fields(draw):
    d = draw(st.sampled_from([2, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 19, 21, 29]))
    beta = draw(st.integers(1, 3))
    lo = math.isqrt(beta * beta * d) + 1
    alpha = -draw(st.integers(lo, lo + 12))
    K = CMQuartic(d, alpha, beta)
    assume(K.is_primitive())
    return K


def test_construct_reference_fields(field13, field133):
    assert field133.min_poly == [1, 0, 50, 0, 93]
    assert field13.min_poly == [1, 0, 26, 0, 52]
    with pytest.raises(InvalidInput):
        CMQuartic(5, 1, 0)


@pytest.mark.parametrize("args", [(12, -20, 1), (5, -1, 1), (5, F(-7, 2), 1), (0, -1, 0)])
def test_construct_rejects_bad_input(args):
    with pytest.raises(InvalidInput):
        CMQuartic(*args)


def test_descriptor_round_trip(field13):
    K = CMQuartic.parse(field13.descriptor())
    assert (K.d, K.alpha, K.beta) == (13, -13, 3)
    with pytest.raises(InvalidInput):
        CMQuartic.parse("cmfield d=13 alpha=-13")
    with pytest.raises(InvalidInput):
        CMQuartic.parse("cmfield d=13 alpha=x beta=3")


def test_primitivity_and_galois_type(field13, field133):
    assert field133.is_primitive() and field13.is_primitive()
    assert not CMQuartic(5, -5, 0).is_primitive()
    assert field13.galois_type() == "cyclic"
    assert field133.galois_type() == "non-galois"
    with pytest.raises(InvalidInput):
        CMQuartic(5, -5, 0).galois_type()


def test_cyclic_criterion_agrees_with_numeric_galois_test():
    K = CMQuartic(2, -2, 1)  # Q(sqrt(-2 + sqrt 2)), d N(r) = 4
    assert K.galois_type() == "cyclic" and is_galois_numeric(K)
    for K in (CMQuartic(13, -13, 3), CMQuartic(133, -25, 2), CMQuartic(5, -5, 1)):
        assert (K.galois_type() == "cyclic") == is_galois_numeric(K)


def test_denominator_bounds(field13, field133):
    assert field13.denominator_bound() == 1827904
    assert field133.denominator_bound() == 707560000
    for q in (7, 11, 19, 23, 29, 83, 89, 167):
        assert q < field133.denominator_bound()
    for q in (3, 23, 131):
        assert q < field13.denominator_bound()


@given(primitive_fields())
def test_bound_invariant_under_real_conjugation(K):
    Kc = CMQuartic(K.d, K.alpha, -K.beta)
    assert Kc.denominator_bound() == K.denominator_bound()
    assert Kc.min_poly == K.min_poly
    assert K.denominator_bound() == 16 * K.d ** 2 * (2 * K.alpha) ** 2


def _saturated_discriminant(K):
    """disc(O_K) by enlarging Z[theta] with integral (sum c_i b_i)/p, c in [0, p)^4."""
    basis = [tuple(F(int(i == j)) for j in range(4)) for i in range(4)]
    pdisc = 16 * K.c0 * (K.c2 ** 2 - 4 * K.c0) ** 2
    index = 1
    for p in sorted(sympy.factorint(pdisc)):
        while (pdisc // index ** 2) % (p * p) == 0:
            # Tr(x) and Tr(x^2) integral are necessary; the char. poly decides
            t1 = np.array([int(K.trace(b)) for b in basis], dtype=object)
            t2 = np.array([[int(K.trace(K.mul(u, v))) for v in basis] for u in basis], dtype=object)
            C = np.array(list(product(range(p), repeat=4))[1:], dtype=object)
            ok = (C.dot(t1) % p == 0) & (np.einsum("ki,ij,kj->k", C, t2, C) % (p * p) == 0)
            hit = None
            for c in C[ok]:
                y = tuple(sum(int(ci) * b[t] for ci, b in zip(c, basis)) / p for t in range(4))
                if K.is_integral(y):
                    hit = y
                    break
            if hit is None:
                break
            basis[max(i for i in range(4) if c[i])] = hit
            index *= p
    return pdisc // index ** 2


@pytest.mark.parametrize("args,disc", [((13, -13, 3), 140608), ((133, -25, 2), 1645077),
                                       ((19, -13, 1), 554496), ((5, -5, 1), 8000)])
def test_discriminant_examples(args, disc):
    K = CMQuartic(*args)
    assert K.discriminant == disc == _saturated_discriminant(K)


def test_d133_discriminant(field133):
    assert field133.discriminant == 3 * 31 * 133 ** 2


@given(primitive_fields())
@settings(max_examples=15)
def test_maximal_order_matches_saturation_oracle(K):
    assert K.discriminant == _saturated_discriminant(K)
    for b in K.maximal_order.basis:
        assert K.is_integral(b)
    # O_K contains Z[theta] and the real subring
    assert all(c.denominator == 1 for c in K.maximal_order.coords(K.theta()))


@given(primitive_fields(), st.sampled_from([2, 3, 5, 7, 11, 13]))
@settings(max_examples=20)
def test_prime_decomposition_degree(K, p):
    dec = prime_decomposition(K, p)
    assert sum(P.e * P.f for P in dec) == 4
    for P in dec:
        assert P.ideal.norm() == p ** P.f
    ramified = K.discriminant % p == 0
    assert ramified == any(P.e > 1 for P in dec)


def test_class_numbers(field13, field133):
    assert field133.class_group().order == 4
    assert field13.class_group().order == 2
    Ks = reflex_field(field133)
    assert Ks.min_poly == [1, 0, 100, 0, 2128]
    assert Ks.class_group().order == 4


def test_class_group_law_closes(field133):
    G = field133.class_group()
    table = [[G.find(a.ideal * b.ideal) for b in G.reps] for a in G.reps]
    for row in table:
        assert sorted(row) == list(range(G.order))
    assert [table[0][k] for k in range(G.order)] == list(range(G.order))


def test_cm_types(field13):
    types = field13.cm_types()
    assert len(types) == 4
    for Phi in types:
        a, b = Phi.embeddings
        # embeddings 0,1 restrict to one real embedding of K+, 2,3 to the other
        assert {a // 2, b // 2} == {0, 1}
        c = Phi.conjugate()
        assert c != Phi and c.conjugate() == Phi and c in types
        assert not set(c.embeddings) & set(Phi.embeddings)


def test_reflex_fields(field13, field133):
    Ks = reflex_field(field133)
    assert Ks.galois_type() == "non-galois"
    assert is_isomorphic(reflex_field(Ks), field133)
    R13 = reflex_field(field13)
    assert is_isomorphic(field13, R13) and is_isomorphic(R13, field13)


def test_decomposition_condition(field13, field133):
    assert decomposition_condition(field13, 3) == "satisfied"
    assert decomposition_condition(field13, 23) == "satisfied"
    assert decomposition_condition(field13, 131) == "satisfied"
    split = next(p for p in sympy.primerange(3, 500)
                 if len(prime_decomposition(field13, p)) == 4)
    assert decomposition_condition(field13, split) == "not-satisfied"
    assert decomposition_condition(field133, 7) == "unknown"
    assert decomposition_condition(field133, 167) == "unknown"


def test_embeddings_are_ring_maps(field133):
    K = field133
    a, b = (F(1), F(2), F(0), F(-1)), (F(3), F(0), F(1), F(1, 1))
    ab = K.mul(a, b)
    with mpmath.workprec(200):
        for k in range(4):
            assert abs(K.embed(ab, k) - K.embed(a, k) * K.embed(b, k)) < mpmath.mpf(10) ** -50
    assert K.norm(ab) == K.norm(a) * K.norm(b)
