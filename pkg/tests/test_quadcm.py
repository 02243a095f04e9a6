import random
from math import gcd, isqrt

import mpmath
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from cmbounds import InvalidInput
from cmbounds.qalg import simultaneous_embedding_bound
from cmbounds.quadcm import (QuadOrder, class_number, eval_bivariate, hilbert_class_polynomial,
                             j_invariant, modular_polynomial, psi, reduced_forms,
                             singular_moduli_bound_check)
from cmbounds.util import fundamental_discriminant

X, Y = sympy.symbols("X Y")


def _brute_class_number(D):
    """Count primitive forms with |b| <= a <= c, b >= 0 on the boundary, by a wide box."""
    n = 0
    lim = isqrt(-D // 3) + 1
    for a in range(1, lim + 1):
        for b in range(-a, a + 1):
            if (b * b - D) % (4 * a):
                continue
            c = (b * b - D) // (4 * a)
            if c < a or gcd(gcd(a, b), c) != 1:
                continue
            if b < 0 and (-b == a or a == c):
                continue
            n += 1
    return n


DISCS = [D for D in range(-2000, 0) if D % 4 in (0, 1)]


def test_reduced_forms_examples():
    assert reduced_forms(-4) == [(1, 0, 1)]
    assert class_number(-3) == 1
    assert class_number(-23) == 3
    with pytest.raises(InvalidInput):
        reduced_forms(-5)


def test_class_numbers_match_brute_force():
    for D in DISCS:
        assert class_number(D) == _brute_class_number(D), D


@given(st.sampled_from(DISCS))
def test_reduced_forms_are_reduced(D):
    for a, b, c in reduced_forms(D):
        assert b * b - 4 * a * c == D
        assert abs(b) <= a <= c
        if abs(b) == a or a == c:
            assert b >= 0
        assert gcd(gcd(a, b), c) == 1


def test_j_invariant_values():
    assert abs(j_invariant(mpmath.mpc(0, 1)) - 1728) < mpmath.mpf(10) ** -60
    assert abs(j_invariant(mpmath.mpc(0, 2)) - 287496) < mpmath.mpf(10) ** -60
    with mpmath.workprec(300):
        rho = (1 + mpmath.sqrt(-3)) / 2  # j has a triple zero here, so tau needs full precision
    assert abs(j_invariant(rho)) < mpmath.mpf(10) ** -60
    with pytest.raises(InvalidInput):
        j_invariant(mpmath.mpc(0, -1))


def test_j_invariant_is_modular():
    rng = random.Random(5)
    # results come back at the caller's precision
    with mpmath.workprec(256):
        for _ in range(3):
            tau = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2))
            a, b, c, d = 2, 1, 5, 3
            j0 = j_invariant(tau)
            assert abs(j_invariant((a * tau + b) / (c * tau + d)) - j0) < mpmath.mpf(10) ** -50 * abs(j0)


def test_hilbert_class_polynomials(cache_dir):
    assert hilbert_class_polynomial(-4) == [-1728, 1]
    assert hilbert_class_polynomial(-3) == [0, 1]
    H = hilbert_class_polynomial(-23, cache_dir=cache_dir)
    assert len(H) == 4 and H[-1] == 1
    P = sympy.Poly(list(reversed(H)), X)
    assert P.is_irreducible
    assert not sympy.roots(P, filter="Q")
    assert sympy.discriminant(P) != 0


@pytest.mark.parametrize("D", [-23, -31, -47, -71, -104])
def test_hilbert_class_polynomial_precision_stable(D):
    H = hilbert_class_polynomial(D)
    assert hilbert_class_polynomial(D, prec=2 * 64 + 400) == H
    assert len(H) == class_number(D) + 1


def test_modular_polynomial_small(cache_dir):
    assert modular_polynomial(1) == {(1, 0): 1, (0, 1): -1}
    P2 = modular_polynomial(2, cache_dir=cache_dir)
    assert max(i for i, _ in P2) == 3 and max(j for _, j in P2) == 3
    assert all(P2[(j, i)] == c for (i, j), c in P2.items())
    with mpmath.workprec(400):
        v = eval_bivariate(P2, j_invariant(mpmath.mpc(0, 2), 400), j_invariant(mpmath.mpc(0, 1), 400))
    assert abs(v) < mpmath.mpf(10) ** -30
    P3 = modular_polynomial(3, cache_dir=cache_dir)
    assert max(i for i, _ in P3) == psi(3) == 4
    assert psi(6) == 12 and psi(4) == 6


def test_phi2_root_relation_random_tau(cache_dir):
    P2 = modular_polynomial(2, cache_dir=cache_dir)
    rng = random.Random(2024)
    with mpmath.workprec(300):
        for _ in range(5):
            tau = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.8, 1.6))
            j1, j2 = j_invariant(2 * tau, 300), j_invariant(tau, 300)
            val = eval_bivariate(P2, j1, j2)
            scale = max(1, abs(j1), abs(j2)) ** psi(2)
            assert abs(val) / scale < mpmath.mpf(10) ** -30


def _valid_discs(n):
    out = set()
    b = 0
    while b * b < 4 * n:
        D0 = b * b - 4 * n
        for f in range(1, isqrt(-D0) + 1):
            if D0 % (f * f) == 0 and (D0 // (f * f)) % 4 in (0, 1):
                out.add(D0 // (f * f))
        b += 1
    return out


@pytest.mark.parametrize("n", [2, 3])
def test_phi_diagonal_factors_into_hilbert_polynomials(n, cache_dir):
    P = modular_polynomial(n, cache_dir=cache_dir)
    diag = sympy.Poly(sum(c * X ** (i + j) for (i, j), c in P.items()), X)
    hcps = {D: sympy.Poly(list(reversed(hilbert_class_polynomial(D))), X) for D in _valid_discs(n)}
    _, factors = sympy.factor_list(diag)
    for fac, _ in factors:
        fac = sympy.Poly(fac, X).monic()
        assert any(fac.all_coeffs() == H.all_coeffs() for H in hcps.values()), fac


def test_singular_moduli_examples(cache_dir):
    r = singular_moduli_bound_check(QuadOrder(-3), QuadOrder(-4), cache_dir=cache_dir)
    assert abs(r.resultant) == 1728 and r.primes == [2, 3] and r.bound == 5 and r.ok
    r = singular_moduli_bound_check(QuadOrder(-3), QuadOrder(-7), cache_dir=cache_dir)
    assert abs(r.resultant) == 3375 and r.primes == [3, 5] and r.bound == 8 and r.ok
    r = singular_moduli_bound_check(QuadOrder(-4), QuadOrder(-8), cache_dir=cache_dir)
    assert abs(r.resultant) == 6272 and r.primes == [2, 7] and r.ok
    with pytest.raises(InvalidInput):
        singular_moduli_bound_check(QuadOrder(-4), QuadOrder(-16))


def _order_pairs():
    discs = [D for D in range(-100, -2) if D % 4 in (0, 1)]
    rng = random.Random(1729)
    pairs = []
    while len(pairs) < 20:
        d1, d2 = rng.sample(discs, 2)
        if fundamental_discriminant(d1)[1] != fundamental_discriminant(d2)[1]:
            pairs.append((d1, d2))
    return pairs


@pytest.mark.parametrize("d1,d2", _order_pairs())
def test_singular_moduli_primes_respect_bound(d1, d2, cache_dir):
    O1, O2 = QuadOrder(d1), QuadOrder(d2)
    r = singular_moduli_bound_check(O1, O2, cache_dir=cache_dir)
    bound = simultaneous_embedding_bound(O1.field_disc, O1.conductor, O2.field_disc, O2.conductor)
    assert r.ok and all(q <= bound for q in r.primes)
    # brute force: product of differences of the singular moduli themselves
    from cmbounds.quadcm import j_tau_of_form
    with mpmath.workprec(600):
        j1 = [j_invariant(j_tau_of_form(*f), 600) for f in reduced_forms(d1)]
        j2 = [j_invariant(j_tau_of_form(*f), 600) for f in reduced_forms(d2)]
        prod = mpmath.fprod(u - v for u in j1 for v in j2)
        assert abs(prod.imag) < 1e-20 * max(1, abs(prod))
        assert int(mpmath.nint(prod.real)) == r.resultant
