import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from cmbounds import siegel
from cmbounds.siegel import (EVEN, GOEPEL, H6_SIGNS, ODD, SYZYGOUS, NonPrincipalForm,
                             PrecisionContext, SingularPoint, act, is_symplectic)

CTX = PrecisionContext(256)

# published invariants of the two rational curves for the d=13 field
I_CURVE1 = (Fraction(2 * 11**5 * 53**5 * 6719**5 * 30113**5, 3**7 * 23**12 * 131**12),
            Fraction(2 * 5 * 11**3 * 53**3 * 6719**3 * 7229 * 30113**3, 3**3 * 23**8 * 131**8),
            Fraction(2 * 11**2 * 19 * 53**2 * 6719**2 * 30113**2 * 237589628623651,
                     3**4 * 23**8 * 131**8))
I_CURVE2 = (Fraction(2 * 7**10 * 11**5 * 21059**5, 3**7 * 23**12),
            Fraction(2 * 5 * 7**7 * 11**3 * 8387 * 21059**3, 3**3 * 23**8),
            Fraction(2 * 7**6 * 11**2 * 21059**2 * 71347 * 739363, 3**4 * 23**8))


def _mpq(q):
    return mpmath.mpf(q.numerator) / q.denominator


def _random_tau(rng):
    """A point of the Siegel upper half space, roughly near the fundamental domain."""
    y11 = mpmath.mpf(rng.uniform(1.0, 1.6))
    y22 = mpmath.mpf(rng.uniform(1.0, 1.6))
    y12 = mpmath.mpf(rng.uniform(-0.4, 0.4))
    x = [mpmath.mpf(rng.uniform(-0.5, 0.5)) for _ in range(3)]
    return mpmath.matrix([[mpmath.mpc(x[0], y11), mpmath.mpc(x[1], y12)],
                          [mpmath.mpc(x[1], y12), mpmath.mpc(x[2], y22)]])


def _diag(t1, t2):
    return mpmath.matrix([[t1, 0], [0, t2]])


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), mpmath.mpf(1))


# genus-1 oracles: theta functions and q-expansions of Eisenstein series

def _theta1(eps, epsp, t):
    q = mpmath.exp(mpmath.pi * 1j * t)
    if eps == 0:
        return mpmath.jtheta(3 if epsp == 0 else 4, 0, q)
    return mpmath.jtheta(2, 0, q) if epsp == 0 else mpmath.mpc(0)


def _eisenstein(k, t, terms=120):
    q = mpmath.exp(2 * mpmath.pi * 1j * t)
    c = {4: 240, 6: -504}[k]
    s = mpmath.fsum(sum(d ** (k - 1) for d in range(1, n + 1) if n % d == 0) * q ** n
                    for n in range(1, terms))
    return 1 + c * s


# ---------------------------------------------------------------------------
# characteristics

def test_characteristic_counts():
    assert len(EVEN) == 10 and len(ODD) == 6
    assert len(SYZYGOUS) == 60 and len(GOEPEL) == 15 and len(H6_SIGNS) == 60


def test_odd_thetas_vanish():
    rng = random.Random(1)
    with mpmath.workprec(CTX.work):
        tau = _random_tau(rng)
        for ch in ODD:
            assert siegel.theta_constant(ch, tau, CTX) == 0
        # and by the series: the i^(m.eps') terms cancel in pairs m, -m
        assert len(siegel.theta_constants(tau, CTX)) >= 10


def test_theta_at_i_identity():
    with mpmath.workprec(CTX.work):
        tau = _diag(1j, 1j)
        th = siegel.theta_constant(((0, 0), (0, 0)), tau, CTX)
        q = mpmath.exp(-mpmath.pi)
        assert _rel(th, mpmath.jtheta(3, 0, q) ** 2) < mpmath.mpf(10) ** -60


def test_diagonal_thetas_factor():
    rng = random.Random(2)
    with mpmath.workprec(CTX.work):
        t1 = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.5))
        t2 = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.5))
        th = siegel.theta_constants(_diag(t1, t2), CTX)
        for ch in EVEN:
            (e1, e2), (f1, f2) = ch
            want = _theta1(e1, f1, t1) * _theta1(e2, f2, t2)
            assert abs(th[ch] - want) < mpmath.mpf(10) ** -60


def test_chi10_vanishes_on_diagonal():
    rng = random.Random(3)
    with mpmath.workprec(CTX.work):
        for _ in range(10):
            t1 = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2.0))
            t2 = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2.0))
            assert abs(siegel.chi10(_diag(t1, t2), CTX)) < mpmath.mpf(10) ** -50


def test_eisenstein_restrict_to_products():
    rng = random.Random(4)
    with mpmath.workprec(CTX.work):
        for _ in range(3):
            t1 = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.5))
            t2 = mpmath.mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.5))
            f = siegel.theta_forms(_diag(t1, t2), CTX)
            e4 = _eisenstein(4, t1) * _eisenstein(4, t2)
            e6 = _eisenstein(6, t1) * _eisenstein(6, t2)
            assert _rel(f.psi4, e4) < mpmath.mpf(10) ** -60
            assert _rel(f.psi6, e6) < mpmath.mpf(10) ** -60


def test_scalings_of_forms():
    with mpmath.workprec(CTX.work):
        f = siegel.theta_forms(_random_tau(random.Random(5)), CTX)
        assert _rel(f.big_theta, -4 * f.chi10) < mpmath.mpf(10) ** -70
        assert _rel(f.chi12 * 3 * 2 ** 17, f.h12) < mpmath.mpf(10) ** -70


# ---------------------------------------------------------------------------
# modularity

WEIGHTS = {"big_theta": 10, "psi4": 4, "psi6": 6, "chi12": 12}


@given(seed=st.integers(0, 10 ** 6))
def test_modularity_under_random_moves(seed):
    rng = random.Random(seed)
    with mpmath.workprec(CTX.work):
        tau = _random_tau(rng)
        g = siegel.random_symplectic(rng, length=3)
        assert is_symplectic(g)
        new, det = act(g, tau)
        f0 = siegel.theta_forms(tau, CTX)
        f1 = siegel.theta_forms(new, CTX)
        for name, w in WEIGHTS.items():
            lhs, rhs = getattr(f1, name), det ** w * getattr(f0, name)
            assert _rel(lhs, rhs) < mpmath.mpf(10) ** -20, name


def test_h6_signs_forced_by_modularity():
    """Each sign of the weight-6 combination is pinned down: flipping any one
    of them breaks the transformation law under some generator of Sp4(Z)."""
    rng = random.Random(6)
    with mpmath.workprec(CTX.work):
        tau = _random_tau(rng)
        t0 = {c: v ** 4 for c, v in siegel.theta_constants(tau, CTX).items()}
        moves = []
        for g in siegel.GENERATORS + [siegel.rotation([[1, 1], [0, 1]])]:
            new, det = act(g, tau)
            moves.append(({c: v ** 4 for c, v in siegel.theta_constants(new, CTX).items()}, det))

        def h6(t, signs):
            return mpmath.fsum(s * t[x] * t[y] * t[z] for s, (x, y, z) in zip(signs, SYZYGOUS))

        def defect(signs):
            return max(_rel(h6(t1, signs), det ** 6 * h6(t0, signs)) for t1, det in moves)

        assert defect(H6_SIGNS) < mpmath.mpf(10) ** -40
        for k in range(60):
            flipped = list(H6_SIGNS)
            flipped[k] = -flipped[k]
            assert defect(flipped) > mpmath.mpf(10) ** -10


def test_igusa_invariants_are_invariant():
    rng = random.Random(7)
    with mpmath.workprec(CTX.work):
        tau = _random_tau(rng)
        base = siegel.igusa_invariants(tau, CTX)
        moved, _ = act(siegel.random_symplectic(rng, length=5), tau)
        red = siegel.siegel_reduce(moved)
        for other in (siegel.igusa_invariants(moved, CTX), siegel.igusa_invariants(red.tau, CTX)):
            for a, b in zip(base, other):
                assert _rel(a, b) < mpmath.mpf(10) ** -20


def test_siegel_form_expression_agrees():
    with mpmath.workprec(CTX.work):
        tau = _random_tau(random.Random(8))
        a = siegel.igusa_invariants(tau, CTX)
        b = siegel.igusa_invariants_from_siegel_forms(tau, CTX)
        for x, y in zip(a, b):
            assert _rel(x, y) < mpmath.mpf(10) ** -50
        j = siegel.frak_j(tau, CTX)
        for x, y in zip(a, j):
            assert _rel(2 ** 12 * x, y) < mpmath.mpf(10) ** -60


def test_diagonal_point_is_singular():
    with mpmath.workprec(CTX.work):
        with pytest.raises(SingularPoint):
            siegel.igusa_invariants(_diag(mpmath.mpc(0.1, 1.2), mpmath.mpc(-0.2, 1.1)), CTX)


def test_i3_coefficient_against_published_curves(field13):
    from cmbounds.classpoly import enumerate_cm_points
    points = enumerate_cm_points(field13)
    assert len(points) == 2
    with mpmath.workprec(CTX.work):
        for pt in points:
            i1 = siegel.igusa_invariants(pt.tau, CTX)[0]
            pub = min((I_CURVE1, I_CURVE2), key=lambda c: abs(i1 - _mpq(c[0])))
            good = siegel.igusa_invariants_from_siegel_forms(pt.tau, CTX)
            alt = siegel.igusa_invariants_from_siegel_forms(pt.tau, CTX, i3_second=Fraction(12))
            for v, q in zip(good, pub):
                assert _rel(v, _mpq(q)) < mpmath.mpf(10) ** -30
            assert _rel(alt[2], _mpq(pub[2])) > mpmath.mpf(10) ** -3


# ---------------------------------------------------------------------------
# reduction

def test_siegel_reduce_properties():
    rng = random.Random(9)
    with mpmath.workprec(CTX.work):
        for _ in range(5):
            tau = _random_tau(rng)
            far, _ = act(siegel.random_symplectic(rng, length=8), tau)
            red = siegel.siegel_reduce(far)
            assert is_symplectic(red.gamma)
            back, _ = act(red.gamma, far)
            assert mpmath.mnorm(back - red.tau, 1) < mpmath.mpf(10) ** -50
            t = red.tau
            for i in range(2):
                for j in range(2):
                    assert abs(mpmath.re(t[i, j])) <= 0.5 + 1e-30
            y11, y12, y22 = mpmath.im(t[0, 0]), mpmath.im(t[0, 1]), mpmath.im(t[1, 1])
            assert abs(2 * y12) <= y11 + 1e-30 and y11 <= y22 + 1e-30
            assert abs(t[0, 0]) >= 1 - 1e-30


def test_siegel_reduce_fixed_point():
    with mpmath.workprec(CTX.work):
        tau = mpmath.matrix([[mpmath.mpc(0, 1.5), mpmath.mpc(0.1, 0.3)],
                             [mpmath.mpc(0.1, 0.3), mpmath.mpc(0.2, 2)]])
        red = siegel.siegel_reduce(tau)
        assert red.gamma == [[int(i == j) for j in range(4)] for i in range(4)]


def test_reduce_rejects_bad_points():
    with pytest.raises(Exception):
        siegel.siegel_reduce(mpmath.matrix([[1j, 0], [0, -1j]]))


# ---------------------------------------------------------------------------
# symplectic bases

def _mul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))]
            for i in range(len(A))]


def _t(A):
    return [list(r) for r in zip(*A)]


def test_symplectic_basis_standard():
    assert siegel.symplectic_basis(siegel.J_matrix()) == [[int(i == j) for j in range(4)]
                                                         for i in range(4)]


@given(seed=st.integers(0, 10 ** 6))
def test_symplectic_basis_random_unimodular(seed):
    rng = random.Random(seed)
    M = [[int(i == j) for j in range(4)] for i in range(4)]
    for _ in range(8):
        i, j = rng.sample(range(4), 2)
        c = rng.randint(-3, 3)
        M = [[M[r][k] + (c * M[j][k] if r == i else 0) for k in range(4)] for r in range(4)]
    E = _mul(_mul(M, siegel.J_matrix()), _t(M))
    P = siegel.symplectic_basis(E)
    assert _mul(_mul(P, E), _t(P)) == siegel.J_matrix()


def test_symplectic_basis_non_principal():
    E = [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 2], [0, 0, -2, 0]]
    with pytest.raises(NonPrincipalForm):
        siegel.symplectic_basis(E)
    with pytest.raises(Exception):
        siegel.symplectic_basis([[1, 0, 0, 0]] + [[0] * 4] * 3)


# ---------------------------------------------------------------------------
# CM values and units

def test_delta_value_independent_of_generator(field13):
    from cmbounds.cmfield import Ideal, totally_positive_generator
    K = field13
    O = K.maximal_order
    Phi = K.cm_types()[0]
    A = K.class_group().reps[1].ideal
    a = totally_positive_generator(K, A * A.conj())
    eps = O.coords(K.real_unit_element())
    a2 = O.mul_coords(O.mul_coords(a, eps), eps)
    with mpmath.workprec(CTX.work):
        d1 = siegel.delta_value(A, Phi, K, CTX, a=a)
        d2 = siegel.delta_value(A, Phi, K, CTX, a=a2)
        d0 = siegel.delta_value(Ideal.unit(O), Phi, K, CTX)
        assert abs(d1) > mpmath.mpf(10) ** -30 and abs(d0) > mpmath.mpf(10) ** -30
        assert _rel(d1, d2) < mpmath.mpf(10) ** -30


def test_unit_invariant_trivial_class(field13):
    from cmbounds.cmfield import Ideal
    K = field13
    Phi = K.cm_types()[0]
    A = K.class_group().reps[1].ideal
    U = siegel.unit_invariant(Phi, A, Ideal.unit(K.maximal_order), K, CTX)
    assert U.minpoly == [1, -1] and U.norm == 1 and U.ok


def test_unit_invariant_nontrivial_class(field13):
    K = field13
    Phi = K.cm_types()[0]
    A = K.class_group().reps[1].ideal
    U = siegel.unit_invariant(Phi, A, A, K, CTX)
    # frozen value of this computation; the prime must be one of the
    # denominator primes of the class polynomials and below the bound
    assert U.factors == {131: -4}
    assert U.ok
    assert set(U.factors) <= {2, 3, 23, 131}
    hi = siegel.unit_invariant(Phi, A, A, K, PrecisionContext(400))
    assert hi.minpoly == U.minpoly
    with mpmath.workprec(CTX.work):
        assert _rel(hi.value, U.value) < mpmath.mpf(10) ** -60
