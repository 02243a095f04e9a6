"""Definite quaternion algebras B_{p,oo} and their maximal orders.

An algebra is presented as (a, b) with basis 1, i, j, k = ij, where
i^2 = a, j^2 = b, ij = -ji. Elements are 4-tuples of Fractions in that
basis. An order is a Z-basis of four elements; its Gram matrix is the
trace pairing M_ij = Tr(v_i conj(v_j)) = 2 <v_i, v_j>, so that
N(x) = x^T M x / 2 on integer coordinates.
"""

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import flint

from . import InvalidInput
from .lattice import enumerate_gram, gram_det, rank_of, qmat
from .util import hilbert_symbol, is_prime, require_prime, is_square

F = Fraction


@dataclass(frozen=True)
class QuaternionAlgebra:
    p: int
    a: int
    b: int

    def mul(self, x, y):
        a, b = self.a, self.b
        x0, x1, x2, x3 = x
        y0, y1, y2, y3 = y
        return (
            x0 * y0 + a * x1 * y1 + b * x2 * y2 - a * b * x3 * y3,
            x0 * y1 + x1 * y0 - b * x2 * y3 + b * x3 * y2,
            x0 * y2 + x2 * y0 + a * x1 * y3 - a * x3 * y1,
            x0 * y3 + x3 * y0 + x1 * y2 - x2 * y1,
        )

    @staticmethod
    def conj(x):
        return (x[0], -x[1], -x[2], -x[3])

    def norm(self, x):
        a, b = self.a, self.b
        return x[0] ** 2 - a * x[1] ** 2 - b * x[2] ** 2 + a * b * x[3] ** 2

    @staticmethod
    def trace(x):
        return 2 * x[0]

    def pair(self, x, y):
        """Tr(x conj(y))."""
        a, b = self.a, self.b
        return 2 * (x[0] * y[0] - a * x[1] * y[1] - b * x[2] * y[2] + a * b * x[3] * y[3])

    def ramified_primes(self):
        """Finite primes where the Hilbert symbol (a, b) is -1."""
        cands = {2} | {q for q in _prime_divisors(self.a * self.b)}
        return sorted(q for q in cands if hilbert_symbol(self.a, self.b, q) == -1)

    def is_definite(self):
        return hilbert_symbol(self.a, self.b, 0) == -1

    def unit(self):
        return (F(1), F(0), F(0), F(0))


def _prime_divisors(n):
    import sympy
    return list(sympy.factorint(abs(n)).keys())


def _min_nonresidue_3mod4(p):
    q = 3
    while True:
        if is_prime(q) and q % 4 == 3 and pow(p, (q - 1) // 2, q) == q - 1:
            return q
        q += 4


def build_algebra(p):
    """Standard model of the algebra ramified at p and infinity."""
    require_prime(p)
    if p == 2:
        a, b = -1, -1
    elif p % 4 == 3:
        a, b = -1, -p
    elif p % 8 == 5:
        a, b = -2, -p
    else:
        # p = 1 mod 8: (-q, -p) with q = 3 mod 4 a non-residue mod p;
        # by reciprocity p is then a non-residue mod q.
        a, b = -_min_nonresidue_3mod4(p), -p
    A = QuaternionAlgebra(p, a, b)
    assert A.is_definite() and A.ramified_primes() == [p]
    return A


def _maximal_order_basis(A):
    p, a = A.p, A.a
    h = F(1, 2)
    if p == 2:
        return [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (h, h, h, h)]
    if p % 4 == 3:
        return [(1, 0, 0, 0), (0, 1, 0, 0), (h, 0, h, 0), (0, h, 0, h)]
    if p % 8 == 5:
        return [(h, 0, h, h), (0, F(1, 4), h, F(1, 4)), (0, 0, 1, 0), (0, 0, 0, 1)]
    q = -a
    c = next(c for c in range(q) if (c * c * p + 1) % q == 0)
    return [(h, h, 0, 0), (0, 0, h, -h), (0, F(1, q), 0, F(-c, q)), (0, 0, 0, 1)]


@dataclass
class QuaternionOrder:
    algebra: QuaternionAlgebra
    basis: list
    gram: list = field(init=False)

    def __post_init__(self):
        A = self.algebra
        self.basis = [tuple(F(c) for c in v) for v in self.basis]
        self.gram = [[int(A.pair(u, v)) for v in self.basis] for u in self.basis]
        self._inv = qmat([list(v) for v in self.basis]).inv()

    @property
    def p(self):
        return self.algebra.p

    def element(self, coords):
        """Algebra element with the given integer coordinates in the order basis."""
        return tuple(sum(c * v[t] for c, v in zip(coords, self.basis)) for t in range(4))

    def coords(self, x):
        """Coordinates of an algebra element in the order basis (Fractions)."""
        row = qmat([list(x)]) * self._inv
        return tuple(F(int(row[0, j].p), int(row[0, j].q)) for j in range(4))

    def contains(self, x):
        return all(c.denominator == 1 for c in self.coords(x))

    def norm_coords(self, c):
        G = self.gram
        return sum(c[i] * G[i][j] * c[j] for i in range(4) for j in range(4)) // 2

    def discriminant_squared(self):
        return gram_det(self.gram)

    def covolume(self):
        return math.sqrt(self.discriminant_squared())

    def check_invariants(self):
        """Raise AssertionError unless this is a maximal order of B_{p,oo}."""
        A = self.algebra
        G = self.gram
        assert all(G[i][j] == G[j][i] for i in range(4) for j in range(4))
        assert all(G[i][i] % 2 == 0 for i in range(4))
        minors = [flint.fmpz_mat([r[:k] for r in G[:k]]).det() for k in range(1, 5)]
        assert all(m > 0 for m in minors), "not positive definite"
        assert self.discriminant_squared() == self.p ** 2
        assert self.contains(A.unit())
        for u in self.basis:
            assert self.contains(A.conj(u))
            assert A.trace(u).denominator == 1 and A.norm(u).denominator == 1
            for v in self.basis:
                assert self.contains(A.mul(u, v)), "not closed under multiplication"
        return True


def maximal_order(A):
    O = QuaternionOrder(A, _maximal_order_basis(A))
    O.check_invariants()
    return O


def short_vectors(O, bound):
    """Elements x of O with N(x) <= bound, as integer coordinate tuples.

    Each element appears once; the list is sorted and includes 0.
    """
    bound = F(bound)
    if bound <= 0:
        raise InvalidInput("bound must be positive")
    return enumerate_gram(O.gram, int(2 * bound // 1))


def _lex_key(c):
    return tuple(c)


def _positive_lead(c):
    for v in c:
        if v:
            return v > 0
    return False


@dataclass
class SuccessiveMinima:
    mu: list
    norms: list
    realizers: list  # coordinate tuples in the order basis

    @property
    def product(self):
        return math.prod(self.mu)


def successive_minima(O):
    """Successive minima of the gauge sqrt(N) on O, with realizers.

    Vectors are scanned by increasing norm; ties broken by the smallest
    coordinate vector with positive leading entry.
    """
    bound = max(2, math.floor(8 * O.p / math.pi ** 2))
    while True:
        vecs = [v for v in short_vectors(O, bound) if _positive_lead(v)]
        vecs.sort(key=lambda v: (O.norm_coords(v), _lex_key(v)))
        chosen = []
        for v in vecs:
            if rank_of(chosen + [v]) > len(chosen):
                chosen.append(v)
                if len(chosen) == 4:
                    norms = [O.norm_coords(c) for c in chosen]
                    return SuccessiveMinima([math.sqrt(n) for n in norms], norms, chosen)
        bound *= 2


@dataclass
class QuadraticSuborder:
    k: tuple
    disc: int
    conductor: int
    field_disc: int


def quadratic_order_of(A, x):
    """Discriminant data of Z[x] for a non-rational integral element x."""
    from .util import fundamental_discriminant
    t, n = A.trace(x), A.norm(x)
    disc = int(t * t - 4 * n)
    m, dk = fundamental_discriminant(disc)
    return disc, m, dk


def minimal_quadratic_suborder(O):
    """Z[k] for a realizer k of mu_2 taken independent of 1.

    mu_1 = 1 is realized by 1, so mu_2 is the least norm of a non-rational
    element; ties go to the smallest coordinate vector, as for the minima.
    """
    sm = successive_minima(O)
    one = list(O.coords(O.algebra.unit()))
    n2 = sm.norms[1]
    cands = sorted(v for v in short_vectors(O, n2)
                   if _positive_lead(v) and O.norm_coords(v) == n2 and rank_of([one, list(v)]) == 2)
    k = O.element(cands[0])
    disc, m, dk = quadratic_order_of(O.algebra, k)
    return QuadraticSuborder(k, disc, m, dk)


@dataclass
class CommutativityReport:
    ok: bool
    threshold: float
    elements: list
    counts: dict
    order_disc: int = None
    counterexample: tuple = None
    message: str = ""


def small_norm_commutativity_check(O):
    """Check that elements of norm below sqrt(p)/8 commute pairwise."""
    A = O.algebra
    thr = math.sqrt(O.p) / 8
    # N(x) < sqrt(p)/8 and N integral: N <= ceil(thr) - 1
    nmax = math.ceil(thr) - 1
    if nmax < 1:
        return CommutativityReport(True, thr, [], {}, None, None, "no non-zero element qualifies")
    coords = [c for c in short_vectors(O, nmax) if any(c)]
    elems = [O.element(c) for c in coords]
    counts = {}
    for c in coords:
        n = O.norm_coords(c)
        counts[n] = counts.get(n, 0) + 1
    for n, cnt in counts.items():
        if cnt > 4 * math.sqrt(n) + 2:
            return CommutativityReport(False, thr, coords, counts, message=f"{cnt} elements of norm {n}")
    for (c1, x), (c2, y) in combinations(zip(coords, elems), 2):
        if A.mul(x, y) != A.mul(y, x):
            return CommutativityReport(False, thr, coords, counts, counterexample=(c1, c2),
                                       message="non-commuting pair")
    # the ring generated: all lie in Q + Q k for a single non-rational k
    irr = [x for x in elems if any(x[1:])]
    disc = None
    if irr:
        rows = [list(O.coords(A.unit()))] + [list(O.coords(x)) for x in elems]
        if rank_of(rows) != 2:
            return CommutativityReport(False, thr, coords, counts, message="elements span rank > 2")
        disc = _ring_disc(A, elems)
    return CommutativityReport(True, thr, coords, counts, disc, None, "ok")


def _ring_disc(A, elems):
    # discriminant of the order Z[x_1, ..., x_n] inside a quadratic field:
    # the lattice spanned by 1 and the x's, written in the basis (1, k0)
    from math import gcd
    k0 = next(x for x in elems if any(x[1:]))
    # each x = s + t*(k0 - Re k0) in coordinates; use the imaginary part ratio
    w = (F(0),) + tuple(k0[1:])
    idx = next(i for i in range(1, 4) if w[i])
    half = [(x[0], x[idx] / w[idx]) for x in elems] + [(F(1), F(0))]
    # Z-lattice in Q^2 spanned by half; compute its basis via HNF over common denominator
    den = 1
    for s, t in half:
        den = den * s.denominator // gcd(den, s.denominator)
        den = den * t.denominator // gcd(den, t.denominator)
    rows = [[int(s * den), int(t * den)] for s, t in half]
    from .lattice import hnf
    H = hnf(rows)
    (s1, t1), (s2, t2) = [(F(r[0], den), F(r[1], den)) for r in H]
    b1 = (s1,) + tuple(t1 * c for c in w[1:])
    b2 = (s2,) + tuple(t2 * c for c in w[1:])
    g = [[A.pair(u, v) / 2 for v in (b1, b2)] for u in (b1, b2)]
    # disc of the order = -4 det(<,>) with <x,y> = Tr(x ybar)/2
    return int(-4 * (g[0][0] * g[1][1] - g[0][1] * g[1][0]))


def simultaneous_embedding_bound(d1, m1, d2, m2):
    """(m1^2 d1 - 1)(m2^2 d2 - 1)/4 with signed discriminants."""
    if d1 >= 0 or d2 >= 0 or m1 < 1 or m2 < 1:
        raise InvalidInput("need negative discriminants and positive conductors")
    if d1 == d2:
        warnings.warn("the two quadratic fields coincide; the bound hypothesis fails",
                      stacklevel=2)
    return F((m1 * m1 * d1 - 1) * (m2 * m2 * d2 - 1), 4)


@dataclass
class CovolumeReport:
    p: int
    gram_det: Fraction
    upper: Fraction
    ok: bool
    degenerate: bool = False

    @property
    def covolume(self):
        return math.sqrt(self.gram_det)


def covolume_inequality_check(O, k1, k2):
    """Check p <= covol(Z<1, k1, k2, k1k2>) <= 4 N(k1) N(k2).

    Compared in squared form so the check is exact.
    """
    A = O.algebra
    if A.mul(k1, k2) == A.mul(k2, k1):
        raise InvalidInput("k1 and k2 commute; the span is not of full rank")
    L = [A.unit(), k1, k2, A.mul(k1, k2)]
    G = qmat([[A.pair(u, v) for v in L] for u in L])
    det = F(int(G.det().p), int(G.det().q))
    up = 4 * A.norm(k1) * A.norm(k2)
    ok = O.p ** 2 <= det <= up * up
    return CovolumeReport(O.p, det, up, ok)
