"""Embeddings of a quartic CM order into End(E1 x E2), by exhaustive search.

Write K = Q(sqrt d)(sqrt r) with r = alpha + beta sqrt d. An embedding
compatible with the product polarization sends

    sqrt d  ->  [[a, b], [b^v, -a]]        a in Z, b in Hom(E2, E1)
    sqrt r  ->  [[x, y], [-y^v, w]]        x in End(E1)^0, w in End(E2)^0

and squaring the second matrix gives the conditions checked here:

    a^2 + deg b = d
    x^2 - deg y = alpha + beta a,   w^2 - deg y = alpha - beta a
    x y + y w = beta b

For trace-zero x the first condition on x reads N(x) + deg y = -(alpha + beta a),
which together with deg y >= 1 bounds every unknown.

Lattice model. Fix a maximal order O of B_{p,oo}. A supersingular curve is
a left O-ideal J up to right scaling, End(E_J) = O_R(J), and for two of them
Hom(E2, E1) = J1^-1 J2 = conj(J1) J2 / N(J1) with deg h = N(h) / N(J1^-1 J2).
Composition is multiplication in B and the dual of h is conj(h) / N(J1^-1 J2).
Curve classes are reached by a breadth-first walk over ell-neighbours of O;
the Eichler mass sum_E 1/#(Aut E / +-1) = (p - 1)/12 tells when every class
has been seen.
"""

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product

import numpy as np

from . import BudgetExceeded, InvalidInput
from .lattice import enumerate_gram, hnf
from .qalg import QuaternionOrder, build_algebra, maximal_order
from .util import lcm, require_prime

F = Fraction


# ---------------------------------------------------------------------------
# lattices inside B

def _span(gens):
    """HNF basis (4 elements) of the Z-span of algebra elements."""
    den = lcm(*[c.denominator for g in gens for c in g])
    rows = hnf([[int(c * den) for c in g] for g in gens])
    if len(rows) != 4:
        raise ValueError("generators do not span a full lattice")
    return [tuple(F(c, den) for c in r) for r in rows]


def _det(basis):
    from .lattice import qmat
    d = qmat([list(v) for v in basis]).det()
    return abs(F(int(d.p), int(d.q)))


def _key(basis):
    return tuple(basis)


def _frac_sqrt(q):
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n != q.numerator or d * d != q.denominator:
        raise ValueError(f"{q} is not a rational square")
    return F(n, d)


def _right_order(A, J, nJ):
    """O_R(J) = conj(J) J / N(J) for a locally principal J."""
    gens = [tuple(c / nJ for c in A.mul(A.conj(u), v)) for u in J for v in J]
    return QuaternionOrder(A, _span(gens))


@dataclass
class CurveClass:
    """A supersingular curve class, given by a left O-ideal."""

    index: int
    ideal: list         # Z-basis of J as algebra elements
    norm: Fraction      # N(J)
    order: QuaternionOrder  # End(E) = O_R(J)
    units: int          # #End(E)^x
    depth: int


@dataclass
class HomLattice:
    """Hom(E2, E1) as a lattice in B, with the degree form.

    ``gram[i][j] = Tr(h_i conj(h_j)) / scale`` so deg = v^T gram v / 2.
    """

    R1: QuaternionOrder
    R2: QuaternionOrder
    basis: list
    scale: Fraction
    gram: list = field(init=False)
    label: str = ""

    def __post_init__(self):
        A = self.R1.algebra
        G = [[A.pair(u, v) / self.scale for v in self.basis] for u in self.basis]
        if any(g.denominator != 1 for r in G for g in r):
            raise AssertionError("degree form is not integral")
        self.gram = [[int(g) for g in r] for r in G]
        from .lattice import qmat
        self._inv = qmat([list(v) for v in self.basis]).inv()

    @property
    def algebra(self):
        return self.R1.algebra

    def element(self, c):
        return tuple(sum(ci * v[t] for ci, v in zip(c, self.basis)) for t in range(4))

    def coords(self, x):
        from .lattice import qmat
        row = qmat([list(x)]) * self._inv
        return tuple(F(int(row[0, j].p), int(row[0, j].q)) for j in range(4))

    def contains(self, x):
        return all(c.denominator == 1 for c in self.coords(x))

    def degree(self, x):
        return self.algebra.norm(x) / self.scale

    def dual(self, x):
        """h^v = conj(h) / scale, an element of Hom(E1, E2)."""
        return tuple(c / self.scale for c in self.algebra.conj(x))

    def gram_det(self):
        from .lattice import gram_det
        return gram_det(self.gram)


def hom_lattice(A, c1, c2):
    J1, J2 = c1.ideal, c2.ideal
    gens = [tuple(c / c1.norm for c in A.mul(A.conj(u), v)) for u in J1 for v in J2]
    return HomLattice(c1.order, c2.order, _span(gens), c2.norm / c1.norm,
                      label=f"Hom(E{c2.index},E{c1.index})")


def _neighbours(A, R, J, nJ, ell):
    """All left R-ideals J' in J with N(J') = ell N(J), for a prime ell != p.

    There are exactly ell + 1 of them. For ell <= 3 every class of J / ell J
    is tried; for larger ell candidates are drawn with a fixed seed until
    ell + 1 distinct ideals are known, then the full scan is the fallback.
    """
    base = [tuple(ell * c for c in v) for v in J]
    target = _det(J) * ell ** 2
    seen, out = set(), []

    def try_gen(c):
        g = tuple(sum(ci * v[t] for ci, v in zip(c, J)) for t in range(4))
        if (A.norm(g) / nJ) % ell:
            return
        Jp = _span(base + [A.mul(o, g) for o in R.basis])
        if _det(Jp) != target:
            return
        k = _key(Jp)
        if k not in seen:
            seen.add(k)
            out.append(Jp)

    if ell > 3:
        rng = random.Random(ell)
        for _ in range(60 * ell * ell):
            try_gen([rng.randrange(ell) for _ in range(4)])
            if len(out) == ell + 1:
                return sorted(out)
    for c in product(range(ell), repeat=4):
        if any(c):
            try_gen(c)
    return sorted(out)


def _unit_count(R):
    return sum(1 for v in enumerate_gram(R.gram, 2) if any(v))


def _isomorphic(A, c, J, nJ):
    """Is the curve of J isomorphic to the curve of class c?"""
    gens = [tuple(x / c.norm for x in A.mul(A.conj(u), v)) for u in c.ideal for v in J]
    H = _span(gens)
    scale = nJ / c.norm
    G = [[int(A.pair(u, v) / scale) for v in H] for u in H]
    return any(any(v) for v in enumerate_gram(G, 2))


@dataclass
class ClassCover:
    p: int
    ell: int
    classes: list
    mass: Fraction
    total_mass: Fraction
    depth: int

    @property
    def complete(self):
        return self.mass == self.total_mass


def curve_classes(p, max_depth=12, max_classes=64):
    """Supersingular curve classes reached from O by ell-neighbour steps.

    The walk stops when the Eichler mass is exhausted (every class found),
    when ``max_classes`` classes are known, or after ``max_depth`` steps.
    """
    require_prime(p)
    A = build_algebra(p)
    O = maximal_order(A)
    ell = 3 if p == 2 else 2
    total = F(p - 1, 12)
    start = CurveClass(0, list(O.basis), F(1), O, _unit_count(O), 0)
    classes = [start]
    mass = F(2, start.units)
    frontier = [(list(O.basis), F(1))]
    depth = 0
    seen = {_key(O.basis)}
    while mass < total and depth < max_depth and len(classes) < max_classes:
        depth += 1
        nxt = []
        for J, nJ in frontier:
            for Jp in _neighbours(A, O, J, nJ, ell):
                k = _key(Jp)
                if k in seen:
                    continue
                seen.add(k)
                nJp = nJ * ell
                nxt.append((Jp, nJp))
                if any(_isomorphic(A, c, Jp, nJp) for c in classes):
                    continue
                R = _right_order(A, Jp, nJp)
                c = CurveClass(len(classes), Jp, nJp, R, _unit_count(R), depth)
                classes.append(c)
                mass += F(2, c.units)
                if mass >= total or len(classes) >= max_classes:
                    break
            if mass >= total or len(classes) >= max_classes:
                break
        frontier = nxt
        if not nxt:
            break
    if mass > total:
        raise AssertionError("mass exceeded: duplicate curve classes")
    return ClassCover(p, ell, classes, mass, total, depth)


# ---------------------------------------------------------------------------
# bounds and solutions

def _check_field(K):
    if K.beta == 0 or not K.is_primitive():
        raise InvalidInput("beta = 0 or K not primitive: the field is biquadratic, "
                           "which is excluded")
    if F(K.alpha).denominator != 1 or F(K.beta).denominator != 1:
        raise InvalidInput("the search needs r = alpha + beta sqrt(d) in Z[sqrt d]")
    return int(K.alpha), int(K.beta), int(K.d)


def norm_bounds(K, a):
    """(delta1, delta2, d * delta1) for the given a with a^2 <= d."""
    alpha, beta, d = _check_field(K)
    if a * a > d:
        raise InvalidInput(f"a = {a} has a^2 > d = {d}")
    d1 = abs(alpha) - abs(beta) * abs(a)
    d2 = abs(alpha) + abs(beta) * abs(a)
    return d1, d2, d * d1


def a_values(d):
    r = math.isqrt(d)
    return [a for a in range(-r, r + 1) if a * a < d]


@dataclass
class EmbeddingSolution:
    a: int
    b: tuple
    x: tuple
    y: tuple
    w: tuple
    alpha: int
    beta: int
    delta1: int
    delta2: int
    lattice: HomLattice

    def as_dict(self):
        H = self.lattice
        ints = lambda c: [int(v) for v in c]
        return {
            "a": self.a,
            "alpha": self.alpha,
            "beta": self.beta,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "lattice": H.label,
            "b": ints(H.coords(self.b)),
            "y": ints(H.coords(self.y)),
            "x": ints(H.R1.coords(self.x)),
            "w": ints(H.R2.coords(self.w)),
            "deg_b": int(H.degree(self.b)),
            "deg_y": int(H.degree(self.y)),
            "norm_x": int(H.algebra.norm(self.x)),
            "norm_w": int(H.algebra.norm(self.w)),
        }


@dataclass
class Verification:
    ok: bool
    failed: str = None

    def __bool__(self):
        return self.ok


def _scalar(n):
    return (F(n), F(0), F(0), F(0))


def verify_solution(sol, p, K):
    """Recheck every equation exactly; report the first that fails."""
    H = sol.lattice
    A = H.algebra
    alpha, beta, d = int(K.alpha), int(K.beta), int(K.d)
    a = sol.a
    if A.p != p:
        return Verification(False, "lattice lives in the wrong algebra")
    checks = [
        ("alpha,beta", sol.alpha == alpha and sol.beta == beta),
        ("b in Hom", H.contains(sol.b)),
        ("y in Hom", H.contains(sol.y)),
        ("y != 0", any(sol.y)),
        ("x in R1^0", H.R1.contains(sol.x) and A.trace(sol.x) == 0),
        ("w in R2^0", H.R2.contains(sol.w) and A.trace(sol.w) == 0),
    ]
    for name, ok in checks:
        if not ok:
            return Verification(False, name)
    Ny = H.degree(sol.y)
    yyv = A.mul(sol.y, H.dual(sol.y))
    bbv = A.mul(sol.b, H.dual(sol.b))
    lhs_b = tuple(u + v for u, v in zip(A.mul(sol.x, sol.y), A.mul(sol.y, sol.w)))
    x2 = A.mul(sol.x, sol.x)
    w2 = A.mul(sol.w, sol.w)
    eqs = [
        ("a²+N(b)=d", tuple(a * a * (t == 0) + bbv[t] for t in range(4)) == _scalar(d)),
        ("x²−N(y)=α+βa", tuple(x2[t] - yyv[t] for t in range(4)) == _scalar(alpha + beta * a)),
        ("w²−N(y)=α−βa", tuple(w2[t] - yyv[t] for t in range(4)) == _scalar(alpha - beta * a)),
        ("xy+yw=βb", lhs_b == tuple(beta * c for c in sol.b)),
        ("N(x)+N(y)=−(α+βa)", A.norm(sol.x) + Ny == -(alpha + beta * a)),
        ("N(w)+N(y)=−(α−βa)", A.norm(sol.w) + Ny == -(alpha - beta * a)),
    ]
    for name, ok in eqs:
        if not ok:
            return Verification(False, name)
    return Verification(True)


def images_of_maximal_order(sol, K):
    """Check that the whole of O_K (not just Z[sqrt d, sqrt r]) lands in
    End(E1 x E2). Returns True or False; a finer test than verify_solution.
    """
    H = sol.lattice
    A = H.algebra
    zero = _scalar(0)

    def mm(M, N):
        return [[tuple(u + v for u, v in zip(A.mul(M[i][0], N[0][j]), A.mul(M[i][1], N[1][j])))
                 for j in range(2)] for i in range(2)]

    neg = lambda v: tuple(-c for c in v)
    T = [[sol.x, sol.y], [neg(H.dual(sol.y)), sol.w]]
    powers = [[[_scalar(1), zero], [zero, _scalar(1)]], T]
    for _ in range(2):
        powers.append(mm(powers[-1], T))
    OK = K.maximal_order
    for i in range(4):
        e = [0] * 4
        e[i] = 1
        c = OK.element(e)  # power-basis coordinates in sqrt(r)
        img = [[tuple(sum(c[k] * powers[k][r][s][t] for k in range(4)) for t in range(4))
                for s in range(2)] for r in range(2)]
        if not (H.R1.contains(img[0][0]) and H.contains(img[0][1]) and H.R2.contains(img[1][1])):
            return False
        # bottom left lies in Hom(E1, E2) = conj(Hom(E2, E1)) / scale
        back = tuple(c * H.scale for c in A.conj(img[1][0]))
        if not H.contains(back):
            return False
    return True


# ---------------------------------------------------------------------------
# curves with a small trace-zero endomorphism
#
# If (a, b, x, y, w) solves the system for (E1, E2) then so does
# (-a, b^v, w, -y^v, x) for (E2, E1), and x = w = 0 is impossible (it would
# force b = 0). So some solution has x != 0, i.e. E1 has an endomorphism x
# with x^2 = -n, 1 <= n < max(-(alpha + beta a)), and E2 is the target of an
# isogeny of degree deg y <= delta1 out of E1. For large p these E1 are few:
# their number, up to Frobenius, is read off from Hilbert class polynomials
# mod p, which certifies the quaternion-side enumeration below.

def _kronecker(D, p):
    import sympy
    return int(sympy.jacobi_symbol(D % p, p)) if p > 2 else None


def trace_zero_element(A, n):
    """Some x in B with x^2 = -n, or None when Q(sqrt -n) does not embed."""
    from sympy.abc import X, Y, Z
    from sympy.solvers.diophantine.diophantine import diop_ternary_quadratic
    p = A.p
    if n % p and _kronecker(-n, p) == 1:
        return None
    qf = [-A.a, -A.b, A.a * A.b]

    def q(u):
        return sum(c * t * t for c, t in zip(qf, u))

    # a rational point of q = n lies on some plane; try the planes spanned by
    # two small integer vectors, first all with entries in {-1, 0, 1}, then a
    # seeded random sample with entries up to 3
    small = [v for v in product(range(-1, 2), repeat=3) if any(v)]
    rng = random.Random(n)
    planes = [(v1, v2) for v1 in small for v2 in small]
    planes += [tuple(tuple(rng.randint(-3, 3) for _ in range(3)) for _ in range(2))
               for _ in range(20000)]
    for v1, v2 in planes:
        q11, q22 = q(v1), q(v2)
        q12 = q([s + t for s, t in zip(v1, v2)]) - q11 - q22
        if 4 * q11 * q22 - q12 * q12 <= 0:
            continue
        sol = diop_ternary_quadratic(q11 * X ** 2 + q12 * X * Y + q22 * Y ** 2 - n * Z ** 2)
        if sol[0] is None or sol[2] == 0:
            continue
        s, t, z = (int(c) for c in sol)
        x = (F(0),) + tuple(F(s * e + t * f, z) for e, f in zip(v1, v2))
        if A.norm(x) == n:
            return x
    raise AssertionError(f"no element of norm {n} found by conic slices")


def _left_order(A, L, O):
    """O_L(L) = L conj(L) / N(L) for a right O-ideal L."""
    nL = _frac_sqrt(_det(L) / _det(O.basis))
    gens = [tuple(c / nL for c in A.mul(u, A.conj(v))) for u in L for v in L]
    return QuaternionOrder(A, _span(gens))


def _in_lattice(basis, x):
    from .lattice import qmat
    row = qmat([list(x)]) * qmat([list(v) for v in basis]).inv()
    return all(row[0, j].q == 1 for j in range(4))


def _two_sided_prime(R):
    """The ideal of R above p: the radical of the trace form mod p."""
    import flint
    p = R.p
    M = flint.nmod_mat([[g % p for g in r] for r in R.gram], p)
    N, rank = M.nullspace()
    gens = [tuple(p * c for c in v) for v in R.basis]
    for k in range(rank):
        c = [int(N[i, k]) for i in range(4)]
        gens.append(R.element(c))
    return _span(gens)


def _is_principal(A, I, nI):
    G = [[A.pair(u, v) / nI for v in I] for u in I]
    return any(any(v) for v in enumerate_gram([[int(g) for g in r] for r in G], 2))


def orders_isomorphic(A, R, S):
    """R and S are conjugate iff R S or R S P_S is a principal left R-ideal."""
    I = _span([A.mul(u, v) for u in R.basis for v in S.basis])
    nI = _frac_sqrt(_det(I) / _det(R.basis))
    if _is_principal(A, I, nI):
        return True
    P = _two_sided_prime(S)
    IP = _span([A.mul(u, v) for u in I for v in P])
    return _is_principal(A, IP, nI * R.p)


def _orders_containing(A, O, x0, expected, ells=(2, 3, 5, 7, 11, 13), cap=400):
    """Maximal orders containing x0, up to conjugation, by x0-stable neighbour steps."""
    L = _span(list(O.basis) + [A.mul(x0, o) for o in O.basis])
    found = [_left_order(A, L, O)]
    frontier = list(found)
    ells = [l for l in ells if l != A.p]
    while frontier and len(found) < expected and len(found) < cap:
        nxt = []
        for R in frontier:
            for ell in ells:
                for J in _neighbours(A, R, R.basis, F(1), ell):
                    if not all(_in_lattice(J, A.mul(j, x0)) for j in J):
                        continue
                    S = _right_order(A, J, F(ell))
                    if any(orders_isomorphic(A, T, S) for T in found):
                        continue
                    found.append(S)
                    nxt.append(S)
                    if len(found) >= expected:
                        return found
        frontier = nxt
    return found


def _cm_discriminants(n):
    out = []
    for f in range(1, math.isqrt(4 * n) + 1):
        if (4 * n) % (f * f) == 0 and (-4 * n // (f * f)) % 4 in (0, 1):
            out.append(-4 * n // (f * f))
    return out


def supersingular_cm_count(n, p, cache_dir=None):
    """Supersingular j with Z[sqrt -n] in End, counted up to Frobenius.

    Read off from the factorisation of H_D mod p for the discriminants D of
    the orders containing Z[sqrt -n].
    """
    import flint
    from .quadcm import hilbert_class_polynomial
    lin, quad = set(), set()
    discs = _cm_discriminants(n)
    if _kronecker(-4 * n, p) == 1:
        return 0, discs
    for D in discs:
        H = flint.nmod_poly([c % p for c in hilbert_class_polynomial(D, cache_dir=cache_dir)], p)
        for f, _e in H.factor()[1]:
            c = tuple(int(v) for v in f.coeffs())
            if len(c) == 2:
                lin.add(-c[0] % p)
            elif len(c) == 3:
                quad.add(c)
            else:
                raise AssertionError(f"H_{D} has a factor of degree > 2 mod {p}")
    return len(lin) + len(quad), discs


@dataclass
class CMCover:
    p: int
    orders: list
    counts: dict        # n -> (expected, found)
    complete: bool


def small_cm_orders(p, nmax, cache_dir=None):
    """Maximal orders with a trace-zero element of norm <= nmax, up to conjugation."""
    A = build_algebra(p)
    O = maximal_order(A)
    orders, counts = [], {}
    for n in range(1, nmax + 1):
        expected, discs = supersingular_cm_count(n, p, cache_dir)
        if not expected:
            counts[n] = (0, 0, discs)
            continue
        x0 = trace_zero_element(A, n)
        mine = _orders_containing(A, O, x0, expected)
        counts[n] = (expected, len(mine), discs)
        for R in mine:
            if not any(orders_isomorphic(A, T, R) for T in orders):
                orders.append(R)
    complete = all(e == f for e, f, _ in counts.values())
    return CMCover(p, orders, counts, complete)


def left_ideals_up_to(A, R, nmax):
    """All integral left R-ideals of norm <= nmax (p not dividing any norm)."""
    from sympy import primerange
    by_norm = {1: [list(R.basis)]}
    for k in range(2, nmax + 1):
        ell = min(q for q in primerange(2, k + 1) if k % q == 0)
        found = {}
        for J in by_norm[k // ell]:
            for Jp in _neighbours(A, R, J, F(k // ell), ell):
                found.setdefault(_key(Jp), Jp)
        by_norm[k] = [found[key] for key in sorted(found)]
    return by_norm


# ---------------------------------------------------------------------------
# the search

def _vectors_by_norm(G, bound):
    """Non-zero lattice vectors with v^T G v / 2 <= bound, bucketed by that value."""
    out = {}
    for v in enumerate_gram(G, 2 * bound):
        if any(v):
            n = sum(v[i] * G[i][j] * v[j] for i in range(4) for j in range(4)) // 2
            out.setdefault(n, []).append(v)
    return out


def _int_rows(elems):
    """Common denominator D and the integer matrix D * elems (standard basis)."""
    D = lcm(1, *[c.denominator for v in elems for c in v])
    return D, np.array([[int(c * D) for c in v] for v in elems], dtype=object)


def _right_mult_matrix(A, y):
    """Rational 4x4 matrix M with (x y) = x M in the standard basis."""
    e = [tuple(F(int(i == t)) for t in range(4)) for i in range(4)]
    return [A.mul(u, y) for u in e]


def _as_fast(M):
    """int64 copy when entries are safely small, else the object array."""
    if M.size and max(abs(int(v)) for v in M.flat) < 2 ** 20:
        return M.astype(np.int64)
    return M


def _iter_pair(H, alpha, beta, d, avals, counter, budget=None):
    """Yield every solution inside one Hom-lattice, in the fixed order.

    ``counter`` is a one-element list holding the number of (a, y, x, b)
    candidates seen. Two exact necessary conditions prune before w is
    formed: Tr w = 0 forces Tr(b conj y) = 0, and N(y w) = N(y) N(w) fixes
    Tr(b conj(x y)). Both are bilinear, so they are evaluated on whole
    candidate lists at once with integer matrices.
    """
    A = H.algebra
    R1, R2 = H.R1, H.R2
    Q = np.diag(np.array([2, -2 * A.a, -2 * A.b, 2 * A.a * A.b], dtype=object))
    dmax = max(abs(alpha) + abs(beta) * abs(a) for a in avals)
    hom = _vectors_by_norm(H.gram, max(d, dmax))
    r1 = {n: [c for c in vs if A.trace(R1.element(c)) == 0]
          for n, vs in _vectors_by_norm(R1.gram, dmax).items()}
    DH, Hstd = _int_rows(H.basis)
    D1, R1std = _int_rows(R1.basis)
    for a in avals:
        m = d - a * a
        bs = hom.get(m, [])
        if not bs:
            continue
        n1, n2 = -(alpha + beta * a), -(alpha - beta * a)
        d1 = abs(alpha) - abs(beta) * abs(a)
        d2 = abs(alpha) + abs(beta) * abs(a)
        BQ = np.array(bs, dtype=object) @ Hstd @ Q        # scaled by DH
        Nb = m * H.scale
        for ny in range(1, min(n1, n2) + 1):
            for yc in hom.get(ny, []):
                xs = r1.get(n1 - ny, []) if n1 > ny else [(0, 0, 0, 0)]
                n_cand = len(xs) * len(bs)
                counter[0] += n_cand
                if budget is not None and counter[0] > budget:
                    raise BudgetExceeded(f"more than {budget} candidates")
                if not n_cand:
                    continue
                y = H.element(yc)
                ystd = np.array([int(c * DH) for c in y], dtype=object)
                bsel = np.nonzero(BQ @ ystd == 0)[0]
                if not len(bsel):
                    continue
                Ny = A.norm(y)
                target = (beta * beta * Nb + (n1 - ny) * Ny - Ny * (n2 - ny)) / beta
                Dy, Ry = _int_rows(_right_mult_matrix(A, y))
                target *= D1 * Dy * DH
                if target.denominator != 1:
                    continue
                XY = np.array(xs, dtype=object) @ R1std @ Ry      # scaled by D1 Dy
                T = _as_fast(XY) @ _as_fast(BQ[bsel].T)             # scaled by D1 Dy DH
                hits = np.argwhere(T == int(target))
                if not len(hits):
                    continue
                yinv = tuple(c / Ny for c in A.conj(y))
                for xi, bk in hits:
                    x = R1.element(xs[xi])
                    b = H.element(bs[bsel[bk]])
                    xy = A.mul(x, y)
                    t = tuple(beta * u - v for u, v in zip(b, xy))
                    w = A.mul(yinv, t)
                    if w[0] != 0 or A.norm(w) != n2 - ny or not R2.contains(w):
                        continue
                    yield EmbeddingSolution(a, b, x, y, w, alpha, beta, d1, d2, H)


def _search_pair(H, alpha, beta, d, avals, budget, full_order=None):
    """First solution in one Hom-lattice (or None) and the candidates examined.

    With ``full_order`` set to the field, only solutions that carry all of
    O_K into End(E1 x E2) are accepted.
    """
    counter = [0]
    for sol in _iter_pair(H, alpha, beta, d, avals, counter, budget):
        if full_order is None or images_of_maximal_order(sol, full_order):
            return sol, counter[0]
    return None, counter[0]


def all_solutions(H, K):
    """Every solution inside one Hom-lattice, for tests and diagnostics."""
    alpha, beta, d = _check_field(K)
    return list(_iter_pair(H, alpha, beta, d, a_values(d), [0]))


@dataclass
class SearchResult:
    solution: EmbeddingSolution = None
    certificate: dict = None

    def __bool__(self):
        return self.solution is not None


_JOB = {}


def _scan(args):
    """Scan some lattices (by index); per-lattice candidate counts and the first hit."""
    idx, budget = args
    lattices, alpha, beta, d, K = (_JOB[k] for k in ("lattices", "alpha", "beta", "d", "K"))
    counts = {}
    for i in idx:
        sol, n = _search_pair(lattices[i], alpha, beta, d, a_values(d), budget, K)
        counts[i] = n
        if sol is not None:
            # the lattice holds flint matrices, which do not pickle; the
            # parent puts it back
            return counts, i, replace(sol, lattice=None)
    return counts, None, None


def _max_bounds(alpha, beta, d):
    avals = a_values(d)
    nmax = max(-(alpha + beta * a) for a in avals) - 1
    ymax = max(min(-(alpha + beta * a), -(alpha - beta * a)) for a in avals)
    return nmax, ymax


def embedding_lattices(p, K, mode="auto", max_depth=12, max_classes=64, cache_dir=None):
    """The Hom-lattices to scan, in order, and a description of their coverage.

    ``mode`` is "classes" (all ordered pairs of curve classes reached by the
    neighbour walk), "cm" (curves with a small trace-zero endomorphism and
    everything within isogeny degree delta1 of them) or "auto": "classes"
    when the walk finds every class, else "cm" when p > 4 nmax.
    """
    alpha, beta, d = _check_field(K)
    nmax, ymax = _max_bounds(alpha, beta, d)
    A = build_algebra(p)
    info = {}
    if mode in ("auto", "classes"):
        cover = curve_classes(p, max_depth, max_classes)
        info = {
            "mode": "classes",
            "curve_classes": len(cover.classes),
            "neighbour_prime": cover.ell,
            "neighbour_depth": cover.depth,
            "mass_covered": str(cover.mass),
            "mass_total": str(cover.total_mass),
            "complete": cover.complete,
        }
        if mode == "classes" or cover.complete or p <= 4 * nmax:
            cl = cover.classes
            lats = [hom_lattice(A, c1, c2) for c1 in cl for c2 in cl]
            return lats, info
    if p <= 4 * nmax:
        raise InvalidInput(f"the cm mode needs p > {4 * nmax}")
    cm = small_cm_orders(p, nmax, cache_dir)
    lats = []
    for R1 in cm.orders:
        for k, ideals in left_ideals_up_to(A, R1, ymax).items():
            for I in ideals:
                lats.append(HomLattice(R1, _right_order(A, I, F(k)), I, F(k)))
    for i, H in enumerate(lats):
        H.label = f"lattice {i}"
    info = {
        "mode": "cm",
        "max_cm_norm": nmax,
        "max_isogeny_degree": ymax,
        "cm_orders": len(cm.orders),
        "cm_counts": {str(n): {"expected": e, "found": f, "discriminants": ds}
                      for n, (e, f, ds) in cm.counts.items()},
        "complete": cm.complete,
    }
    return lats, info


def search_embedding(p, K, mode="auto", max_depth=12, max_classes=64, budget=10 ** 7,
                     jobs=1, full_order=False, cache_dir=None):
    """Exhaustive search for a solution over the Hom-lattices of ``mode``.

    Lattices are scanned in a fixed order, and inside one lattice candidates
    are ordered by a, then deg y, then y, x and b by lexicographic
    coordinates; ``budget`` caps the candidates per lattice. The certificate
    says what was covered; ``complete`` is True when every curve pair that
    could carry a solution was scanned (Eichler mass in "classes" mode, Hilbert
    class polynomial counts in "cm" mode). With ``full_order`` a solution
    must also carry all of O_K.
    """
    require_prime(p)
    alpha, beta, d = _check_field(K)
    lats, info = embedding_lattices(p, K, mode, max_depth, max_classes, cache_dir)
    avals = a_values(d)
    cert = {
        "p": p,
        "field": K.descriptor(),
        "a_values": avals,
        "bounds": {str(a): list(norm_bounds(K, a)) for a in avals},
        **info,
        "lattices": len(lats),
        "hom_gram_dets_ok": all(H.gram_det() == p * p for H in lats),
        "full_order": bool(full_order),
    }
    _JOB.update(lattices=lats, alpha=alpha, beta=beta, d=d, K=K if full_order else None)
    idx = list(range(len(lats)))
    try:
        if jobs > 1 and len(idx) > 1:
            import multiprocessing as mp
            chunks = [idx[k::jobs] for k in range(jobs) if idx[k::jobs]]
            with ProcessPoolExecutor(len(chunks), mp_context=mp.get_context("fork")) as ex:
                res = list(ex.map(_scan, [(c, budget) for c in chunks]))
        else:
            res = [_scan((idx, budget))]
    finally:
        _JOB.clear()
    counts = {}
    for r in res:
        counts.update(r[0])
    hits = sorted((r[1], r[2]) for r in res if r[1] is not None)
    if hits:
        first, sol = hits[0]
        sol = replace(sol, lattice=lats[first])
        # every lattice before the first hit was scanned in full by some worker
        cert["candidates"] = sum(v for k, v in counts.items() if k <= first)
        cert["exhausted"] = False
        return SearchResult(sol, cert)
    cert["candidates"] = sum(counts.values())
    cert["exhausted"] = True
    return SearchResult(None, cert)
