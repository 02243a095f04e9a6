"""Supersingular j-invariants and minimal isogeny degrees between them.

F_{p^2} is modelled as F_p[s]/(s^2 - nr) with nr the least quadratic
non-residue (p odd); an element is a pair (u, v) meaning u + v s.

Why scanning Phi_n is enough: if phi: E -> E' has minimal degree among all
isogenies, its kernel is cyclic. Otherwise ker(phi) contains E[m] for some
m > 1, so phi = psi o [m] and psi would be an isogeny of smaller degree.
So the least degree of an isogeny between E and E' is the least n with
Phi_n(j(E), j(E')) = 0.
"""

import math
from dataclasses import dataclass
from itertools import product

import flint
import numpy as np

from . import InvalidInput
from .quadcm import modular_polynomial, psi
from .util import require_prime


def eichler_class_number(p):
    """Number of supersingular j-invariants in characteristic p."""
    require_prime(p)
    if p in (2, 3):
        return 1
    h = (p - 1) // 12
    r = p % 12
    # (p-1)/12 + (1 - (-4/p))/4 + (1 - (-3/p))/3
    return h + {1: 0, 5: 1, 7: 1, 11: 2}[r]


class Fp2:
    """Arithmetic in F_p[s]/(s^2 - nr) for odd p."""

    def __init__(self, p):
        self.p = p
        nr = 2
        while pow(nr, (p - 1) // 2, p) != p - 1:
            nr += 1
        self.nr = nr

    def mul(self, x, y):
        p = self.p
        return ((x[0] * y[0] + self.nr * x[1] * y[1]) % p, (x[0] * y[1] + x[1] * y[0]) % p)

    def add(self, x, y):
        return ((x[0] + y[0]) % self.p, (x[1] + y[1]) % self.p)

    def sub(self, x, y):
        return ((x[0] - y[0]) % self.p, (x[1] - y[1]) % self.p)

    def pow(self, x, e):
        r = (1, 0)
        while e:
            if e & 1:
                r = self.mul(r, x)
            x = self.mul(x, x)
            e >>= 1
        return r

    def inv(self, x):
        p = self.p
        n = (x[0] * x[0] - self.nr * x[1] * x[1]) % p
        if n == 0:
            raise ZeroDivisionError("inverse of zero in F_p^2")
        ni = pow(n, p - 2, p)
        return (x[0] * ni % p, -x[1] * ni % p)

    def frob(self, x):
        return (x[0], -x[1] % self.p)

    def sqrt_fp(self, a):
        """A square root in F_{p^2} of an element a of F_p."""
        p = self.p
        a %= p
        if a == 0:
            return (0, 0)
        if pow(a, (p - 1) // 2, p) == 1:
            return (_sqrt_mod(a, p), 0)
        t = _sqrt_mod(a * pow(self.nr, p - 2, p) % p, p)
        return (0, t)


def _sqrt_mod(a, p):
    import sympy
    return int(sympy.sqrt_mod(a, p))


@dataclass
class SupersingularSet:
    p: int
    js: list  # pairs (u, v) for p odd; for p = 2 the list [(0, 0)]
    field: object = None

    def __len__(self):
        return len(self.js)


def _hasse_roots(p, K):
    m = (p - 1) // 2
    coeffs = [math.comb(m, i) ** 2 % p for i in range(m + 1)]
    poly = flint.nmod_poly(coeffs, p)
    roots = []
    _, facs = poly.factor()
    for f, _e in facs:
        c = [int(v) for v in f.coeffs()]
        if len(c) == 2:
            roots.append((-c[0] * pow(c[1], p - 2, p) % p, 0))
        elif len(c) == 3:
            inv2a = pow(2 * c[2], p - 2, p)
            sq = K.sqrt_fp(c[1] * c[1] - 4 * c[2] * c[0])
            b = (-c[1] % p, 0)
            roots.append(K.mul(K.add(b, sq), (inv2a, 0)))
            roots.append(K.mul(K.sub(b, sq), (inv2a, 0)))
        else:
            raise AssertionError("Hasse polynomial has a factor of degree > 2")
    return roots


def _supersingular_small(p):
    """Exhaustive search for p in {2, 3} over all curves defined over F_{p^2}."""
    # F_{p^2} = F_p[s]/(s^2 - c s - e)
    c, e = {2: (1, 1), 3: (0, 2)}[p]  # s^2 = s + 1 over F_2, s^2 = 2 over F_3

    def mul(x, y):
        a0 = x[0] * y[0]
        a1 = x[0] * y[1] + x[1] * y[0]
        a2 = x[1] * y[1]
        return ((a0 + e * a2) % p, (a1 + c * a2) % p)

    def add(*xs):
        return (sum(x[0] for x in xs) % p, sum(x[1] for x in xs) % p)

    def neg(x):
        return (-x[0] % p, -x[1] % p)

    els = [(u, v) for u in range(p) for v in range(p)]
    zero, one = (0, 0), (1, 0)

    def inv(x):
        return next(y for y in els if mul(x, y) == one)

    def sc(k, x):
        return (k * x[0] % p, k * x[1] % p)

    found = set()
    # in characteristic 3 every curve has a model y^2 = x^3 + a2 x^2 + a4 x + a6
    shapes = product(els, repeat=5) if p == 2 else (
        (zero, a2, zero, a4, a6) for a2, a4, a6 in product(els, repeat=3))
    for a1, a2, a3, a4, a6 in shapes:
        b2 = add(mul(a1, a1), sc(4, a2))
        b4 = add(mul(a1, a3), sc(2, a4))
        b6 = add(mul(a3, a3), sc(4, a6))
        b8 = add(mul(mul(a1, a1), a6), sc(4, mul(a2, a6)), neg(mul(mul(a1, a3), a4)),
                 mul(a2, mul(a3, a3)), neg(mul(a4, a4)))
        disc = add(neg(mul(mul(b2, b2), b8)), sc(-8, mul(mul(b4, b4), b4)),
                   sc(-27, mul(b6, b6)), sc(9, mul(mul(b2, b4), b6)))
        if disc == zero:
            continue
        c4 = add(mul(b2, b2), sc(-24, b4))
        j = mul(mul(mul(c4, c4), c4), inv(disc))
        if j in found:
            continue
        # count points: affine solutions plus infinity
        npts = 1
        for x in els:
            for y in els:
                lhs = add(mul(y, y), mul(mul(a1, x), y), mul(a3, y))
                rhs = add(mul(mul(x, x), x), mul(a2, mul(x, x)), mul(a4, x), a6)
                if lhs == rhs:
                    npts += 1
        t = p * p + 1 - npts
        if t % p == 0:
            found.add(j)
    return sorted(found)


def supersingular_j_invariants(p):
    """All supersingular j-invariants in characteristic p."""
    require_prime(p)
    if p < 5:
        return SupersingularSet(p, _supersingular_small(p), None)
    K = Fp2(p)
    js = set()
    for lam in _hasse_roots(p, K):
        num = K.sub(K.mul(lam, lam), lam)
        num = K.add(num, (1, 0))
        num = K.mul(K.mul(num, num), num)
        den = K.mul(lam, K.sub(lam, (1, 0)))
        den = K.mul(den, den)
        js.add(K.mul((256 % p, 0), K.mul(num, K.inv(den))))
    return SupersingularSet(p, sorted(js), K)


# ---------------------------------------------------------------------------
# isogeny degrees

def _power_matrix(K, js, deg):
    """Arrays (U, V) with U + V s = j_a^e, shape (len(js), deg+1)."""
    h = len(js)
    U = np.zeros((h, deg + 1), dtype=np.int64)
    V = np.zeros((h, deg + 1), dtype=np.int64)
    for a, j in enumerate(js):
        x = (1, 0)
        for e in range(deg + 1):
            U[a, e], V[a, e] = x
            x = K.mul(x, j)
    return U, V


def _phi_on_grid(K, js, coeffs, k):
    """Phi(j_a, j_b) for all a, b, as the F_{p^2} matrix P C P^T."""
    p = K.p
    C = np.zeros((k + 1, k + 1), dtype=np.int64)
    for (i, j), c in coeffs.items():
        C[i, j] = c % p
    U, V = _power_matrix(K, js, k)
    # (U + V s) C (U + V s)^T with C over F_p; reduce after every product
    AU = (U @ C) % p
    AV = (V @ C) % p
    RU = (AU @ U.T + K.nr * ((AV @ V.T) % p)) % p
    RV = (AU @ V.T + AV @ U.T) % p
    return RU, RV


def min_cyclic_degree(j1, j2, p, nmax, cache_dir=None, field=None):
    """Least n <= nmax with Phi_n(j1, j2) = 0 over F_{p^2}; None if none."""
    if j1 == j2:
        return 1
    K = field or Fp2(p)
    for n in range(2, nmax + 1):
        coeffs = modular_polynomial(n, cache_dir=cache_dir)
        val = (0, 0)
        for (i, j), c in coeffs.items():
            term = K.mul(K.pow(j1, i), K.pow(j2, j))
            val = K.add(val, K.mul((c % p, 0), term))
        if val == (0, 0):
            return n
    return None


def degree_matrix(p, nmax=None, cache_dir=None, ss=None):
    """Matrix of minimal isogeny degrees between all supersingular j's."""
    ss = ss or supersingular_j_invariants(p)
    h = len(ss.js)
    if nmax is None:
        nmax = math.ceil(2 * math.sqrt(2) / math.pi * math.sqrt(p))
    D = np.zeros((h, h), dtype=np.int64)
    np.fill_diagonal(D, 1)
    n = 1
    while (D == 0).any() and n < nmax:
        n += 1
        coeffs = modular_polynomial(n, cache_dir=cache_dir)
        RU, RV = _phi_on_grid(ss.field, ss.js, coeffs, psi(n))
        hit = (RU == 0) & (RV == 0) & (D == 0)
        D[hit] = n
    return D


def _nearest_sqrt(n):
    r = math.isqrt(n)
    # sqrt(n) >= r + 1/2  iff  4n >= (2r+1)^2
    return r + 1 if 4 * n >= (2 * r + 1) ** 2 else r


@dataclass
class IsogenyDegreeTableRow:
    """One row of the isogeny-degree table.

    ``ratio`` is N/sqrt(p). The published table rounds sqrt(p) to the
    nearest integer and divides by that; ``rounded_sqrt`` and
    ``table_ratio`` reproduce those two columns.
    """

    p: int
    h: int
    rounded_sqrt: int
    N: int
    ratio: float
    lower_bound_ok: bool = True  # N >= 0.3 sqrt(p)

    @property
    def table_ratio(self):
        return self.N / self.rounded_sqrt

    def as_tuple(self):
        return (self.p, self.h, self.rounded_sqrt, self.N, round(self.table_ratio, 3))


def isogeny_diameter_degree(p, cache_dir=None):
    """Table row (p, h, [sqrt p], N(p), N(p)/sqrt p)."""
    require_prime(p)
    h = eichler_class_number(p)
    nmax = math.ceil(2 * math.sqrt(2) / math.pi * math.sqrt(p))
    if p < 5:
        N = 1
    else:
        ss = supersingular_j_invariants(p)
        if len(ss) != h:
            raise AssertionError(f"found {len(ss)} supersingular j, expected {h}")
        D = degree_matrix(p, nmax, cache_dir, ss)
        if (D == 0).any():
            raise AssertionError(f"some pair is not linked by an isogeny of degree <= {nmax}")
        if not (D == D.T).all():
            raise AssertionError("degree matrix is not symmetric")
        N = int(D.max())
    return IsogenyDegreeTableRow(p, h, _nearest_sqrt(p), N, N / math.sqrt(p),
                                 N >= 0.3 * math.sqrt(p))
