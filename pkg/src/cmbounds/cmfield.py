"""Primitive quartic CM fields K = Q(sqrt d)(sqrt r).

K is presented by theta = sqrt(r), r = alpha + beta sqrt(d) totally negative,
with minimal polynomial x^4 - 2 alpha x^2 + (alpha^2 - beta^2 d). Elements
are 4-tuples of Fractions on the power basis 1, theta, theta^2, theta^3;
complex conjugation is theta -> -theta.

The ring of integers is found by saturating Z[omega, theta] (omega the
integral generator of the real quadratic subfield) one prime at a time.
Ideals are Z-lattices in coordinates on that integral basis.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product

import flint
import mpmath
import numpy as np
import sympy

from . import BudgetExceeded, InvalidInput, PrecisionExhausted
from .lattice import hnf, lll_gram, qmat
from .util import is_prime, is_square, is_squarefree, squarefree_part

F = Fraction


def _frac(q):
    return F(int(q.p), int(q.q))


def _charpoly_int(mat_rows):
    """Characteristic polynomial (low degree first) of a rational matrix."""
    cp = qmat(mat_rows).charpoly()
    return [_frac(c) for c in cp.coeffs()]


class CMQuartic:
    """The field K = Q(sqrt(alpha + beta sqrt d)) with its arithmetic."""

    def __init__(self, d, alpha, beta, check_integral=True):
        d = int(d)
        alpha, beta = F(alpha), F(beta)
        if d <= 1 or not is_squarefree(d):
            raise InvalidInput(f"d = {d} must be a squarefree integer > 1")
        self.d, self.alpha, self.beta = d, alpha, beta
        if not (alpha < 0 and alpha * alpha > beta * beta * d):
            raise InvalidInput("r = alpha + beta sqrt(d) is not totally negative")
        if check_integral and not self._r_integral():
            raise InvalidInput("r is not an algebraic integer")
        self.c2 = -2 * alpha
        self.c0 = alpha * alpha - beta * beta * d
        if self.c2.denominator != 1 or self.c0.denominator != 1:
            raise InvalidInput("theta = sqrt(r) is not integral")
        self.c2, self.c0 = int(self.c2), int(self.c0)

    def _r_integral(self):
        a2, b2 = 2 * self.alpha, 2 * self.beta
        if a2.denominator != 1 or b2.denominator != 1:
            return False
        if self.d % 4 == 1:
            return (int(a2) - int(b2)) % 2 == 0
        return self.alpha.denominator == 1 and self.beta.denominator == 1

    # -- descriptors --------------------------------------------------------
    def __repr__(self):
        return f"CMQuartic(d={self.d}, alpha={self.alpha}, beta={self.beta})"

    def descriptor(self):
        return f"cmfield d={self.d} alpha={self.alpha} beta={self.beta}"

    @classmethod
    def parse(cls, text):
        """Build a field from ``cmfield d=<d> alpha=<a> beta=<b>`` (prefix optional)."""
        try:
            parts = dict(tok.split("=", 1) for tok in text.replace("cmfield", "").split())
            return cls(int(parts["d"]), F(parts["alpha"]), F(parts["beta"]))
        except KeyError as exc:
            raise InvalidInput(f"missing field parameter {exc}") from None
        except ValueError as exc:
            if isinstance(exc, InvalidInput):
                raise
            raise InvalidInput(f"cannot parse field descriptor {text!r}") from None

    @property
    def min_poly(self):
        """Coefficients of x^4 + c2 x^2 + c0, highest degree first."""
        return [1, 0, self.c2, 0, self.c0]

    @property
    def trace_r(self):
        return 2 * self.alpha

    @property
    def norm_r(self):
        return self.c0

    def is_primitive(self):
        return not is_square(self.c0)

    def galois_type(self):
        if not self.is_primitive():
            raise InvalidInput("field is not primitive")
        return "cyclic" if is_square(self.d * self.c0) else "non-galois"

    def denominator_bound(self):
        return int(16 * self.d ** 2 * self.trace_r ** 2)

    def _need_primitive(self):
        if self.beta == 0:
            raise InvalidInput("beta = 0: K is not a quartic field with generator sqrt(r)")

    # -- power-basis arithmetic --------------------------------------------
    def mul(self, x, y):
        prod_ = [0] * 7
        for i, a in enumerate(x):
            if a:
                for j, b in enumerate(y):
                    if b:
                        prod_[i + j] += a * b
        # theta^4 = -c2 theta^2 - c0
        for k in (6, 5, 4):
            t = prod_[k]
            if t:
                prod_[k] = 0
                prod_[k - 2] -= self.c2 * t
                prod_[k - 4] -= self.c0 * t
        return tuple(F(v) for v in prod_[:4])

    @staticmethod
    def conj(x):
        return (x[0], -x[1], x[2], -x[3])

    def one(self):
        return (F(1), F(0), F(0), F(0))

    def theta(self):
        return (F(0), F(1), F(0), F(0))

    def sqrt_d(self):
        self._need_primitive()
        return (-self.alpha / self.beta, F(0), 1 / self.beta, F(0))

    def mult_matrix_power(self, x):
        """Rows: coordinates of x * theta^i."""
        rows = []
        cur = x
        for _ in range(4):
            rows.append(list(cur))
            cur = self.mul(cur, self.theta())
        return rows

    def trace(self, x):
        # traces of theta^k: 4, 0, 2*(-c2)/... computed once
        t = self._power_traces
        return sum(a * b for a, b in zip(x, t))

    @cached_property
    def _power_traces(self):
        # Tr(theta^k) for k = 0..3 by Newton's identities
        return [F(4), F(0), F(-2 * self.c2), F(0)]

    def norm(self, x):
        return _frac(qmat(self.mult_matrix_power(x)).det())

    def charpoly(self, x):
        return _charpoly_int(self.mult_matrix_power(x))

    def is_integral(self, x):
        return all(c.denominator == 1 for c in self.charpoly(x))

    # -- embeddings ----------------------------------------------------------
    def theta_images(self, prec=256):
        """phi(theta) for the embeddings (phi1, conj phi1, phi2, conj phi2)."""
        with mpmath.workprec(prec + 20):
            sd = mpmath.sqrt(self.d)
            a = mpmath.mpf(self.alpha.numerator) / self.alpha.denominator
            b = mpmath.mpf(self.beta.numerator) / self.beta.denominator
            r1, r2 = a + b * sd, a - b * sd
            t1 = mpmath.mpc(0, mpmath.sqrt(-r1))
            t2 = mpmath.mpc(0, mpmath.sqrt(-r2))
            return [t1, mpmath.conj(t1), t2, mpmath.conj(t2)]

    def embed(self, x, k, prec=256):
        """Image of x under embedding number k (0..3)."""
        t = self.theta_images(prec)[k]
        with mpmath.workprec(prec + 20):
            return mpmath.fsum(mpmath.mpf(c.numerator) / c.denominator * t ** i
                               for i, c in enumerate(x))

    def cm_types(self):
        """The four CM types as pairs of embedding indices (one per conjugate pair)."""
        return [CMType((a, b)) for a in (0, 1) for b in (2, 3)]

    # -- ring of integers ------------------------------------------------------
    @cached_property
    def maximal_order(self):
        self._need_primitive()
        return MaximalOrder(self)

    @property
    def discriminant(self):
        return self.maximal_order.discriminant

    def class_group(self, budget=None):
        return class_group(self, budget)

    # -- units -----------------------------------------------------------------
    @cached_property
    def real_fundamental_unit(self):
        """Fundamental unit of Q(sqrt d) as (a, b) meaning a + b sqrt(d), > 1."""
        return fundamental_unit(self.d)

    def real_unit_element(self, a=None, b=None):
        if a is None:
            a, b = self.real_fundamental_unit
        s = self.sqrt_d()
        return tuple(F(a) * o + F(b) * v for o, v in zip(self.one(), s))


@dataclass(frozen=True)
class CMType:
    embeddings: tuple

    def conjugate(self):
        return CMType(tuple(e ^ 1 for e in self.embeddings))


def fundamental_unit(d):
    """Fundamental unit of the real quadratic field Q(sqrt d) as (a, b), a + b sqrt d > 1."""
    from sympy.solvers.diophantine.diophantine import diop_DN
    if d % 4 == 1:
        sols = [(F(x, 2), F(y, 2)) for n in (4, -4) for x, y in diop_DN(d, n)]
    else:
        sols = [(F(x), F(y)) for n in (1, -1) for x, y in diop_DN(d, n)]
    sols = [(abs(a), abs(b)) for a, b in sols if a and b]
    if not sols:
        raise BudgetExceeded(f"no unit found for d = {d}")
    return min(sols, key=lambda ab: float(ab[0]) + float(ab[1]) * math.sqrt(d))


class MaximalOrder:
    """The ring of integers O_K with an explicit Z-basis."""

    def __init__(self, K):
        self.K = K
        basis = self._initial_basis()
        basis = self._saturate(basis)
        self.basis = basis  # rows: power-basis coordinates (Fractions)
        self._inv = qmat(basis).inv()
        n = 4
        self.table = [[self.coords(K.mul(basis[i], basis[j])) for j in range(n)] for i in range(n)]
        for row in self.table:
            for v in row:
                assert all(c.denominator == 1 for c in v)
        self.table = [[[int(c) for c in v] for v in row] for row in self.table]
        T = [[K.trace(K.mul(u, v)) for v in basis] for u in basis]
        self.trace_matrix = [[int(t) for t in r] for r in T]
        self.discriminant = int(flint.fmpz_mat(self.trace_matrix).det())
        self._conj = [[int(c) for c in self.coords(K.conj(b))] for b in basis]

    def _initial_basis(self):
        K = self.K
        sd = K.sqrt_d()
        if K.d % 4 == 1:
            om = tuple((F(1) * o + v) / 2 for o, v in zip(K.one(), sd))
        else:
            om = sd
        th = K.theta()
        return [K.one(), om, th, K.mul(om, th)]

    def _hnf_basis(self, elems):
        den = 1
        for e in elems:
            for c in e:
                den = den * c.denominator // math.gcd(den, c.denominator)
        # reversed coordinates make the echelon basis triangular from 1 upwards,
        # so the first basis element is 1
        rows = [[int(c * den) for c in reversed(e)] for e in elems]
        H = hnf(rows)
        assert len(H) == 4
        out = [tuple(F(c, den) for c in reversed(r)) for r in reversed(H)]
        assert out[0] == (1, 0, 0, 0)
        return out

    def _saturate(self, basis):
        K = self.K
        while True:
            # close under multiplication
            prods = [K.mul(u, v) for u in basis for v in basis]
            basis = self._hnf_basis(basis + prods)
            T = [[K.trace(K.mul(u, v)) for v in basis] for u in basis]
            disc = _frac(qmat(T).det())
            assert disc.denominator == 1
            disc = int(disc)
            grew = False
            for ell, e in sympy.factorint(abs(disc)).items():
                if e < 2:
                    continue
                new = self._integral_candidates(basis, T, ell)
                if new:
                    basis = self._hnf_basis(basis + new)
                    grew = True
                    break
            if not grew:
                return basis

    def _integral_candidates(self, basis, T, ell, budget=10 ** 6):
        """Integral elements of (1/ell) O lying in the trace dual, not in O."""
        K = self.K
        Tm = flint.nmod_mat([[int(t) % ell for t in r] for r in T], ell)
        null, k = Tm.nullspace()
        vecs = [[int(null[i, j]) for i in range(4)] for j in range(k)]
        if ell ** k > budget:
            raise BudgetExceeded(f"saturation at {ell} needs {ell ** k} candidates")
        out = []
        for cs in product(range(ell), repeat=k):
            if not any(cs):
                continue
            z = [sum(c * v[i] for c, v in zip(cs, vecs)) % ell for i in range(4)]
            if not any(z):
                continue
            x = tuple(sum(F(z[i], ell) * basis[i][t] for i in range(4)) for t in range(4))
            if K.is_integral(x):
                out.append(x)
                return out
        return out

    # coordinates ------------------------------------------------------------
    def coords(self, x):
        row = qmat([list(x)]) * self._inv
        return tuple(_frac(row[0, j]) for j in range(4))

    def element(self, c):
        return tuple(sum(F(c[i]) * self.basis[i][t] for i in range(4)) for t in range(4))

    def mul_coords(self, x, y):
        out = [0] * 4
        for i in range(4):
            if x[i]:
                for j in range(4):
                    if y[j]:
                        t = x[i] * y[j]
                        row = self.table[i][j]
                        for k in range(4):
                            out[k] += t * row[k]
        return out

    def conj_coords(self, x):
        return [sum(x[i] * self._conj[i][k] for i in range(4)) for k in range(4)]

    def mult_matrix(self, x):
        """Rows: coordinates of b_i * x."""
        return [self.mul_coords([int(i == j) for j in range(4)], x) for i in range(4)]

    def inverse_coords(self, x):
        """Coordinates of 1/x."""
        M = qmat(self.mult_matrix(x)).inv()
        return [_frac(M[0, j]) for j in range(4)]

    def norm_coords(self, x):
        return _frac(qmat(self.mult_matrix(x)).det())

    def trace_coords(self, x):
        return sum(self.trace_matrix[0][i] * x[i] for i in range(4))

    def embedding_matrix(self, prec=256):
        """phi_k(b_i) for all basis elements i and embeddings k."""
        K = self.K
        return [[K.embed(b, k, prec) for k in range(4)] for b in self.basis]

    @cached_property
    def embeddings_float(self):
        """phi1 and phi2 of each basis element as a 4 x 2 complex array."""
        E = self.embedding_matrix(128)
        return np.array([[complex(E[i][k]) for k in (0, 2)] for i in range(4)])

    @cached_property
    def different(self):
        """The different as an integral ideal: the inverse of the trace dual."""
        Tinv = qmat(self.trace_matrix).inv()
        rows = [[_frac(Tinv[i, j]) for j in range(4)] for i in range(4)]
        dual = Ideal.from_rational_rows(self, rows)
        return dual.inverse()


# ---------------------------------------------------------------------------
# ideals

@dataclass
class Ideal:
    """Fractional ideal (1/den) * (row span of ``rows``) in O_K coordinates."""

    O: MaximalOrder
    rows: list
    den: int = 1

    def __post_init__(self):
        H = hnf(self.rows)
        if len(H) != 4:
            raise InvalidInput("ideal lattice is not of full rank")
        g = 0
        for r in H:
            for v in r:
                g = math.gcd(g, v)
        g = math.gcd(g, self.den)
        self.rows = [[v // g for v in r] for r in H]
        self.den = self.den // g

    @classmethod
    def from_rational_rows(cls, O, rows):
        den = 1
        for r in rows:
            for c in r:
                den = den * F(c).denominator // math.gcd(den, F(c).denominator)
        return cls(O, [[int(F(c) * den) for c in r] for r in rows], den)

    @classmethod
    def principal(cls, O, x):
        """The ideal x O_K for x given in O_K coordinates (ints or Fractions)."""
        x = [F(c) for c in x]
        den = 1
        for c in x:
            den = den * c.denominator // math.gcd(den, c.denominator)
        xi = [int(c * den) for c in x]
        rows = O.mult_matrix(xi)
        return cls(O, rows, den)

    @classmethod
    def generated(cls, O, gens):
        """Ideal generated by O_K coordinate vectors (integral)."""
        rows = []
        den = 1
        gens = [[F(c) for c in g] for g in gens]
        for g in gens:
            for c in g:
                den = den * c.denominator // math.gcd(den, c.denominator)
        for g in gens:
            gi = [int(c * den) for c in g]
            rows.extend(O.mult_matrix(gi))
        return cls(O, rows, den)

    @classmethod
    def unit(cls, O):
        return cls(O, [[int(i == j) for j in range(4)] for i in range(4)], 1)

    def key(self):
        return (tuple(tuple(r) for r in self.rows), self.den)

    def __eq__(self, other):
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def basis_elements(self):
        """Basis in O_K coordinates (Fractions)."""
        return [[F(v, self.den) for v in r] for r in self.rows]

    def norm(self):
        det = abs(int(flint.fmpz_mat(self.rows).det()))
        return F(det, self.den ** 4)

    def is_integral(self):
        return self.den == 1

    def __mul__(self, other):
        rows = []
        for a in self.rows:
            for b in other.rows:
                rows.append(self.O.mul_coords(a, b))
        return Ideal(self.O, rows, self.den * other.den)

    def scale(self, x):
        return self * Ideal.principal(self.O, x)

    def conj(self):
        return Ideal(self.O, [self.O.conj_coords(r) for r in self.rows], self.den)

    def contains(self, x):
        """Membership of an O_K coordinate vector."""
        M = qmat(self.rows)
        sol = qmat([[F(c) * self.den for c in x]]) * M.inv()
        return all(_frac(sol[0, j]).denominator == 1 for j in range(4))

    def contains_ideal(self, other):
        return all(self.contains([F(v, other.den) for v in r]) for r in other.rows)

    def inverse(self):
        """{x : x I in O_K}."""
        O = self.O
        cols = []
        for r in self.rows:
            M = O.mult_matrix(r)  # rows: b_i * g
            # x * g = sum_i x_i (b_i g); coordinate k is sum_i x_i M[i][k]
            for k in range(4):
                cols.append([F(M[i][k], self.den) for i in range(4)])
        # x must pair integrally with every column: x in dual of their span
        den = 1
        for c in cols:
            for v in c:
                den = den * v.denominator // math.gcd(den, v.denominator)
        H = hnf([[int(v * den) for v in c] for c in cols])
        B = qmat([[F(v, den) for v in r] for r in H])
        D = B.transpose().inv()
        rows = [[_frac(D[i, j]) for j in range(4)] for i in range(4)]
        return Ideal.from_rational_rows(O, rows)

    def __truediv__(self, other):
        return self * other.inverse()

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = Ideal.unit(self.O)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out


# ---------------------------------------------------------------------------
# short elements of ideals for the embedding-weighted forms

def _real_gram(O, I, weights):
    """Gram matrix of w1 |phi1(x)|^2 + w2 |phi2(x)|^2 on the basis of I (floats)."""
    B = np.array([[float(c) for c in r] for r in I.rows]) / I.den
    V = B @ O.embeddings_float  # images of the ideal basis under phi1, phi2
    G = sum(w * (V[:, k:k + 1] * V[:, k].conj()).real for k, w in enumerate(weights))
    return (G + G.T) / 2


def enumerate_real(G, bound):
    """Integer vectors with x^T G x <= bound for a real positive definite G."""
    n = len(G)
    # LLL on an integer approximation of a basis realising G (a rounded
    # Gram matrix may fail to be positive definite)
    Lc = np.linalg.cholesky(G)
    scale = 2.0 ** 24 / math.sqrt(max(np.linalg.eigvalsh(G)[0], 1e-300))
    B = flint.fmpz_mat([[int(round(v * scale)) for v in row] for row in Lc])
    _, T = B.lll(transform=True)
    T = [[int(T[i, j]) for j in range(n)] for i in range(n)]
    Tm = np.array(T, dtype=float)
    Gr = Tm @ G @ Tm.T
    # Fincke-Pohst on the reduced real Gram, generous padding
    q = np.zeros((n, n))
    A = Gr.copy()
    for i in range(n):
        for j in range(i, n):
            q[i, j] = A[i, j]
    for i in range(n):
        for j in range(i + 1, n):
            q[j, i] = q[i, j]
            q[i, j] = q[i, j] / q[i, i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k, l] -= q[k, i] * q[i, l]
    C = bound * (1 + 1e-6) + 1e-9
    out = []
    x = [0] * n

    def rec(i, rem):
        c = -sum(q[i, j] * x[j] for j in range(i + 1, n))
        r = math.sqrt(max(rem, 0.0) / q[i, i])
        for v in range(math.ceil(c - r - 1e-9), math.floor(c + r + 1e-9) + 1):
            x[i] = v
            nr = rem - q[i, i] * (v - c) ** 2
            if nr < -1e-9 * C:
                continue
            if i == 0:
                out.append(tuple(x))
            else:
                rec(i - 1, nr)
        x[i] = 0

    rec(n - 1, C)
    res = []
    for y in out:
        res.append(tuple(int(sum(y[k] * T[k][j] for k in range(n))) for j in range(n)))
    return res


def _ideal_elements(I, vecs):
    return [[sum(F(v[i] * I.rows[i][k], I.den) for i in range(4)) for k in range(4)] for v in vecs]


def principal_generator(I, max_grid=400):
    """A generator of I if it is principal, else None.

    A generator g has |phi1 g|^2 |phi2 g|^2 = N(I); multiplying by real units
    balances the two factors to within a factor eps0^4, so for one weight
    w = e^-s on the grid below, w |phi1 g|^2 + |phi2 g|^2 / w <= 2 sqrt(N)
    cosh(delta). Candidates are confirmed by an exact norm computation.
    """
    O = I.O
    K = O.K
    n = I.norm()
    a, b = K.real_fundamental_unit
    L = math.log(float(a) + float(b) * math.sqrt(K.d))
    delta = 0.5
    steps = max(1, math.ceil(L / delta))
    if steps > max_grid:
        raise BudgetExceeded("fundamental unit too large for the weight grid")
    bound = 2 * math.sqrt(float(n)) * math.cosh(delta) * (1 + 1e-9)
    for t in range(-steps, steps + 1):
        s = t * delta
        G = _real_gram(O, I, [math.exp(-s), math.exp(s)])
        # the form counts each conjugate pair once
        for v in enumerate_real(G, bound):
            if not any(v):
                continue
            x = _ideal_elements(I, [v])[0]
            if O.norm_coords(x) == n:
                return x
    return None


def is_principal(I):
    return principal_generator(I) is not None


def equivalent(I, J):
    return is_principal(I / J)


def short_element(I):
    """A short non-zero element of I for the plain T2 form."""
    G = _real_gram(I.O, I, [1.0, 1.0])
    nrm = float(I.norm())
    bound = 2.0 * math.sqrt(nrm) * 1.5
    while True:
        vs = [v for v in enumerate_real(G, bound) if any(v)]
        if vs:
            vs.sort(key=lambda v: (float(np.array(v) @ G @ np.array(v)), v))
            return _ideal_elements(I, [vs[0]])[0]
        bound *= 2


def reduce_ideal(I):
    """An integral ideal of small norm in the class of I."""
    x = short_element(I.inverse())
    J = I * Ideal.principal(I.O, x)
    return J


# ---------------------------------------------------------------------------
# prime decomposition

@dataclass
class PrimeIdeal:
    ideal: Ideal
    p: int
    e: int
    f: int


def _poly_eval_element(O, coeffs, x):
    """sum coeffs[i] x^i in O_K coordinates."""
    out = [0] * 4
    pw = [1, 0, 0, 0]
    for c in coeffs:
        out = [o + c * v for o, v in zip(out, pw)]
        pw = O.mul_coords(pw, x)
    return out


def _index_generators(O):
    vals = range(-2, 3)
    for cs in product(vals, repeat=3):
        yield [0] + list(cs)


def prime_decomposition(K, p):
    """Factor p O_K as a list of PrimeIdeal (with e and f)."""
    O = K.maximal_order
    disc = O.discriminant
    for x in _index_generators(O):
        cp = O.mult_matrix(x)
        poly = _charpoly_int(cp)
        if any(c.denominator != 1 for c in poly):
            continue
        coeffs = [int(c) for c in poly]
        fz = flint.fmpz_poly(coeffs)
        pd = int(fz.discriminant())
        if pd == 0 or pd % disc:
            continue
        idx2 = pd // disc
        if idx2 % p == 0:
            continue
        # Kummer-Dedekind
        fp = flint.nmod_poly(coeffs, p)
        _, facs = fp.factor()
        out = []
        for g, e in facs:
            gc = [int(c) for c in g.coeffs()]
            gx = _poly_eval_element(O, gc, x)
            P = Ideal.generated(O, [[p, 0, 0, 0], gx])
            out.append(PrimeIdeal(P, p, e, g.degree()))
        return out
    return _prime_decomposition_bruteforce(O, p)


def _prime_decomposition_bruteforce(O, p):
    pO = Ideal.principal(O, [p, 0, 0, 0])
    cands = set()
    for cs in product(range(p), repeat=4):
        if not any(cs):
            continue
        J = Ideal.generated(O, [[p, 0, 0, 0], list(cs)])
        if J.norm() != 1:
            cands.add(J)
    maximal = [J for J in cands if not any(J != M and M.contains_ideal(J) for M in cands)]
    out = []
    for P in maximal:
        f = round(math.log(int(P.norm()), p))
        e = 1
        Pk = P * P
        while Pk.contains_ideal(pO):
            e += 1
            Pk = Pk * P
        out.append(PrimeIdeal(P, p, e, f))
    assert sum(q.e * q.f for q in out) == 4
    return out


def decomposition_condition(K, p):
    """Cyclic K: 'satisfied' iff p ramifies or splits into exactly two primes.

    Non-Galois K: 'unknown' (only the cyclic criterion is implemented).
    """
    if not K.is_primitive():
        raise InvalidInput("field is not primitive")
    if K.galois_type() != "cyclic":
        return "unknown"
    dec = prime_decomposition(K, p)
    if any(P.e > 1 for P in dec) or len(dec) == 2:
        return "satisfied"
    return "not-satisfied"


# ---------------------------------------------------------------------------
# class group

@dataclass
class IdealClassRep:
    ideal: Ideal
    norm: Fraction
    index: int


@dataclass
class ClassGroup:
    reps: list
    generators: list

    @property
    def order(self):
        return len(self.reps)

    def find(self, I):
        """Index of the class of I."""
        for k, R in enumerate(self.reps):
            if equivalent(I, R.ideal):
                return k
        raise AssertionError("ideal not in any known class")


def minkowski_bound(K):
    return (24 / 256) * (16 / math.pi ** 2) * math.sqrt(abs(K.discriminant))


def class_group(K, budget=None):
    """Ideal class representatives from prime ideals up to the Minkowski bound."""
    O = K.maximal_order
    mb = minkowski_bound(K)
    if budget is not None and mb > budget:
        raise BudgetExceeded(f"Minkowski bound {mb:.0f} exceeds budget {budget}")
    gens = []
    for p in sympy.primerange(2, int(mb) + 1):
        for P in prime_decomposition(K, p):
            if p ** P.f <= mb:
                gens.append(P.ideal)
    reps = [Ideal.unit(O)]
    queue = [Ideal.unit(O)]
    while queue:
        R = queue.pop(0)
        for P in gens:
            X = reduce_ideal(reduce_ideal(R * P))
            if not any(equivalent(X, S) for S in reps):
                reps.append(X)
                queue.append(X)
    out = [IdealClassRep(I, I.norm(), k) for k, I in enumerate(reps)]
    return ClassGroup(out, gens)


# ---------------------------------------------------------------------------
# units of K

def roots_of_unity(K):
    """Torsion units of O_K in O_K coordinates (elements with all |phi| = 1)."""
    O = K.maximal_order
    G = _real_gram(O, Ideal.unit(O), [1.0, 1.0])
    out = []
    for v in enumerate_real(G, 2.0 * (1 + 1e-9)):
        if any(v) and O.norm_coords(list(v)) == 1:
            x = list(v)
            # |phi_k(x)| = 1 for both pairs iff x xbar = 1
            if O.mul_coords(x, O.conj_coords(x)) == [1, 0, 0, 0] or \
                    O.coords(K.mul(O.element(x), K.conj(O.element(x)))) == (1, 0, 0, 0):
                out.append(x)
    return out


def relative_norm_unit(K, target):
    """A unit eta of O_K with eta * conj(eta) = target (a totally positive
    real unit, given in O_K coordinates), or None."""
    O = K.maximal_order
    t = O.element(target)
    w = [float(mpmath.re(K.embed(t, 0, 64))), float(mpmath.re(K.embed(t, 2, 64)))]
    if min(w) <= 0:
        return None
    G = _real_gram(O, Ideal.unit(O), [1 / w[0], 1 / w[1]])
    for v in enumerate_real(G, 2.0 * (1 + 1e-6)):
        if any(v):
            x = list(v)
            if O.mul_coords(x, O.conj_coords(x)) == [int(c) for c in target]:
                return x
    return None


def _unit_twists(K):
    """Units u such that every unit is u times a power of eps0, up to sign choices."""
    O = K.maximal_order
    mu = roots_of_unity(K)
    eps = [int(c) for c in O.coords(K.real_unit_element())]
    eta = relative_norm_unit(K, eps)
    base = list(mu)
    if eta is not None:
        base += [O.mul_coords(u, eta) for u in mu]
    a, b = K.real_fundamental_unit
    sign = 1 if a * a - b * b * K.d > 0 else -1
    eps_inv = [int(sign * c) for c in O.coords(K.real_unit_element(a, -b))]
    return base, [[1, 0, 0, 0], eps, eps_inv]


def _signs(K, x):
    xe = K.maximal_order.element(x)
    return [K.embed(xe, k, 96) for k in (0, 2)]


def generator_with(K, I, predicate):
    """A generator x of the principal ideal I with predicate(x), else None."""
    O = K.maximal_order
    g = principal_generator(I)
    if g is None:
        return None
    base, powers = _unit_twists(K)
    for e in powers:
        for u in base:
            c = O.mul_coords(O.mul_coords(g, u), e)
            if predicate(c):
                return c
    return None


def totally_positive_generator(K, I):
    """Totally positive a in K+ with a O_K = I (I stable under conjugation)."""
    O = K.maximal_order

    def ok(c):
        if O.conj_coords(c) != list(c):
            return False
        return all(mpmath.re(v) > 0 for v in _signs(K, c))

    return generator_with(K, I, ok)


def different_generator(K, Phi):
    """delta with delta O_K = D, conj(delta) = -delta and Im phi(delta) > 0 on Phi."""
    O = K.maximal_order

    def ok(c):
        if O.conj_coords(c) != [-v for v in c]:
            return False
        xe = O.element(c)
        return all(mpmath.im(K.embed(xe, k, 96)) > 0 for k in Phi.embeddings)

    return generator_with(K, O.different, ok)


# ---------------------------------------------------------------------------
# reflex field and field isomorphisms

def reflex_field(K, Phi=None):
    """The reflex field of (K, Phi), recognised from the values sum_{phi in Phi} phi(theta)."""
    Phi = Phi or K.cm_types()[0]
    prec = 128
    with mpmath.workprec(prec):
        imgs = K.theta_images(prec)
        vals = []
        for s1 in (1, -1):
            for s2 in (1, -1):
                vals.append(s1 * imgs[0] + s2 * imgs[2])
        from .quadcm import poly_from_roots
        cs = poly_from_roots(vals)
        ints = [int(mpmath.nint(mpmath.re(c))) for c in cs]
        if max(abs(c - i) for c, i in zip(cs, ints)) > mpmath.mpf(2) ** (-prec // 2):
            raise PrecisionExhausted("reflex polynomial not recognised")
    # x^4 + A x^2 + B with A = -4 alpha, B = 4 beta^2 d
    A, B = ints[2], ints[0]
    assert ints[1] == 0 and ints[3] == 0 and ints[4] == 1
    alpha_s = F(-A, 2)
    n = K.c0  # N(r) = c^2 d*
    ds = squarefree_part(n)
    c = F(math.isqrt(n // ds))
    Ks = CMQuartic(ds, alpha_s, 2 * c, check_integral=False)
    assert Ks.min_poly == [1, 0, A, 0, B]
    return Ks


def _pslq_pair(v, u1, u2):
    """Rationals (c1, c2) with v = c1 u1 + c2 u2, or (None, None)."""
    if abs(v) < mpmath.mpf(2) ** (-mpmath.mp.prec // 2):
        return F(0), F(0)
    rel = mpmath.pslq([v, u1, u2], maxcoeff=10 ** 12, maxsteps=10 ** 5)
    if not rel or rel[0] == 0:
        return None, None
    return F(-rel[1], rel[0]), F(-rel[2], rel[0])


def roots_in_field(K, poly, prec=200):
    """Roots in K (power basis) of the integer polynomial ``poly`` (highest
    degree first). Candidates come from PSLQ on phi1 images and are then
    checked exactly."""
    out = []
    with mpmath.workprec(prec):
        s = mpmath.im(K.theta_images(prec)[0])  # phi1(theta) = i s
        roots = mpmath.polyroots([mpmath.mpf(c) for c in poly], maxsteps=200, extraprec=prec)
        for rho in roots:
            # phi1(a0 + a1 theta + a2 theta^2 + a3 theta^3)
            #   = (a0 - a2 s^2) + i (a1 s - a3 s^3)
            a0, a2 = _pslq_pair(mpmath.re(rho), 1, -s ** 2)
            a1, a3 = _pslq_pair(mpmath.im(rho), s, -s ** 3)
            if a0 is None or a1 is None:
                continue
            x = (a0, a1, a2, a3)
            val = (F(0),) * 4
            for c in poly:
                val = K.mul(val, x)
                val = (val[0] + c,) + val[1:]
            if not any(val) and x not in out:
                out.append(x)
    return out


def is_isomorphic(K1, K2):
    """True iff K2's generator has a root in K1 (both quartic)."""
    return bool(roots_in_field(K1, K2.min_poly))


def is_galois_numeric(K):
    """True iff all four roots of the minimal polynomial lie in K."""
    return len(roots_in_field(K, K.min_poly)) == 4
