"""Imaginary quadratic CM: forms, j(tau), Hilbert and modular polynomials.

j is evaluated through Jacobi theta constants after moving tau into the
standard fundamental domain,

    j = 32 (th2^8 + th3^8 + th4^8)^3 / (th2 th3 th4)^8,

with mpmath computing the theta series at the requested working precision.
Integer polynomials are recovered from floating approximations by rounding
at two precisions and demanding agreement.
"""

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from pathlib import Path

import mpmath
import sympy

from . import InvalidInput, PrecisionExhausted
from .util import fundamental_discriminant, round_to_integer


@dataclass(frozen=True)
class QuadOrder:
    disc: int

    def __post_init__(self):
        if self.disc >= 0 or self.disc % 4 not in (0, 1):
            raise InvalidInput(f"invalid imaginary quadratic discriminant {self.disc}")

    @property
    def conductor(self):
        return fundamental_discriminant(self.disc)[0]

    @property
    def field_disc(self):
        return fundamental_discriminant(self.disc)[1]

    @classmethod
    def from_field(cls, dk, m=1):
        return cls(m * m * dk)


def reduced_forms(disc):
    """Reduced primitive positive definite forms (a, b, c) of discriminant disc."""
    if disc >= 0 or disc % 4 not in (0, 1):
        raise InvalidInput(f"invalid discriminant {disc}")
    out = []
    a = 1
    while 3 * a * a <= -disc:
        for b in range(-a + 1, a + 1):
            if (b * b - disc) % (4 * a):
                continue
            c = (b * b - disc) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if gcd(gcd(a, b), c) != 1:
                continue
            out.append((a, b, c))
        a += 1
    return out


def class_number(disc):
    return len(reduced_forms(disc))


# ---------------------------------------------------------------------------
# the j-function

def reduce_tau(tau):
    """Move tau into the standard fundamental domain of SL2(Z)."""
    tau = mpmath.mpc(tau)
    for _ in range(10000):
        n = mpmath.nint(tau.real)
        tau -= n
        if abs(tau) < 1 - mpmath.mpf(10) ** (-(mpmath.mp.dps // 2)):
            tau = -1 / tau
        else:
            return tau
    return tau


def _j_reduced(tau):
    q = mpmath.exp(mpmath.j * mpmath.pi * tau)
    t2 = mpmath.jtheta(2, 0, q)
    t3 = mpmath.jtheta(3, 0, q)
    t4 = mpmath.jtheta(4, 0, q)
    num = t2 ** 8 + t3 ** 8 + t4 ** 8
    return 32 * num ** 3 / (t2 * t3 * t4) ** 8


def j_invariant(tau, prec=256):
    """j(tau) for tau in the upper half plane, computed at ``prec`` bits.

    A guard of 32 bits plus the bit size of j (about 9.07 Im(tau) after
    reduction) is added internally so the returned value is accurate to
    roughly 2^-prec relative to max(1, |j|).
    """
    with mpmath.workprec(prec + 32):
        # convert inside workprec: mpc() rounds to the ambient precision
        if mpmath.mpc(tau).imag <= 0:
            raise InvalidInput("tau must lie in the upper half plane")
        t = reduce_tau(tau)
        guard = 32 + int(9.07 * float(t.imag))
    with mpmath.workprec(prec + guard):
        t = reduce_tau(tau)
        val = _j_reduced(t)
    return +val


def j_tau_of_form(a, b, c):
    D = b * b - 4 * a * c
    return (-b + mpmath.sqrt(D)) / (2 * a)


# ---------------------------------------------------------------------------
# polynomial helpers (coefficient lists, low degree first)

def poly_from_roots(roots):
    coeffs = [mpmath.mpc(1)]
    for r in roots:
        new = [mpmath.mpc(0)] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            new[i + 1] += c
            new[i] -= r * c
        coeffs = new
    return coeffs


def _round_all(vals, bits):
    tol = mpmath.mpf(2) ** (-bits // 4)
    out = []
    for v in vals:
        if abs(mpmath.im(v)) > tol:
            return None
        n = round_to_integer(mpmath.re(v), tol)
        if n is None:
            return None
        out.append(n)
    return out


def _two_precision(compute, bits, max_bits):
    """Round ``compute(bits)`` to integers; accept when a second, higher
    precision gives the same integers. Escalates on failure."""
    prev = None
    b = bits
    while b <= max_bits:
        vals = compute(b)
        with mpmath.workprec(b + 64):
            ints = _round_all(vals, b)
        if ints is not None and ints == prev:
            return ints
        if ints is not None and prev is None:
            prev = ints
            b = b + max(64, b // 4)
            continue
        prev = ints
        b *= 2
    raise PrecisionExhausted(f"integer recognition failed at {max_bits} bits")


# ---------------------------------------------------------------------------
# disk cache

def default_cache_dir():
    env = os.environ.get("CMBOUNDS_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "cmbounds"


def _cache_path(cache_dir, kind, key):
    return Path(cache_dir) / f"{kind}_{key}.txt".replace("-", "m")


def _cache_read(path, header):
    try:
        lines = Path(path).read_text().splitlines()
    except OSError:
        return None
    if not lines or lines[0].strip() != header:
        return None
    out = {}
    for ln in lines[1:]:
        if ln.strip():
            i, j, c = ln.split()
            out[(int(i), int(j))] = int(c)
    return out


def _cache_write(path, header, coeffs):
    from filelock import FileLock
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with FileLock(str(path) + ".lock"):
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w") as fh:
            fh.write(header + "\n")
            for (i, j), c in sorted(coeffs.items()):
                fh.write(f"{i} {j} {c}\n")
        os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Hilbert class polynomials

def hilbert_class_polynomial(disc, prec=None, cache_dir=None):
    """Integer coefficients (low degree first) of H_disc, monic of degree h."""
    forms = reduced_forms(disc)
    header = f"hcp disc={disc}"
    if cache_dir is not None:
        hit = _cache_read(_cache_path(cache_dir, "hcp", disc), header)
        if hit is not None:
            return [hit[(i, 0)] for i in range(len(forms) + 1)]
    size = sum(math.pi * math.sqrt(-disc) / a for a, _, _ in forms) / math.log(2)
    bits = int(size) + 96 if prec is None else max(prec, int(size) + 64)

    def compute(b):
        with mpmath.workprec(b + 32):
            roots = [j_invariant(j_tau_of_form(*f), b) for f in forms]
            return poly_from_roots(roots)

    ints = _two_precision(compute, bits, 64 * bits)
    if cache_dir is not None:
        _cache_write(_cache_path(cache_dir, "hcp", disc), header,
                     {(i, 0): c for i, c in enumerate(ints)})
    return ints


# ---------------------------------------------------------------------------
# classical modular polynomials

def psi(n):
    """Index of Gamma_0(n) in SL2(Z): n prod_{l | n} (1 + 1/l)."""
    out = Fraction(n)
    for l in sympy.factorint(n):
        out *= Fraction(l + 1, l)
    return int(out)


def cyclic_matrices(n):
    """Upper triangular (a, b, d) with ad = n, 0 <= b < d, gcd(a, b, d) = 1."""
    out = []
    for a in sympy.divisors(n):
        d = n // a
        for b in range(d):
            if gcd(gcd(a, b), d) == 1:
                out.append((a, b, d))
    return out


def _modpoly_bits(n):
    k = psi(n)
    digits = k * (2.6 * math.log10(n) + 8) + k * 3.3 + 30
    return int(digits * 3.33)


def modular_polynomial(n, prec=None, cache_dir=None):
    """Phi_n as a dict {(i, j): c} meaning sum c X^i Y^j.

    Phi_n(X, j(tau)) = prod over cyclic sublattices of (X - j(M tau)). For
    each of psi(n)+1 interpolation nodes tau_t we expand the product in X,
    then recover each X-coefficient as a polynomial in Y = j(tau) by solving
    a Vandermonde system; nodes are spread along Im(tau) = 1.2 so the j
    values sit roughly on a circle, which keeps that system well conditioned.
    """
    if n < 1:
        raise InvalidInput("n must be positive")
    if n == 1:
        return {(1, 0): 1, (0, 1): -1}
    header = f"modpoly n={n}"
    if cache_dir is not None:
        hit = _cache_read(_cache_path(cache_dir, "modpoly", n), header)
        if hit is not None:
            return hit
    k = psi(n)
    mats = cyclic_matrices(n)
    assert len(mats) == k
    bits = _modpoly_bits(n) if prec is None else prec

    def compute(b):
        with mpmath.workprec(b + 64):
            nodes = [mpmath.mpf(t) / (k + 1) - mpmath.mpf(1) / 2 + mpmath.mpc(0, "1.2")
                     for t in range(k + 1)]
            ys = []
            rows = []
            for tau in nodes:
                ys.append(j_invariant(tau, b + 32))
                roots = [j_invariant((a * tau + bb) / d, b + 32) for a, bb, d in mats]
                rows.append(poly_from_roots(roots))
            V = mpmath.matrix([[y ** e for e in range(k + 1)] for y in ys])
            # one LU factorisation, k+1 right hand sides (one per power of X)
            out = []
            for i in range(k + 1):
                rhs = mpmath.matrix([rows[t][i] for t in range(k + 1)])
                sol = mpmath.lu_solve(V, rhs)
                out.extend(sol[e] for e in range(k + 1))
            return out

    ints = _two_precision(compute, bits, 16 * bits)
    coeffs = {}
    for idx, c in enumerate(ints):
        if c:
            coeffs[(idx // (k + 1), idx % (k + 1))] = c
    _check_modpoly(coeffs, n)
    if cache_dir is not None:
        _cache_write(_cache_path(cache_dir, "modpoly", n), header, coeffs)
    return coeffs


def _check_modpoly(coeffs, n):
    k = psi(n)
    if coeffs.get((k, 0)) != 1 or coeffs.get((0, k)) != 1:
        raise PrecisionExhausted(f"Phi_{n} is not monic of degree {k}")
    for (i, j), c in coeffs.items():
        if coeffs.get((j, i)) != c:
            raise PrecisionExhausted(f"Phi_{n} failed the symmetry check")


def eval_bivariate(coeffs, x, y):
    return sum(c * x ** i * y ** j for (i, j), c in coeffs.items())


# ---------------------------------------------------------------------------
# Singular moduli

@dataclass
class SingularModuliReport:
    disc1: int
    disc2: int
    resultant: int
    primes: list
    bound: Fraction
    ok: bool


def singular_moduli_bound_check(O1, O2, prec=None, cache_dir=None):
    """Factor Res(H_D1, H_D2) and compare its primes with the embedding bound."""
    from .qalg import simultaneous_embedding_bound
    O1 = O1 if isinstance(O1, QuadOrder) else QuadOrder(O1)
    O2 = O2 if isinstance(O2, QuadOrder) else QuadOrder(O2)
    if O1.field_disc == O2.field_disc:
        raise InvalidInput("the two orders lie in the same quadratic field")
    X = sympy.Symbol("X")
    H1 = hilbert_class_polynomial(O1.disc, prec, cache_dir)
    H2 = hilbert_class_polynomial(O2.disc, prec, cache_dir)
    P1 = sympy.Poly(list(reversed(H1)), X)
    P2 = sympy.Poly(list(reversed(H2)), X)
    res = int(sympy.resultant(P1, P2))
    primes = sorted(sympy.factorint(abs(res))) if res else []
    bound = simultaneous_embedding_bound(O1.field_disc, O1.conductor, O2.field_disc, O2.conductor)
    return SingularModuliReport(O1.disc, O2.disc, res, primes, bound,
                                res != 0 and all(q <= bound for q in primes))
