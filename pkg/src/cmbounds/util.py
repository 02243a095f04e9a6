"""Small exact-arithmetic helpers shared across modules."""

from fractions import Fraction
from math import gcd, isqrt

import mpmath
import sympy

from . import InvalidInput, PrecisionExhausted


def is_prime(n):
    return n >= 2 and bool(sympy.isprime(n))


def require_prime(p):
    if not isinstance(p, int) or not is_prime(p):
        raise InvalidInput(f"{p!r} is not a prime")
    return p


def is_square(n):
    """True for non-negative integer or rational squares."""
    n = Fraction(n)
    if n < 0:
        return False
    a, b = n.numerator, n.denominator
    return isqrt(a) ** 2 == a and isqrt(b) ** 2 == b


def squarefree_part(n):
    """Signed squarefree part of a non-zero integer."""
    if n == 0:
        raise ValueError("zero has no squarefree part")
    s = -1 if n < 0 else 1
    out = 1
    for q, e in sympy.factorint(abs(n)).items():
        if e % 2:
            out *= q
    return s * out


def is_squarefree(n):
    return n != 0 and all(e == 1 for e in sympy.factorint(abs(n)).values())


def fundamental_discriminant(disc):
    """Split a quadratic discriminant as (conductor, fundamental disc)."""
    if disc % 4 not in (0, 1) or isqrt(abs(disc)) ** 2 == disc:
        raise InvalidInput(f"{disc} is not a non-square discriminant")
    d = squarefree_part(disc)
    dk = d if d % 4 == 1 else 4 * d
    m2 = disc // dk
    m = isqrt(m2)
    assert m * m == m2 and m * m * dk == disc
    return m, dk


def hilbert_symbol(a, b, p):
    """Hilbert symbol (a, b)_p for non-zero integers; p a prime or 0 (infinity)."""
    if p == 0:
        return -1 if (a < 0 and b < 0) else 1
    va, ua = _split(a, p)
    vb, ub = _split(b, p)
    if p == 2:
        eps = lambda u: ((u - 1) // 2) % 2
        om = lambda u: ((u * u - 1) // 8) % 2
        e = eps(ua) * eps(ub) + va * om(ub) + vb * om(ua)
        return -1 if e % 2 else 1
    sign = (-1) ** ((va * vb * ((p - 1) // 2)) % 2)
    la = int(sympy.legendre_symbol(ua % p, p))
    lb = int(sympy.legendre_symbol(ub % p, p))
    return sign * la ** vb * lb ** va


def _split(n, p):
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v, n


def lcm(*xs):
    out = 1
    for x in xs:
        out = out * x // gcd(out, x)
    return out


# ---------------------------------------------------------------------------
# numerical recognition

def round_to_integer(x, tol):
    """Nearest integer to the real number x, or None if |x - n| > tol.

    Call inside a workprec context at least as large as that of x.
    """
    x = mpmath.re(x)
    n = int(mpmath.nint(x))
    return n if abs(x - n) <= tol else None


def recognize_rational(x, max_den, tol):
    """Best continued-fraction approximation to x with denominator <= max_den.

    Returns None unless the approximation is within ``tol``.
    """
    x = mpmath.re(x)
    a = x
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    best = None
    for _ in range(10000):
        fl = int(mpmath.floor(a))
        h0, h1 = h1, fl * h1 + h0
        k0, k1 = k1, fl * k1 + k0
        if k1 > max_den:
            break
        best = Fraction(h1, k1)
        if abs(x - mpmath.mpf(h1) / k1) <= tol:
            return best
        frac = a - fl
        if frac == 0:
            break
        a = 1 / frac
    if best is not None and abs(x - mpmath.mpf(best.numerator) / best.denominator) <= tol:
        return best
    return None


def stable_integers(compute, prec_bits, max_bits=1 << 16):
    """Run ``compute(bits)`` at two precisions and round both to integers.

    ``compute`` returns a list of complex/real approximations. A value is
    accepted when it lies within 2^(-bits/4) of an integer at both precisions
    and the two roundings agree. Precision doubles until that happens.
    """
    bits = prec_bits
    prev = None
    while bits <= max_bits:
        vals = compute(bits)
        tol = mpmath.mpf(2) ** (-bits // 4)
        with mpmath.workprec(bits):
            ints = []
            for v in vals:
                if abs(mpmath.im(v)) > tol * max(1, abs(v)):
                    ints = None
                    break
                n = round_to_integer(mpmath.re(v), tol * max(1, abs(v)))
                if n is None:
                    ints = None
                    break
                ints.append(n)
        if ints is not None and prev is not None and ints == prev:
            return ints
        prev = ints
        bits *= 2
    raise PrecisionExhausted(f"integer recognition failed up to {max_bits} bits")
