"""Principally polarized CM points, Igusa class polynomials and their denominators.

CM points are produced by the usual polarized-ideal recipe. For an ideal
class representative A, a polarization is an element xi of K with
conj(xi) = -xi and xi O_K = (A conj(A) D)^-1, D the different. The
alternating form E(x, y) = Tr(xi conj(x) y) is then unimodular on A, and
with the CM type Phi = {phi : Im phi(xi) > 0} the lattice Phi(A) carries a
principal polarization. Changing xi by a totally positive real unit gives a
possibly different point; units of the form eta conj(eta) give isomorphic
ones, and so does the action of Aut(K). Points are deduplicated by their
Igusa invariants, which identify genus-2 curves up to isomorphism.

Curve-side invariants of y^2 = u0 x^6 + ... + u6 are the classical root
expressions

    A = u0^2 sum_15 (12)^2 (34)^2 (56)^2
    B = u0^4 sum_10 (12)^2 (23)^2 (31)^2 (45)^2 (56)^2 (64)^2
    C = u0^6 sum_60 (12)^2 (23)^2 (31)^2 (45)^2 (56)^2 (64)^2 (14)^2 (25)^2 (36)^2
    D = u0^10 prod_{i<j} (ij)^2

with (ij) the difference of roots i and j, so i1 = A^5/D, i2 = A^3 B/D and
i3 = A^2 C/D.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations

import mpmath
import sympy

from . import InvalidInput, PrecisionExhausted
from . import siegel
from .cmfield import (CMQuartic, CMType, Ideal, class_group, decomposition_condition,
                      principal_generator, relative_norm_unit, roots_of_unity)
from .quadcm import _two_precision, poly_from_roots
from .util import lcm, round_to_integer

F = Fraction


@dataclass
class CMPoint:
    """A principally polarized abelian surface with CM by O_K."""

    ideal: Ideal
    xi: list  # O_K coordinates
    cm_type: CMType
    tau: object  # reduced period matrix at the enumeration precision
    invariants: tuple = ()

    def period_matrix(self, K, prec):
        return period_matrix(K, self.ideal, self.xi, prec)[1]


def polarizations(K, A):
    """Totally imaginary xi generating (A conj(A) D)^-1, one per class modulo
    relative norms of units. Empty if none exists."""
    O = K.maximal_order
    J = (A * A.conj() * O.different).inverse()
    g = principal_generator(J)
    if g is None:
        return []
    g = [F(c) for c in g]
    eps = [int(c) for c in O.coords(K.real_unit_element())]
    eta = relative_norm_unit(K, eps)
    twists = [u for u in roots_of_unity(K)]
    if eta is not None:
        twists += [O.mul_coords(u, eta) for u in roots_of_unity(K)]
    xi = None
    for u in twists:
        c = O.mul_coords(g, u)
        if O.conj_coords(c) == [-v for v in c]:
            xi = c
            break
    if xi is None:
        return []
    out = [xi, [-v for v in xi]]
    if eta is None:
        # eps0 is not a relative norm, so xi and eps0 xi are distinct choices
        out += [O.mul_coords(x, eps) for x in out]
    return out


def period_matrix(K, A, xi, prec=256):
    """(Phi, tau) for the polarized lattice (Phi(A), Tr(xi conj(x) y))."""
    Phi, data = period_data(K, A, xi, prec)
    return Phi, data.tau


def period_data(K, A, xi, prec=256):
    """(Phi, PeriodData) for the polarized lattice (Phi(A), Tr(xi conj(x) y))."""
    O = K.maximal_order
    xe = O.element(xi)
    with mpmath.workprec(prec + 40):
        Phi = tuple(k for k in range(4) if mpmath.im(K.embed(xe, k, prec + 40)) > 0)
        if len(Phi) != 2 or (Phi[0] ^ 1) in Phi:
            raise InvalidInput("xi is not totally imaginary")
        basis = [O.element(r) for r in A.basis_elements()]
        E = [[K.trace(K.mul(K.mul(xe, K.conj(u)), v)) for v in basis] for u in basis]
        if any(t.denominator != 1 for r in E for t in r):
            raise InvalidInput("polarization form is not integral on the ideal")
        P = siegel.symplectic_basis([[int(t) for t in r] for r in E])
        vecs = [tuple(sum(F(P[i][j]) * basis[j][t] for j in range(4)) for t in range(4))
                for i in range(4)]
        Om = mpmath.matrix(2, 4)
        for c in range(4):
            for r in range(2):
                Om[r, c] = K.embed(vecs[c], Phi[r], prec + 40)
        data = siegel.PeriodData(Om[:, 0:2], Om[:, 2:4])
        siegel.check_siegel_point(data.tau)
    return CMType(Phi), data


def _same(u, v, bits):
    tol = mpmath.mpf(2) ** (-bits // 2)
    return all(abs(a - b) <= tol * max(1, abs(a)) for a, b in zip(u, v))


def enumerate_cm_points(K, prec=256, group=None):
    """All principally polarized CM points for O_K up to isomorphism.

    Also returns the list of class representatives that admit no principal
    polarization as the attribute ``skipped`` of the result list.
    """
    group = group or class_group(K)
    ctx = siegel.PrecisionContext(prec)
    points = _PointList()
    for rep in group.reps:
        A = rep.ideal
        xis = polarizations(K, A)
        if not xis:
            points.skipped.append(A)
            continue
        for xi in xis:
            Phi, tau = period_matrix(K, A, xi, prec)
            with mpmath.workprec(ctx.work):
                red = siegel.siegel_reduce(tau).tau
                inv = siegel.igusa_invariants(red, ctx)
            if any(_same(inv, p.invariants, prec) for p in points):
                continue
            points.append(CMPoint(A, xi, Phi, red, inv))
    return points


class _PointList(list):
    def __init__(self, *a):
        super().__init__(*a)
        self.skipped = []


# ---------------------------------------------------------------------------
# class polynomials

@dataclass
class ClassPolynomial:
    """Monic H_i with exact rational coefficients (low degree first)."""

    index: int
    coeffs: list
    digits: int = 0
    normalization: str = "frak"  # roots frak_j_i, or i_i for "igusa"

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def denominator(self):
        return lcm(*[c.denominator for c in self.coeffs])

    def factored_denominator(self):
        return dict(sorted(sympy.factorint(self.denominator).items()))

    def to_text(self):
        lines = [f"H{self.index} degree={self.degree}"]
        for k, c in enumerate(self.coeffs):
            lines.append(f"{k} {c.numerator} {c.denominator}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = text.split("\n")
        head = lines[0].split()
        idx = int(head[0][1:])
        coeffs = []
        for ln in lines[1:]:
            if ln.strip():
                k, n, d = ln.split()
                assert int(k) == len(coeffs)
                coeffs.append(F(int(n), int(d)))
        return cls(idx, coeffs)


def _frak_values(K, points, index, bits, normalization="frak"):
    ctx = siegel.PrecisionContext(bits)
    invariants = siegel.frak_j if normalization == "frak" else siegel.igusa_invariants
    vals = []
    for pt in points:
        _, tau = period_matrix(K, pt.ideal, pt.xi, ctx.work)
        with mpmath.workprec(ctx.work):
            red = siegel.siegel_reduce(tau).tau
            vals.append(invariants(red, ctx)[index - 1])
    return vals


def _recognize_coeffs(vals, bits):
    """Rationals for the real numbers ``vals`` sharing a common denominator."""
    with mpmath.workprec(bits + 64):
        tol = mpmath.mpf(2) ** (-bits + 16)
        L = 1
        out = []
        for v in vals:
            scale = max(1, abs(v))
            if abs(mpmath.im(v)) > tol * scale:
                return None
            x = mpmath.re(v)
            n = round_to_integer(x * L, tol * scale * L)
            if n is not None:
                out.append(F(n, L))
                continue
            # new denominator factor: continued fractions on x L
            room = bits - 16 - int(mpmath.log(scale * L, 2))
            if room < 32:
                return None
            c = _cf_rational(x * L, 2 ** (room // 2), tol * scale * L)
            if c is None:
                return None
            L *= c.denominator
            out.append(F(c.numerator, L))
        return out


def _cf_rational(x, max_den, tol):
    from .util import recognize_rational
    return recognize_rational(x, max_den, tol)


def _initial_bits(K, points, index, normalization):
    vals = _frak_values(K, points, index, 256, normalization)
    with mpmath.workprec(300):
        coeffs = poly_from_roots(vals)
        size = max(float(mpmath.log(max(1, abs(c)), 2)) for c in coeffs)
    # room for the numerator plus a denominator of comparable size
    return max(256, int(2.2 * size) + 128)


def class_polynomial(K, index, digits=None, points=None, max_digits=4000, normalization="frak"):
    """H_index(X) = prod over CM points of (X - frak_j_index(tau)).

    With ``normalization="igusa"`` the roots are i_index(tau) = 2^-12
    frak_j_index(tau) instead, so coefficient k is scaled by 2^(12 (k - h)).
    """
    if index not in (1, 2, 3):
        raise InvalidInput("index must be 1, 2 or 3")
    if normalization not in ("frak", "igusa"):
        raise InvalidInput("normalization must be 'frak' or 'igusa'")
    points = points if points is not None else enumerate_cm_points(K)
    if not points:
        raise InvalidInput("no principally polarized CM points")
    bits = (int(digits * math.log2(10)) if digits
            else _initial_bits(K, points, index, normalization))
    max_bits = int(max_digits * math.log2(10))
    prev = None
    while bits <= max_bits:
        vals = _frak_values(K, points, index, bits, normalization)
        with mpmath.workprec(bits + 64):
            coeffs = poly_from_roots(vals)
        rec = _recognize_coeffs(coeffs, bits)
        if rec is not None and rec == prev:
            return ClassPolynomial(index, rec, int(bits / math.log2(10)), normalization)
        if rec is not None and prev is None:
            prev = rec
            bits += max(64, bits // 4)
            continue
        prev = rec
        bits = int(bits * 1.5)
    raise PrecisionExhausted(f"class polynomial not recognised at {max_digits} digits; "
                             f"raise --digits")


# ---------------------------------------------------------------------------
# denominators

@dataclass
class PrimeVerdict:
    prime: int
    exponent: int
    below_bound: bool
    decomposition: str


@dataclass
class DenominatorReport:
    denominator: int
    factors: dict
    bound: int
    primes: list
    exponents_multiple_of_6: bool
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return all(v.below_bound and v.decomposition != "not-satisfied" for v in self.primes)

    def as_dict(self):
        return {
            "denominator": str(self.denominator),
            "factors": {str(p): e for p, e in self.factors.items()},
            "bound": self.bound,
            "primes": [{"prime": v.prime, "exponent": v.exponent,
                        "below_bound": v.below_bound, "decomposition": v.decomposition}
                       for v in self.primes],
            "exponents_multiple_of_6": self.exponents_multiple_of_6,
            "ok": self.ok,
            "warnings": self.warnings,
        }


def denominator_report(H, K):
    factors = H.factored_denominator()
    bound = K.denominator_bound()
    verdicts = []
    warnings = []
    for p, e in factors.items():
        verdicts.append(PrimeVerdict(p, e, p < bound, decomposition_condition(K, p)))
        if p == 2:
            warnings.append("conclusions at 2 are not known a priori to be valid")
    return DenominatorReport(H.denominator, factors, bound, verdicts,
                             all(e % 6 == 0 for e in factors.values()), warnings)


# ---------------------------------------------------------------------------
# curve side

_PAIRINGS = sorted({tuple(sorted(tuple(sorted(p[k:k + 2])) for k in (0, 2, 4)))
                    for p in permutations(range(6))})
_SPLITS = sorted({tuple(sorted((tuple(sorted(p[:3])), tuple(sorted(p[3:])))))
                  for p in permutations(range(6))})


def _root_invariants(u, bits):
    with mpmath.workprec(bits):
        r = mpmath.polyroots([mpmath.mpf(c) for c in u], maxsteps=400, extraprec=2 * bits)
        d2 = {(i, j): (r[i] - r[j]) ** 2 for i in range(6) for j in range(6)}

        def tri(t):
            i, j, k = t
            return d2[i, j] * d2[j, k] * d2[k, i]

        a0 = mpmath.mpf(u[0])
        A = a0 ** 2 * mpmath.fsum(d2[p[0]] * d2[p[1]] * d2[p[2]] for p in _PAIRINGS)
        B = a0 ** 4 * mpmath.fsum(tri(s) * tri(t) for s, t in _SPLITS)
        C = a0 ** 6 * mpmath.fsum(tri(s) * tri(t) * d2[s[0], m[0]] * d2[s[1], m[1]] * d2[s[2], m[2]]
                                  for s, t in _SPLITS for m in permutations(t))
        D = a0 ** 10 * mpmath.fprod(d2[i, j] for i, j in combinations(range(6), 2))
        return [A, B, C, D]


def _as_sextic(u):
    """Coefficients (highest first) of a degree-6 model with the same invariants."""
    u = [int(c) for c in u]
    if len(u) != 7:
        raise InvalidInput("expected 7 coefficients u0..u6")
    if u[0] != 0:
        return u
    if u[1] == 0:
        raise InvalidInput("polynomial has degree < 5")
    # a root at infinity: translate so that 0 is not a root, then reverse
    x = sympy.Symbol("x")
    f = sympy.Poly(u, x)
    t = next(t for t in range(1, 10) if f.eval(t) != 0)
    g = sympy.Poly(f.as_expr().subs(x, x + t), x)
    coeffs = [int(c) for c in g.all_coeffs()]
    coeffs = [0] * (7 - len(coeffs)) + coeffs
    return list(reversed(coeffs))


def igusa_clebsch_from_sextic(u):
    """Integer invariants (A, B, C, D) of y^2 = u0 x^6 + ... + u6."""
    u = _as_sextic(u)
    x = sympy.Symbol("x")
    disc = sympy.discriminant(sympy.Poly(u, x))
    if disc == 0:
        raise InvalidInput("sextic has a repeated root")
    size = max(abs(c) for c in u).bit_length()
    bits = 12 * size + 128
    return tuple(_two_precision(lambda b: _root_invariants(u, b), bits, 16 * bits))


def curve_invariants(u):
    A, B, C, D = igusa_clebsch_from_sextic(u)
    return F(A ** 5, D), F(A ** 3 * B, D), F(A ** 2 * C, D)


@dataclass
class CrossCheck:
    analytic: list
    algebraic: list
    match: bool


def analytic_vs_algebraic_crosscheck(K, curves, digits=None, points=None):
    """Compare CM values of (i1, i2, i3) with the invariants of curve models."""
    points = points if points is not None else enumerate_cm_points(K)
    H = [class_polynomial(K, n, digits, points) for n in (1, 2, 3)]
    # recognise the individual values: for a point count of 1 or rational
    # roots the class polynomials split over Q
    analytic = []
    X = sympy.Symbol("X")
    roots = []
    for h in H:
        poly = sympy.Poly(list(reversed(h.coeffs)), X)
        rs = [r for r, m in sympy.roots(poly, filter="Q").items() for _ in range(m)]
        roots.append(rs)
    if all(len(r) == len(points) for r in roots):
        # pair roots by numerical value at the CM points
        ctx = siegel.PrecisionContext(256)
        for pt in points:
            vals = [2 ** 12 * v for v in siegel.igusa_invariants(pt.tau, ctx)]
            trip = []
            for n in range(3):
                best = min(roots[n], key=lambda r: abs(vals[n] - mpmath.mpf(r.p) / r.q))
                trip.append(F(int(best.p), int(best.q)) / 2 ** 12)
            analytic.append(tuple(trip))
    algebraic = [curve_invariants(u) for u in curves]
    match = sorted(analytic) == sorted(algebraic)
    return CrossCheck(sorted(analytic), sorted(algebraic), match)
