import math

import numpy as np
import pytest
import sympy

from cmbounds import InvalidInput
from cmbounds.cmfield import CMQuartic
from cmbounds.embed import (a_values, all_solutions, embedding_lattices, norm_bounds,
                            search_embedding, verify_solution)

SMALL_FIELDS = [(5, -5, 1), (13, -13, 3)]


@pytest.fixture(scope="module")
def field5():
    return CMQuartic(5, -5, 1)


def _box(gram, bound):
    """All integer vectors v with v^T G v / 2 <= bound, by a box scan."""
    G = np.array(gram, dtype=float)
    Gi = np.linalg.inv(G)
    radius = [int(math.floor(math.sqrt(2 * bound * Gi[i, i]) + 1e-9)) for i in range(4)]
    axes = [np.arange(-r, r + 1) for r in radius]
    V = np.array(np.meshgrid(*axes, indexing="ij")).reshape(4, -1).T.astype(np.int64)
    Gint = np.array(gram, dtype=np.int64)
    q = np.einsum("ij,jk,ik->i", V, Gint, V) // 2
    keep = q <= bound
    return V[keep], q[keep]


def _brute_solutions(H, K):
    """Independent recount inside one Hom lattice: a, y, x, w range over
    boxes and b is read off from xy + yw = beta b."""
    A = H.algebra
    alpha, beta, d = int(K.alpha), int(K.beta), int(K.d)
    dmax = max(abs(alpha) + abs(beta) * abs(a) for a in a_values(d))
    Vh, qh = _box(H.gram, dmax)
    V1, q1 = _box(H.R1.gram, dmax)
    V2, q2 = _box(H.R2.gram, dmax)

    def tz(R, V, q):
        out = {}
        for v, n in zip(V, q):
            e = R.element([int(c) for c in v])
            if A.trace(e) == 0:
                out.setdefault(int(n), []).append(e)
        return out

    x_by = tz(H.R1, V1, q1)
    w_by = tz(H.R2, V2, q2)
    y_by = {}
    for v, n in zip(Vh, qh):
        if n > 0:
            y_by.setdefault(int(n), []).append(H.element([int(c) for c in v]))
    found = set()
    for a in a_values(d):
        n1, n2 = -(alpha + beta * a), -(alpha - beta * a)
        for ny in range(1, min(n1, n2) + 1):
            xs = x_by.get(n1 - ny, [])
            ws = w_by.get(n2 - ny, [])
            for y in y_by.get(ny, []):
                for x in xs:
                    xy = A.mul(x, y)
                    for w in ws:
                        b = tuple((u + v) / beta for u, v in zip(xy, A.mul(y, w)))
                        if H.contains(b) and H.degree(b) == d - a * a:
                            found.add((a, b, x, y, w))
    return found


def _as_keys(sols):
    return {(s.a, s.b, s.x, s.y, s.w) for s in sols}


@pytest.mark.parametrize("fd", SMALL_FIELDS)
@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47])
def test_search_agrees_with_brute_force(p, fd):
    K = CMQuartic(*fd)
    lats, info = embedding_lattices(p, K, mode="classes")
    assert info["complete"]
    brute_any = False
    for H in lats:
        brute = _brute_solutions(H, K)
        assert _as_keys(all_solutions(H, K)) == brute
        brute_any = brute_any or bool(brute)
    res = search_embedding(p, K, mode="classes")
    assert bool(res) == brute_any
    assert res.certificate["complete"]
    if res:
        assert verify_solution(res.solution, p, K)


@pytest.mark.parametrize("p", [29, 31, 37, 41, 43, 47, 53])
def test_classes_and_cm_modes_agree(p, field5, cache_dir):
    a = search_embedding(p, field5, mode="classes")
    b = search_embedding(p, field5, mode="cm", cache_dir=cache_dir)
    assert b.certificate["complete"] and a.certificate["complete"]
    assert bool(a) == bool(b)
    if b:
        assert verify_solution(b.solution, p, field5)


def test_p3_solution_d13(field13):
    res = search_embedding(3, field13)
    assert res and verify_solution(res.solution, 3, field13)
    full = search_embedding(3, field13, full_order=True)
    assert full and verify_solution(full.solution, 3, field13)


def test_above_bound_is_empty(field13, cache_dir):
    p = sympy.nextprime(field13.denominator_bound())
    res = search_embedding(p, field13, cache_dir=cache_dir)
    assert not res
    assert res.certificate["complete"] and res.certificate["exhausted"]
    assert res.certificate["mode"] == "cm"


# ---------------------------------------------------------------------------
# verification

@pytest.fixture(scope="module")
def sol3(field13):
    return search_embedding(3, field13).solution


def _replace(sol, **kw):
    from dataclasses import replace
    return replace(sol, **kw)


def _neg(v):
    return tuple(-c for c in v)


def test_perturbing_a_fails(sol3, field13):
    v = verify_solution(_replace(sol3, a=sol3.a + 1), 3, field13)
    assert not v and v.failed == "a²+N(b)=d"


def test_sign_symmetries(sol3, field13):
    assert verify_solution(_replace(sol3, y=_neg(sol3.y), b=_neg(sol3.b)), 3, field13)
    assert verify_solution(_replace(sol3, x=_neg(sol3.x), y=_neg(sol3.y), w=_neg(sol3.w)),
                           3, field13)
    # negating y alone breaks xy + yw = beta b unless b = 0, which never happens
    v = verify_solution(_replace(sol3, y=_neg(sol3.y)), 3, field13)
    assert not v and v.failed == "xy+yw=βb"


def test_wrong_prime_fails(sol3, field13):
    assert not verify_solution(sol3, 5, field13)


def test_trace_zero_required(sol3, field13):
    one = (1, 0, 0, 0)
    x = tuple(u + v for u, v in zip(sol3.x, one))
    v = verify_solution(_replace(sol3, x=x), 3, field13)
    assert not v and v.failed == "x in R1^0"


# ---------------------------------------------------------------------------
# bounds

def test_norm_bounds_example(field13):
    assert norm_bounds(field13, 0) == (13, 13, 169)


@pytest.mark.parametrize("fd", SMALL_FIELDS + [(2, -6, 2), (17, -17, 4)])
def test_delta1_at_most_delta2(fd):
    K = CMQuartic(*fd)
    for a in a_values(K.d):
        d1, d2, m = norm_bounds(K, a)
        assert 0 <= d1 <= d2 and m == K.d * d1


def test_biquadratic_rejected():
    K = CMQuartic(5, -3, 0)
    assert not K.is_primitive()
    with pytest.raises(InvalidInput):
        norm_bounds(K, 0)
    with pytest.raises(InvalidInput):
        search_embedding(3, K)


def test_a_too_large(field13):
    with pytest.raises(InvalidInput):
        norm_bounds(field13, 4)


def test_non_prime_rejected(field13):
    with pytest.raises(InvalidInput):
        search_embedding(9, field13)


# ---------------------------------------------------------------------------
# parallel determinism

def test_jobs_determinism(field13):
    a = search_embedding(23, field13, mode="classes")
    b = search_embedding(23, field13, mode="classes", jobs=2)
    assert bool(a) and bool(b)
    assert a.solution.as_dict() == b.solution.as_dict()
    assert a.certificate == b.certificate
