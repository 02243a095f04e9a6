"""Command-line front end: ``cmbounds <command> ...``.

Every flag can also come from the environment as CMBOUNDS_<FLAG>, e.g.
CMBOUNDS_DIGITS=300 or CMBOUNDS_FORMAT=json; an explicit flag wins.

Exit codes: 0 success, 2 invalid input, 3 precision exhausted, 4 budget
exceeded.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass

from . import CMBoundsError, InvalidInput

MIN_DIGITS = 77  # 256 bits
ENV_PREFIX = "CMBOUNDS_"


@dataclass
class RunConfig:
    digits: int = None
    cache_dir: str = None
    jobs: int = 1
    long: bool = False
    format: str = "text"

    def __post_init__(self):
        if self.digits is not None and self.digits < MIN_DIGITS:
            raise InvalidInput(f"--digits must be at least {MIN_DIGITS}")
        if self.jobs < 1:
            raise InvalidInput("--jobs must be positive")
        if self.format not in ("text", "json"):
            raise InvalidInput("--format is text or json")
        if self.cache_dir:
            os.makedirs(self.cache_dir, exist_ok=True)


def _env(name, cast=str, default=None):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None or raw == "":
        return default
    if cast is bool:
        return raw.lower() in ("1", "true", "yes", "on")
    try:
        return cast(raw)
    except ValueError:
        raise InvalidInput(f"bad value {raw!r} for {ENV_PREFIX}{name.upper()}")


def _field(tokens):
    from .cmfield import CMQuartic
    return CMQuartic.parse("cmfield " + " ".join(tokens))


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# commands

def cmd_bound(args, cfg):
    import sympy
    from .cmfield import decomposition_condition, prime_decomposition
    K = _field(args.field)
    bound = K.denominator_bound()
    primes = sorted(set(args.primes) | set(sympy.factorint(K.discriminant)))
    rows = []
    for p in primes:
        is_p = sympy.isprime(p)
        row = {"p": p, "prime": bool(is_p), "below_bound": p < bound}
        if is_p:
            row["factorization"] = [[P.e, P.f] for P in prime_decomposition(K, p)]
            row["decomposition"] = decomposition_condition(K, p)
        rows.append(row)
    out = {"field": K.descriptor(), "bound": bound, "galois_type": K.galois_type(),
           "discriminant": K.discriminant, "primes": rows}
    if cfg.format == "json":
        return _dump(out)
    lines = [str(bound), f"# {K.descriptor()}  galois={out['galois_type']}  disc={K.discriminant}",
             "# p  prime  below_bound  (e,f)...  decomposition"]
    for r in rows:
        fac = " ".join(f"({e},{f})" for e, f in r.get("factorization", [])) or "-"
        lines.append(f"{r['p']} {int(r['prime'])} {int(r['below_bound'])} {fac} "
                     f"{r.get('decomposition', '-')}")
    return "\n".join(lines)


def cmd_isog_table(args, cfg):
    from .ssgraph import isogeny_diameter_degree
    from .util import is_prime
    for p in args.primes:
        if not is_prime(p):
            raise InvalidInput(f"{p} is not prime")
    rows = [isogeny_diameter_degree(p, cache_dir=cfg.cache_dir) for p in args.primes]
    if cfg.format == "json":
        return _dump([{"p": r.p, "h": r.h, "rounded_sqrt": r.rounded_sqrt, "N": r.N,
                       "ratio": round(r.ratio, 6), "table_ratio": round(r.table_ratio, 3)}
                      for r in rows])
    lines = ["p h [sqrt p] N N/[sqrt p]"]
    lines += [f"{r.p} {r.h} {r.rounded_sqrt} {r.N} {r.table_ratio:.3f}" for r in rows]
    return "\n".join(lines)


def cmd_classpoly(args, cfg):
    from .classpoly import class_polynomial, denominator_report, enumerate_cm_points
    K = _field(args.field)
    prec = 256 if cfg.digits is None else int(cfg.digits * 3.33) + 8
    points = enumerate_cm_points(K, prec=max(prec, 256))
    if len(points) > 4 and not cfg.long:
        raise InvalidInput(f"{len(points)} CM points: this is a long computation, pass --long")
    kw = {} if cfg.digits is None else {"digits": cfg.digits, "max_digits": cfg.digits}
    try:
        H = class_polynomial(K, args.index, points=points, normalization=args.normalization, **kw)
    except CMBoundsError as e:
        if cfg.digits is not None and e.exit_code == 3:
            base = str(e).split("; raise --digits")[0]
            raise type(e)(f"{base}; raise --digits above {cfg.digits} or drop it to escalate "
                          "automatically") from e
        raise
    report = denominator_report(H, K).as_dict()
    text = H.to_text()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    if cfg.format == "json":
        return _dump({"index": H.index, "degree": H.degree, "normalization": args.normalization,
                      "coefficients": [[str(c.numerator), str(c.denominator)] for c in H.coeffs],
                      "denominator_report": report})
    if args.out:
        return _dump(report)
    return text + _dump(report)


def cmd_embed(args, cfg):
    from .embed import search_embedding, verify_solution
    from .util import require_prime
    K = _field(args.field)
    require_prime(args.p)
    res = search_embedding(args.p, K, mode=args.mode, jobs=cfg.jobs,
                           full_order=args.full_order, cache_dir=cfg.cache_dir)
    out = {"p": args.p, "field": K.descriptor(), "found": bool(res),
           "certificate": res.certificate}
    if res:
        out["solution"] = res.solution.as_dict()
        out["verified"] = bool(verify_solution(res.solution, args.p, K))
    # JSON either way; the text form is the same document
    return _dump(out)


def cmd_singular_moduli(args, cfg):
    from .quadcm import QuadOrder, singular_moduli_bound_check
    O1 = QuadOrder.from_field(args.d1, args.m1)
    O2 = QuadOrder.from_field(args.d2, args.m2)
    rep = singular_moduli_bound_check(O1, O2, cache_dir=cfg.cache_dir)
    out = {"disc1": rep.disc1, "disc2": rep.disc2, "resultant": str(rep.resultant),
           "primes": rep.primes, "bound": str(rep.bound), "ok": rep.ok}
    if cfg.format == "json":
        return _dump(out)
    return "\n".join([f"primes {' '.join(map(str, rep.primes))}", f"bound {rep.bound}",
                      f"ok {int(rep.ok)}"])


def _keyval(tokens, key, cast=int):
    rest, val = [], None
    for t in tokens:
        if t.startswith(key + "="):
            val = cast(t.split("=", 1)[1])
        else:
            rest.append(t)
    return rest, val


def cmd_units(args, cfg):
    import mpmath
    from .siegel import PrecisionContext, unit_invariant
    tokens, a_idx = _keyval(args.field, "class")
    tokens, b_idx = _keyval(tokens, "class2")
    K = _field(tokens)
    G = K.class_group()
    if a_idx is None:
        raise InvalidInput("units needs class=<index>")
    b_idx = a_idx if b_idx is None else b_idx
    for k in (a_idx, b_idx):
        if not 0 <= k < G.order:
            raise InvalidInput(f"class index {k} out of range 0..{G.order - 1}")
    Phi = K.cm_types()[0]
    ctx = PrecisionContext.from_digits(cfg.digits or 154)
    A, B = G.reps[a_idx].ideal, G.reps[b_idx].ideal
    U = unit_invariant(Phi, A, B, K, ctx)
    value = U.value
    if abs(mpmath.im(value)) <= abs(value) * mpmath.mpf(10) ** (-ctx.target_digits // 2):
        value = mpmath.re(value)  # real unit: drop the rounding noise
    out = {"field": K.descriptor(), "classes": [a_idx, b_idx], "minpoly": U.minpoly,
           "value": mpmath.nstr(value, 30), "norm": str(U.norm),
           "norm_factors": {str(p): e for p, e in U.factors.items()},
           "bound": U.bound, "ok": U.ok}
    if cfg.format == "json":
        return _dump(out)
    fac = " * ".join(f"{p}^{e}" for p, e in U.factors.items()) or "1"
    return "\n".join([f"minpoly {' '.join(map(str, U.minpoly))}", f"value {out['value']}",
                      f"norm {U.norm} = {fac}", f"ok {int(U.ok)}"])


# ---------------------------------------------------------------------------
# parser

def build_parser():
    ap = argparse.ArgumentParser(prog="cmbounds", description=__doc__.splitlines()[0])
    ap.add_argument("--digits", type=int, default=_env("digits", int))
    ap.add_argument("--cache-dir", default=_env("cache_dir"))
    ap.add_argument("--jobs", type=int, default=_env("jobs", int, 1))
    ap.add_argument("--long", action="store_true", default=_env("long", bool, False))
    ap.add_argument("--format", choices=["text", "json"], default=_env("format", str, "text"))
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bound", help="denominator bound and prime table for a field")
    s.add_argument("field", nargs="+", help="d=<int> alpha=<q> beta=<q>")
    s.add_argument("--primes", type=int, nargs="*", default=[])
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("isog-table", help="class numbers and isogeny diameters")
    s.add_argument("primes", type=int, nargs="*")
    s.set_defaults(func=cmd_isog_table)

    s = sub.add_parser("classpoly", help="Igusa class polynomial H_i")
    s.add_argument("field", nargs=3)
    s.add_argument("index", type=int, choices=[1, 2, 3])
    s.add_argument("--out")
    s.add_argument("--normalization", choices=["frak", "igusa"], default="frak")
    s.set_defaults(func=cmd_classpoly)

    s = sub.add_parser("embed", help="search the embedding problem at p")
    s.add_argument("p", type=int)
    s.add_argument("field", nargs=3)
    s.add_argument("--mode", choices=["auto", "classes", "cm"], default="auto")
    s.add_argument("--full-order", action="store_true")
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("singular-moduli", help="primes dividing Res(H_D1, H_D2)")
    for name in ("d1", "m1", "d2", "m2"):
        s.add_argument(name, type=int)
    s.set_defaults(func=cmd_singular_moduli)

    s = sub.add_parser("units", help="the unit invariant u(Phi; a, b)")
    s.add_argument("field", nargs="+", help="d= alpha= beta= class=<k> [class2=<k>]")
    s.set_defaults(func=cmd_units)
    return ap


def main(argv=None):
    try:
        ap = build_parser()
        args = ap.parse_args(argv)
        cfg = RunConfig(args.digits, args.cache_dir, args.jobs, args.long, args.format)
        text = args.func(args, cfg)
    except CMBoundsError as e:
        print(f"cmbounds: error: {e}", file=sys.stderr)
        return e.exit_code
    print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
