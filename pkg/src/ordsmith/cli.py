"""Command-line front end.

Exit codes: 0 yes/success, 1 no, 2 inconclusive, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .algebra import Algebra, AlgebraError, Place, classify_prime, validate_maximal_order

EXIT_YES, EXIT_NO, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3


class InputError(Exception):
    pass


# file formats

def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{what}: file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: invalid JSON ({exc.msg} at line {exc.lineno})")


def load_algebra(path):
    data = _load_json(path, "algebra")
    if not isinstance(data, dict):
        raise InputError("algebra: expected a JSON object")
    try:
        return Algebra.from_json(data)
    except (AlgebraError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"algebra: {exc}")


def parse_matrix(alg, data, what="matrix"):
    if not isinstance(data, dict) or "entries" not in data:
        raise InputError(f"{what}: field 'entries' missing")
    rows = data["entries"]
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{what}: field 'entries' must be a non-empty list of rows")
    size = len(rows)
    if "n" in data and data["n"] not in (size, size // 2):
        raise InputError(f"{what}: field 'n' does not match the number of rows")
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != size:
            raise InputError(f"{what}: field 'entries' row {i} must have {size} entries")
        r = []
        for j, x in enumerate(row):
            if not isinstance(x, list) or len(x) != alg.dim or not all(isinstance(c, int) for c in x):
                raise InputError(f"{what}: field 'entries'[{i}][{j}] must be {alg.dim} integers")
            r.append(tuple(x))
        out.append(r)
    return out


def load_matrix(alg, path, what="matrix"):
    data = _load_json(path, what)
    M = parse_matrix(alg, data, what)
    m = data.get("m") if isinstance(data, dict) else None
    if m is not None and not isinstance(m, int):
        raise InputError(f"{what}: field 'm' must be an integer")
    return M, m


def matrix_json(M, m=None):
    out = {"n": len(M), "entries": [[[int(c) for c in x] for x in row] for row in M]}
    if m is not None:
        out["m"] = m
    return out


def load_profile(alg, path, n_arg=None, m_arg=None):
    from .localsnf import LocalEDProfile

    data = _load_json(path, "profile")
    n, m = n_arg, m_arg
    if isinstance(data, dict):
        if "places" not in data:
            raise InputError("profile: field 'places' missing")
        items = data["places"]
        n = n if n is not None else data.get("n")
        m = m if m is not None else data.get("m")
    else:
        items = data
    if not isinstance(items, list):
        raise InputError("profile: field 'places' must be a list")
    for k, item in enumerate(items):
        if not isinstance(item, dict) or "place" not in item:
            raise InputError(f"profile: field 'places'[{k}].place missing")
        pl = item["place"]
        if not isinstance(pl, dict) or "p" not in pl or "kind" not in pl:
            raise InputError(f"profile: field 'places'[{k}].place needs 'p' and 'kind'")
        if "invariants" not in item or not isinstance(item["invariants"], list):
            raise InputError(f"profile: field 'places'[{k}].invariants missing")
        place = Place(int(pl["p"]), str(pl["kind"]))
        if place not in classify_prime(alg, place.p):
            raise InputError(f"profile: field 'places'[{k}].place: {place.p} has no place of kind {place.kind!r}")
        if n is None:
            n = len(item["invariants"])
    if n is None:
        raise InputError("profile: field 'n' missing (no places to infer it from)")
    try:
        prof = LocalEDProfile.from_json(items)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"profile: malformed invariants ({exc})")
    return prof, int(n), m


def ideal_json(I):
    return {"hnf": [list(map(int, r)) for r in I.rows], "generators": str(I)}


def place_json(place):
    return {"p": place.p, "kind": place.kind}


# output

def emit(args, payload, text_lines):
    if args.json:
        sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    else:
        sys.stdout.write("\n".join(text_lines) + "\n")


def _profile_lines(prof):
    lines = []
    for pl, inv in prof.entries:
        lines.append(f"  {pl.p} {pl.kind}: {list(list(x) if isinstance(x, tuple) else x for x in inv)}")
    return lines or ["  (all places trivial)"]


# commands

def cmd_ed(args):
    from .localsnf import global_eds_quadratic, local_profile

    alg = load_algebra(args.algebra)
    M, _ = load_matrix(alg, args.matrix)
    prof = local_profile(alg, M)
    payload = {"profile": prof.to_json()}
    lines = ["local profile:"] + _profile_lines(prof)
    if alg.kind == "quadratic":
        eds = global_eds_quadratic(alg, M)
        payload["ideals"] = [ideal_json(I) for I in eds]
        lines.append("elementary divisor ideals:")
        lines += [f"  e{i + 1} = {I}  hnf {[list(map(int, r)) for r in I.rows]}" for i, I in enumerate(eds)]
    emit(args, payload, lines)
    return EXIT_YES


def cmd_snf_local(args):
    from .localsnf import local_unimodular_snf

    alg = load_algebra(args.algebra)
    M, _ = load_matrix(alg, args.matrix)
    out = []
    lines = []
    for place in classify_prime(alg, args.prime):
        snf = local_unimodular_snf(alg, M, place, args.precision)
        inv = [list(x) if isinstance(x, tuple) else x for x in snf.invariants]
        out.append({
            "place": place_json(place),
            "invariants": inv,
            "left_length": len(snf.left.records),
            "right_length": len(snf.right.records),
            "precision": snf.left.precision,
        })
        lines.append(f"{place.p} {place.kind}: {inv}  (words {len(snf.left.records)}/{len(snf.right.records)}, precision p^{snf.left.precision})")
    emit(args, {"places": out}, lines)
    return EXIT_YES


def cmd_equiv(args):
    from .unimodular import recover_transform, unimodular_equivalent

    alg = load_algebra(args.algebra)
    M, _ = load_matrix(alg, args.matrix)
    M2, _ = load_matrix(alg, args.matrix2, "matrix2")
    if len(M) != len(M2):
        raise InputError("matrix2: field 'entries' has a different size than matrix")
    eq = unimodular_equivalent(alg, M, M2)
    payload = {"equivalent": eq}
    lines = ["equivalent: yes" if eq else "equivalent: no"]
    if eq and args.witness:
        U, V = recover_transform(alg, M, M2)
        payload["U"], payload["V"] = matrix_json(U)["entries"], matrix_json(V)["entries"]
        lines += ["U = " + json.dumps(payload["U"]), "V = " + json.dumps(payload["V"])]
    emit(args, payload, lines)
    return EXIT_YES if eq else EXIT_NO


def cmd_construct(args):
    from .unimodular import exists_with_eds

    alg = load_algebra(args.algebra)
    prof, n, _ = load_profile(alg, args.profile, args.n)
    res = exists_with_eds(alg, prof, n, args.bound)
    payload = {"status": res.status, "detail": res.detail}
    lines = [f"{res.status}: {res.detail}"]
    if res.witness is not None:
        payload["witness"] = matrix_json(res.witness)
        lines.append("witness = " + json.dumps(payload["witness"], sort_keys=True))
    emit(args, payload, lines)
    return {"yes": EXIT_YES, "no": EXIT_NO}.get(res.status, EXIT_INCONCLUSIVE)


def cmd_modular_ed(args):
    from .modular import is_similitude, modular_profile

    alg = load_algebra(args.algebra)
    M, m_file = load_matrix(alg, args.matrix)
    m = is_similitude(alg, M)
    if m is None:
        raise InputError("matrix: field 'entries' is not a similitude (M* J M != m J)")
    if m_file is not None and m_file != m:
        raise InputError(f"matrix: field 'm' is {m_file} but the multiplier is {m}")
    prof = modular_profile(alg, M)
    emit(args, {"m": m, "profile": prof.profile.to_json()}, [f"multiplier {m}", "first-n profile:"] + _profile_lines(prof.profile))
    return EXIT_YES


def cmd_modular_equiv(args):
    from .modular import is_similitude, modular_equivalent, recover_modular_transform

    alg = load_algebra(args.algebra)
    M, _ = load_matrix(alg, args.matrix)
    M2, _ = load_matrix(alg, args.matrix2, "matrix2")
    for name, X in (("matrix", M), ("matrix2", M2)):
        if is_similitude(alg, X) is None:
            raise InputError(f"{name}: field 'entries' is not a similitude")
    if len(M) != len(M2):
        raise InputError("matrix2: field 'entries' has a different size than matrix")
    eq = modular_equivalent(alg, M, M2)
    payload = {"equivalent": eq}
    lines = ["equivalent: yes" if eq else "equivalent: no"]
    if eq and args.witness:
        U, V = recover_modular_transform(alg, M, M2)
        payload["U"], payload["V"] = matrix_json(U)["entries"], matrix_json(V)["entries"]
        lines += ["U = " + json.dumps(payload["U"]), "V = " + json.dumps(payload["V"])]
    emit(args, payload, lines)
    return EXIT_YES if eq else EXIT_NO


def cmd_modular_exists(args):
    from .modular import ModularEDProfile, modular_exists_with_eds

    alg = load_algebra(args.algebra)
    prof, n, m = load_profile(alg, args.profile, args.n, args.m)
    if m is None:
        raise InputError("profile: field 'm' missing (pass -m)")
    res = modular_exists_with_eds(alg, ModularEDProfile(int(m), prof), n, args.bound)
    payload = {"status": res.status, "detail": res.detail}
    lines = [f"{res.status}: {res.detail}"]
    if res.witness is not None and args.witness:
        payload["witness"] = matrix_json(res.witness, int(m))
        lines.append("witness = " + json.dumps(payload["witness"], sort_keys=True))
    emit(args, payload, lines)
    return {"yes": EXIT_YES, "no": EXIT_NO}.get(res.status, EXIT_INCONCLUSIVE)


def cmd_class(args):
    from .ideals import class_group_quadratic

    alg = load_algebra(args.algebra)
    if alg.kind != "quadratic":
        raise InputError("algebra: field 'kind' must be quadratic for class")
    G = class_group_quadratic(alg)
    forms = [list(f) for f in G.forms]
    emit(args, {"discriminant": G.discriminant, "order": G.order, "forms": forms},
         [f"discriminant {G.discriminant}", f"class number {G.order}"] + [f"  {tuple(f)}" for f in forms])
    return EXIT_YES


def cmd_cosets(args):
    from .modular import ModularEDProfile, enumerate_right_cosets

    alg = load_algebra(args.algebra)
    if alg.kind != "quadratic":
        raise InputError("algebra: field 'kind' must be quadratic for cosets")
    prof, n, m = load_profile(alg, args.profile, args.n, args.m)
    if m is None:
        raise InputError("profile: field 'm' missing (pass -m)")
    reps = enumerate_right_cosets(alg, ModularEDProfile(int(m), prof), n)
    payload = {"count": len(reps), "representatives": [matrix_json(X, int(m)) for X in reps]}
    lines = [f"{len(reps)} right cosets"] + [json.dumps(matrix_json(X)["entries"]) for X in reps]
    emit(args, payload, lines)
    return EXIT_YES


def cmd_validate_order(args):
    alg = load_algebra(args.algebra)
    rep = validate_maximal_order(alg)
    payload = {"maximal": rep.valid, "discriminant": rep.discriminant, "failures": rep.failures}
    lines = [f"maximal: {'yes' if rep.valid else 'no'}", f"discriminant: {rep.discriminant}"] + [f"  {f}" for f in rep.failures]
    emit(args, payload, lines)
    return EXIT_YES if rep.valid else EXIT_NO


def build_parser():
    ap = argparse.ArgumentParser(prog="ordsmith", description="Matrix equivalence over maximal orders.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--algebra", required=True)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    def positive(s):
        v = int(s)
        if v <= 0:
            raise argparse.ArgumentTypeError("must be positive")
        return v

    p = common(sub.add_parser("ed", help="local profile and global elementary divisors"))
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_ed)

    p = common(sub.add_parser("snf-local", help="local Smith form at the places above a prime"))
    p.add_argument("--matrix", required=True)
    p.add_argument("--prime", type=positive, required=True)
    p.add_argument("--precision", type=positive, default=None)
    p.set_defaults(func=cmd_snf_local)

    p = common(sub.add_parser("equiv", help="unimodular equivalence"))
    p.add_argument("--matrix", required=True)
    p.add_argument("--matrix2", required=True)
    p.add_argument("--witness", action="store_true")
    p.set_defaults(func=cmd_equiv)

    p = common(sub.add_parser("construct", help="decide existence and build a matrix with a profile"))
    p.add_argument("--profile", required=True)
    p.add_argument("--n", type=positive, default=None)
    p.add_argument("--bound", type=positive, default=None)
    p.set_defaults(func=cmd_construct)

    p = common(sub.add_parser("modular-ed", help="modular elementary divisors of a similitude"))
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_modular_ed)

    p = common(sub.add_parser("modular-equiv", help="symplectic equivalence of similitudes"))
    p.add_argument("--matrix", required=True)
    p.add_argument("--matrix2", required=True)
    p.add_argument("--witness", action="store_true")
    p.set_defaults(func=cmd_modular_equiv)

    p = common(sub.add_parser("modular-exists", help="existence of a similitude with a profile"))
    p.add_argument("--profile", required=True)
    p.add_argument("-m", type=int, default=None)
    p.add_argument("--n", type=positive, default=None)
    p.add_argument("--bound", type=positive, default=None)
    p.add_argument("--witness", action="store_true")
    p.set_defaults(func=cmd_modular_exists)

    p = common(sub.add_parser("class", help="class group of a quadratic order"))
    p.set_defaults(func=cmd_class)

    p = common(sub.add_parser("cosets", help="right cosets in a double coset (quadratic)"))
    p.add_argument("--profile", required=True)
    p.add_argument("-m", type=int, default=None)
    p.add_argument("--n", type=positive, default=None)
    p.set_defaults(func=cmd_cosets)

    p = common(sub.add_parser("validate-order", help="check that the order basis is maximal"))
    p.set_defaults(func=cmd_validate_order)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_YES
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"ordsmith: input error: {exc}\n")
        return EXIT_INPUT
    except AlgebraError as exc:
        sys.stderr.write(f"ordsmith: input error: {exc}\n")
        return EXIT_INPUT


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
