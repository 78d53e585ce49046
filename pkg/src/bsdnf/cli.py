"""Command-line front end: decompose, residual, rigidity, compare, dims, selftest."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bsd import ModelDims, Submanifold
from .exactalg import GR
from .errors import BsdError, ConditionError, ParseError, ResidualError, TruncationError
from .fischer import decompose_high, decompose_low, kernel_basis
from .mapeq import FormalMap, compare_embeddings, residual, rigidity_check
from .polyring import Polynomial, VarSpace

EXIT_OK, EXIT_CONDITION, EXIT_INPUT, EXIT_NEGATIVE = 0, 1, 2, 3
DEFAULT_MAX_DEGREE = 6


def _max_degree() -> int:
    raw = os.environ.get("BSDNF_MAX_DEGREE", str(DEFAULT_MAX_DEGREE))
    try:
        return int(raw)
    except ValueError:
        raise ParseError(f"BSDNF_MAX_DEGREE must be an integer, got {raw!r}")


def _check_degree(D: int):
    cap = _max_degree()
    if D < 1:
        raise TruncationError("degree must be at least 1")
    if D > cap:
        raise TruncationError(f"degree {D} exceeds BSDNF_MAX_DEGREE={cap}")


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}")


def _load(path: str, loader, what: str):
    doc = _load_json(path)
    try:
        return loader(doc)
    except BsdError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"{path} is not a valid {what} document: {exc}")


def _load_manifold(path: str | None, dims: ModelDims) -> Submanifold | None:
    if path is None or path == "model":
        return None
    sub = _load(path, Submanifold.from_json, "submanifold")
    if (sub.dims.m, sub.dims.N) != (dims.m, dims.N):
        raise ParseError(f"{path} has dimensions {sub.dims}, expected {dims}")
    return sub


def _emit(doc, as_json: bool, text: str):
    print(json.dumps(doc, indent=2) if as_json else text)


def _cert_text(cert) -> str:
    lines = [f"verdict: {cert.verdict}"]
    for e in cert.per_degree:
        extra = " ".join(f"{k}={v}" for k, v in e.items() if k != "d" and not isinstance(v, (list, dict)))
        lines.append(f"  d={e['d']}: {extra}")
        for item in e.get("witness_direction", []):
            coef = GR.parse(item["re"], item["im"])
            lines.append(f"    witness direction: {item['block']}{tuple(item['entry'])} += ({coef}) {item['monomial']}")
    for note in cert.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


# verbs


def cmd_decompose(args) -> int:
    doc = _load_json(args.poly)
    space = VarSpace(args.m, args.N)
    try:
        P = Polynomial.from_json(doc, space)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{args.poly} is not a valid polynomial document: {exc}")
    p, n = args.bidegree
    if args.variant == "high":
        dec = decompose_high(P, p, n)
    elif args.variant.startswith("low:"):
        try:
            j = int(args.variant[4:])
        except ValueError:
            raise ParseError(f"bad variant {args.variant!r}")
        dec = decompose_low(P, p, n, j)
    else:
        raise ParseError(f"variant must be 'high' or 'low:j', got {args.variant!r}")
    defects = dec.annihilation_defects()
    verified = dec.reconstruct() == P and not defects
    out = dec.to_json()
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
    report = {"reconstructs": dec.reconstruct() == P, "kernel_membership": not defects,
              "multipliers": len(dec.forms), "output": args.out}
    if args.json:
        if not args.out:
            report["decomposition"] = out
        print(json.dumps(report, indent=2))
    else:
        if not args.out:
            print(json.dumps(out, indent=2))
        print(f"reconstruction: {'ok' if report['reconstructs'] else 'FAILED'}")
        print(f"kernel membership ({len(dec.forms)} multipliers): {'ok' if not defects else 'FAILED'}")
    return EXIT_OK if verified else EXIT_NEGATIVE


def cmd_residual(args) -> int:
    H = _load(args.map, FormalMap.from_json, "formal map")
    source = _load_manifold(args.source, H.src)
    target = _load_manifold(args.target, H.dst)
    k, l = args.bidegree
    R = residual(H, source, target, k, l)
    if args.json:
        print(json.dumps({"bidegree": [k, l], "residual": R.to_json(), "zero": R.is_zero()}, indent=2))
    else:
        for (a, b), e in R:
            print(f"[{a},{b}] {e}")
    return EXIT_OK


def cmd_rigidity(args) -> int:
    _check_degree(args.degree)
    src = ModelDims(args.m, args.N)
    dst = ModelDims(args.mp, args.Np)
    cert = rigidity_check(src, dst, args.degree, exploratory=args.exploratory)
    _emit(cert.to_json(), args.json, _cert_text(cert))
    return EXIT_OK if cert.ok else EXIT_NEGATIVE


def cmd_compare(args) -> int:
    _check_degree(args.degree)
    H1 = _load(args.map1, FormalMap.from_json, "formal map")
    H2 = _load(args.map2, FormalMap.from_json, "formal map")
    source = _load_manifold(args.source, H1.src)
    target = _load_manifold(args.target, H1.dst)
    try:
        cert = compare_embeddings(H1, H2, args.degree, source, target)
    except ResidualError as exc:
        doc = {"verdict": "NOT EQUIVALENT", "per_degree": [], "autos": {}, "reason": str(exc)}
        _emit(doc, args.json, f"verdict: NOT EQUIVALENT\nreason: {exc}")
        return EXIT_NEGATIVE
    _emit(cert.to_json(), args.json, _cert_text(cert))
    return EXIT_OK if cert.ok else EXIT_NEGATIVE


def cmd_dims(args) -> int:
    space = VarSpace(args.m, args.N)
    B = args.max_bidegree
    rows = []
    for p in range(B + 1):
        for n in range(B + 1):
            if p >= n:
                variant = "high"
            elif min(args.m, args.N) >= 1 and p >= 1:
                variant = "low:1"
            else:
                variant = None
            dim = len(kernel_basis(space, p, n, variant=variant)) if variant else None
            rows.append({"p": p, "n": n, "variant": variant, "kernel_dim": dim})
    if args.json:
        print(json.dumps({"m": args.m, "N": args.N, "max_bidegree": B, "table": rows}, indent=2))
    else:
        print(f"kernel dimensions, m={args.m} N={args.N}")
        print("   p\\n " + " ".join(f"{n:>6}" for n in range(B + 1)))
        for p in range(B + 1):
            cells = []
            for n in range(B + 1):
                r = rows[p * (B + 1) + n]
                cells.append(f"{'-' if r['kernel_dim'] is None else r['kernel_dim']:>6}")
            print(f"{p:>6} " + " ".join(cells))
    return EXIT_OK


def cmd_selftest(args) -> int:
    root = Path(__file__).resolve().parents[2]
    suite = root / "tests" / "test_acceptance.py"
    if not suite.exists():
        raise ParseError(f"acceptance suite not found at {suite}")
    import pytest

    return EXIT_OK if pytest.main(["-q", "-s", str(suite)]) == 0 else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bsdnf", description="Fischer decompositions and normal forms of BSD-model embeddings.")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = common(sub.add_parser("decompose", help="Fischer decomposition of a bihomogeneous polynomial"))
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--bidegree", type=int, nargs=2, metavar=("P", "N"), required=True)
    p.add_argument("--variant", default="high", help="high or low:j")
    p.add_argument("--poly", required=True, help="polynomial JSON file")
    p.add_argument("--out", help="write the decomposition JSON here")
    p.set_defaults(func=cmd_decompose)

    p = common(sub.add_parser("residual", help="bidegree block of the mapping-equation residual"))
    p.add_argument("--map", required=True)
    p.add_argument("--source", default="model", help="submanifold JSON file or 'model'")
    p.add_argument("--target", default="model", help="submanifold JSON file or 'model'")
    p.add_argument("--bidegree", type=int, nargs=2, metavar=("K", "L"), required=True)
    p.set_defaults(func=cmd_residual)

    p = common(sub.add_parser("rigidity", help="rigidity certificate through degree D"))
    for name in ("--m", "--N", "--mp", "--Np"):
        p.add_argument(name, type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--exploratory", action="store_true", help="run even when the embedding condition fails")
    p.set_defaults(func=cmd_rigidity)

    p = common(sub.add_parser("compare", help="decide equivalence of two embeddings through degree D"))
    p.add_argument("--map1", required=True)
    p.add_argument("--map2", required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--source", default="model")
    p.add_argument("--target", default="model")
    p.set_defaults(func=cmd_compare)

    p = common(sub.add_parser("dims", help="table of Fischer kernel dimensions"))
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--max-bidegree", type=int, required=True)
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.set_defaults(func=cmd_selftest)
    return ap


def _fail(code: str, message: str, status: int) -> int:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail("usage", "invalid command line", EXIT_INPUT)
    try:
        return args.func(args)
    except ConditionError as exc:
        return _fail(exc.code, str(exc), EXIT_CONDITION)
    except BsdError as exc:
        return _fail(exc.code, str(exc), EXIT_INPUT)
    except (IndexError, ValueError) as exc:
        return _fail("input", str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
