"""Command-line interface.

Exit codes: 0 success, 1 usage/parse errors, 2 verification failure,
3 resource bound exceeded.  Diagnostics go to stderr; machine-readable
output to stdout or to files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .amalgamation import AmalgamInstance, exists_embedding, forb_e_member, free_amalgam, minimal_forbidden
from .base_extension import base_eppa
from .chains import build_dlf_chain
from .errors import BoundExceededError, EppaError, StructureSyntaxError, VerificationError
from .faithful import clique_faithful_extension, enumerate_cliques, forb_e_eppa
from .textio import (emit_certificate, emit_structure, parse_certificate,
                     parse_structure, verify_certificate)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VERIFICATION = 2
EXIT_RESOURCE = 3


def _load_structure(path: str):
    return parse_structure(Path(path).read_text(encoding="utf-8"))


def _load_forbidden(arg: str | None):
    if not arg:
        return []
    return [_load_structure(part) for part in arg.split(",") if part]


def _cmd_extend(args) -> int:
    base = _load_structure(args.input)
    forbidden = _load_forbidden(args.forbid)
    cap = args.size_cap
    if args.mode == "base":
        if forbidden:
            print("--forbid requires --mode faithful", file=sys.stderr)
            return EXIT_ERROR
        cert = base_eppa(base)
    elif forbidden:
        cert = forb_e_eppa(base, forbidden, size_cap=cap)
    else:
        cert = clique_faithful_extension(base, size_cap=cap)
    text = emit_certificate(cert)
    verdict = verify_certificate(parse_certificate(text))
    if not verdict:
        print(f"verification failed: {verdict.message()}", file=sys.stderr)
        return EXIT_VERIFICATION
    Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def _cmd_verify(args) -> int:
    text = Path(args.certificate).read_text(encoding="utf-8")
    cert = parse_certificate(text)
    verdict = verify_certificate(cert, word_bound=args.word_bound)
    if verdict:
        print("ok")
        return EXIT_OK
    print(f"fail {verdict.condition}")
    print(verdict.message(), file=sys.stderr)
    return EXIT_VERIFICATION


def _cmd_cliques(args) -> int:
    structure = _load_structure(args.input)
    for clique in enumerate_cliques(structure, args.max):
        print(",".join(str(x) for x in clique))
    return EXIT_OK


def _cmd_amalgam(args) -> int:
    left = _load_structure(args.left)
    right = _load_structure(args.right)
    shared = _load_structure(args.over)
    into_left = exists_embedding(shared, left)
    into_right = exists_embedding(shared, right)
    if into_left is None or into_right is None:
        print("shared structure does not embed into both sides", file=sys.stderr)
        return EXIT_ERROR
    instance = AmalgamInstance(shared=shared, left=left, right=right,
                               into_left=into_left, into_right=into_right)
    glued, _, _ = free_amalgam(instance)
    text = emit_structure(glued, "amalgam")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_dlf(args) -> int:
    seed = _load_structure(args.seed)
    forbidden = _load_forbidden(args.forbid)
    cert = build_dlf_chain(forbidden, args.stages, seed)
    text = emit_certificate(cert)
    verdict = verify_certificate(parse_certificate(text))
    if not verdict:
        print(f"verification failed: {verdict.message()}", file=sys.stderr)
        return EXIT_VERIFICATION
    Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def _cmd_minforb(args) -> int:
    forbidden = _load_forbidden(args.forbid)
    if not forbidden:
        print("--class-forbid requires at least one structure", file=sys.stderr)
        return EXIT_ERROR
    signature = forbidden[0].signature
    for q in forbidden:
        if q.signature != signature:
            print("forbidden structures must share a signature", file=sys.stderr)
            return EXIT_ERROR
    found = minimal_forbidden(lambda s: forb_e_member(s, forbidden),
                              args.max, signature)
    for i, structure in enumerate(found):
        sys.stdout.write(emit_structure(structure, f"minforb{i}"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eppa",
        description="Coherent extensions of partial automorphisms of finite "
                    "relational structures, with verifiable certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extend", help="build and verify an extension certificate")
    p.add_argument("--in", dest="input", required=True, help="input structure file")
    p.add_argument("--mode", choices=["base", "faithful"], default="base")
    p.add_argument("--forbid", help="comma-separated forbidden structure files")
    p.add_argument("--size-cap", type=int, default=None)
    p.add_argument("--out", required=True, help="certificate output path")
    p.set_defaults(func=_cmd_extend)

    p = sub.add_parser("verify", help="re-run all verifiers on a certificate file")
    p.add_argument("certificate")
    p.add_argument("--word-bound", type=int, default=6)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("cliques", help="list Gaifman cliques of a structure")
    p.add_argument("input")
    p.add_argument("--max", type=int, default=None)
    p.set_defaults(func=_cmd_cliques)

    p = sub.add_parser("amalgam", help="free amalgam of two structures over a shared one")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--over", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_amalgam)

    p = sub.add_parser("dlf", help="build a dense-locally-finite chain certificate")
    p.add_argument("--class", dest="forbid", help="comma-separated forbidden structures")
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--seed", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dlf)

    p = sub.add_parser("minforb", help="minimal forbidden structures of a class")
    p.add_argument("--class-forbid", dest="forbid", required=True)
    p.add_argument("--max", type=int, required=True)
    p.set_defaults(func=_cmd_minforb)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BoundExceededError as exc:
        print(f"resource bound: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except (StructureSyntaxError, EppaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
