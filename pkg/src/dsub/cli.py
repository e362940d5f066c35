"""Command-line entry point.

Exit codes: 0 for a positive result (typed, subtype holds, exposed,
derivation valid/found, harness clean), 1 for a negative result (untypable,
not a subtype, stuck, invalid derivation, search unknown, violations found,
corpus mismatch), 2 for usage, parse, or I/O errors.  Machine output (types,
JSON, CSV) goes to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath

from . import __version__
from .bounds_shift import ShiftStuck, demote, promote
from .declarative import (
    DeclSearcher,
    SubJ,
    TypJ,
    decl_search,
    decl_verify,
    derivation_from_json,
    derivation_to_json,
)
from .dotty import bench_pn
from .environment import TypeEnv, parse_env
from .errors import DsubError
from .exposure import Stuck, expose
from .lab import check_no_tag_switch, check_wellbehaved, run_minimality_counterexample
from .step import Typed, Untypable, step_subtype, step_type
from .syntax import alpha_eq_type, parse_term, parse_type, print_type


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsub", description=__doc__)
    parser.add_argument("--version", action="version", version=f"dsub {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    def verb(name: str, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--version", action="version", version=f"dsub {__version__}")
        return p

    p = verb("check", help="step-type a term file")
    p.add_argument("file")
    p.add_argument("--env", help="environment file")
    p.add_argument("--emit-trace", metavar="OUT.json", help="write the typing trace as JSON")

    p = verb("sub", help="decide step subtyping between two types")
    p.add_argument("--env", help="environment file")
    p.add_argument("lhs")
    p.add_argument("rhs")

    p = verb("expose", help="expose a type to a non-path supertype")
    p.add_argument("--env", help="environment file")
    p.add_argument("type")

    for name in ("promote", "demote"):
        p = verb(name, help=f"{name} a type away from a variable")
        p.add_argument("--env", help="environment file")
        p.add_argument("--var", required=True, help="variable to erase")
        p.add_argument("type")

    p = verb("decl", help="declarative derivation checker and search")
    decl_sub = p.add_subparsers(dest="decl_verb", required=True)
    pv = decl_sub.add_parser("verify", help="check a derivation JSON file")
    pv.add_argument("file")
    ps = decl_sub.add_parser("search", help="fuel-bounded derivation search")
    ps.add_argument("--env", help="environment file")
    ps.add_argument("--fuel", type=int, required=True)
    group = ps.add_mutually_exclusive_group(required=True)
    group.add_argument("--sub", nargs=2, metavar=("S", "T"), help="subtyping goal")
    group.add_argument("--typ", nargs=2, metavar=("FILE", "T"), help="typing goal: term file and type")

    p = verb("lab", help="metatheory harnesses")
    lab_sub = p.add_subparsers(dest="lab_verb", required=True)
    pc = lab_sub.add_parser("colours", help="well-behavedness falsification suite")
    pc.add_argument("--max-size", type=int, default=4)
    pc.add_argument("--fuel", type=int, default=6)
    pt = lab_sub.add_parser("tags", help="no-tag-switch falsification suite")
    pt.add_argument("--max-size", type=int, default=4)
    pt.add_argument("--fuel", type=int, default=6)
    lab_sub.add_parser("minimality", help="minimal-typing counterexample report")

    p = verb("bench", help="worst-case benchmarks")
    bench_sub = p.add_subparsers(dest="bench_verb", required=True)
    pb = bench_sub.add_parser("pn", help="two-chain exponential family")
    pb.add_argument("--min", type=int, default=1)
    pb.add_argument("--max", type=int, default=16)
    pb.add_argument("--metric", choices=("calls", "nanos"), default="calls")
    pb.add_argument("--out", help="write CSV here instead of stdout")

    p = verb("corpus", help="golden corpus")
    corpus_sub = p.add_subparsers(dest="corpus_verb", required=True)
    pr = corpus_sub.add_parser("run", help="run every corpus case")
    pr.add_argument("--dir", default="corpus", help="corpus directory (default: ./corpus)")

    return parser


def _load_env(path) -> TypeEnv:
    if path is None:
        return TypeEnv.empty()
    return parse_env(FsPath(path).read_text())


def _diag(message: str) -> None:
    print(message, file=sys.stderr)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 0 for --help/--version, 2 on usage
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except (DsubError, OSError, ValueError, json.JSONDecodeError) as exc:
        _diag(f"dsub: error: {exc}")
        return 2


def _dispatch(args) -> int:
    handler = {
        "check": _cmd_check,
        "sub": _cmd_sub,
        "expose": _cmd_expose,
        "promote": _cmd_shift,
        "demote": _cmd_shift,
        "decl": _cmd_decl,
        "lab": _cmd_lab,
        "bench": _cmd_bench,
        "corpus": _cmd_corpus,
    }[args.verb]
    return handler(args)


def _cmd_check(args) -> int:
    env = _load_env(args.env)
    term = parse_term(FsPath(args.file).read_text())
    outcome = step_type(env, term)
    if isinstance(outcome, Untypable):
        _diag(f"untypable: {outcome.describe()}")
        return 1
    if args.emit_trace:
        FsPath(args.emit_trace).write_text(json.dumps(outcome.trace.to_json(), indent=2) + "\n")
    print(print_type(outcome.ty))
    return 0


def _cmd_sub(args) -> int:
    env = _load_env(args.env)
    lhs, rhs = parse_type(args.lhs), parse_type(args.rhs)
    result = step_subtype(env, lhs, rhs)
    if result.holds:
        print("subtype")
        return 0
    if result.diagnostic:
        _diag(result.diagnostic)
    print("not-subtype")
    return 1


def _cmd_expose(args) -> int:
    env = _load_env(args.env)
    result = expose(env, parse_type(args.type))
    if isinstance(result, Stuck):
        print(f"stuck: {print_type(result.blocker)}")
        return 1
    print(print_type(result.ty))
    return 0


def _cmd_shift(args) -> int:
    env = _load_env(args.env)
    op = promote if args.verb == "promote" else demote
    result = op(env, parse_type(args.type), args.var)
    if isinstance(result, ShiftStuck):
        _diag(result.reason)
        return 1
    print(print_type(result.ty))
    return 0


def _cmd_decl(args) -> int:
    if args.decl_verb == "verify":
        data = json.loads(FsPath(args.file).read_text())
        data.pop("expect", None)
        tree = derivation_from_json(data)
        result = decl_verify(tree)
        if result.ok:
            print("valid")
            return 0
        print("invalid")
        _diag(f"{result.path}: {result.message}")
        return 1

    env = _load_env(args.env)
    if args.sub is not None:
        goal = SubJ(env, parse_type(args.sub[0]), parse_type(args.sub[1]))
    else:
        term = parse_term(FsPath(args.typ[0]).read_text())
        goal = TypJ(env, term, parse_type(args.typ[1]))
    tree = decl_search(goal, args.fuel, DeclSearcher())
    if tree is None:
        _diag(f"no derivation found within fuel {args.fuel} (not a refutation)")
        print("unknown")
        return 1
    print(json.dumps(derivation_to_json(tree), indent=2))
    return 0


def _cmd_lab(args) -> int:
    if args.lab_verb == "minimality":
        report = run_minimality_counterexample()
        print(report.render())
        return 0 if report.ok else 1
    harness = check_wellbehaved if args.lab_verb == "colours" else check_no_tag_switch
    report = harness(max_size=args.max_size, fuel=args.fuel)
    print(report.render())
    return 0 if report.ok else 1


def _cmd_bench(args) -> int:
    lines = [f"n,{args.metric}"]
    lines += [f"{n},{value}" for n, value in bench_pn(args.min, args.max, args.metric)]
    text = "\n".join(lines) + "\n"
    if args.out:
        FsPath(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# Corpus runner


def _corpus_headers(text: str) -> dict:
    headers = {}
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped.startswith("//!"):
            break
        key, _, value = stripped[3:].partition(":")
        headers[key.strip()] = value.strip()
    return headers


def _run_dsub_case(path: FsPath) -> tuple:
    text = path.read_text()
    headers = _corpus_headers(text)
    expect = headers.get("expect", "")
    env = parse_env((path.parent / headers["env"]).read_text()) if "env" in headers else TypeEnv.empty()
    outcome = step_type(env, parse_term(text))
    if expect.startswith("typed"):
        wanted = parse_type(expect[len("typed") :].strip())
        if isinstance(outcome, Typed) and alpha_eq_type(outcome.ty, wanted):
            return True, ""
        got = print_type(outcome.ty) if isinstance(outcome, Typed) else outcome.describe()
        return False, f"expected type {print_type(wanted)}, got {got}"
    if expect == "untypable":
        if isinstance(outcome, Untypable):
            return True, ""
        return False, f"expected untypable, got {print_type(outcome.ty)}"
    return False, f"unrecognized expectation {expect!r}"


def _run_sub_case(path: FsPath) -> tuple:
    text = path.read_text()
    headers = _corpus_headers(text)
    expect = headers.get("expect", "")
    env = parse_env((path.parent / headers["env"]).read_text()) if "env" in headers else TypeEnv.empty()
    lines = [
        line.split("//")[0].strip()
        for line in text.splitlines()
        if line.split("//")[0].strip()
    ]
    if len(lines) != 2:
        return False, f"expected exactly two type lines, found {len(lines)}"
    result = step_subtype(env, parse_type(lines[0]), parse_type(lines[1]))
    if expect == "subtype":
        return (True, "") if result.holds else (False, "expected subtype, got not-subtype")
    if expect == "not-subtype":
        return (True, "") if not result.holds else (False, "expected not-subtype, got subtype")
    return False, f"unrecognized expectation {expect!r}"


def _run_json_case(path: FsPath) -> tuple:
    data = json.loads(path.read_text())
    expect = data.pop("expect", "")
    result = decl_verify(derivation_from_json(data))
    if expect == "valid":
        return (True, "") if result.ok else (False, f"expected valid: {result.path}: {result.message}")
    if expect == "invalid":
        return (True, "") if not result.ok else (False, "expected invalid, verified as valid")
    return False, f"unrecognized expectation {expect!r}"


def corpus_run(directory) -> int:
    root = FsPath(directory)
    if not root.is_dir():
        _diag(f"corpus directory {root} does not exist")
        return 2
    runners = {".dsub": _run_dsub_case, ".sub": _run_sub_case, ".json": _run_json_case}
    cases = sorted(p for p in root.iterdir() if p.suffix in runners)
    if not cases:
        _diag(f"corpus directory {root} contains no cases")
        return 2
    failures = 0
    for path in cases:
        try:
            ok, detail = runners[path.suffix](path)
        except (DsubError, ValueError, KeyError, json.JSONDecodeError) as exc:
            ok, detail = False, f"error: {exc}"
        if ok:
            print(f"ok    {path.name}")
        else:
            failures += 1
            print(f"FAIL  {path.name}: {detail}")
    print(f"{len(cases) - failures}/{len(cases)} corpus cases passed")
    return 1 if failures else 0


def _cmd_corpus(args) -> int:
    return corpus_run(args.dir)


if __name__ == "__main__":
    sys.exit(main())
