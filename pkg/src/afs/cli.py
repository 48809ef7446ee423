"""Command-line interface: ``afs check|run|norm|dual|charproc|progress|fuzz``.

Exit codes: 0 success, 1 parse or type error, 2 budget exhausted or stuck,
3 property failure, 4 internal defect.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, TextIO

from .analysis import barbs, characteristic, is_inactive, least_label, progress_check
from .congruence import normalize
from .errors import AfsError, ParseError, ProgressViolation, WellFormednessError
from .harness import GenConfig, run_suite
from .parser import parse_entry, parse_program, parse_type
from .reduce import run
from .syntax import pretty
from .types import dual
from .typecheck import TypeCheckError, check

OK, USER_ERROR, STUCK, PROPERTY_FAILURE, DEFECT = 0, 1, 2, 3, 4


class _Diag:
    """Diagnostics sink honouring AFS_COLOR=auto|always|never."""

    def __init__(self, err: TextIO):
        self.err = err
        mode = os.environ.get("AFS_COLOR", "auto").lower()
        if mode == "always":
            self.color = True
        elif mode == "never":
            self.color = False
        else:
            self.color = hasattr(err, "isatty") and err.isatty()

    def __call__(self, tag: str, msg: str) -> None:
        if self.color:
            tag = f"\x1b[1;31m{tag}\x1b[0m"
        print(f"{tag}: {msg}", file=self.err)


def _load(path: str):
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="afs", description="Workbench for an affine session pi-calculus.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="type-check a program")
    p.add_argument("path")

    p = sub.add_parser("run", help="reduce a program to normal form")
    p.add_argument("path")
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--trace", action="store_true", help="print the form after every step")
    p.add_argument("--unchecked", action="store_true", help="run even if the program is untypable")

    p = sub.add_parser("norm", help="print the canonical form")
    p.add_argument("path")

    p = sub.add_parser("dual", help="print the dual of a session type")
    p.add_argument("type")

    p = sub.add_parser("charproc", help="print a characteristic process for 'name : TYPE'")
    p.add_argument("entry")
    p.add_argument("--choose", default="", help="comma-separated label preferences for selections")

    p = sub.add_parser("progress", help="run to normal form and witness progress")
    p.add_argument("path")
    p.add_argument("--max-steps", type=int, default=1000)

    p = sub.add_parser("fuzz", help="run the property suite")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--cases", type=int, default=1000)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--labels", type=int, default=3)
    p.add_argument("--mutation-rate", type=float, default=0.3)
    p.add_argument("--summary", metavar="PATH", help="write a JSON summary here")
    return ap


def execute(argv: list[str], out: TextIO, err: TextIO) -> int:
    diag = _Diag(err)
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return USER_ERROR if exc.code else OK
    try:
        return _dispatch(args, out, diag)
    except ParseError as exc:
        diag("parse error", str(exc))
        return USER_ERROR
    except TypeCheckError as exc:
        loc = f"{exc.location[0]}:{exc.location[1]}" if exc.location else "-"
        name = f" [{exc.name}]" if exc.name else ""
        diag("type error", f"{exc.kind} at {loc}{name}: {exc.detail}")
        return USER_ERROR
    except WellFormednessError as exc:
        diag("type error", f"IllFormedContext: {exc}")
        return USER_ERROR
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        diag("error", str(exc))
        return USER_ERROR
    except ProgressViolation as exc:
        diag("defect", f"progress violated: {exc}")
        return DEFECT
    except AfsError as exc:
        diag("defect", str(exc))
        return DEFECT
    except Exception as exc:  # never let user input crash the tool
        diag("defect", f"{type(exc).__name__}: {exc}")
        return DEFECT


def _dispatch(args, out: TextIO, diag: _Diag) -> int:
    match args.command:
        case "check":
            declared, p = _load(args.path)
            usage = check(declared, p)
            print(f"ok: {args.path} uses {usage}", file=out)
            return OK
        case "run":
            return _run(args, out, diag)
        case "norm":
            _, p = _load(args.path)
            print(normalize(p), file=out)
            return OK
        case "dual":
            print(dual(parse_type(args.type)), file=out)
            return OK
        case "charproc":
            name, t = parse_entry(args.entry)
            prefs = [c.strip() for c in args.choose.split(",") if c.strip()]

            def choose(labels):
                return next((c for c in prefs if c in labels), least_label(labels))

            print(pretty(characteristic(name, t, choose)), file=out)
            return OK
        case "progress":
            declared, p = _load(args.path)
            report = progress_check(declared, p, args.max_steps)
            for line in report.lines():
                print(line, file=out)
            return STUCK if report.status == "budget-exhausted" else OK
        case "fuzz":
            cfg = GenConfig(
                seed=args.seed,
                cases=args.cases,
                max_type_depth=args.depth,
                max_labels=args.labels,
                mutation_rate=args.mutation_rate,
            )
            report = run_suite(cfg)
            out.write(report.text())
            if args.summary:
                with open(args.summary, "w", encoding="utf-8") as fh:
                    fh.write(report.summary_json() + "\n")
            return OK if report.ok else PROPERTY_FAILURE
    raise AssertionError(args.command)


def _run(args, out: TextIO, diag: _Diag) -> int:
    declared, p = _load(args.path)
    if not args.unchecked:
        check(declared, p)
    if args.max_steps < 0:
        raise ValueError("--max-steps must be non-negative")
    cf = normalize(p)
    if args.trace:
        print(f"initial: {cf}", file=out)
    trace = run(cf, args.max_steps)
    for k, (rx, form) in enumerate(trace.steps, 1):
        print(f"step {k}: {rx}", file=out)
        if args.trace:
            print(f"  {form}", file=out)
    final = trace.final
    if trace.terminal == "budget-exhausted":
        print(f"budget exhausted after {len(trace)} steps: {final}", file=out)
        return STUCK
    if not is_inactive(final) and not (barbs(final) & declared.names()):
        print(f"stuck after {len(trace)} steps: {final}", file=out)
        return STUCK
    print(f"normal form after {len(trace)} steps: {final}", file=out)
    return OK


def main(argv: Optional[list[str]] = None) -> int:
    return execute(sys.argv[1:] if argv is None else argv, sys.stdout, sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
