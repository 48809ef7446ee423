"""Workbench for an affine session pi-calculus: parsing, typing, reduction and fuzzing."""

from .analysis import barbs, characteristic, is_inactive, progress_check
from .congruence import CanonicalForm, Restriction, canonicalize, congruent, embed, normalize
from .errors import AfsError, EvalError, ParseError, ProgressViolation, StaleRedex, WellFormednessError
from .harness import GenConfig, run_suite
from .parser import parse_process, parse_program, parse_type
from .reduce import BROKEN_COUT, BROKEN_CREQ, STANDARD, Engine, Redex, Trace, enumerate_redexes, run, step
from .syntax import pretty, pretty_program
from .typecheck import ErrorKind, TypeCheckError, check
from .types import Interface, dual

__all__ = [
    "AfsError", "BROKEN_COUT", "BROKEN_CREQ", "CanonicalForm", "Engine", "ErrorKind", "EvalError",
    "GenConfig", "Interface", "ParseError", "ProgressViolation", "Redex", "Restriction", "STANDARD",
    "StaleRedex", "Trace", "TypeCheckError", "WellFormednessError", "barbs", "canonicalize",
    "characteristic", "check", "congruent", "dual", "embed", "enumerate_redexes", "is_inactive",
    "normalize", "parse_process", "parse_program", "parse_type", "pretty", "pretty_program",
    "progress_check", "run", "run_suite", "step",
]
