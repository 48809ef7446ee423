"""Process terms: abstract syntax, binding structure and substitution.

Names are plain strings. Binders are the input and accept objects and both
endpoints of a restriction. Parsed terms obey the variable convention (all
binders pairwise distinct and distinct from the free names); ``barendregt``
establishes it and ``freshen`` re-establishes it for copies.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Optional, Union

from .errors import EvalError
from .types import BOOL, NAT, STRING, Ground, SessionType, sorted_branches

# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Lit:
    value: Union[int, str, bool]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Less:
    left: "Expr"
    right: "Expr"


Expr = Union[Lit, Var, Add, Less]


def lit_type(value) -> Ground:
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, int):
        return NAT
    return STRING


def default_literal(g: Ground) -> Lit:
    return {"nat": Lit(0), "string": Lit(""), "bool": Lit(False)}[g.name]


def expr_names(e: Expr) -> set[str]:
    match e:
        case Var(n):
            return {n}
        case Add(l, r) | Less(l, r):
            return expr_names(l) | expr_names(r)
    return set()


def evaluate(e: Expr) -> Lit:
    match e:
        case Lit():
            return e
        case Var(n):
            raise EvalError(f"unbound variable {n}")
        case Add(l, r):
            a, b = evaluate(l).value, evaluate(r).value
            if not (_is_nat(a) and _is_nat(b)):
                raise EvalError(f"cannot add {a!r} and {b!r}")
            return Lit(a + b)
        case Less(l, r):
            a, b = evaluate(l).value, evaluate(r).value
            if not (_is_nat(a) and _is_nat(b)):
                raise EvalError(f"cannot compare {a!r} and {b!r}")
            return Lit(a < b)
    raise EvalError(f"not an expression: {e!r}")


def _is_nat(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def subst_expr(e: Expr, mapping: dict) -> Expr:
    match e:
        case Var(n):
            return mapping.get(n, e)
        case Add(l, r):
            return Add(subst_expr(l, mapping), subst_expr(r, mapping))
        case Less(l, r):
            return Less(subst_expr(l, mapping), subst_expr(r, mapping))
    return e


# ------------------------------------------------------------------ processes

_POS = dict(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Send:
    subject: str
    obj: Expr
    cont: "Process"
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class Recv:
    subject: str
    binder: str
    cont: "Process"
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class Bra:
    subject: str
    branches: tuple  # ((label, Process), ...) sorted by label
    pos: Optional[tuple] = field(**_POS)

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _ in self.branches)

    def get(self, label: str):
        return dict(self.branches).get(label)


@dataclass(frozen=True)
class Sel:
    subject: str
    label: str
    cont: "Process"
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class Req:
    subject: str
    obj: Expr
    cont: "Process"
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class Acc:
    subject: str
    binder: str
    body: "Process"
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class Nil:
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class New:
    a: str
    b: str
    type: SessionType  # type of endpoint a; b has the dual
    body: "Process"
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class Cancel:
    subject: str
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class DoCatch:
    action: "Prefix"
    handler: "Process"
    pos: Optional[tuple] = field(**_POS)


@dataclass(frozen=True)
class If:
    test: Expr
    then: "Process"
    orelse: "Process"
    pos: Optional[tuple] = field(**_POS)


Prefix = Union[Send, Recv, Bra, Sel, Req]
Process = Union[Send, Recv, Bra, Sel, Req, Acc, Nil, Par, New, Cancel, DoCatch, If]
PREFIXES = (Send, Recv, Bra, Sel, Req)

NIL = Nil()


def _cache_hash(cls):
    # terms are immutable trees that are hashed over and over by the caches
    # below; remember the structural hash on the instance
    structural = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = structural(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__
    return cls


for _cls in (Send, Recv, Bra, Sel, Req, Acc, Nil, Par, New, Cancel, DoCatch, If):
    _cache_hash(_cls)


def make_branch(subject: str, pairs: Iterable, pos=None) -> Bra:
    return Bra(subject, sorted_branches(pairs), pos=pos)


def par(*procs: Process) -> Process:
    """Left-nested parallel composition; ``par()`` is nil."""
    procs = [p for p in procs]
    if not procs:
        return NIL
    out = procs[0]
    for p in procs[1:]:
        out = Par(out, p)
    return out


def par_components(p: Process) -> list[Process]:
    if isinstance(p, Par):
        return par_components(p.left) + par_components(p.right)
    return [p]


def subject(rho: Prefix) -> str:
    return rho.subject


def is_prefix(p) -> bool:
    return isinstance(p, PREFIXES)


# ---------------------------------------------------------------- name sets


def free_names(p: Process) -> set[str]:
    return set(_free(p))


@lru_cache(maxsize=1 << 17)
def _free(p: Process) -> frozenset:
    match p:
        case Send(a, v, k) | Req(a, v, k):
            return frozenset({a}) | expr_names(v) | _free(k)
        case Recv(a, x, k) | Acc(a, x, k):
            return frozenset({a}) | (_free(k) - {x})
        case Bra(a, bs):
            return frozenset({a}).union(*(_free(q) for _, q in bs))
        case Sel(a, _, k):
            return frozenset({a}) | _free(k)
        case Nil():
            return frozenset()
        case Par(l, r):
            return _free(l) | _free(r)
        case New(a, b, _, body):
            return _free(body) - {a, b}
        case Cancel(a):
            return frozenset({a})
        case DoCatch(rho, h):
            return _free(rho) | _free(h)
        case If(e, t, f):
            return frozenset(expr_names(e)) | _free(t) | _free(f)
    raise TypeError(f"not a process: {p!r}")


def binders(p: Process) -> Iterator[str]:
    """Every binding occurrence, in traversal order (with repetitions)."""
    match p:
        case Recv(_, x, k) | Acc(_, x, k):
            yield x
            yield from binders(k)
        case New(a, b, _, body):
            yield a
            yield b
            yield from binders(body)
        case _:
            for q in children(p):
                yield from binders(q)


def all_names(p: Process) -> set[str]:
    return set(_all(p))


@lru_cache(maxsize=1 << 16)
def _all(p: Process) -> frozenset:
    return _free(p) | frozenset(binders(p))


def children(p: Process) -> list[Process]:
    match p:
        case Send(_, _, k) | Recv(_, _, k) | Sel(_, _, k) | Req(_, _, k) | Acc(_, _, k):
            return [k]
        case Bra(_, bs):
            return [q for _, q in bs]
        case Par(l, r):
            return [l, r]
        case New(_, _, _, body):
            return [body]
        case DoCatch(rho, h):
            return [rho, h]
        case If(_, t, f):
            return [t, f]
    return []


def size(p: Process) -> int:
    return 1 + sum(size(q) for q in children(p))


_SUFFIX = re.compile(r"#\d+$")


def base_name(name: str) -> str:
    return _SUFFIX.sub("", name)


class NameSupply:
    """Deterministic supply of names avoiding a growing set."""

    def __init__(self, avoid: Iterable[str] = ()):
        self.used = set(avoid)

    def fresh(self, hint: str) -> str:
        base = base_name(hint)
        if base not in self.used:
            self.used.add(base)
            return base
        for i in itertools.count(1):
            cand = f"{base}#{i}"
            if cand not in self.used:
                self.used.add(cand)
                return cand
        raise AssertionError("unreachable")

    def fresh_suffixed(self, hint: str) -> str:
        """Like ``fresh`` but always carries a ``#n`` suffix."""
        base = base_name(hint)
        for i in itertools.count(1):
            cand = f"{base}#{i}"
            if cand not in self.used:
                self.used.add(cand)
                return cand
        raise AssertionError("unreachable")

    def reserve(self, names: Iterable[str]) -> None:
        self.used.update(names)


# --------------------------------------------------------------- substitution


def _sub_name(n: str, mapping: dict) -> str:
    v = mapping.get(n)
    if v is None:
        return n
    if not isinstance(v, Var):
        raise EvalError(f"cannot substitute the value {v!r} for channel {n}")
    return v.name


def _bind(x: str, mapping: dict, avoid: set, supply: NameSupply):
    """Enter the scope of binder x: drop x from the mapping, rename on capture."""
    mapping = {k: v for k, v in mapping.items() if k != x}
    if not mapping:
        return x, mapping
    incoming = set()
    for v in mapping.values():
        incoming |= expr_names(v)
    if x in incoming:
        y = supply.fresh(x)
        mapping[x] = Var(y)
        return y, mapping
    return x, mapping


def subst(p: Process, mapping: dict, supply: Optional[NameSupply] = None) -> Process:
    """Simultaneous capture-avoiding substitution of expressions for names."""
    if not mapping:
        return p
    if supply is None:
        avoid = all_names(p)
        for v in mapping.values():
            avoid |= expr_names(v)
        supply = NameSupply(avoid)
    return _subst(p, mapping, supply)


def _subst(p: Process, m: dict, s: NameSupply) -> Process:
    if not m:
        return p
    match p:
        case Send(a, v, k):
            return replace(p, subject=_sub_name(a, m), obj=subst_expr(v, m), cont=_subst(k, m, s))
        case Req(a, v, k):
            return replace(p, subject=_sub_name(a, m), obj=subst_expr(v, m), cont=_subst(k, m, s))
        case Recv(a, x, k):
            y, m2 = _bind(x, m, set(), s)
            return replace(p, subject=_sub_name(a, m), binder=y, cont=_subst(k, m2, s))
        case Acc(a, x, k):
            y, m2 = _bind(x, m, set(), s)
            return replace(p, subject=_sub_name(a, m), binder=y, body=_subst(k, m2, s))
        case Bra(a, bs):
            return replace(p, subject=_sub_name(a, m), branches=tuple((l, _subst(q, m, s)) for l, q in bs))
        case Sel(a, l, k):
            return replace(p, subject=_sub_name(a, m), cont=_subst(k, m, s))
        case Nil():
            return p
        case Par(l, r):
            return replace(p, left=_subst(l, m, s), right=_subst(r, m, s))
        case New(a, b, t, body):
            a2, m2 = _bind(a, m, set(), s)
            b2, m3 = _bind(b, m2, set(), s)
            return replace(p, a=a2, b=b2, body=_subst(body, m3, s))
        case Cancel(a):
            return replace(p, subject=_sub_name(a, m))
        case DoCatch(rho, h):
            return replace(p, action=_subst(rho, m, s), handler=_subst(h, m, s))
        case If(e, t, f):
            return replace(p, test=subst_expr(e, m), then=_subst(t, m, s), orelse=_subst(f, m, s))
    raise TypeError(f"not a process: {p!r}")


def substitute(p: Process, x: str, b: Union[str, Expr]) -> Process:
    """``p{b/x}``: replace the free occurrences of ``x`` by ``b``."""
    value = Var(b) if isinstance(b, str) else b
    return subst(p, {x: value})


def rename_binders(p: Process, choose: Callable[[str], str]) -> Process:
    """Rename every binder via ``choose`` (applied once per binding occurrence)."""
    return _rename(p, {}, choose)


def _rename(p: Process, m: dict, choose) -> Process:
    def n(a):
        return m.get(a, a)

    def e(v):
        return subst_expr(v, {k: Var(w) for k, w in m.items()}) if m else v

    match p:
        case Send(a, v, k):
            return replace(p, subject=n(a), obj=e(v), cont=_rename(k, m, choose))
        case Req(a, v, k):
            return replace(p, subject=n(a), obj=e(v), cont=_rename(k, m, choose))
        case Recv(a, x, k):
            y = choose(x)
            return replace(p, subject=n(a), binder=y, cont=_rename(k, {**m, x: y}, choose))
        case Acc(a, x, k):
            y = choose(x)
            return replace(p, subject=n(a), binder=y, body=_rename(k, {**m, x: y}, choose))
        case Bra(a, bs):
            return replace(p, subject=n(a), branches=tuple((l, _rename(q, m, choose)) for l, q in bs))
        case Sel(a, l, k):
            return replace(p, subject=n(a), cont=_rename(k, m, choose))
        case Nil():
            return p
        case Par(l, r):
            return replace(p, left=_rename(l, m, choose), right=_rename(r, m, choose))
        case New(a, b, t, body):
            a2, b2 = choose(a), choose(b)
            return replace(p, a=a2, b=b2, body=_rename(body, {**m, a: a2, b: b2}, choose))
        case Cancel(a):
            return replace(p, subject=n(a))
        case DoCatch(rho, h):
            return replace(p, action=_rename(rho, m, choose), handler=_rename(h, m, choose))
        case If(v, t, f):
            return replace(p, test=e(v), then=_rename(t, m, choose), orelse=_rename(f, m, choose))
    raise TypeError(f"not a process: {p!r}")


def barendregt(p: Process, extra_free: Iterable[str] = ()) -> Process:
    """Rename clashing binders (suffix ``#n``) so all binders are distinct."""
    seen = free_names(p) | set(extra_free)
    supply = NameSupply(all_names(p) | seen)

    def choose(x):
        if x in seen:
            y = supply.fresh_suffixed(x)
            seen.add(y)
            return y
        seen.add(x)
        return x

    return rename_binders(p, choose)


def freshen(p: Process, supply: NameSupply) -> Process:
    """Copy of ``p`` whose binders are all fresh with respect to ``supply``."""
    return rename_binders(p, supply.fresh_suffixed)


# ---------------------------------------------------------- alpha equivalence


def alpha_eq(p: Process, q: Process) -> bool:
    return _aeq(p, q, {}, {})


def _neq(a: str, b: str, m: dict, mi: dict) -> bool:
    if a in m or b in mi:
        return m.get(a) == b and mi.get(b) == a
    return a == b


def _eeq(e1: Expr, e2: Expr, m: dict, mi: dict) -> bool:
    match e1, e2:
        case Var(a), Var(b):
            return _neq(a, b, m, mi)
        case Lit(v), Lit(w):
            return type(v) is type(w) and v == w
        case (Add(l1, r1), Add(l2, r2)) | (Less(l1, r1), Less(l2, r2)):
            return _eeq(l1, l2, m, mi) and _eeq(r1, r2, m, mi)
    return False


def _aeq(p: Process, q: Process, m: dict, mi: dict) -> bool:
    if type(p) is not type(q):
        return False
    match p:
        case Send(a, v, k) | Req(a, v, k):
            return _neq(a, q.subject, m, mi) and _eeq(v, q.obj, m, mi) and _aeq(k, q.cont, m, mi)
        case Recv(a, x, k):
            return _neq(a, q.subject, m, mi) and _aeq(k, q.cont, {**m, x: q.binder}, {**mi, q.binder: x})
        case Acc(a, x, k):
            return _neq(a, q.subject, m, mi) and _aeq(k, q.body, {**m, x: q.binder}, {**mi, q.binder: x})
        case Bra(a, bs):
            if not _neq(a, q.subject, m, mi) or p.labels != q.labels:
                return False
            return all(_aeq(k1, k2, m, mi) for (_, k1), (_, k2) in zip(bs, q.branches))
        case Sel(a, l, k):
            return _neq(a, q.subject, m, mi) and l == q.label and _aeq(k, q.cont, m, mi)
        case Nil():
            return True
        case Par(l, r):
            return _aeq(l, q.left, m, mi) and _aeq(r, q.right, m, mi)
        case New(a, b, t, body):
            if t != q.type:
                return False
            m2 = {**m, a: q.a, b: q.b}
            mi2 = {**mi, q.a: a, q.b: b}
            return _aeq(body, q.body, m2, mi2)
        case Cancel(a):
            return _neq(a, q.subject, m, mi)
        case DoCatch(rho, h):
            return _aeq(rho, q.action, m, mi) and _aeq(h, q.handler, m, mi)
        case If(e, t, f):
            return _eeq(e, q.test, m, mi) and _aeq(t, q.then, m, mi) and _aeq(f, q.orelse, m, mi)
    return False


# ------------------------------------------------------------ pretty printing


def pretty_expr(e: Expr, prec: int = 0) -> str:
    match e:
        case Lit(v):
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, int):
                return str(v)
            return json.dumps(v, ensure_ascii=False)
        case Var(n):
            return n
        case Add(l, r):
            s = f"{pretty_expr(l, 1)} + {pretty_expr(r, 2)}"
            return f"({s})" if prec > 1 else s
        case Less(l, r):
            s = f"{pretty_expr(l, 1)} < {pretty_expr(r, 1)}"
            return f"({s})" if prec > 0 else s
    raise TypeError(e)


def _obj(e: Expr) -> str:
    if isinstance(e, (Lit, Var)):
        return pretty_expr(e)
    return f"({pretty_expr(e)})"


@lru_cache(maxsize=1 << 16)
def pretty(p: Process) -> str:
    """Surface syntax; ``parse_process(pretty(p))`` is alpha-equivalent to ``p``."""
    return _pp(p, top=True)


def _unary(p: Process) -> str:
    s = _pp(p, top=False)
    return f"({s})" if isinstance(p, Par) else s


def _pp(p: Process, top: bool) -> str:
    match p:
        case Send(a, v, k):
            return f"send {a} {_obj(v)}. {_unary(k)}"
        case Req(a, v, k):
            return f"req {a} ({pretty_expr(v)}). {_unary(k)}"
        case Recv(a, x, k):
            return f"recv {a} ({x}). {_unary(k)}"
        case Acc(a, x, k):
            return f"acc {a} ({x}). {_unary(k)}"
        case Bra(a, bs):
            inner = ", ".join(f"{l}: {_pp(q, True)}" for l, q in bs)
            return f"branch {a} {{ {inner} }}"
        case Sel(a, l, k):
            return f"sel {a} {l}. {_unary(k)}"
        case Nil():
            return "0"
        case Par(l, r):
            return f"{_pp(l, True)} | {_unary(r)}"
        case New(a, b, t, body):
            return f"new ({a}: {t}, {b}) {_unary(body)}"
        case Cancel(a):
            return f"cancel {a}"
        case DoCatch(rho, h):
            return f"do {_pp(rho, False)} catch {_unary(h)}"
        case If(e, t, f):
            return f"if {pretty_expr(e)} then {_unary(t)} else {_unary(f)}"
    raise TypeError(f"not a process: {p!r}")


def pretty_program(declared, p: Process) -> str:
    entries = ", ".join(f"{n}: {t}" for n, t in declared)
    return f"interface {{{entries}}} in\n{pretty(p)}"


def free_occurrences(p: Process, bound: frozenset = frozenset()) -> Iterator[str]:
    """Free name occurrences in a fixed left-to-right traversal order."""
    match p:
        case Send(a, v, k) | Req(a, v, k):
            if a not in bound:
                yield a
            yield from _expr_occurrences(v, bound)
            yield from free_occurrences(k, bound)
        case Recv(a, x, k) | Acc(a, x, k):
            if a not in bound:
                yield a
            yield from free_occurrences(k, bound | {x})
        case Bra(a, bs):
            if a not in bound:
                yield a
            for _, q in bs:
                yield from free_occurrences(q, bound)
        case Sel(a, _, k):
            if a not in bound:
                yield a
            yield from free_occurrences(k, bound)
        case New(a, b, _, body):
            yield from free_occurrences(body, bound | {a, b})
        case Cancel(a):
            if a not in bound:
                yield a
        case If(e, t, f):
            yield from _expr_occurrences(e, bound)
            yield from free_occurrences(t, bound)
            yield from free_occurrences(f, bound)
        case _:
            for q in children(p):
                yield from free_occurrences(q, bound)


@lru_cache(maxsize=1 << 16)
def occurrences(p: Process) -> tuple:
    """``free_occurrences(p)`` as a tuple."""
    return tuple(free_occurrences(p))


def _expr_occurrences(e: Expr, bound) -> Iterator[str]:
    match e:
        case Var(n):
            if n not in bound:
                yield n
        case Add(l, r) | Less(l, r):
            yield from _expr_occurrences(l, bound)
            yield from _expr_occurrences(r, bound)
