"""Algorithmic affine session typing.

Checking is bottom-up: each process yields the exact usage (name to type at
the point of entry) it consumes. Prefixes thread the subject's type through
the continuation; parallel compositions and restrictions are normalized first
and split into a cut tree, which realizes typing modulo structural
congruence together with the derived Mix rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .congruence import CanonicalForm, normalize
from .errors import AfsError
from .syntax import (
    Acc,
    Add,
    Bra,
    Cancel,
    DoCatch,
    If,
    Less,
    Lit,
    New,
    Nil,
    Par,
    Recv,
    Req,
    Sel,
    Send,
    Var,
    free_names,
    lit_type,
)
from .types import (
    BOOL,
    NAT,
    Accept,
    Branch,
    Ground,
    Input,
    Interface,
    Output,
    Request,
    Select,
    dual,
    is_session,
    is_shareable,
    is_weakenable,
)


class ErrorKind(str, Enum):
    UnusedLinear = "UnusedLinear"
    IllFormedContext = "IllFormedContext"
    DualityMismatch = "DualityMismatch"
    SubjectMismatch = "SubjectMismatch"
    CatchInterfaceMismatch = "CatchInterfaceMismatch"
    SessionCycle = "SessionCycle"
    MissingAccept = "MissingAccept"
    PayloadMismatch = "PayloadMismatch"
    UnknownName = "UnknownName"
    BranchLabelMismatch = "BranchLabelMismatch"

    def __str__(self) -> str:
        return self.value


class TypeCheckError(AfsError):
    def __init__(self, kind: ErrorKind, detail: str, location=None, name: str | None = None):
        self.kind = kind
        self.detail = detail
        self.location = location
        self.name = name
        where = f"{location[0]}:{location[1]}: " if location else ""
        super().__init__(f"{where}{kind}: {detail}")


@dataclass(frozen=True)
class Usage:
    """The exact entries a process consumes, before weakening."""

    consumed: Interface

    def __str__(self) -> str:
        return str(self.consumed)


def is_linear(t) -> bool:
    return not is_weakenable(t)


def _fail(kind, detail, node=None, name=None):
    raise TypeCheckError(kind, detail, getattr(node, "pos", None), name)


# ------------------------------------------------------------------ entry points


def check(declared: Interface, p) -> Usage:
    """Check ``p`` against ``declared``; unused entries must be weakenable."""
    env = declared.as_env()
    for n in sorted(free_names(p)):
        if n not in env:
            _fail(ErrorKind.UnknownName, f"{n} is free but not declared", None, n)
    used = _check(p, env)
    for n, t in declared:
        if n not in used and is_linear(t):
            kind = ErrorKind.MissingAccept if isinstance(t, Accept) else ErrorKind.UnusedLinear
            _fail(kind, f"{n}: {t} is neither used nor cancelled", p, n)
    return Usage(Interface(used.items()))


def infer_usage(p, env: dict) -> dict:
    """Usage of ``p`` under the name typing ``env`` (no weakening check)."""
    return _check(p, dict(env))


def check_prefix_chain(known: Interface, p) -> Usage:
    """Check a single component against the types of ``known``."""
    if isinstance(p, (Par, New, Nil)):
        raise ValueError("check_prefix_chain expects a single component")
    return Usage(Interface(_component(p, known.as_env()).items()))


def check_form(declared: Interface, cf: CanonicalForm) -> Usage:
    from .congruence import embed

    return check(declared, embed(cf))


# ------------------------------------------------------------------ helpers


def _lookup(env: dict, n: str, node):
    t = env.get(n)
    if t is None:
        _fail(ErrorKind.UnknownName, f"{n} is not in scope", node, n)
    return t


def _merge(u1: dict, u2: dict, node) -> dict:
    out = dict(u1)
    for n, t in u2.items():
        if n in out:
            if out[n] != t:
                _fail(ErrorKind.IllFormedContext, f"{n} used at {out[n]} and at {t}", node, n)
            if not is_shareable(t):
                _fail(ErrorKind.IllFormedContext, f"linear name {n}: {t} is used twice", node, n)
        out[n] = t
    return out


def _expr_type(e, env: dict, node) -> tuple[Ground, dict]:
    match e:
        case Lit(v):
            return lit_type(v), {}
        case Var(n):
            t = _lookup(env, n, node)
            if not isinstance(t, Ground):
                _fail(ErrorKind.PayloadMismatch, f"{n}: {t} used as a ground value", node, n)
            return t, {n: t}
        case Add(l, r) | Less(l, r):
            tl, ul = _expr_type(l, env, node)
            tr, ur = _expr_type(r, env, node)
            if tl != NAT or tr != NAT:
                _fail(ErrorKind.PayloadMismatch, f"arithmetic on {tl} and {tr}", node)
            return (NAT if isinstance(e, Add) else BOOL), {**ul, **ur}
    raise TypeError(e)


def _object(v, payload, env: dict, node) -> dict:
    """Usage of a sent object, which must have the payload type."""
    if isinstance(v, Var) and not isinstance(env.get(v.name), Ground):
        t = _lookup(env, v.name, node)
        if t != payload:
            kind = ErrorKind.DualityMismatch if is_session(t) and dual(t) == payload else ErrorKind.PayloadMismatch
            _fail(kind, f"sent {v.name}: {t} where {payload} is expected", node, v.name)
        return {v.name: t}
    t, used = _expr_type(v, env, node)
    if t != payload:
        _fail(ErrorKind.PayloadMismatch, f"sent a {t} value where {payload} is expected", node)
    return used


def _close(used: dict, n: str, t, node, kind=ErrorKind.UnusedLinear) -> dict:
    """Leave the scope of ``n`` (at residual type ``t``)."""
    if n not in used and is_linear(t):
        _fail(kind, f"{n}: {t} is neither used nor cancelled", node, n)
    return {k: v for k, v in used.items() if k != n}


def _linear_part(used: dict) -> dict:
    return {n: t for n, t in used.items() if is_linear(t)}


def _agree(usages: list[dict], node, what: str) -> dict:
    first = _linear_part(usages[0])
    for u in usages[1:]:
        other = _linear_part(u)
        if other != first:
            diff = sorted(set(first.items()) ^ set(other.items()), key=str)
            n = diff[0][0]
            _fail(ErrorKind.UnusedLinear, f"{what} disagree on linear name {n}", node, n)
    out: dict = {}
    for u in usages:
        for n, t in u.items():
            if n in out and out[n] != t:
                _fail(ErrorKind.IllFormedContext, f"{n} used at {out[n]} and at {t}", node, n)
            out[n] = t
    return out


# ------------------------------------------------------------------ processes


def _check(p, env: dict) -> dict:
    if isinstance(p, (Par, New, Nil)):
        return _check_cf(normalize(p), env)
    return _component(p, env)


def _component(p, env: dict) -> dict:
    match p:
        case Send(a, v, k):
            t = _lookup(env, a, p)
            if not isinstance(t, Output):
                _fail(ErrorKind.SubjectMismatch, f"send on {a}: {t}", p, a)
            used = _close(_check(k, {**env, a: t.cont}), a, t.cont, p)
            used = _merge(used, _object(v, t.payload, env, p), p)
            return _merge(used, {a: t}, p)
        case Recv(a, x, k):
            t = _lookup(env, a, p)
            if not isinstance(t, Input):
                _fail(ErrorKind.SubjectMismatch, f"recv on {a}: {t}", p, a)
            inner = _check(k, {**env, a: t.cont, x: t.payload})
            inner = _close(inner, x, t.payload, p)
            inner = _close(inner, a, t.cont, p)
            return _merge(inner, {a: t}, p)
        case Sel(a, label, k):
            t = _lookup(env, a, p)
            if not isinstance(t, Select):
                _fail(ErrorKind.SubjectMismatch, f"sel on {a}: {t}", p, a)
            cont = t.get(label)
            if cont is None:
                _fail(ErrorKind.BranchLabelMismatch, f"label {label} not offered by {t}", p, a)
            used = _close(_check(k, {**env, a: cont}), a, cont, p)
            return _merge(used, {a: t}, p)
        case Bra(a, bs):
            t = _lookup(env, a, p)
            if not isinstance(t, Branch):
                _fail(ErrorKind.SubjectMismatch, f"branch on {a}: {t}", p, a)
            if set(p.labels) != set(t.labels):
                _fail(ErrorKind.BranchLabelMismatch, f"branches {list(p.labels)} against {t}", p, a)
            usages = []
            for label, q in bs:
                cont = t.get(label)
                usages.append(_close(_check(q, {**env, a: cont}), a, cont, q))
            return _merge(_agree(usages, p, "branches"), {a: t}, p)
        case Req(a, v, k):
            t = _lookup(env, a, p)
            if not isinstance(t, Request):
                _fail(ErrorKind.SubjectMismatch, f"req on {a}: {t}", p, a)
            used = _check(k, env)
            used = _merge(used, _object(v, t.body, env, p), p)
            return _merge(used, {a: t}, p)
        case Acc(a, x, k):
            t = _lookup(env, a, p)
            if not isinstance(t, Accept):
                _fail(ErrorKind.SubjectMismatch, f"acc on {a}: {t}", p, a)
            inner = _close(_check(k, {**env, x: t.body}), x, t.body, p)
            for n, u in sorted(inner.items()):
                if not is_shareable(u):
                    _fail(ErrorKind.IllFormedContext, f"replicated body uses {n}: {u}, which is not a request", p, n)
            return _merge(inner, {a: t}, p)
        case Cancel(a):
            t = _lookup(env, a, p)
            if isinstance(t, Ground):
                _fail(ErrorKind.SubjectMismatch, f"cancel of the value {a}: {t}", p, a)
            return {a: t}
        case DoCatch(rho, h):
            a = rho.subject
            t = _lookup(env, a, p)
            action = _component(rho, env)
            handler = _check(h, env)
            rest = {n: u for n, u in action.items() if n != a}
            if a in handler and not (isinstance(t, Request) and handler[a] == t):
                _fail(ErrorKind.CatchInterfaceMismatch, f"handler uses the guarded name {a}", h, a)
            handler_rest = {n: u for n, u in handler.items() if n != a}
            if _linear_part(handler_rest) != _linear_part(rest):
                mine, theirs = _linear_part(handler_rest), _linear_part(rest)
                n = sorted(set(mine) ^ set(theirs))[0]
                _fail(ErrorKind.CatchInterfaceMismatch, f"handler and action disagree on {n}", p, n)
            out = dict(action)
            for n, u in handler_rest.items():
                if out.setdefault(n, u) != u:
                    _fail(ErrorKind.IllFormedContext, f"{n} used at {out[n]} and at {u}", p, n)
            return out
        case If(e, t1, t2):
            ty, used = _expr_type(e, env, p)
            if ty != BOOL:
                _fail(ErrorKind.PayloadMismatch, f"condition has type {ty}", p)
            arms = _agree([_check(t1, env), _check(t2, env)], p, "conditional arms")
            return _merge(arms, used, p)
    raise TypeError(f"not a component: {p!r}")


# ------------------------------------------------------------------ restrictions


@dataclass(frozen=True)
class Cut:
    """One application of composition under restriction."""

    restriction: tuple  # (a, b)
    left: object  # Cut | frozenset of component indices
    right: object


def _check_cf(cf: CanonicalForm, env: dict) -> dict:
    inner = dict(env)
    for r in cf.restrictions:
        inner[r.a] = r.type
        inner[r.b] = r.type_of(r.b)
    used: dict = {}
    usages = []
    for c in cf.components:
        u = _component(c, inner)
        usages.append(u)
        used = _merge(used, u, c)
    split_restriction(cf, usages)
    for r in cf.restrictions:
        for n in (r.a, r.b):
            t = inner[n]
            if n not in used and is_linear(t):
                kind = ErrorKind.MissingAccept if isinstance(t, Accept) else ErrorKind.UnusedLinear
                where = cf.components[0] if cf.components else None
                _fail(kind, f"restricted {n}: {t} is neither used nor cancelled", where, n)
        used = {k: v for k, v in used.items() if k not in (r.a, r.b)}
    return used


def split_restriction(cf: CanonicalForm, usages: list[dict] | None = None):
    """Decompose the form into a tree of cuts, outermost first.

    A restriction can be applied last when, ignoring it, no chain of other
    restrictions links a user of one endpoint to a user of the other. Every
    remaining restriction must then fit entirely on one side.
    """
    if usages is None:
        usages = [free_names(c) for c in cf.components]
    names = [set(u) for u in usages]
    return _split(frozenset(range(len(names))), list(cf.restrictions), names, cf)


def _users(r, group, names):
    return ({i for i in group if r.a in names[i]}, {i for i in group if r.b in names[i]})


def _connected(group, restrictions, names) -> dict:
    parent = {i: i for i in group}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for r in restrictions:
        us = sorted(i for i in group if r.a in names[i] or r.b in names[i])
        for i in us[1:]:
            parent[find(i)] = find(us[0])
    return {i: find(i) for i in group}


def _split(group, restrictions, names, cf):
    if not restrictions:
        return group
    blocked = None
    for r in restrictions:
        ua, ub = _users(r, group, names)
        if ua & ub:
            blocked = r
            continue
        others = [s for s in restrictions if s is not r]
        comp = _connected(group, others, names)
        side_a = {comp[i] for i in ua}
        if side_a & {comp[i] for i in ub}:
            blocked = r
            continue
        left = frozenset(i for i in group if comp[i] in side_a)
        right = group - left
        lrs = [s for s in others if any(s.a in names[i] or s.b in names[i] for i in left)]
        rrs = [s for s in others if s not in lrs]
        return Cut((r.a, r.b), _split(left, lrs, names, cf), _split(right, rrs, names, cf))
    node = next((cf.components[i] for i in sorted(group)), None)
    _fail(
        ErrorKind.SessionCycle,
        f"restriction ({blocked.a}, {blocked.b}) closes a cycle of sessions",
        node,
        blocked.a,
    )
