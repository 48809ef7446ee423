"""Barbs, inactivity, characteristic processes and the progress check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .congruence import CanonicalForm, embed, normalize
from .errors import ProgressViolation
from .reduce import STANDARD, Engine, Trace
from .syntax import (
    NIL,
    Acc,
    Cancel,
    DoCatch,
    If,
    NameSupply,
    New,
    Par,
    Recv,
    Req,
    Send,
    Var,
    default_literal,
    expr_names,
    is_prefix,
    make_branch,
    pretty,
)
from .syntax import Sel as SelP
from .types import (
    Accept,
    Branch,
    End,
    Ground,
    Input,
    Interface,
    Output,
    Request,
    Select,
    dual,
)
from .typecheck import check

Chooser = Callable[[tuple], str]


def least_label(labels: tuple) -> str:
    return min(labels, key=str.encode)


def atomic_subject(c) -> Optional[str]:
    """Subject of a component that is an atomic action, else None."""
    if is_prefix(c) or isinstance(c, (Acc, Cancel)):
        return c.subject
    if isinstance(c, DoCatch):
        return c.action.subject
    return None


def barbs(cf: CanonicalForm) -> set[str]:
    bound = cf.restricted()
    out = set()
    for c in cf.components:
        a = atomic_subject(c)
        if a is not None and a not in bound:
            out.add(a)
    return out


def is_inactive(cf: CanonicalForm) -> bool:
    bound = cf.restricted()
    return all(isinstance(c, Acc) and c.subject in bound for c in cf.components)


# ------------------------------------------------------------------ characteristic


def characteristic(a: str, t, chooser: Chooser = least_label, supply: NameSupply | None = None):
    """A member of the characteristic set of ``a: t``; ``chooser`` resolves selections."""
    supply = supply or NameSupply({a})
    supply.reserve({a})
    return _char(a, t, chooser, supply)


def _char(a, t, choose, supply):
    match t:
        case End():
            return NIL
        case Output(Ground() as g, cont):
            return Send(a, default_literal(g), _char(a, cont, choose, supply))
        case Output(payload, cont):
            b, b2 = supply.fresh("b"), supply.fresh("b'")
            p = _char(a, cont, choose, supply)
            q = _char(b, dual(payload), choose, supply)
            return New(b, b2, dual(payload), Par(Send(a, Var(b2), p), q))
        case Input(payload, cont):
            x = supply.fresh("x")
            p = _char(a, cont, choose, supply)
            if isinstance(payload, Ground):
                return Recv(a, x, p)
            return Recv(a, x, Par(p, _char(x, payload, choose, supply)))
        case Select(bs):
            label = choose(tuple(lbl for lbl, _ in bs))
            return SelP(a, label, _char(a, t.get(label), choose, supply))
        case Branch(bs):
            return make_branch(a, [(lbl, _char(a, u, choose, supply)) for lbl, u in bs])
        case Request(Ground() as g):
            return Req(a, default_literal(g), NIL)
        case Request(body):
            b, b2 = supply.fresh("b"), supply.fresh("b'")
            return New(b, b2, dual(body), Par(Req(a, Var(b2), NIL), _char(b, dual(body), choose, supply)))
        case Accept(body):
            x = supply.fresh("x")
            if isinstance(body, Ground):
                return Acc(a, x, NIL)
            return Acc(a, x, _char(x, body, choose, supply))
    raise TypeError(f"no characteristic process for {t!r}")


# ------------------------------------------------------------------ progress


@dataclass(frozen=True)
class Witness:
    name: str
    partner: str
    type: object
    process: object  # the composition
    redex: object


@dataclass(frozen=True)
class ProgressReport:
    classification: str  # "inactive" | "active"
    barbed: frozenset
    witness: Optional[Witness]
    trace: Trace
    status: str  # "inactive" | "witnessed" | "blocked_on_ground" | "end_cancels" | "budget-exhausted"

    def lines(self) -> list[str]:
        out = [
            f"steps: {len(self.trace)} ({self.trace.terminal})",
            f"normal form: {self.trace.final}",
            f"classification: {self.classification}",
            f"barbs: {{{', '.join(sorted(self.barbed))}}}",
            f"status: {self.status}",
        ]
        if self.witness is not None:
            w = self.witness
            out.append(f"witness: compose on ({w.name}, {w.partner}) at {w.type}")
            out.append(f"composition: {pretty(w.process)}")
            out.append(f"fires: {w.redex}")
        return out


def progress_check(declared: Interface, p, max_steps: int = 1000, engine: Engine = STANDARD) -> ProgressReport:
    check(declared, p)
    trace = engine.run(normalize(p), max_steps)
    nf = trace.final
    bs = frozenset(barbs(nf))
    if trace.terminal != "normal":
        return ProgressReport("active", bs, None, trace, "budget-exhausted")
    if is_inactive(nf):
        return ProgressReport("inactive", bs, None, trace, "inactive")
    env = declared.as_env()
    candidates = [a for a in sorted(bs) if a in env and not isinstance(env[a], (End, Ground))]
    if not candidates:
        if any(isinstance(c, If) and expr_names(c.test) for c in nf.components):
            return ProgressReport("active", bs, None, trace, "blocked_on_ground")
        if bs and all(isinstance(env.get(a), End) for a in bs):
            return ProgressReport("active", bs, None, trace, "end_cancels")
        raise ProgressViolation(f"active normal form without a usable barb: {nf}")
    a = candidates[0]
    t = env[a]
    supply = NameSupply(nf.free_names() | nf.restricted() | set(env))
    partner = supply.fresh(a + "'")
    q = characteristic(partner, dual(t), least_label, supply)
    composed = New(a, partner, t, Par(embed(nf), q))
    check(declared.without(a), composed)
    rxs = engine.redexes(normalize(composed))
    if not rxs:
        raise ProgressViolation(f"composition on {a} has no redex: {pretty(composed)}")
    return ProgressReport("active", bs, Witness(a, partner, t, composed, rxs[0]), trace, "witnessed")
