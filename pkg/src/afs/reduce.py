"""Small-step reduction over canonical forms.

Standard rules (communication, branching, session start) and cancellation
rules are enumerated per restriction, in both orientations. Restriction
annotations follow the sessions they describe: after a communication the
annotation is advanced to the residual type, so every intermediate form can
be re-checked against the same interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .congruence import CanonicalForm, Restriction, normalize
from .errors import EvalError, StaleRedex
from .syntax import (
    Acc,
    Bra,
    Cancel,
    DoCatch,
    If,
    NameSupply,
    New,
    Recv,
    Req,
    Sel,
    Send,
    Var,
    all_names,
    default_literal,
    evaluate,
    expr_names,
    free_names,
    freshen,
    par,
    subst,
)
from .types import Branch, End, Ground, Input, Output, Select

RULES = ("R-Com", "R-Bra", "R-Ses", "C-Acc", "C-Req", "C-Out", "C-Inp", "C-Sel", "C-Bra", "C-Cat", "E-If")
_RANK = {r: i for i, r in enumerate(RULES)}
_CANCEL_RULES = {Send: "C-Out", Recv: "C-Inp", Sel: "C-Sel", Bra: "C-Bra"}


@dataclass(frozen=True)
class Redex:
    rule: str
    restriction: Optional[tuple]  # (endpoint of the first actor, its partner)
    actors: tuple
    label: Optional[str] = None

    def sort_key(self):
        return (_RANK[self.rule], self.actors, self.label or "", self.restriction or ())

    def __str__(self) -> str:
        on = f" on ({self.restriction[0]},{self.restriction[1]})" if self.restriction else ""
        lbl = f" [label {self.label}]" if self.label else ""
        return f"{self.rule}{on}{lbl}"


@dataclass(frozen=True)
class Trace:
    initial: CanonicalForm
    steps: tuple  # ((Redex, CanonicalForm), ...)
    terminal: str  # "normal" | "budget-exhausted"

    @property
    def final(self) -> CanonicalForm:
        return self.steps[-1][1] if self.steps else self.initial

    def rules(self) -> list[str]:
        return [r.rule for r, _ in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


def _head(c):
    """The prefix a component offers, looking through one do-catch."""
    if isinstance(c, DoCatch):
        return c.action, True
    return c, False


def _value(v):
    """Closed expressions are evaluated before they travel."""
    if isinstance(v, Var) or expr_names(v):
        return v
    try:
        return evaluate(v)
    except EvalError:
        return None


def _fits(q, x: str, v) -> bool:
    """Can ``v`` be substituted for ``x`` in ``q`` (values never become channels)?"""
    if isinstance(v, Var):
        return True
    try:
        subst(q, {x: v})
    except EvalError:
        return False
    return True


def advance(t, label: Optional[str] = None):
    match t:
        case Output(_, cont) | Input(_, cont):
            return cont
        case Select() | Branch():
            nxt = t.get(label)
            return t if nxt is None else nxt
    return t


@dataclass(frozen=True)
class Engine:
    """Reduction engine; the two flags exist to build broken variants."""

    cout_cancels_object: bool = True
    creq_keeps_cancel: bool = True
    name: str = field(default="standard", compare=False)

    # ----------------------------------------------------------- enumeration

    def redexes(self, cf: CanonicalForm) -> list[Redex]:
        comps = cf.components
        fns = [free_names(c) for c in comps]
        out: list[Redex] = []
        for r in cf.restrictions:
            for x, y in ((r.a, r.b), (r.b, r.a)):
                xs = [i for i, f in enumerate(fns) if x in f]
                ys = [j for j, f in enumerate(fns) if y in f]
                for i in xs:
                    out.extend(self._pairs(cf, i, x, y, xs, ys))
        for i, c in enumerate(comps):
            if isinstance(c, If) and not expr_names(c.test):
                try:
                    v = evaluate(c.test).value
                except EvalError:
                    continue
                if isinstance(v, bool):
                    out.append(Redex("E-If", None, (i,)))
        out.sort(key=Redex.sort_key)
        return out

    def _pairs(self, cf, i, x, y, xs, ys):
        comps = cf.components
        c = comps[i]
        rho, _ = _head(c)
        pair = (x, y)
        for j in ys:
            d = comps[j]
            sigma, _ = _head(d)
            match rho, sigma:
                case Send(a, v), Recv(b, z, q) if a == x and b == y:
                    v = _value(v)
                    if v is not None and _fits(q, z, v):
                        yield Redex("R-Com", pair, (i, j))
                case Sel(a, label), Bra(b) if a == x and b == y and sigma.get(label) is not None:
                    yield Redex("R-Bra", pair, (i, j), label)
            match rho, d:
                case Req(a, v), Acc(b, z, q) if a == x and b == y:
                    v = _value(v)
                    if v is not None and _fits(q, z, v):
                        yield Redex("R-Ses", pair, (i, j))
            if isinstance(d, Cancel) and d.subject == y:
                match c:
                    case Acc(a) if a == x:
                        yield Redex("C-Acc", pair, (i, j))
                    case Req(a) if a == x:
                        yield Redex("C-Req", pair, (i, j))
                    case DoCatch(action) if action.subject == x:
                        yield Redex("C-Cat", pair, (i, j))
                    case Send(a) | Recv(a) | Sel(a) | Bra(a) if a == x:
                        if set(xs) | set(ys) == {i, j}:
                            yield Redex(_CANCEL_RULES[type(c)], pair, (i, j))

    # ----------------------------------------------------------- contraction

    def apply(self, cf: CanonicalForm, rx: Redex, *, verify: bool = True) -> CanonicalForm:
        if verify and rx not in self.redexes(cf):
            raise StaleRedex(f"{rx} is not a redex of {cf}")
        comps = list(cf.components)
        rs = list(cf.restrictions)
        supply = NameSupply(set().union(*(all_names(c) for c in comps), cf.restricted()))
        if rx.rule == "E-If":
            (i,) = rx.actors
            c = comps[i]
            comps[i] = c.then if evaluate(c.test).value else c.orelse
            return normalize(_rebuild(rs, comps))
        x, y = rx.restriction
        r = cf.restriction_of(x)
        tx = r.type_of(x)
        i, j = rx.actors
        c, d = comps[i], comps[j]
        rho, _ = _head(c)
        keep: list = []
        extra: list = []
        new_tx = tx
        match rx.rule:
            case "R-Com":
                sigma, _ = _head(d)
                keep = [rho.cont, subst(sigma.cont, {sigma.binder: _value(rho.obj)})]
                new_tx = advance(tx)
            case "R-Bra":
                sigma, _ = _head(d)
                keep = [rho.cont, sigma.get(rx.label)]
                new_tx = advance(tx, rx.label)
            case "R-Ses":
                body = freshen(d.body, supply)
                keep = [rho.cont, subst(body, {d.binder: _value(rho.obj)}), d]
            case "C-Acc":
                keep = [c]
            case "C-Req":
                keep = [c.cont] + ([d] if self.creq_keeps_cancel else [])
                keep += _cancel_object(c.obj, getattr(tx, "body", None))
            case "C-Out":
                keep = [c.cont, d]
                if self.cout_cancels_object:
                    keep += _cancel_object(c.obj, getattr(tx, "payload", None))
                new_tx = advance(tx)
            case "C-Inp":
                payload = tx.payload if isinstance(tx, Input) else End()
                if isinstance(payload, Ground):
                    keep = [subst(c.cont, {c.binder: default_literal(payload)}), d]
                else:
                    z, w = supply.fresh_suffixed(c.binder), supply.fresh_suffixed(c.binder)
                    extra = [Restriction(z, w, payload)]
                    keep = [subst(c.cont, {c.binder: Var(z)}), d, Cancel(w)]
                new_tx = advance(tx)
            case "C-Sel":
                keep = [c.cont, d]
                new_tx = advance(tx, c.label)
            case "C-Bra":
                top = max(c.labels, key=str.encode)
                keep = [c.get(top), d]
                new_tx = advance(tx, top)
            case "C-Cat":
                keep = [c.handler, d]
            case _:
                raise StaleRedex(rx.rule)
        rest = [comps[k] for k in range(len(comps)) if k not in (i, j)]
        nr = Restriction(x, y, new_tx)
        rs = [nr if s is r else s for s in rs]
        return normalize(_rebuild(rs + extra, rest + keep))

    # ----------------------------------------------------------- strategies

    def step(self, cf: CanonicalForm, strategy: Union[str, int] = "deterministic"):
        rxs = self.redexes(cf)
        if not rxs:
            return None
        if strategy == "deterministic":
            rx = rxs[0]
        else:
            rx = rxs[int(strategy) % len(rxs)]
        return rx, self.apply(cf, rx, verify=False)

    def run(self, cf: CanonicalForm, max_steps: int = 1000) -> Trace:
        if max_steps < 0:
            raise ValueError("max_steps must be non-negative")
        steps = []
        cur = cf
        for _ in range(max_steps):
            nxt = self.step(cur)
            if nxt is None:
                return Trace(cf, tuple(steps), "normal")
            steps.append(nxt)
            cur = nxt[1]
        terminal = "normal" if not self.redexes(cur) else "budget-exhausted"
        return Trace(cf, tuple(steps), terminal)


def _cancel_object(v, payload) -> list:
    if isinstance(v, Var) and not isinstance(payload, Ground):
        return [Cancel(v.name)]
    return []


def _rebuild(rs, comps):
    body = par(*comps)
    for r in reversed(rs):
        body = New(r.a, r.b, r.type, body)
    return body


STANDARD = Engine()
BROKEN_COUT = Engine(cout_cancels_object=False, name="C-Out without cancel of the object")
BROKEN_CREQ = Engine(creq_keeps_cancel=False, name="C-Req dropping the cancel")


def enumerate_redexes(cf: CanonicalForm) -> list[Redex]:
    return STANDARD.redexes(cf)


def apply_redex(cf: CanonicalForm, rx: Redex) -> CanonicalForm:
    return STANDARD.apply(cf, rx)


def step(cf: CanonicalForm, strategy: Union[str, int] = "deterministic"):
    return STANDARD.step(cf, strategy)


def run(cf: CanonicalForm, max_steps: int = 1000) -> Trace:
    return STANDARD.run(cf, max_steps)
