"""Recursive-descent parser for ``.afs`` programs and session types.

Concrete syntax::

    program  ::= ('type' ID '=' type)* ['interface' '{' entries '}' 'in'] proc
    proc     ::= unary ('|' unary)*
    unary    ::= 'send' ID expr ['.' unary] | 'recv' ID '(' ID ')' ['.' unary]
               | 'sel' ID LABEL ['.' unary] | 'branch' ID '{' LABEL ':' proc, ... '}'
               | 'req' ID expr ['.' unary]  | 'acc' ID '(' ID ')' ['.' unary]
               | 'new' '(' ID ':' type ',' ID ')' unary | 'cancel' ID
               | 'do' unary 'catch' unary   | 'if' expr 'then' unary 'else' unary
               | '0' | '(' proc ')'
    type     ::= 'end' | '!' payload '.' type | '?' payload '.' type
               | '+' '{' LABEL ':' type, ... '}' | '&' '{' ... '}'
               | 'req' payload | 'acc' payload | ID | '(' type ')'
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import ParseError, WellFormednessError
from .syntax import (
    NIL,
    Acc,
    Add,
    Cancel,
    DoCatch,
    If,
    Less,
    Lit,
    New,
    Par,
    Recv,
    Req,
    Sel,
    Send,
    Var,
    barendregt,
    is_prefix,
    make_branch,
)
from .types import (
    GROUND_NAMES,
    Accept,
    Branch,
    End,
    Ground,
    Input,
    Interface,
    Output,
    Request,
    Select,
    sorted_branches,
)

KEYWORDS = {
    "interface", "in", "type", "send", "recv", "sel", "branch", "req", "acc", "new",
    "cancel", "do", "catch", "if", "then", "else", "true", "false", "end",
    "nat", "string", "bool",
}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<id>[A-Za-z][A-Za-z0-9_']*(?:\#[0-9]+)?)
  | (?P<nat>[0-9]+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<op>[(){},:.|!?+&<=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # id | nat | str | op | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    i, line, line_start = 0, 1, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", line, i - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            out.append(Token(kind, chunk, line, i - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = i + chunk.rindex("\n") + 1
        i = m.end()
    out.append(Token("eof", "", line, i - line_start + 1))
    return out


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.aliases: dict = {}

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "id")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def name(self, what: str = "name") -> str:
        tok = self.tok
        if tok.kind != "id" or tok.text in KEYWORDS:
            raise self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok.text

    def label(self) -> str:
        tok = self.tok
        if tok.kind != "id":
            raise self.error(f"expected label, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok.text

    def pos(self) -> tuple:
        return (self.tok.line, self.tok.col)

    def done(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # -- types

    def session_type(self):
        tok = self.tok
        t = self.type_()
        if isinstance(t, Ground):
            raise self.error(f"ground type {t} is not a session type", tok)
        return t

    def type_(self):
        tok = self.tok
        if self.accept("end"):
            return End()
        if tok.text in GROUND_NAMES and tok.kind == "id":
            self.i += 1
            return Ground(tok.text)
        if self.accept("!"):
            payload = self.payload()
            self.expect(".")
            return Output(payload, self.session_type())
        if self.accept("?"):
            payload = self.payload()
            self.expect(".")
            return Input(payload, self.session_type())
        if self.accept("+"):
            return Select(self.type_branches())
        if self.accept("&"):
            return Branch(self.type_branches())
        if self.accept("req"):
            return Request(self.payload())
        if self.accept("acc"):
            return Accept(self.payload())
        if self.accept("("):
            t = self.type_()
            self.expect(")")
            return t
        if tok.kind == "id" and tok.text not in KEYWORDS:
            self.i += 1
            if tok.text not in self.aliases:
                raise self.error(f"unknown type name {tok.text!r}", tok)
            return self.aliases[tok.text]
        raise self.error(f"expected a type, found {tok.text or 'end of input'!r}")

    def payload(self):
        if self.accept("("):
            t = self.type_()
            self.expect(")")
            return t
        return self.type_()

    def type_branches(self) -> tuple:
        self.expect("{")
        pairs = []
        start = self.tok
        while True:
            lbl = self.label()
            self.expect(":")
            pairs.append((lbl, self.session_type()))
            if not self.accept(","):
                break
            if self.at("}"):
                break
        self.expect("}")
        try:
            return sorted_branches(pairs)
        except ValueError as exc:
            raise self.error(str(exc), start) from None

    # -- expressions

    def expr(self):
        left = self.sum_()
        if self.accept("<"):
            return Less(left, self.sum_())
        return left

    def sum_(self):
        left = self.atom()
        while self.accept("+"):
            left = Add(left, self.atom())
        return left

    def atom(self):
        tok = self.tok
        if tok.kind == "nat":
            self.i += 1
            return Lit(int(tok.text))
        if tok.kind == "str":
            self.i += 1
            try:
                return Lit(json.loads(tok.text))
            except json.JSONDecodeError:
                raise self.error("malformed string literal", tok) from None
        if self.accept("true"):
            return Lit(True)
        if self.accept("false"):
            return Lit(False)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        return Var(self.name("expression"))

    # -- processes

    def process(self):
        left = self.unary()
        while self.at("|"):
            pos = self.pos()
            self.i += 1
            left = Par(left, self.unary(), pos=pos)
        return left

    def cont(self):
        if self.accept("."):
            return self.unary()
        return NIL

    def binder(self) -> str:
        if self.accept("("):
            x = self.name("binder")
            self.expect(")")
            return x
        return self.name("binder")

    def unary(self):
        tok = self.tok
        pos = (tok.line, tok.col)
        if tok.kind == "nat" and tok.text == "0":
            self.i += 1
            return NIL
        if self.accept("("):
            p = self.process()
            self.expect(")")
            return p
        if self.accept("send"):
            a = self.name("channel")
            v = self.expr()
            return Send(a, v, self.cont(), pos=pos)
        if self.accept("req"):
            a = self.name("channel")
            v = self.expr()
            return Req(a, v, self.cont(), pos=pos)
        if self.accept("recv"):
            a = self.name("channel")
            x = self.binder()
            return Recv(a, x, self.cont(), pos=pos)
        if self.accept("acc"):
            a = self.name("channel")
            x = self.binder()
            return Acc(a, x, self.cont(), pos=pos)
        if self.accept("sel"):
            a = self.name("channel")
            lbl = self.label()
            return Sel(a, lbl, self.cont(), pos=pos)
        if self.accept("branch"):
            a = self.name("channel")
            self.expect("{")
            pairs = []
            while True:
                lbl = self.label()
                self.expect(":")
                pairs.append((lbl, self.process()))
                if not self.accept(","):
                    break
                if self.at("}"):
                    break
            self.expect("}")
            try:
                return make_branch(a, pairs, pos=pos)
            except ValueError as exc:
                raise ParseError(str(exc), *pos) from None
        if self.accept("new"):
            self.expect("(")
            a = self.name("endpoint")
            self.expect(":")
            t = self.session_type()
            self.expect(",")
            b = self.name("endpoint")
            self.expect(")")
            if a == b:
                raise ParseError(f"restriction endpoints must differ ({a})", *pos)
            return New(a, b, t, self.unary(), pos=pos)
        if self.accept("cancel"):
            return Cancel(self.name("channel"), pos=pos)
        if self.accept("do"):
            atok = self.tok
            action = self.unary()
            if not is_prefix(action):
                raise self.error("the action of do-catch must be a prefix", atok)
            self.expect("catch")
            return DoCatch(action, self.unary(), pos=pos)
        if self.accept("if"):
            e = self.expr()
            self.expect("then")
            t = self.unary()
            self.expect("else")
            return If(e, t, self.unary(), pos=pos)
        raise self.error(f"expected a process, found {tok.text or 'end of input'!r}")

    # -- programs

    def program(self):
        while self.accept("type"):
            tok = self.tok
            alias = self.name("type name")
            self.expect("=")
            if alias in self.aliases:
                raise self.error(f"type {alias} defined twice", tok)
            self.aliases[alias] = self.type_()
        entries = []
        if self.accept("interface"):
            self.expect("{")
            while not self.at("}"):
                tok = self.tok
                n = self.name()
                self.expect(":")
                entries.append((n, self.type_(), tok))
                if not self.accept(","):
                    break
            self.expect("}")
            self.expect("in")
        proc = self.process()
        self.done()
        declared = Interface()
        for n, t, tok in entries:
            try:
                declared = Interface(list(declared.entries) + [(n, t)])
            except WellFormednessError as exc:
                raise self.error(str(exc), tok) from None
        return declared, proc


def parse_program(text: str, *, rename: bool = True):
    """Parse a program into ``(declared interface, process)``."""
    parser = Parser(text)
    declared, proc = parser.program()
    if rename:
        proc = barendregt(proc, declared.names())
    return declared, proc


def parse_process(text: str, *, rename: bool = True):
    return parse_program(text, rename=rename)[1]


def parse_type(text: str, aliases: dict | None = None):
    parser = Parser(text)
    parser.aliases.update(aliases or {})
    t = parser.type_()
    parser.done()
    return t


def parse_entry(text: str, aliases: dict | None = None):
    """Parse ``name : type`` (used by the ``charproc`` command)."""
    parser = Parser(text)
    parser.aliases.update(aliases or {})
    n = parser.name()
    parser.expect(":")
    t = parser.type_()
    parser.done()
    return n, t
