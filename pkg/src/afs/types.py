"""Session types, ground payloads, duality and interfaces."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .errors import WellFormednessError

GROUND_NAMES = ("nat", "string", "bool")


@dataclass(frozen=True)
class Ground:
    name: str  # one of GROUND_NAMES

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class End:
    def __str__(self) -> str:
        return "end"


@dataclass(frozen=True)
class Output:
    payload: "Type"
    cont: "SessionType"

    def __str__(self) -> str:
        return f"!({self.payload}).{self.cont}"


@dataclass(frozen=True)
class Input:
    payload: "Type"
    cont: "SessionType"

    def __str__(self) -> str:
        return f"?({self.payload}).{self.cont}"


def _branches_str(branches) -> str:
    return ", ".join(f"{label}: {t}" for label, t in branches)


@dataclass(frozen=True)
class Select:
    branches: tuple  # ((label, SessionType), ...) sorted by label

    def __str__(self) -> str:
        return "+{" + _branches_str(self.branches) + "}"

    def get(self, label: str):
        return dict(self.branches).get(label)

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _ in self.branches)


@dataclass(frozen=True)
class Branch:
    branches: tuple

    def __str__(self) -> str:
        return "&{" + _branches_str(self.branches) + "}"

    def get(self, label: str):
        return dict(self.branches).get(label)

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _ in self.branches)


@dataclass(frozen=True)
class Request:
    body: "Type"

    def __str__(self) -> str:
        return f"req {self.body}"


@dataclass(frozen=True)
class Accept:
    body: "Type"

    def __str__(self) -> str:
        return f"acc {self.body}"


SessionType = Union[End, Output, Input, Select, Branch, Request, Accept]
Type = Union[SessionType, Ground]

NAT = Ground("nat")
STRING = Ground("string")
BOOL = Ground("bool")


def sorted_branches(pairs: Iterable) -> tuple:
    pairs = tuple(pairs)
    labels = [label for label, _ in pairs]
    if not labels:
        raise ValueError("label sets must be nonempty")
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate label in {labels}")
    return tuple(sorted(pairs, key=lambda kv: kv[0].encode()))


def select(**branches) -> Select:
    return Select(sorted_branches(branches.items()))


def branch(**branches) -> Branch:
    return Branch(sorted_branches(branches.items()))


def is_session(t: Type) -> bool:
    return not isinstance(t, Ground)


def dual(t: SessionType) -> SessionType:
    match t:
        case End():
            return t
        case Output(payload, cont):
            return Input(payload, dual(cont))
        case Input(payload, cont):
            return Output(payload, dual(cont))
        case Select(bs):
            return Branch(tuple((label, dual(u)) for label, u in bs))
        case Branch(bs):
            return Select(tuple((label, dual(u)) for label, u in bs))
        case Request(body):
            return Accept(body)
        case Accept(body):
            return Request(body)
    raise TypeError(f"dual is undefined on {t!r}")


def is_request(t: Type) -> bool:
    return isinstance(t, Request)


def is_weakenable(t: Type) -> bool:
    """True for entries (Weak) may add: requests, end, and ground values."""
    return isinstance(t, (Request, End, Ground))


def is_shareable(t: Type) -> bool:
    """Entries that may occur more than once in a usage."""
    return isinstance(t, (Request, Ground))


def depth(t: Type) -> int:
    match t:
        case End() | Ground():
            return 1
        case Output(p, c) | Input(p, c):
            return 1 + max(depth(p), depth(c))
        case Select(bs) | Branch(bs):
            return 1 + max(depth(u) for _, u in bs)
        case Request(b) | Accept(b):
            return 1 + depth(b)
    raise TypeError(t)


def subterms(t: Type) -> Iterator[Type]:
    yield t
    match t:
        case Output(p, c) | Input(p, c):
            yield from subterms(p)
            yield from subterms(c)
        case Select(bs) | Branch(bs):
            for _, u in bs:
                yield from subterms(u)
        case Request(b) | Accept(b):
            yield from subterms(b)


def parse_type(text: str) -> SessionType:
    from .parser import parse_type as _parse

    return _parse(text)


class Interface:
    """Unordered multiset of ``name: type`` entries.

    Only equal request entries may repeat; every constructor path validates that.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[tuple[str, Type]] = ()):
        acc: list[tuple[str, Type]] = []
        for name, t in entries:
            _check_addable(acc, name, t)
            acc.append((name, t))
        self._entries = tuple(sorted(acc, key=lambda e: (e[0], str(e[1]))))

    @classmethod
    def from_mapping(cls, mapping) -> "Interface":
        return cls(mapping.items())

    @property
    def entries(self) -> tuple:
        return self._entries

    def names(self) -> set[str]:
        return {name for name, _ in self._entries}

    def types_of(self, name: str) -> list[Type]:
        return [t for n, t in self._entries if n == name]

    def lookup(self, name: str):
        ts = self.types_of(name)
        return ts[0] if ts else None

    def as_env(self) -> dict:
        return {name: t for name, t in self._entries}

    def without(self, name: str) -> "Interface":
        return Interface(e for e in self._entries if e[0] != name)

    def contracted(self) -> "Interface":
        """Collapse repeated request entries to one copy each."""
        return Interface(self.as_env().items())

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: str) -> bool:
        return any(n == name for n, _ in self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interface):
            return NotImplemented
        return Counter(self._entries) == Counter(other._entries)

    def __hash__(self) -> int:
        return hash(self._entries)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{n}: {t}" for n, t in self._entries) + "}"

    def __repr__(self) -> str:
        return f"Interface({str(self)})"


def _check_addable(entries, name: str, t: Type) -> None:
    for other_name, other in entries:
        if other_name != name:
            continue
        if other != t:
            raise WellFormednessError(name, f"{name} already has type {other}, cannot add {t}")
        if not is_request(t):
            raise WellFormednessError(name, f"{name}: {t} is linear and occurs twice")


def interface_add(g: Interface, name: str, t: Type) -> Interface:
    return Interface(list(g.entries) + [(name, t)])


def interface_merge(g1: Interface, g2: Interface) -> Interface:
    return Interface(list(g1.entries) + list(g2.entries))
