"""Structural congruence decided through canonical forms.

A canonical form hoists every top-level restriction, drops nil, merges
duplicate cancels, collects cancelled sessions and names the restricted
endpoints deterministically. Nothing is rearranged under a prefix.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache

from .syntax import (
    NIL,
    Cancel,
    NameSupply,
    New,
    Nil,
    Par,
    Var,
    all_names,
    free_names,
    occurrences,
    par,
    pretty,
    rename_binders,
    subst,
)
from .types import SessionType, dual


@dataclass(frozen=True)
class Restriction:
    a: str
    b: str
    type: SessionType  # type of a; b has the dual

    def endpoints(self) -> tuple[str, str]:
        return (self.a, self.b)

    def type_of(self, name: str) -> SessionType:
        if name == self.a:
            return self.type
        if name == self.b:
            return dual(self.type)
        raise KeyError(name)

    def partner(self, name: str) -> str:
        return self.b if name == self.a else self.a

    def __str__(self) -> str:
        return f"({self.a}: {self.type}, {self.b})"


@dataclass(frozen=True)
class CanonicalForm:
    restrictions: tuple
    components: tuple

    def restricted(self) -> set[str]:
        return {n for r in self.restrictions for n in (r.a, r.b)}

    def restriction_of(self, name: str):
        for r in self.restrictions:
            if name in (r.a, r.b):
                return r
        return None

    def free_names(self) -> set[str]:
        out = set()
        for c in self.components:
            out |= free_names(c)
        return out - self.restricted()

    def users(self, name: str) -> list[int]:
        return [i for i, c in enumerate(self.components) if name in free_names(c)]

    def is_empty(self) -> bool:
        return not self.components and not self.restrictions

    def __str__(self) -> str:
        return pretty(embed(self))


EMPTY = CanonicalForm((), ())


def embed(cf: CanonicalForm):
    """Rebuild a process: nested restrictions over the parallel components."""
    body = par(*cf.components)
    for r in reversed(cf.restrictions):
        body = New(r.a, r.b, r.type, body)
    return body


# ------------------------------------------------------------------ normalize


def normalize(p) -> CanonicalForm:
    free = free_names(p)
    supply = NameSupply(all_names(p))
    taken = set(free)
    restrictions: list[Restriction] = []
    components: list = []

    def flatten(q):
        match q:
            case Nil():
                return
            case Par(l, r):
                flatten(l)
                flatten(r)
            case New(a, b, t, body):
                ren = {}
                a2, b2 = a, b
                if a in taken:
                    a2 = supply.fresh_suffixed(a)
                    ren[a] = Var(a2)
                if b in taken:
                    b2 = supply.fresh_suffixed(b)
                    ren[b] = Var(b2)
                taken.update((a2, b2))
                if ren:
                    body = subst(body, ren)
                restrictions.append(Restriction(a2, b2, t))
                flatten(body)
            case _:
                components.append(q)

    flatten(p)
    return canonicalize(restrictions, components)


def canonicalize(restrictions, components) -> CanonicalForm:
    """Merge cancels, collect garbage, then order and name canonically."""
    restrictions = list(restrictions)
    components = _merge_cancels(components)
    restrictions, components = _collect(restrictions, components)
    cf = CanonicalForm(tuple(restrictions), tuple(components))
    for _ in range(8):
        nxt = _canon_step(cf)
        if nxt == cf:
            break
        cf = nxt
    return cf


def _merge_cancels(components) -> list:
    seen = set()
    out = []
    for c in components:
        if isinstance(c, Cancel):
            if c.subject in seen:
                continue
            seen.add(c.subject)
        out.append(c)
    return out


def _collect(restrictions, components):
    changed = True
    while changed:
        changed = False
        fns = [free_names(c) for c in components]
        for r in restrictions:
            ends = {r.a, r.b}
            users = [i for i, f in enumerate(fns) if f & ends]
            if all(isinstance(components[i], Cancel) for i in users):
                drop = set(users)
                components = [c for i, c in enumerate(components) if i not in drop]
                restrictions = [s for s in restrictions if s is not r]
                changed = True
                break
    return restrictions, components


def _canon_step(cf: CanonicalForm) -> CanonicalForm:
    restricted = frozenset(cf.restricted())
    comps = sorted(cf.components, key=lambda c: (erased_key(c, restricted), pretty(c)))
    order = _first_occurrence(cf.restrictions, comps)
    free = set()
    for c in comps:
        free |= free_names(c)
    free -= restricted
    supply = NameSupply(free)
    mapping = {}
    new_rs = []
    for r, first in order:
        a, b, t = (r.a, r.b, r.type) if first == r.a else (r.b, r.a, dual(r.type))
        a2, b2 = supply.fresh(a), supply.fresh(b)
        if a2 != a:
            mapping[a] = Var(a2)
        if b2 != b:
            mapping[b] = Var(b2)
        new_rs.append(Restriction(a2, b2, t))
    if mapping:
        comps = [subst(c, mapping) for c in comps]
    now = restricted_set(new_rs)
    comps = sorted(comps, key=lambda c: (erased_key(c, now), pretty(c)))
    return CanonicalForm(tuple(new_rs), tuple(comps))


def restricted_set(rs) -> frozenset:
    return frozenset(n for r in rs for n in (r.a, r.b))


def _first_occurrence(restrictions, comps):
    owner = {}
    for r in restrictions:
        owner[r.a] = r
        owner[r.b] = r
    seen: dict = {}
    for c in comps:
        for n in occurrences(c):
            r = owner.get(n)
            if r is not None and id(r) not in seen:
                seen[id(r)] = (r, n)
    out = list(seen.values())
    # unused restrictions only survive in hand-built forms; keep them last
    for r in restrictions:
        if id(r) not in seen:
            out.append((r, r.a))
    return out


# ------------------------------------------------------------------ shape keys


def erased_key(p, restricted: frozenset) -> str:
    """Printed form with inner binders numbered and restricted names erased."""
    return _erased(p, restricted)


@lru_cache(maxsize=65536)
def _erased(p, restricted: frozenset) -> str:
    counter = iter(range(1, 1 << 30))
    q = rename_binders(p, lambda _x: f"%{next(counter)}")
    fn = free_names(q) & restricted
    if fn:
        q = subst(q, {n: Var("•") for n in fn})
    return pretty(q)


# ------------------------------------------------------------------ congruence


def congruent(p, q) -> bool:
    return forms_congruent(normalize(p), normalize(q))


def forms_congruent(c1: CanonicalForm, c2: CanonicalForm) -> bool:
    if c1 == c2:
        return True
    if len(c1.components) != len(c2.components) or len(c1.restrictions) != len(c2.restrictions):
        return False
    r1, r2 = c1.restricted(), c2.restricted()
    k1 = [erased_key(c, frozenset(r1)) for c in c1.components]
    k2 = [erased_key(c, frozenset(r2)) for c in c2.components]
    if Counter(k1) != Counter(k2):
        return False
    occ1 = [[n for n in occurrences(c) if n in r1] for c in c1.components]
    occ2 = [[n for n in occurrences(c) if n in r2] for c in c2.components]
    col1, col2 = _colours(c1, k1, occ1), _colours(c2, k2, occ2)
    if Counter(col1.values()) != Counter(col2.values()):
        return False
    by_key = defaultdict(list)
    for j, k in enumerate(k2):
        by_key[k].append(j)
    # most constrained components first
    order = sorted(range(len(k1)), key=lambda i: (len(by_key[k1[i]]), -len(occ1[i])))
    used = [False] * len(c2.components)

    def extend(bij, inv, xs, ys):
        bij, inv = dict(bij), dict(inv)
        todo = list(zip(xs, ys))
        while todo:
            x, y = todo.pop()
            if x in bij or y in inv:
                if bij.get(x) != y or inv.get(y) != x:
                    return None
                continue
            if col1[x] != col2[y]:
                return None
            bij[x], inv[y] = y, x
            todo.append((c1.restriction_of(x).partner(x), c2.restriction_of(y).partner(y)))
        return bij, inv

    def search(n, bij, inv) -> bool:
        if n == len(order):
            return _restrictions_match(c1, c2, bij)
        i = order[n]
        for j in by_key[k1[i]]:
            if used[j] or len(occ1[i]) != len(occ2[j]):
                continue
            ext = extend(bij, inv, occ1[i], occ2[j])
            if ext is None:
                continue
            used[j] = True
            if search(n + 1, *ext):
                return True
            used[j] = False
        return False

    return search(0, {}, {})


def _colours(cf: CanonicalForm, keys: list, occ: list) -> dict:
    """Isomorphism-invariant colour of each restricted endpoint.

    An endpoint is coloured by its type and the places (component shape,
    argument position) where it occurs, then refined once by its partner.
    """
    base: dict = {}
    for r in cf.restrictions:
        for n in (r.a, r.b):
            base[n] = [str(r.type_of(n))]
    for k, names in zip(keys, occ):
        for pos, n in enumerate(names):
            base[n].append((k, pos))
    flat = {n: (c[0], tuple(sorted(c[1:]))) for n, c in base.items()}
    out = {}
    for r in cf.restrictions:
        out[r.a] = (flat[r.a], flat[r.b])
        out[r.b] = (flat[r.b], flat[r.a])
    return out


def _restrictions_match(c1: CanonicalForm, c2: CanonicalForm, bij: dict) -> bool:
    bij = dict(bij)
    inv = {v: k for k, v in bij.items()}
    matched = set()
    for r in c1.restrictions:
        anchor = r.a if r.a in bij else r.b if r.b in bij else None
        if anchor is None:
            candidates = [s for s in c2.restrictions if id(s) not in matched]
            s = next((s for s in candidates if s.type in (r.type, dual(r.type))), None)
            if s is None:
                return False
            bij[r.a], bij[r.b] = (s.a, s.b) if s.type == r.type else (s.b, s.a)
        s = c2.restriction_of(bij[anchor])
        if s is None or id(s) in matched:
            return False
        other = r.partner(anchor)
        image = s.partner(bij[anchor])
        if other in bij and bij[other] != image:
            return False
        if other not in bij and image in inv:
            return False
        bij[other] = image
        if s.type_of(bij[r.a]) != r.type:
            return False
        matched.add(id(s))
    return True
