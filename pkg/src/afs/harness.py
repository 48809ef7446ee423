"""Property-based checking of the metatheory on generated session pairs.

Cases are built from characteristic processes, which are typed by
construction, and then perturbed with cancellations so that the affine
reductions are exercised. Every case is reproducible from its seed.
"""

from __future__ import annotations

import json
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .analysis import characteristic, progress_check
from .congruence import CanonicalForm, embed, erased_key, forms_congruent, normalize
from .errors import AfsError
from .parser import parse_process
from .reduce import RULES, STANDARD, Engine
from .syntax import (
    NIL,
    Acc,
    Bra,
    Cancel,
    DoCatch,
    NameSupply,
    New,
    Nil,
    Par,
    Recv,
    Req,
    Sel,
    Send,
    Var,
    all_names,
    alpha_eq,
    free_names,
    freshen,
    make_branch,
    par,
    pretty,
)
from .types import (
    BOOL,
    NAT,
    STRING,
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
from .typecheck import TypeCheckError, check

PROPERTIES = (
    "duality",
    "typecheck",
    "characteristic",
    "round_trip",
    "subject_reduction",
    "diamond",
    "progress",
)
GROUNDS = (NAT, STRING, BOOL)
EMPTY = Interface()


@dataclass(frozen=True)
class GenConfig:
    seed: int = 42
    max_type_depth: int = 5
    max_labels: int = 3
    mutation_rate: float = 0.3
    cases: int = 1000
    ground_rate: float = 0.3
    step_budget: int = 200
    form_cap: int = 64

    def __post_init__(self):
        if self.max_type_depth < 1:
            raise ValueError("max_type_depth must be at least 1")
        if self.cases < 1:
            raise ValueError("cases must be at least 1")
        if self.max_labels < 1:
            raise ValueError("max_labels must be at least 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")

    def case_rng(self, i: int) -> random.Random:
        return random.Random(self.case_seed(i))

    def case_seed(self, i: int) -> int:
        return self.seed * 1_000_003 + i


# ------------------------------------------------------------------ generators


def gen_type(cfg: GenConfig, rng: random.Random | None = None, depth: int | None = None):
    rng = rng or random.Random(cfg.seed)
    depth = cfg.max_type_depth if depth is None else depth
    if depth <= 1:
        return End()

    def payload():
        if rng.random() < cfg.ground_rate:
            return rng.choice(GROUNDS)
        return gen_type(cfg, rng, depth - 1)

    def labelled():
        k = rng.randint(1, cfg.max_labels)
        pool = [f"l{i}" for i in range(cfg.max_labels + 2)]
        labels = sorted(rng.sample(pool, k))
        return tuple((lbl, gen_type(cfg, rng, depth - 1)) for lbl in labels)

    match rng.randrange(7):
        case 0:
            return End()
        case 1:
            return Output(payload(), gen_type(cfg, rng, depth - 1))
        case 2:
            return Input(payload(), gen_type(cfg, rng, depth - 1))
        case 3:
            return Select(labelled())
        case 4:
            return Branch(labelled())
        case 5:
            return Request(payload())
        case _:
            return Accept(payload())


def random_chooser(rng: random.Random) -> Callable[[tuple], str]:
    return lambda labels: rng.choice(sorted(labels))


def gen_session_pair(t, cfg: GenConfig, rng: random.Random | None = None):
    """``(new (a: t, a') (char(a, t) | char(a', dual t)))``."""
    rng = rng or random.Random(cfg.seed)
    supply = NameSupply({"a", "a'"})
    choose = random_chooser(rng)
    left = characteristic("a", t, choose, supply)
    right = characteristic("a'", dual(t), choose, supply)
    return New("a", "a'", t, Par(left, right))


# ------------------------------------------------------------------ mutation


def mutate_cancel(p, cfg: GenConfig, rng: random.Random | None = None):
    """Perturb a characteristic composition with cancellations.

    At each prefix, with probability ``mutation_rate``, one of: truncate the
    rest of the session (cancelling its subject and every session name it
    held), replace the partner of a sent name by a cancel, guard the prefix
    with a do-catch whose handler cancels what the prefix would have used,
    or issue a request twice.
    """
    if cfg.mutation_rate == 0:
        return p
    rng = rng or random.Random(cfg.seed)
    supply = NameSupply(all_names(p))
    return _Mutator(cfg.mutation_rate, rng, supply).walk(p, {})


class _Mutator:
    def __init__(self, rate: float, rng: random.Random, supply: NameSupply):
        self.rate = rate
        self.rng = rng
        self.supply = supply

    def hit(self) -> bool:
        return self.rng.random() < self.rate

    def cancels(self, node, env: dict, skip: str | None = None):
        names = sorted(n for n in free_names(node) if n != skip and not isinstance(env.get(n), Ground))
        return [Cancel(n) for n in names]

    def walk(self, p, env: dict):
        match p:
            case Nil():
                return p
            case Par(l, r):
                return Par(self.walk(l, env), self.walk(r, env))
            case New(b, b2, t, Par(Send(a, Var(obj), k), q)) if obj == b2 and self.hit():
                # the partner of the sent name is cancelled straight away
                inner = {**env, b: t, b2: dual(t)}
                return New(b, b2, t, Par(self.walk(Send(a, Var(obj), k), inner), Cancel(b)))
            case New(b, b2, t, Par(Req(a, Var(obj), k), q)) if obj == b2 and self.hit():
                if self.rng.random() < 0.5:
                    return New(b, b2, t, Par(Req(a, Var(obj), k), Cancel(b)))
                first = self.walk(p.body, {**env, b: t, b2: dual(t)})
                copy = freshen(p, self.supply)
                return Par(New(b, b2, t, first), self.walk(copy, env))
            case New(b, b2, t, body):
                return New(b, b2, t, self.walk(body, {**env, b: t, b2: dual(t)}))
            case Req(a, v, k) if not isinstance(v, Var) and self.hit() and self.rng.random() < 0.5:
                return Par(p, Req(a, v, k))
        if isinstance(p, (Send, Recv, Sel, Bra, Req)):
            if self.hit():
                kind = self.rng.randrange(2)
                if kind == 0:
                    return par(*self.cancels(p, env))
                inner = self.prefix(p, env)
                return DoCatch(inner, par(*self.cancels(inner, env, skip=p.subject)))
            return self.prefix(p, env)
        if isinstance(p, Acc):
            t = env.get(p.subject)
            body_t = t.body if isinstance(t, Accept) else End()
            return Acc(p.subject, p.binder, self.walk(p.body, {**env, p.binder: body_t}))
        return p

    def prefix(self, p, env: dict):
        t = env.get(p.subject)
        match p:
            case Send(a, v, k):
                cont = t.cont if isinstance(t, Output) else End()
                return Send(a, v, self.walk(k, {**env, a: cont}))
            case Recv(a, x, k):
                pay, cont = (t.payload, t.cont) if isinstance(t, Input) else (End(), End())
                return Recv(a, x, self.walk(k, {**env, a: cont, x: pay}))
            case Sel(a, label, k):
                cont = t.get(label) if isinstance(t, Select) else End()
                return Sel(a, label, self.walk(k, {**env, a: cont}))
            case Bra(a, bs):
                pairs = []
                for label, q in bs:
                    cont = t.get(label) if isinstance(t, Branch) else End()
                    pairs.append((label, self.walk(q, {**env, a: cont})))
                return make_branch(a, pairs)
            case Req(a, v, k):
                return Req(a, v, self.walk(k, env))
        return p


# ------------------------------------------------------------------ properties


@dataclass
class Outcome:
    ok: bool
    detail: str = ""
    rules: Counter = field(default_factory=Counter)


def _reachable(cf: CanonicalForm, engine: Engine, budget: int, cap: int):
    """Breadth-first exploration: yields (form, depth, [(redex, contractum)])."""
    seen = {cf}
    queue = deque([(cf, 0)])
    while queue:
        cur, d = queue.popleft()
        succ = [(rx, engine.apply(cur, rx, verify=False)) for rx in engine.redexes(cur)]
        yield cur, d, succ
        if d >= budget:
            continue
        for _, nxt in succ:
            if nxt not in seen and len(seen) < cap:
                seen.add(nxt)
                queue.append((nxt, d + 1))


def check_subject_reduction(p, declared: Interface = EMPTY, engine: Engine = STANDARD,
                            budget: int = 200, cap: int = 64) -> Outcome:
    rules: Counter = Counter()
    for cur, _, succ in _reachable(normalize(p), engine, budget, cap):
        for rx, nxt in succ:
            rules[rx.rule] += 1
            try:
                check(declared, embed(nxt))
            except TypeCheckError as exc:
                return Outcome(False, f"{rx} on {cur} gives {nxt}: {exc}", rules)
    return Outcome(True, "", rules)


def _signature(cf: CanonicalForm):
    r = frozenset(cf.restricted())
    keys = tuple(sorted(erased_key(c, r) for c in cf.components))
    types = tuple(sorted(min(str(s.type), str(dual(s.type))) for s in cf.restrictions))
    return keys, types


def _joinable(q1: CanonicalForm, q2: CanonicalForm, successors) -> bool:
    if forms_congruent(q1, q2):
        return True
    s1 = successors(q1) + [q1]
    s2 = successors(q2) + [q2]
    index: dict = {}
    for f in s2:
        index.setdefault(_signature(f), []).append(f)
    return any(forms_congruent(f, g) for f in s1 for g in index.get(_signature(f), ()))


def check_diamond(p, engine: Engine = STANDARD, budget: int = 200, cap: int = 64) -> Outcome:
    memo: dict = {}

    def successors(cf):
        if cf not in memo:
            memo[cf] = [engine.apply(cf, rx, verify=False) for rx in engine.redexes(cf)]
        return memo[cf]

    for cur, _, succ in _reachable(normalize(p), engine, budget, cap):
        memo[cur] = [nxt for _, nxt in succ]
        for i in range(len(succ)):
            for j in range(i + 1, len(succ)):
                (r1, q1), (r2, q2) = succ[i], succ[j]
                if not _joinable(q1, q2, successors):
                    return Outcome(False, f"{r1} and {r2} on {cur} do not join")
    return Outcome(True)


def check_progress(p, declared: Interface = EMPTY, engine: Engine = STANDARD) -> Outcome:
    try:
        report = progress_check(declared, p, max_steps=10_000, engine=engine)
    except (AfsError, TypeCheckError) as exc:
        return Outcome(False, f"{type(exc).__name__}: {exc}")
    if report.status == "budget-exhausted":
        return Outcome(False, "no normal form within the budget")
    return Outcome(True, report.status)


def check_round_trip(p) -> Outcome:
    text = pretty(p)
    try:
        q = parse_process(text)
    except AfsError as exc:
        return Outcome(False, f"{exc} while parsing {text}")
    if not alpha_eq(p, q):
        return Outcome(False, f"{text} re-parses as {pretty(q)}")
    return Outcome(True)


# ------------------------------------------------------------------ suite


@dataclass(frozen=True)
class Case:
    index: int
    seed: int
    type: object
    pair: object
    mutated: object


def gen_case(cfg: GenConfig, i: int, depth: int | None = None) -> Case:
    rng = cfg.case_rng(i)
    t = gen_type(cfg, rng, depth)
    pair = gen_session_pair(t, cfg, rng)
    mutated = mutate_cancel(pair, cfg, rng)
    return Case(i, cfg.case_seed(i), t, pair, mutated)


def _run_case(case: Case, cfg: GenConfig, engine: Engine) -> dict[str, Outcome]:
    out: dict[str, Outcome] = {}
    t, m = case.type, case.mutated
    out["duality"] = Outcome(dual(dual(t)) == t, "" if dual(dual(t)) == t else f"dual(dual({t}))")
    try:
        check(EMPTY, case.pair)
        check(EMPTY, m)
        out["typecheck"] = Outcome(True)
    except TypeCheckError as exc:
        out["typecheck"] = Outcome(False, str(exc))
    try:
        check(Interface([("a", t)]), characteristic("a", t))
        out["characteristic"] = Outcome(True)
    except TypeCheckError as exc:
        out["characteristic"] = Outcome(False, str(exc))
    out["round_trip"] = check_round_trip(m)
    if not out["typecheck"].ok:
        for name in ("subject_reduction", "diamond", "progress"):
            out[name] = Outcome(False, "untyped case")
        return out
    out["subject_reduction"] = check_subject_reduction(m, EMPTY, engine, cfg.step_budget, cfg.form_cap)
    out["diamond"] = check_diamond(m, engine, cfg.step_budget, cfg.form_cap)
    # closed compositions end inactive; the open half exercises the witness
    closed = check_progress(m, EMPTY, engine)
    half = case.pair.body.left
    opened = check_progress(half, Interface([("a", t)]), engine)
    expected = "inactive" if isinstance(t, End) else "witnessed"
    if not closed.ok or opened.detail == expected:
        out["progress"] = closed
    else:
        out["progress"] = Outcome(False, f"open half {pretty(half)}: {opened.detail}")
    return out


@dataclass
class Counterexample:
    prop: str
    seed: int
    index: int
    depth: int
    process: str
    detail: str


@dataclass
class SuiteReport:
    config: GenConfig
    passed: Counter = field(default_factory=Counter)
    failed: Counter = field(default_factory=Counter)
    failing_seeds: dict = field(default_factory=dict)
    counterexamples: list = field(default_factory=list)
    coverage: Counter = field(default_factory=Counter)

    @property
    def ok(self) -> bool:
        return not any(self.failed.values())

    def missing_rules(self, exempt=("E-If",)) -> list[str]:
        return [r for r in RULES if r not in exempt and not self.coverage[r]]

    def lines(self) -> list[str]:
        c = self.config
        out = [f"fuzz seed={c.seed} cases={c.cases} depth={c.max_type_depth} mutation={c.mutation_rate}"]
        for name in PROPERTIES:
            seeds = self.failing_seeds.get(name, [])
            tail = f" seeds={','.join(map(str, seeds[:10]))}" if seeds else ""
            status = "PASS" if not self.failed[name] else "FAIL"
            out.append(f"{status} {name}: {self.passed[name]} passed, {self.failed[name]} failed{tail}")
        out.append("rules: " + ", ".join(f"{r}={self.coverage[r]}" for r in RULES))
        for cx in self.counterexamples:
            out.append(f"counterexample {cx.prop} seed={cx.seed} depth={cx.depth}: {cx.process}")
            out.append(f"  {cx.detail}")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def summary(self) -> list[dict]:
        return [
            {
                "name": name,
                "pass": self.passed[name],
                "fail": self.failed[name],
                "seeds": self.failing_seeds.get(name, []),
            }
            for name in PROPERTIES
        ]

    def summary_json(self) -> str:
        return json.dumps(
            {"properties": self.summary(), "coverage": {r: self.coverage[r] for r in RULES}},
            indent=2,
            sort_keys=True,
        )


def _shrink(cfg: GenConfig, i: int, prop: str, engine: Engine, outcome: Outcome) -> Counterexample:
    best = (cfg.max_type_depth, gen_case(cfg, i), outcome)
    for depth in range(cfg.max_type_depth - 1, 0, -1):
        case = gen_case(cfg, i, depth)
        res = _run_case(case, cfg, engine)[prop]
        if res.ok:
            break
        best = (depth, case, res)
    depth, case, res = best
    return Counterexample(prop, case.seed, i, depth, pretty(case.mutated), res.detail[:500])


def run_suite(cfg: GenConfig, engine: Engine = STANDARD, shrink: bool = True,
              progress: Optional[Callable[[int], None]] = None) -> SuiteReport:
    report = SuiteReport(cfg)
    for i in range(cfg.cases):
        case = gen_case(cfg, i)
        results = _run_case(case, cfg, engine)
        for name in PROPERTIES:
            res = results[name]
            report.coverage.update(res.rules)
            if res.ok:
                report.passed[name] += 1
            else:
                report.failed[name] += 1
                seeds = report.failing_seeds.setdefault(name, [])
                seeds.append(case.seed)
                if shrink and len(seeds) == 1:
                    report.counterexamples.append(_shrink(cfg, i, name, engine, res))
        if progress is not None:
            progress(i)
    return report
