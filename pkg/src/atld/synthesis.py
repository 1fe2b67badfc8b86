"""Bounded update synthesis over a finite candidate pool, and the 3SAT
instance generator whose satisfiability it decides."""
from __future__ import annotations

import itertools
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb

from atld.formula import (
    TRUE, And, CoalitionNext, Formula, Implies, Not, Prop, Update, UpdateItem,
    UpdateSpec, always, parse_formula,
)
from atld.mc_perfect import Checker
from atld.model import Model, apply_epistemic, apply_update, state_tags
from atld.reference import BudgetExceeded

__all__ = [
    "CnfInstance", "CandidatePool", "SynthesisResult", "gen_3sat", "brute_sat",
    "random_cnf", "canonical_pool", "solve_bounded", "BudgetExceeded",
]

MAX_ITEMS_CAP = 16


# ---------------------------------------------------------------------------
# CNF


@dataclass(frozen=True)
class CnfInstance:
    """Clauses of exactly three non-zero integer literals (DIMACS style)."""

    clauses: tuple

    def __post_init__(self):
        fixed = []
        for cl in self.clauses:
            cl = tuple(int(x) for x in cl)
            if not cl or len(cl) > 3 or 0 in cl:
                raise ValueError(f"clause {cl} must have 1 to 3 non-zero literals")
            fixed.append(tuple(cl[i % len(cl)] for i in range(3)))  # pad by repetition
        if not fixed:
            raise ValueError("formula has no clauses")
        object.__setattr__(self, "clauses", tuple(fixed))

    @property
    def atoms(self) -> list:
        return sorted({abs(x) for cl in self.clauses for x in cl})

    @classmethod
    def parse_dimacs(cls, text: str) -> "CnfInstance":
        nums = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line[0] in "cp%":
                continue
            nums.extend(int(tok) for tok in line.split())
        clauses, cur = [], []
        for x in nums:
            if x == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(x)
        if cur:
            clauses.append(cur)
        return cls(tuple(tuple(c) for c in clauses))

    @classmethod
    def load(cls, path) -> "CnfInstance":
        with open(path) as fh:
            return cls.parse_dimacs(fh.read())

    def to_dimacs(self) -> str:
        k = max(self.atoms)
        lines = [f"p cnf {k} {len(self.clauses)}"]
        lines += [" ".join(map(str, cl)) + " 0" for cl in self.clauses]
        return "\n".join(lines) + "\n"


def random_cnf(seed=None, *, max_atoms: int = 6, max_clauses: int = 6) -> CnfInstance:
    """Random instance; clauses have 1 to 3 literals before padding so that
    both satisfiable and unsatisfiable instances are common."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    k = rng.randint(1, max_atoms)
    m = rng.randint(1, max_clauses)
    clauses = []
    for _ in range(m):
        width = rng.choice((1, 1, 2, 2, 3))
        clauses.append(tuple(rng.choice((1, -1)) * rng.randint(1, k) for _ in range(width)))
    return CnfInstance(tuple(clauses))


def brute_sat(cnf: CnfInstance, max_atoms: int = 20) -> bool:
    """Exhaustive satisfiability test."""
    atoms = cnf.atoms
    if len(atoms) > max_atoms:
        raise BudgetExceeded("atom", len(atoms))
    for bits in itertools.product((False, True), repeat=len(atoms)):
        val = dict(zip(atoms, bits))
        if all(any(val[abs(x)] == (x > 0) for x in cl) for cl in cnf.clauses):
            return True
    return False


def _goal_formula() -> Formula:
    a = frozenset({"a"})
    X = lambda f: CoalitionNext(a, f)
    p, top, bot = Prop("p"), Prop("p_top"), Prop("p_bot")
    phi_t = Implies(top, And(X(And(Not(top), X(top))), Not(X(X(bot)))))
    phi_f = Implies(bot, And(X(And(Not(bot), X(bot))), Not(X(X(top)))))
    return always(a, And(p, X(And(And(Not(p), phi_t), phi_f))))


def gen_3sat(cnf: CnfInstance):
    """Single-agent model, goal formula and start state such that some grant
    update makes the goal true at the start state iff ``cnf`` is satisfiable."""
    m = len(cnf.clauses)
    atoms = cnf.atoms
    acts = ("alpha", "beta", "beta1", "beta2", "beta3", "gamma")
    X = [f"X{i}" for i in range(1, m + 1)]
    lit = {(i, j): f"x{i}_{j}" for i in range(1, m + 1) for j in (1, 2, 3)}
    U = {l: f"u{l}" for l in atoms}
    states = X + list(lit.values()) + list(U.values()) + ["t1", "t2"]
    props = ["p"] + [f"p{l}" for l in atoms] + ["p_top", "p_bot"]

    labelling = {s: set() for s in states}
    av = {}
    trans = {s: {act: s for act in acts} for s in states}  # disabled self-loops by default
    for i, x in enumerate(X, start=1):
        labelling[x].add("p")
        av[x] = {"alpha", "beta1", "beta2", "beta3"}
        trans[x]["alpha"] = X[i] if i < m else x
        for j in (1, 2, 3):
            trans[x][f"beta{j}"] = lit[(i, j)]
    for (i, j), s in lit.items():
        literal = cnf.clauses[i - 1][j - 1]
        labelling[s].add("p_top" if literal > 0 else "p_bot")
        av[s] = {"alpha"}
        trans[s]["alpha"] = U[abs(literal)]
    for l, s in U.items():
        labelling[s].add(f"p{l}")
        av[s] = {"gamma"}
        trans[s]["alpha"] = "t1"
        trans[s]["beta"] = "t2"
    labelling["t1"].add("p_top")
    labelling["t2"].add("p_bot")
    av["t1"] = av["t2"] = {"alpha"}
    model = Model(
        ("a",), acts, tuple(props), tuple(states), labelling,
        {("a", s): frozenset(v) for s, v in av.items()},
        {(s, (act,)): t for s, row in trans.items() for act, t in row.items()},
    )
    return model, _goal_formula(), "X1"


# ---------------------------------------------------------------------------
# Candidate pools


@dataclass(frozen=True)
class CandidatePool:
    """Finite space of update sequences searched by :func:`solve_bounded`."""

    preconditions: tuple
    actions: tuple
    coalitions: tuple
    signs: tuple = ("+", "-")
    max_items: int | None = None
    max_length: int = 1
    informed: tuple = (frozenset(),)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "preconditions", tuple(self.preconditions))
        set_(self, "actions", tuple(self.actions))
        set_(self, "coalitions", tuple(frozenset(c) for c in self.coalitions))
        set_(self, "signs", tuple(self.signs))
        set_(self, "informed", tuple(frozenset(b) for b in self.informed))
        if self.max_length < 0:
            raise ValueError("max_length must be non-negative")
        if not set(self.signs) <= {"+", "-"}:
            raise ValueError(f"signs must be '+' or '-', got {self.signs}")

    def items(self) -> list:
        seen, out = set(), []
        for pre, act, coal, inf in itertools.product(self.preconditions, self.actions, self.coalitions, self.informed):
            it = UpdateItem(pre, act, coal, inf)
            if it not in seen:
                seen.add(it)
                out.append(it)
        return out

    @property
    def item_limit(self) -> int:
        n = len(self.items())
        agents = max(1, len(frozenset().union(*self.coalitions)))
        default = min(len(self.actions) * agents * len(self.preconditions), MAX_ITEMS_CAP)
        return min(n, self.max_items if self.max_items is not None else default)

    def updates(self):
        """Distinct updates: by item count, then sign, then item combination."""
        items = self.items()
        for k in range(1, self.item_limit + 1):
            for sign in self.signs:
                for combo in itertools.combinations(items, k):
                    yield UpdateSpec(sign, combo)

    def count_updates(self) -> int:
        n = len(self.items())
        return len(self.signs) * sum(comb(n, k) for k in range(1, self.item_limit + 1))

    @classmethod
    def default(cls, model: Model, *, tags: bool = False, max_length: int = 1, **kw) -> "CandidatePool":
        """True plus every literal over the model's propositions (and, with
        ``tags``, the per-state propositions of the tagged model); all
        actions; every singleton coalition."""
        pres = [TRUE]
        for p in model.propositions:
            pres += [Prop(p), Not(Prop(p))]
        if tags:
            pres += [Prop(t) for t in state_tags(model).values()]
        return cls(tuple(pres), model.actions, tuple(frozenset({a}) for a in model.agents),
                   max_length=max_length, **kw)

    @classmethod
    def from_dict(cls, data: dict, model: Model | None = None) -> "CandidatePool":
        pres = data.get("preconditions")
        pres = [TRUE] if pres is None else [parse_formula(t) for t in pres]
        actions = data.get("actions") or (list(model.actions) if model else [])
        coalitions = data.get("coalitions") or ([[a] for a in model.agents] if model else [])
        return cls(
            tuple(pres), tuple(actions), tuple(frozenset(c) for c in coalitions),
            tuple(data.get("signs", ["+", "-"])), data.get("max_items"),
            int(data.get("max_length", 1)),
            tuple(frozenset(b) for b in data.get("informed", [[]])),
        )

    @classmethod
    def load(cls, path, model: Model | None = None) -> "CandidatePool":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), model)


def canonical_pool(cnf: CnfInstance, max_length: int = 1) -> CandidatePool:
    """Grants of alpha or beta to the agent, guarded by one atom."""
    return CandidatePool(tuple(Prop(f"p{l}") for l in cnf.atoms), ("alpha", "beta"),
                         (frozenset({"a"}),), ("+",), max_length=max_length)


# ---------------------------------------------------------------------------
# Search


@dataclass
class SynthesisResult:
    found: bool
    sequence: tuple = ()
    checked: int = 0
    pool_updates: int = 0
    complete_relative_to_pool: bool = True
    notes: list = field(default_factory=list)


def _sequences(pool: CandidatePool):
    updates = list(pool.updates())
    for n in range(0, pool.max_length + 1):
        yield from itertools.product(updates, repeat=n)


def _wrap(seq, goal: Formula) -> Formula:
    for spec in reversed(seq):
        goal = Update(spec, goal)
    return goal


class _Evaluator:
    def __init__(self, model, state, goal, epistemic, semantics):
        self.model, self.goal = model, goal
        self.idx = model.arena.sidx[state]
        self.epistemic, self.semantics = epistemic, semantics
        self.root = None if epistemic else Checker.for_model(model)

    def holds(self, seq) -> bool:
        if self.epistemic:
            from atld.mc_epistemic import check_epistemic_mask
            return bool(check_epistemic_mask(self.model, _wrap(seq, self.goal), semantics=self.semantics)[self.idx])
        c = self.root
        for i, spec in enumerate(seq):
            c = c.updated(spec, cache=i < len(seq) - 1)
        return bool(c.sat(self.goal)[self.idx])


def _scan(args):
    model, state, goal, epistemic, semantics, chunk = args
    ev = _Evaluator(model, state, goal, epistemic, semantics)
    for pos, seq in chunk:
        if ev.holds(seq):
            return pos
    return None


def _certify(model, state, goal, seq, epistemic, semantics) -> bool:
    # independent path: materialize every intermediate model
    m = model
    if epistemic:
        from atld.mc_epistemic import check_epistemic
        for spec in seq:
            m = apply_epistemic(m, spec, evaluate=lambda mm, f: check_epistemic(mm, f, semantics=semantics))
        return state in check_epistemic(m, goal, semantics=semantics)
    from atld.mc_perfect import check
    for spec in seq:
        m = apply_update(m, spec, evaluate=check)
    return state in check(m, goal)


def solve_bounded(model: Model, state: str, goal: Formula, pool: CandidatePool, *,
                  epistemic: bool = False, semantics: str = "subjective",
                  budget: int = 10**6, jobs: int = 1, chunk: int = 256) -> SynthesisResult:
    """First update sequence from ``pool`` (shortest first, then pool order)
    after which ``goal`` holds at ``state``.

    A negative answer only means no sequence in the pool works. Raises
    :class:`BudgetExceeded` after ``budget`` candidate sequences.
    """
    if state not in model.arena.sidx:
        raise KeyError(f"unknown state {state!r}")
    result = SynthesisResult(False, pool_updates=pool.count_updates())
    gen = enumerate(_sequences(pool))
    found = None
    if jobs <= 1:
        ev = _Evaluator(model, state, goal, epistemic, semantics)
        for pos, seq in gen:
            if pos >= budget:
                raise BudgetExceeded("candidate", pos)
            result.checked = pos + 1
            if ev.holds(seq):
                found = seq
                break
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            while found is None:
                wave = [list(itertools.islice(gen, chunk)) for _ in range(jobs)]
                wave = [c for c in wave if c]
                if not wave:
                    break
                last = wave[-1][-1][0]
                hits = list(ex.map(_scan, [(model, state, goal, epistemic, semantics, c) for c in wave]))
                hits = [h for h in hits if h is not None]
                if hits:
                    pos = min(hits)  # earliest success in enumeration order
                    found = next(seq for c in wave for p, seq in c if p == pos)
                    result.checked = pos + 1
                else:
                    result.checked = last + 1
                if result.checked > budget:
                    raise BudgetExceeded("candidate", result.checked)
    if found is None:
        result.notes.append("no sequence drawn from the candidate pool achieves the goal")
        return result
    if not _certify(model, state, goal, found, epistemic, semantics):
        raise RuntimeError(f"certificate re-check failed for {found}")
    result.found, result.sequence = True, tuple(found)
    return result
