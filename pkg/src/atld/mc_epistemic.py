"""Global model checking with knowledge and imperfect information.

Subformulas are labelled bottom-up in :func:`atld.formula.subformula_order`.
Each update modality in the list fixes, for the prefix it opens, the
available actions and the observation partitions; everything in its scope is
then labelled against that prefix. Strategic modalities enumerate uniform
memoryless strategies and decide the path property on the pruned graph.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from atld import kernels
from atld.formula import (
    And, CoalitionNext, CoalitionRelease, CoalitionUntil, Const, Formula, Has,
    Implies, Knows, Not, Or, Prop, Update, UpdateSpec, subformula_order,
)
from atld.mc_perfect import Stats, _action_index, _agent_index, _coalition, update_availability
from atld.model import Arena, Model, UniformityViolation
from atld.reference import BudgetExceeded

__all__ = [
    "check_epistemic", "check_epistemic_mask", "LabelStore", "UnwrittenLabel",
    "UniformStrategy", "enumerate_uniform_strategies", "PrunedGraph", "DeadEnd",
    "all_paths_check", "BudgetExceeded", "SEMANTICS",
]

SEMANTICS = ("subjective", "objective")


class UnwrittenLabel(KeyError):
    """A label was read before it was computed (ordering bug)."""


class DeadEnd(RuntimeError):
    """A pruned graph left some state without successors."""


def _canonical_ids(ids: np.ndarray) -> np.ndarray:
    # renumber blocks in order of first occurrence
    _, first, inv = np.unique(ids, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inv].astype(np.int64)


def _refine(ids: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return _canonical_ids(ids * 2 + mask.astype(np.int64))


@dataclass
class LabelStore:
    """Bookkeeping for one run.

    ``avail_marks[prefix]`` is the (agents, states, actions) array of
    +-marked actions, ``edge_marks[prefix]`` the per-agent block id of each
    state (two states are linked iff their ids agree).
    """

    arena: Arena
    state_labels: dict = field(default_factory=dict)
    avail_marks: dict = field(default_factory=dict)
    edge_marks: dict = field(default_factory=dict)

    def write(self, formula: Formula, prefix: tuple, mask: np.ndarray) -> None:
        mask.flags.writeable = False
        self.state_labels[(formula, prefix)] = mask

    def read(self, formula: Formula, prefix: tuple) -> np.ndarray:
        try:
            return self.state_labels[(formula, prefix)]
        except KeyError:
            raise UnwrittenLabel(f"label {formula} under {len(prefix)} update(s) read before written") from None

    def blocks(self, prefix: tuple, agent: str) -> list:
        ids = self.edge_marks[prefix][self.arena.gidx[agent]]
        return [np.flatnonzero(ids == b) for b in range(int(ids.max()) + 1)]

    def linked(self, prefix: tuple, agent: str, v: str, w: str) -> bool:
        ids = self.edge_marks[prefix][self.arena.gidx[agent]]
        return ids[self.arena.sidx[v]] == ids[self.arena.sidx[w]]


@dataclass(frozen=True)
class UniformStrategy:
    """Per coalition agent, the action (index) chosen on each block."""

    agents: tuple
    choices: tuple  # per agent: tuple of action indices, one per block

    def as_dict(self, arena: Arena) -> dict:
        return {a: tuple(arena.actions[k] for k in ch) for a, ch in zip(self.agents, self.choices)}


def _block_options(av_agent: np.ndarray, ids: np.ndarray) -> list:
    opts = []
    for b in range(int(ids.max()) + 1):
        members = ids == b
        opts.append(tuple(np.flatnonzero(av_agent[members].all(axis=0))))
    return opts


def enumerate_uniform_strategies(model_or_store, prefix: tuple = (), coalition=()):
    """Yield every uniform strategy of ``coalition`` under ``prefix``.

    Accepts a :class:`LabelStore` or a model (then the empty prefix of a
    fresh store is used).
    """
    store = model_or_store if isinstance(model_or_store, LabelStore) else _fresh_store(model_or_store)
    arena = store.arena
    agents = tuple(sorted(_coalition(arena, coalition)))
    av, ids = store.avail_marks[prefix], store.edge_marks[prefix]
    per_agent = []
    for a in agents:
        gi = arena.gidx[a]
        per_agent.append(list(itertools.product(*_block_options(av[gi], ids[gi]))))
    for combo in itertools.product(*per_agent):
        yield UniformStrategy(agents, tuple(combo))


@dataclass
class PrunedGraph:
    trans: np.ndarray
    enabled: np.ndarray

    def __post_init__(self):
        dead = ~self.enabled.any(axis=1)
        if dead.any():
            raise DeadEnd(f"states without successors: {np.flatnonzero(dead).tolist()}")


def all_paths_check(graph: PrunedGraph, op: str, args) -> np.ndarray:
    """States where every path satisfies X a / a U b / a R b."""
    grp = np.zeros(graph.trans.shape[1], dtype=np.int32)
    if op == "X":
        (target,) = args
        return np.asarray(kernels.pre(graph.trans, graph.enabled, grp, 1, target), dtype=bool)
    phi, psi = args
    run = {"U": kernels.until, "R": kernels.release}[op]
    z, _ = run(graph.trans, graph.enabled, grp, 1, phi, psi)
    return np.asarray(z, dtype=bool)


def _fresh_store(model: Model) -> LabelStore:
    arena = model.arena
    store = LabelStore(arena)
    store.avail_marks[()] = arena.avail_array(model)
    ids = np.empty((arena.g, arena.n), dtype=np.int64)
    for a in model.agents:
        gi = arena.gidx[a]
        for bi, block in enumerate(model.observations[a]):
            for s in block:
                ids[gi, arena.sidx[s]] = bi
        ids[gi] = _canonical_ids(ids[gi])
    store.edge_marks[()] = ids
    return store


class _Run:
    def __init__(self, model: Model, semantics: str, budget: int, search: str, stats: Stats):
        if semantics not in SEMANTICS:
            raise ValueError(f"unknown semantics {semantics!r}")
        if search not in ("auto", "enumerate"):
            raise ValueError(f"unknown search mode {search!r}")
        self.arena = model.arena
        self.store = _fresh_store(model)
        self.semantics = semantics
        self.budget = budget
        self.search = search
        self.stats = stats
        self.stats.models += 1
        self._enabled = {}

    def enabled(self, prefix):
        en = self._enabled.get(prefix)
        if en is None:
            en = self._enabled[prefix] = np.ascontiguousarray(self.arena.enabled(self.store.avail_marks[prefix]))
        return en

    def run(self, formula: Formula) -> np.ndarray:
        for entry in subformula_order(formula):
            if isinstance(entry.item, UpdateSpec):
                self.open_prefix(entry.item, entry.prefix)
            else:
                self.store.write(entry.item, entry.prefix, self.label(entry.item, entry.prefix))
        return self.store.read(formula, ())

    def open_prefix(self, spec: UpdateSpec, prefix: tuple) -> None:
        store, arena = self.store, self.arena
        new = prefix + (spec,)
        if new in store.avail_marks:
            return
        masks = [store.read(it.precondition, prefix) for it in spec.items]
        for it in spec.items:
            _action_index(arena, it.action)
        av = update_availability(arena, store.avail_marks[prefix], spec, masks)
        ids = store.edge_marks[prefix].copy()
        for it, mask in zip(spec.items, masks):
            for a in it.targets | it.informed:
                gi = _agent_index(arena, a)
                ids[gi] = _refine(ids[gi], mask)
        for gi, a in enumerate(arena.agents):
            rep = np.zeros(int(ids[gi].max()) + 1, dtype=np.int64)
            rep[ids[gi][::-1]] = np.arange(arena.n)[::-1]
            if not (av[gi] == av[gi][rep[ids[gi]]]).all():
                raise UniformityViolation(f"availability of {a} not uniform after {spec}")
        store.avail_marks[new] = av
        store.edge_marks[new] = ids
        self.stats.models += 1

    def label(self, f: Formula, prefix: tuple) -> np.ndarray:
        read = lambda g: self.store.read(g, prefix)
        arena = self.arena
        if isinstance(f, Prop):
            return arena.prop(f.name)
        if isinstance(f, Const):
            return np.full(arena.n, f.value, dtype=bool)
        if isinstance(f, Not):
            return ~read(f.sub)
        if isinstance(f, And):
            return read(f.left) & read(f.right)
        if isinstance(f, Or):
            return read(f.left) | read(f.right)
        if isinstance(f, Implies):
            return ~read(f.left) | read(f.right)
        if isinstance(f, Has):
            av = self.store.avail_marks[prefix]
            return av[_agent_index(arena, f.agent), :, _action_index(arena, f.action)].copy()
        if isinstance(f, Knows):
            ids = self.store.edge_marks[prefix][_agent_index(arena, f.agent)]
            bad = np.zeros(int(ids.max()) + 1, dtype=bool)
            bad[ids[~read(f.sub)]] = True
            return ~bad[ids]
        if isinstance(f, Update):
            return self.store.read(f.body, prefix + (f.spec,)).copy()
        if isinstance(f, CoalitionNext):
            return self.strategic(f.coalition, "X", (read(f.sub),), prefix)
        if isinstance(f, CoalitionUntil):
            return self.strategic(f.coalition, "U", (read(f.left), read(f.right)), prefix)
        if isinstance(f, CoalitionRelease):
            return self.strategic(f.coalition, "R", (read(f.left), read(f.right)), prefix)
        raise TypeError(f"not a formula: {f!r}")

    def strategic(self, coalition, op: str, args, prefix: tuple) -> np.ndarray:
        arena = self.arena
        coalition = _coalition(arena, coalition)
        ids = self.store.edge_marks[prefix]
        members = sorted(arena.gidx[a] for a in coalition)
        trans, en = arena.trans, self.enabled(prefix)
        if self.search == "auto" and all(ids[gi].max() == arena.n - 1 for gi in members):
            # every coalition member sees the exact state: plain fixpoints apply
            group, ngroups = arena.groups(coalition)
            if op == "X":
                self.stats.pre_calls += 1
                return np.asarray(kernels.pre(trans, en, group, ngroups, args[0]), dtype=bool)
            run = kernels.until if op == "U" else kernels.release
            z, calls = run(trans, en, group, ngroups, *args)
            self.stats.pre_calls += calls
            return np.asarray(z, dtype=bool)

        result = np.zeros(arena.n, dtype=bool)
        for strat in enumerate_uniform_strategies(self.store, prefix, coalition):
            self.stats.strategies += 1
            if self.stats.strategies > self.budget:
                raise BudgetExceeded("strategy", self.stats.strategies)
            keep = en.copy()
            for a, choice in zip(strat.agents, strat.choices):
                gi = arena.gidx[a]
                chosen = np.asarray(choice, dtype=np.int32)[ids[gi]]  # action per state
                keep &= arena.prof_act[None, :, gi] == chosen[:, None]
            good = all_paths_check(PrunedGraph(trans, keep), op, args)
            self.stats.pre_calls += 1
            if self.semantics == "objective" or not members:
                result |= good
            else:
                ok = np.ones(arena.n, dtype=bool)
                for gi in members:
                    blk_bad = np.zeros(int(ids[gi].max()) + 1, dtype=bool)
                    blk_bad[ids[gi][~good]] = True
                    ok &= ~blk_bad[ids[gi]]
                result |= ok
            if result.all():
                break
        return result


def check_epistemic_mask(model: Model, formula: Formula, *, semantics: str = "subjective",
                         budget: int = 10**6, search: str = "auto",
                         stats: Stats | None = None) -> np.ndarray:
    return _Run(model, semantics, budget, search, stats if stats is not None else Stats()).run(formula)


def check_epistemic(model: Model, formula: Formula, *, semantics: str = "subjective",
                    budget: int = 10**6, search: str = "auto",
                    stats: Stats | None = None) -> frozenset:
    """States of ``model`` satisfying ``formula`` under uniform memoryless
    strategies.

    ``semantics="subjective"`` (default) requires a coalition strategy to
    succeed from every state some member cannot tell apart from the current
    one; ``"objective"`` only from the current state. ``budget`` caps the
    number of strategies tried over the whole run.
    """
    return model.arena.to_states(
        check_epistemic_mask(model, formula, semantics=semantics, budget=budget, search=search, stats=stats))
