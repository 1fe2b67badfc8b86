"""Brute-force evaluator used as a test oracle.

Strategic modalities are decided by enumerating every memoryless strategy of
the coalition (uniform over observation blocks in epistemic mode) and
exploring all outcome walks explicitly, up to the length after which a walk
must repeat a state. Nothing here shares code with the fixpoint engines
beyond the update operations of :mod:`atld.model`.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

from atld.formula import (
    And, CoalitionNext, CoalitionRelease, CoalitionUntil, Const, Formula, Has,
    Implies, Knows, Not, Or, Prop, Update,
)
from atld.model import Model, ModelError, apply_epistemic, apply_update


class BudgetExceeded(RuntimeError):
    def __init__(self, what: str, count: int):
        super().__init__(f"{what} budget exceeded after {count}")
        self.count = count


class _Reference:
    def __init__(self, model: Model, epistemic: bool, semantics: str, budget: int, counter: list):
        self.m = model
        self.epistemic = epistemic
        self.semantics = semantics
        self.budget = budget
        self.counter = counter
        self.memo: dict = {}

    def evaluate(self, model: Model, f: Formula) -> frozenset:
        return _Reference(model, self.epistemic, self.semantics, self.budget, self.counter).sat(f)

    def sat(self, f: Formula) -> frozenset:
        if f not in self.memo:
            self.memo[f] = frozenset(self._sat(f))
        return self.memo[f]

    def _sat(self, f: Formula):
        m, V = self.m, self.m.states
        if isinstance(f, Prop):
            return {v for v in V if f.name in m.labelling[v]}
        if isinstance(f, Const):
            return set(V) if f.value else set()
        if isinstance(f, Not):
            return set(V) - self.sat(f.sub)
        if isinstance(f, And):
            return self.sat(f.left) & self.sat(f.right)
        if isinstance(f, Or):
            return self.sat(f.left) | self.sat(f.right)
        if isinstance(f, Implies):
            return (set(V) - self.sat(f.left)) | self.sat(f.right)
        if isinstance(f, Has):
            if f.agent not in m.agents or f.action not in m.actions:
                raise ModelError(f"unknown identifier in {f}")
            return {v for v in V if f.action in m.d(f.agent, v)}
        if isinstance(f, Knows):
            if not self.epistemic:
                raise ModelError("epistemic construct in perfect-information mode")
            inner = self.sat(f.sub)
            return {v for v in V if m.block_of(f.agent, v) <= inner}
        if isinstance(f, Update):
            if self.epistemic:
                new = apply_epistemic(m, f.spec, evaluate=self.evaluate)
            else:
                if any(it.informed for it in f.spec.items):
                    raise ModelError("epistemic construct in perfect-information mode")
                new = apply_update(m, f.spec, evaluate=self.evaluate)
            return self.evaluate(new, f.body)
        if isinstance(f, (CoalitionNext, CoalitionUntil, CoalitionRelease)):
            return self._strategic(f)
        raise TypeError(f"not a formula: {f!r}")

    # strategic modalities ------------------------------------------------

    def _domains(self, agent):
        if self.epistemic:
            return [tuple(sorted(b)) for b in self.m.observations[agent]]
        return [(v,) for v in self.m.states]

    def _strategic(self, f) -> set:
        m = self.m
        coalition = sorted(f.coalition)
        for a in coalition:
            if a not in m.agents:
                raise ModelError(f"unknown agent {a!r}")
        slots = [(a, dom) for a in coalition for dom in self._domains(a)]
        options = [sorted(m.d(a, dom[0])) for a, dom in slots]
        result = set()
        for choice in itertools.product(*options):
            self.counter[0] += 1
            if self.counter[0] > self.budget:
                raise BudgetExceeded("strategy", self.counter[0])
            strat = {}
            for (a, dom), act in zip(slots, choice):
                for v in dom:
                    strat[(a, v)] = act
            good = self._all_paths(f, strat)
            for v in m.states:
                if all(w in good for w in self._starts(coalition, v)):
                    result.add(v)
        return result

    def _starts(self, coalition, v):
        if self.epistemic and self.semantics == "subjective" and coalition:
            return set().union(*(self.m.block_of(a, v) for a in coalition))
        return {v}

    def _succ(self, strat, v):
        m = self.m
        out = set()
        for prof in itertools.product(*(sorted(m.d(a, v)) for a in m.agents)):
            if all(strat.get((a, v), act) == act for a, act in zip(m.agents, prof)):
                out.add(m.transitions[(v, prof)])
        return out

    def _all_paths(self, f, strat) -> set:
        m = self.m
        n = len(m.states)
        succ = {v: self._succ(strat, v) for v in m.states}
        if isinstance(f, CoalitionNext):
            target = self.sat(f.sub)
            return {v for v in m.states if succ[v] <= target}
        phi, psi = self.sat(f.left), self.sat(f.right)

        if isinstance(f, CoalitionUntil):
            @lru_cache(maxsize=None)
            def witnessed(v, length):
                # every walk continuing from v (already `length` states long) meets psi
                if v in psi:
                    return True
                if v not in phi or length > n:
                    return False
                return all(witnessed(w, length + 1) for w in succ[v])

            return {v for v in m.states if witnessed(v, 1)}

        @lru_cache(maxsize=None)
        def violated(v, length):
            # some walk from v falsifies psi before any phi state
            if v not in psi:
                return True
            if v in phi or length >= n:
                return False
            return any(violated(w, length + 1) for w in succ[v])

        return {v for v in m.states if not violated(v, 1)}


def reference_check(model: Model, formula: Formula, *, epistemic: bool = False,
                    semantics: str = "subjective", budget: int = 10**6) -> frozenset:
    """Satisfaction set computed directly from the semantics.

    ``semantics`` only matters in epistemic mode: ``"subjective"`` requires
    the strategy to work from every state some coalition member considers
    possible, ``"objective"`` only from the evaluation state.
    """
    if semantics not in ("subjective", "objective"):
        raise ValueError(f"unknown semantics {semantics!r}")
    return _Reference(model, epistemic, semantics, budget, [0]).sat(formula)
