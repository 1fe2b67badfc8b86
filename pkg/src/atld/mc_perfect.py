"""Global model checking of the perfect-information logic by fixpoints."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from atld import kernels
from atld.formula import (
    And, CoalitionNext, CoalitionRelease, CoalitionUntil, Const, Formula, Has,
    Implies, Knows, Not, Or, Prop, Update, UpdateSpec,
)
from atld.model import Arena, Model, ModelError

__all__ = ["check", "check_mask", "pre", "Checker", "Stats", "EpistemicConstructError",
           "update_availability", "reference_check"]


class EpistemicConstructError(ValueError):
    def __init__(self, what: str = ""):
        super().__init__("epistemic construct in perfect-information mode" + (f": {what}" if what else ""))


@dataclass
class Stats:
    """Work counters, shared by a checker and all of its updated children."""

    pre_calls: int = 0
    models: int = 0
    strategies: int = 0


def _agent_index(arena: Arena, agent: str) -> int:
    try:
        return arena.gidx[agent]
    except KeyError:
        raise ModelError(f"unknown agent {agent!r}") from None


def _action_index(arena: Arena, action: str) -> int:
    try:
        return arena.aidx[action]
    except KeyError:
        raise ModelError(f"unknown action {action!r}") from None


def _coalition(arena: Arena, coalition) -> frozenset:
    for a in coalition:
        _agent_index(arena, a)
    return frozenset(coalition)


def update_availability(arena: Arena, av: np.ndarray, spec: UpdateSpec, masks) -> np.ndarray:
    """Availability array after applying ``spec`` whose item i fires on ``masks[i]``."""
    upd = np.zeros_like(av)
    for it, mask in zip(spec.items, masks):
        k = _action_index(arena, it.action)
        for a in it.targets:
            upd[_agent_index(arena, a), mask, k] = True
    if spec.sign == "+":
        return av | upd
    left = av & ~upd
    keep = ~left.any(axis=2)  # removal would empty the set: leave it alone
    left[keep] = av[keep]
    return left


class Checker:
    """Evaluates formulas against one availability function of a fixed arena.

    Satisfaction sets are cached per formula; updated models are cached per
    update so each distinct update modality builds one child.
    """

    def __init__(self, arena: Arena, av: np.ndarray, stats: Stats | None = None):
        self.arena = arena
        self.av = av
        self.enabled = np.ascontiguousarray(arena.enabled(av))
        self.stats = stats if stats is not None else Stats()
        self.stats.models += 1
        self._cache: dict = {}
        self._children: dict = {}

    @classmethod
    def for_model(cls, model: Model, stats: Stats | None = None) -> "Checker":
        return cls(model.arena, model.arena.avail_array(model), stats)

    def pre(self, coalition, target: np.ndarray) -> np.ndarray:
        group, ngroups = self.arena.groups(_coalition(self.arena, coalition))
        self.stats.pre_calls += 1
        return kernels.pre(self.arena.trans, self.enabled, group, ngroups, target)

    def updated(self, spec: UpdateSpec, cache: bool = True) -> "Checker":
        """Checker for the model after ``spec``; pass ``cache=False`` for
        one-off candidates that should not be retained."""
        child = self._children.get(spec)
        if child is None:
            if any(it.informed for it in spec.items):
                raise EpistemicConstructError("update with a non-empty informed set")
            masks = [self.sat(it.precondition) for it in spec.items]
            child = Checker(self.arena, update_availability(self.arena, self.av, spec, masks), self.stats)
            if cache:
                self._children[spec] = child
        return child

    def sat(self, f: Formula) -> np.ndarray:
        hit = self._cache.get(f)
        if hit is None:
            hit = self._eval(f)
            hit.flags.writeable = False
            self._cache[f] = hit
        return hit

    def _eval(self, f: Formula) -> np.ndarray:
        n = self.arena.n
        if isinstance(f, Prop):
            return self.arena.prop(f.name)
        if isinstance(f, Const):
            return np.full(n, f.value, dtype=bool)
        if isinstance(f, Not):
            return ~self.sat(f.sub)
        if isinstance(f, And):
            return self.sat(f.left) & self.sat(f.right)
        if isinstance(f, Or):
            return self.sat(f.left) | self.sat(f.right)
        if isinstance(f, Implies):
            return ~self.sat(f.left) | self.sat(f.right)
        if isinstance(f, Has):
            return self.av[_agent_index(self.arena, f.agent), :, _action_index(self.arena, f.action)].copy()
        if isinstance(f, CoalitionNext):
            return self.pre(f.coalition, self.sat(f.sub))
        if isinstance(f, (CoalitionUntil, CoalitionRelease)):
            group, ngroups = self.arena.groups(_coalition(self.arena, f.coalition))
            run = kernels.until if isinstance(f, CoalitionUntil) else kernels.release
            z, calls = run(self.arena.trans, self.enabled, group, ngroups, self.sat(f.left), self.sat(f.right))
            self.stats.pre_calls += calls
            return np.asarray(z, dtype=bool).copy()
        if isinstance(f, Update):
            return self.updated(f.spec).sat(f.body).copy()
        if isinstance(f, Knows):
            raise EpistemicConstructError(f"K{{{f.agent}}}")
        raise TypeError(f"not a formula: {f!r}")

    def model_of(self, model: Model) -> Model:
        """``model`` with this checker's availability."""
        return model.with_availability(self.arena.availability_dict(self.av))


def check_mask(model: Model, formula: Formula, stats: Stats | None = None) -> np.ndarray:
    return Checker.for_model(model, stats).sat(formula)


def check(model: Model, formula: Formula, stats: Stats | None = None) -> frozenset:
    """States of ``model`` satisfying ``formula``. Observations are ignored."""
    return model.arena.to_states(check_mask(model, formula, stats))


def pre(model: Model, coalition, target) -> frozenset:
    """States where ``coalition`` can force the next state into ``target``."""
    arena = model.arena
    return arena.to_states(Checker.for_model(model).pre(coalition, arena.mask(target)))


def reference_check(model, formula, **kwargs):
    from atld.reference import reference_check as _ref
    return _ref(model, formula, **kwargs)
