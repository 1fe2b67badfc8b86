"""Normative constraints compiled to removal updates."""
from __future__ import annotations

import json
from dataclasses import dataclass

from atld.formula import FALSE, TRUE, Formula, Not, Prop, Update, UpdateItem, UpdateSpec, always, parse_formula
from atld.mc_perfect import check
from atld.model import Model, ModelError, state_tags, tag_states

__all__ = [
    "BehaviouralConstraint", "AtomicSocialLaw", "UnreasonableConstraint",
    "eta_to_update", "zeta_to_update", "check_effective",
]


class UnreasonableConstraint(ModelError):
    """The constraint would leave some agent without any action."""


@dataclass(frozen=True)
class BehaviouralConstraint:
    """``forbidden[(action, agent)]`` is the set of states where the agent
    may not perform the action."""

    forbidden: dict

    @classmethod
    def from_dict(cls, data: dict) -> "BehaviouralConstraint":
        return cls({(act, ag): frozenset(states) for act, per in data.items() for ag, states in per.items()})

    @classmethod
    def load(cls, path) -> "BehaviouralConstraint":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class AtomicSocialLaw:
    """``allowed[(action, agent)]`` is the condition under which the agent may
    perform the action; missing entries are unconditionally allowed."""

    allowed: dict

    @classmethod
    def from_dict(cls, data: dict) -> "AtomicSocialLaw":
        return cls({(act, ag): parse_formula(text) if isinstance(text, str) else text
                    for act, per in data.items() for ag, text in per.items()})

    @classmethod
    def load(cls, path) -> "AtomicSocialLaw":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def eta_to_update(model: Model, eta: BehaviouralConstraint):
    """Tagged model and the removal update implementing ``eta`` on it."""
    for (act, ag), states in eta.forbidden.items():
        if act not in model.actions:
            raise ModelError(f"unknown action {act!r} in constraint")
        if ag not in model.agents:
            raise ModelError(f"unknown agent {ag!r} in constraint")
        unknown = set(states) - set(model.states)
        if unknown:
            raise ModelError(f"unknown states {sorted(unknown)} in constraint")
    for ag in model.agents:
        for v in model.states:
            banned = {act for (act, a), states in eta.forbidden.items() if a == ag and v in states}
            if banned and model.d(ag, v) <= banned:
                raise UnreasonableConstraint(f"constraint forbids every action of {ag} at {v}")
    tags = state_tags(model)
    items = tuple(
        UpdateItem(Prop(tags[v]), act, frozenset({ag}))
        for act in model.actions for ag in model.agents
        for v in model.states if v in eta.forbidden.get((act, ag), ())
    )
    return tag_states(model), UpdateSpec("-", items)


def _negate(f: Formula) -> Formula:
    if f == TRUE:
        return FALSE
    if f == FALSE:
        return TRUE
    return Not(f)


def zeta_to_update(zeta: AtomicSocialLaw) -> UpdateSpec:
    """Removal update taking the action away wherever its condition fails."""
    items = tuple(UpdateItem(_negate(f), act, frozenset({ag})) for (act, ag), f in zeta.allowed.items())
    return UpdateSpec("-", items)


def check_effective(model: Model, law, goal: Formula) -> frozenset:
    """For a behavioural constraint: states of the tagged model where the goal
    holds globally on every path once the constraint is in force. For a
    social law: states where ``goal`` holds after the law's removal update."""
    if isinstance(law, BehaviouralConstraint):
        tagged, spec = eta_to_update(model, law)
        return check(tagged, Update(spec, always(frozenset(), goal)))
    if isinstance(law, AtomicSocialLaw):
        return check(model, Update(zeta_to_update(law), goal))
    raise TypeError(f"not a normative constraint: {law!r}")
