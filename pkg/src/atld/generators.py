"""Random models and formulas for differential testing and benchmarks."""
from __future__ import annotations

import itertools
import random

from atld.formula import (
    FALSE, TRUE, And, CoalitionNext, CoalitionRelease, CoalitionUntil, Has,
    Implies, Knows, Not, Or, Prop, Update, UpdateItem, UpdateSpec,
)
from atld.model import Model


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def random_model(seed=None, *, states: int = 4, agents: int = 2, actions: int = 2,
                 props: int = 2, observations: bool = False, p_link: float = 0.4) -> Model:
    """A valid random model; with ``observations`` each agent gets a random
    partition and availability is made uniform on its blocks."""
    rng = _rng(seed)
    ag = tuple(f"a{i}" for i in range(agents))
    act = tuple(f"x{i}" for i in range(actions))
    ap = tuple(f"p{i}" for i in range(props))
    V = tuple(f"s{i}" for i in range(states))
    labelling = {v: frozenset(p for p in ap if rng.random() < 0.5) for v in V}
    obs = {}
    for a in ag:
        if observations:
            blocks: list = []
            for v in V:
                if blocks and rng.random() < p_link:
                    rng.choice(blocks).append(v)
                else:
                    blocks.append([v])
            obs[a] = tuple(frozenset(b) for b in blocks)
        else:
            obs[a] = tuple(frozenset((v,)) for v in V)
    availability = {}
    for a in ag:
        for block in obs[a]:
            k = rng.randint(1, actions)
            chosen = frozenset(rng.sample(act, k))
            for v in block:
                availability[(a, v)] = chosen
    transitions = {
        (v, prof): rng.choice(V)
        for v in V for prof in itertools.product(act, repeat=agents)
    }
    return Model(ag, act, ap, V, labelling, availability, transitions, obs if observations else {})


def random_formula(seed, model: Model, depth: int = 3, *, updates: bool = True,
                   has: bool = True, knows: bool = False, informed: bool = False,
                   max_items: int = 2):
    """A random formula over the vocabulary of ``model``, nesting at most
    ``depth`` operators deep."""
    rng = _rng(seed)
    ag, act, ap = model.agents, model.actions, model.propositions

    def coalition():
        return frozenset(a for a in ag if rng.random() < 0.5)

    def agents_subset():
        return frozenset(a for a in ag if rng.random() < 0.4)

    def leaf():
        r = rng.random()
        if has and r < 0.25:
            return Has(rng.choice(ag), rng.choice(act))
        if r < 0.33:
            return rng.choice((TRUE, FALSE))
        return Prop(rng.choice(ap))

    def gen(d):
        if d <= 0 or rng.random() < 0.15:
            return leaf()
        kinds = ["not", "and", "or", "imp", "X", "U", "R"]
        if updates:
            kinds += ["upd", "upd"]
        if knows:
            kinds += ["K", "K"]
        k = rng.choice(kinds)
        if k == "not":
            return Not(gen(d - 1))
        if k in ("and", "or", "imp"):
            return {"and": And, "or": Or, "imp": Implies}[k](gen(d - 1), gen(d - 1))
        if k == "X":
            return CoalitionNext(coalition(), gen(d - 1))
        if k == "U":
            return CoalitionUntil(coalition(), gen(d - 1), gen(d - 1))
        if k == "R":
            return CoalitionRelease(coalition(), gen(d - 1), gen(d - 1))
        if k == "K":
            return Knows(rng.choice(ag), gen(d - 1))
        items = tuple(
            UpdateItem(gen(min(d - 1, 1)), rng.choice(act),
                       frozenset(rng.sample(ag, rng.randint(1, len(ag)))),
                       agents_subset() if informed else frozenset())
            for _ in range(rng.randint(1, max_items))
        )
        return Update(UpdateSpec(rng.choice("+-"), items), gen(d - 1))

    return gen(depth)
