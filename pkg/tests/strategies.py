"""Hypothesis strategies shared by the test modules."""
from hypothesis import strategies as st

from atld.formula import (
    FALSE, TRUE, And, CoalitionNext, CoalitionRelease, CoalitionUntil, Has,
    Implies, Knows, Not, Or, Prop, Update, UpdateItem, UpdateSpec,
)
from atld.generators import random_model

AGENTS = ("r1", "r2", "a")
ACTIONS = ("left", "right", "alpha")
PROPS = ("p", "q", "atBob", "warm")

coalitions = st.frozensets(st.sampled_from(AGENTS), max_size=3)
leaves = st.one_of(
    st.sampled_from(PROPS).map(Prop),
    st.sampled_from((TRUE, FALSE)),
    st.builds(Has, st.sampled_from(AGENTS), st.sampled_from(ACTIONS)),
)


def _extend(sub):
    item = st.builds(UpdateItem, sub, st.sampled_from(ACTIONS), coalitions, coalitions)
    spec = st.builds(UpdateSpec, st.sampled_from("+-"), st.lists(item, min_size=1, max_size=2).map(tuple))
    return st.one_of(
        st.builds(Not, sub),
        st.builds(And, sub, sub),
        st.builds(Or, sub, sub),
        st.builds(Implies, sub, sub),
        st.builds(CoalitionNext, coalitions, sub),
        st.builds(CoalitionUntil, coalitions, sub, sub),
        st.builds(CoalitionRelease, coalitions, sub, sub),
        st.builds(Knows, st.sampled_from(AGENTS), sub),
        st.builds(Update, spec, sub),
    )


formulas = st.recursive(leaves, _extend, max_leaves=24)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def models(draw, observations=False, max_states=4, agents=2, actions=2):
    return random_model(draw(seeds), states=draw(st.integers(1, max_states)), agents=agents,
                        actions=actions, observations=observations)
