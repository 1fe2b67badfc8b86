import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atld.formula import FALSE, TRUE, Prop, always, parse_formula, render_update
from atld.generators import random_formula
from atld.mc_perfect import check
from atld.model import ModelError, apply_remove, dump_model
from atld.normative import (
    AtomicSocialLaw, BehaviouralConstraint, UnreasonableConstraint, check_effective,
    eta_to_update, zeta_to_update,
)
from strategies import models, seeds


def _prune_eta(m, eta):
    av = {k: set(v) for k, v in m.availability.items()}
    for (act, ag), states in eta.forbidden.items():
        for v in states:
            av[(ag, v)].discard(act)
    return m.with_availability(av)


def _prune_zeta(m, zeta):
    removed = {}
    for (act, ag), cond in zeta.allowed.items():
        for v in set(m.states) - check(m, cond):
            removed.setdefault((ag, v), set()).add(act)
    av = dict(m.availability)
    for key, acts in removed.items():
        if av[key] - acts:
            av[key] = av[key] - acts
    return m.with_availability(av)


def test_eta_translation_example(load):
    eta = BehaviouralConstraint.from_dict({"left": {"r1": ["q0", "q2"]}})
    tagged, spec = eta_to_update(load("bob"), eta)
    assert render_update(spec) == "[@state:q0 : left -> {r1}, @state:q2 : left -> {r1}]-"
    assert "@state:q1" in tagged.labelling["q1"]


def test_empty_eta_is_noop(load):
    m = load("bob")
    tagged, spec = eta_to_update(m, BehaviouralConstraint({}))
    assert spec.items == ()
    assert apply_remove(tagged, spec).availability == m.availability


def test_eta_effectiveness_matches_hand_pruning(load):
    m = load("bob_granted")
    eta = BehaviouralConstraint.from_dict({"right": {"r1": ["q0", "q1"], "r2": ["q2"]}})
    goal = parse_formula("!warm | atBob")
    expected = check(_prune_eta(m, eta), always(frozenset(), goal))
    assert check_effective(m, eta, goal) == expected


def test_unreasonable_eta_rejected(load):
    with pytest.raises(UnreasonableConstraint):
        eta_to_update(load("bob"), BehaviouralConstraint.from_dict({"left": {"r2": ["q1"]}}))


@pytest.mark.parametrize("data", [
    {"jump": {"r1": ["q0"]}}, {"left": {"r9": ["q0"]}}, {"left": {"r1": ["q7"]}},
])
def test_eta_unknown_identifiers(load, data):
    with pytest.raises(ModelError):
        eta_to_update(load("bob"), BehaviouralConstraint.from_dict(data))


def test_zeta_reproduces_restricted_fixture(load):
    spec = zeta_to_update(AtomicSocialLaw.from_dict({"left": {"r1": "atBob"}}))
    assert render_update(spec) == "[!atBob : left -> {r1}]-"
    assert dump_model(apply_remove(load("bob_granted"), spec)) == dump_model(load("bob_restricted"))


def test_empty_zeta_is_noop():
    assert zeta_to_update(AtomicSocialLaw({})).items == ()


def test_zeta_true_never_fires(load):
    spec = zeta_to_update(AtomicSocialLaw({("left", "r1"): TRUE}))
    assert spec.items[0].precondition == FALSE
    m = load("bob")
    assert apply_remove(m, spec).availability == m.availability


@pytest.mark.parametrize("law", [
    BehaviouralConstraint.from_dict({"left": {"r1": ["q0"]}}),
    AtomicSocialLaw.from_dict({"right": {"r2": "warm"}}),
])
def test_goal_true_holds_everywhere(load, law):
    assert check_effective(load("bob_granted"), law, TRUE) == {"q0", "q1", "q2"}


def _random_eta(data, m):
    forbidden = {}
    for act in m.actions:
        for ag in m.agents:
            forbidden[(act, ag)] = data.draw(st.frozensets(st.sampled_from(m.states)))
    # keep it reasonable: never forbid everything available
    for ag in m.agents:
        for v in m.states:
            banned = {act for act in m.actions if v in forbidden[(act, ag)]}
            if m.d(ag, v) <= banned:
                keep = sorted(m.d(ag, v))[0]
                forbidden[(keep, ag)] = forbidden[(keep, ag)] - {v}
    return BehaviouralConstraint(forbidden)


def _random_zeta(data, m, seed):
    entries = data.draw(st.lists(st.tuples(st.sampled_from(m.actions), st.sampled_from(m.agents)),
                                 max_size=3, unique=True))
    return AtomicSocialLaw({k: random_formula(seed + i, m, depth=2, updates=False)
                            for i, k in enumerate(entries)})


@settings(max_examples=100, deadline=None)
@given(models(max_states=4), st.data(), seeds)
def test_eta_agrees_with_pruned_model(m, data, seed):
    eta = _random_eta(data, m)
    goal = random_formula(seed, m, depth=3, updates=False, has=False)
    assert check_effective(m, eta, goal) == check(_prune_eta(m, eta), always(frozenset(), goal))


@settings(max_examples=100, deadline=None)
@given(models(max_states=4), st.data(), seeds)
def test_zeta_agrees_with_pruned_model(m, data, seed):
    zeta = _random_zeta(data, m, seed)
    goal = random_formula(seed + 99, m, depth=3)
    assert check_effective(m, zeta, goal) == check(_prune_zeta(m, zeta), goal)


@settings(max_examples=60, deadline=None)
@given(models(max_states=4), seeds)
def test_tagged_model_preserves_goals(m, seed):
    tagged, _ = eta_to_update(m, BehaviouralConstraint({}))
    goal = random_formula(seed, m, depth=3)
    assert check(m, goal) == check(tagged, goal)
