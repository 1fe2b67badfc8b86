"""Concurrent game structures (optionally with observation partitions) and
the grant / remove action updates acting on them.

Models are immutable: every update returns a fresh :class:`Model` that shares
its transition structure with its source.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Iterable, Mapping

import numpy as np

from atld.formula import Formula, UpdateItem, UpdateSpec

__all__ = [
    "Model", "Arena", "ValidationReport", "ModelError", "ModelFormatError",
    "UniformityViolation", "validate", "upd_set", "apply_grant", "apply_remove",
    "apply_update", "apply_epistemic", "tag_states", "state_tags",
    "model_from_dict", "model_to_dict", "load_model", "dump_model", "save_model",
    "UpdateItem", "UpdateSpec",
]

RESERVED_PREFIX = "@"

Evaluator = Callable[["Model", Formula], Iterable[str]]


class ModelError(ValueError):
    """Unknown identifier or otherwise unusable model/update combination."""


class ModelFormatError(ModelError):
    """Malformed model document."""


class UniformityViolation(RuntimeError):
    """Availability differs inside an observation block after an update.

    Updates provably preserve uniformity, so this signals a bug.
    """


def _identity_blocks(states) -> tuple:
    return tuple(frozenset((s,)) for s in states)


@dataclass(frozen=True)
class Model:
    """A concurrent game structure, with per-agent observation partitions.

    ``availability`` maps ``(agent, state)`` to the available actions,
    ``transitions`` maps ``(state, profile)`` to a state, where ``profile`` is
    a tuple of actions ordered like ``agents``. Agents missing from
    ``observations`` have the identity partition.
    """

    agents: tuple
    actions: tuple
    propositions: tuple
    states: tuple
    labelling: Mapping[str, frozenset]
    availability: Mapping[tuple, frozenset]
    transitions: Mapping[tuple, str]
    observations: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "agents", tuple(self.agents))
        set_(self, "actions", tuple(self.actions))
        set_(self, "propositions", tuple(self.propositions))
        set_(self, "states", tuple(self.states))
        set_(self, "labelling", {s: frozenset(self.labelling.get(s, ())) for s in self.states})
        set_(self, "availability", {k: frozenset(v) for k, v in self.availability.items()})
        set_(self, "transitions", dict(self.transitions))
        order = {s: i for i, s in enumerate(self.states)}
        obs = {}
        for a in self.agents:
            blocks = self.observations.get(a) if self.observations else None
            if blocks is None:
                obs[a] = _identity_blocks(self.states)
            else:
                blocks = [frozenset(b) for b in blocks]
                blocks.sort(key=lambda b: min((order.get(s, len(order)) for s in b), default=len(order)))
                obs[a] = tuple(blocks)
        set_(self, "observations", obs)

    # derived views -------------------------------------------------------

    def d(self, agent: str, state: str) -> frozenset:
        return self.availability.get((agent, state), frozenset())

    def blocks(self, agent: str) -> tuple:
        return self.observations[agent]

    def block_of(self, agent: str, state: str) -> frozenset:
        for b in self.observations[agent]:
            if state in b:
                return b
        raise ModelError(f"state {state!r} not in any observation block of {agent!r}")

    @property
    def is_perfect_information(self) -> bool:
        return all(len(b) == 1 for a in self.agents for b in self.observations[a])

    @property
    def size(self) -> int:
        """|V| + sum of |True(v)| + |d| + |o|."""
        return (
            len(self.states)
            + sum(len(v) for v in self.labelling.values())
            + sum(len(v) for v in self.availability.values())
            + len(self.transitions)
        )

    def with_availability(self, availability) -> "Model":
        m = replace(self, availability=availability)
        _share_arena(self, m)
        return m

    @cached_property
    def arena(self) -> "Arena":
        return Arena(self)


def _share_arena(src: Model, dst: Model) -> None:
    # updates only touch availability
    if "arena" in src.__dict__:
        dst.__dict__["arena"] = src.__dict__["arena"]


class Arena:
    """Integer-indexed view of a model's fixed parts.

    Joint profiles are numbered in mixed radix with agent 0 most significant.
    """

    def __init__(self, model: Model):
        self.states = model.states
        self.agents = model.agents
        self.actions = model.actions
        self.sidx = {s: i for i, s in enumerate(self.states)}
        self.gidx = {a: i for i, a in enumerate(self.agents)}
        self.aidx = {a: i for i, a in enumerate(self.actions)}
        self.n, self.g, self.m = len(self.states), len(self.agents), len(self.actions)
        self.nprofiles = self.m ** self.g
        self.prof_act = np.array(
            list(itertools.product(range(self.m), repeat=self.g)), dtype=np.int32
        ).reshape(self.nprofiles, self.g)
        trans = np.full((self.n, self.nprofiles), -1, dtype=np.int32)
        for (s, prof), t in model.transitions.items():
            trans[self.sidx[s], self.profile_index(prof)] = self.sidx[t]
        if (trans < 0).any():
            raise ModelFormatError("transition function is not total")
        self.trans = trans
        self._labels = {}
        for s, props in model.labelling.items():
            for p in props:
                self._labels.setdefault(p, np.zeros(self.n, dtype=bool))[self.sidx[s]] = True
        self._groups = {}

    def profile_index(self, profile) -> int:
        idx = 0
        for act in profile:
            idx = idx * self.m + self.aidx[act]
        return idx

    def prop(self, name: str) -> np.ndarray:
        arr = self._labels.get(name)
        return arr.copy() if arr is not None else np.zeros(self.n, dtype=bool)

    def avail_array(self, model: Model) -> np.ndarray:
        """Boolean (agents, states, actions) availability array."""
        av = np.zeros((self.g, self.n, self.m), dtype=bool)
        for (a, s), acts in model.availability.items():
            gi, si = self.gidx[a], self.sidx[s]
            for act in acts:
                av[gi, si, self.aidx[act]] = True
        return av

    def availability_dict(self, av: np.ndarray) -> dict:
        return {
            (a, s): frozenset(self.actions[k] for k in np.flatnonzero(av[gi, si]))
            for gi, a in enumerate(self.agents)
            for si, s in enumerate(self.states)
        }

    def enabled(self, av: np.ndarray) -> np.ndarray:
        """(states, profiles) mask of profiles built from available actions."""
        en = np.ones((self.n, self.nprofiles), dtype=bool)
        for gi in range(self.g):
            en &= av[gi][:, self.prof_act[:, gi]]
        return en

    def groups(self, coalition) -> tuple:
        """Per-profile index of the coalition's joint choice, and the count."""
        key = frozenset(coalition)
        hit = self._groups.get(key)
        if hit is None:
            members = sorted(self.gidx[a] for a in key)
            grp = np.zeros(self.nprofiles, dtype=np.int32)
            for gi in members:
                grp = grp * self.m + self.prof_act[:, gi]
            hit = (np.ascontiguousarray(grp, dtype=np.int32), self.m ** len(members))
            self._groups[key] = hit
        return hit

    def mask(self, states: Iterable[str]) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        for s in states:
            out[self.sidx[s]] = True
        return out

    def to_states(self, mask: np.ndarray) -> frozenset:
        return frozenset(self.states[i] for i in np.flatnonzero(mask))


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _dupes(xs) -> list:
    seen, out = set(), []
    for x in xs:
        if x in seen and x not in out:
            out.append(x)
        seen.add(x)
    return out


def _fmt(states) -> str:
    return "{" + ",".join(sorted(states)) + "}"


def validate(model: Model) -> ValidationReport:
    """Check the structural constraints of a (imperfect-information) CGS."""
    v = []
    for name, xs in (("agent", model.agents), ("action", model.actions),
                     ("proposition", model.propositions), ("state", model.states)):
        for d in _dupes(xs):
            v.append(f"duplicate {name} {d!r}")
    if not model.states:
        v.append("model has no states")
    props = set(model.propositions)
    for s, lab in model.labelling.items():
        for p in sorted(lab - props):
            v.append(f"undeclared proposition {p!r} at {s}")
    states, actions = set(model.states), set(model.actions)
    for key in model.availability:
        if key[0] not in model.agents or key[1] not in states:
            v.append(f"availability for unknown (agent,state) {key}")
    for a in model.agents:
        for s in model.states:
            acts = model.d(a, s)
            if not acts:
                v.append(f"empty availability at ({a},{s})")
            elif not acts <= actions:
                v.append(f"unknown actions {sorted(acts - actions)} at ({a},{s})")
    for s in model.states:
        for prof in itertools.product(model.actions, repeat=len(model.agents)):
            t = model.transitions.get((s, prof))
            if t is None:
                v.append(f"missing transition from {s} under ({','.join(prof)})")
            elif t not in states:
                v.append(f"transition from {s} under ({','.join(prof)}) to unknown state {t!r}")
    for (s, prof) in model.transitions:
        if s not in states or len(prof) != len(model.agents) or not set(prof) <= actions:
            v.append(f"transition entry for unknown state/profile ({s}, {prof})")
    for a in model.agents:
        blocks = model.observations[a]
        covered = [s for b in blocks for s in b]
        if (any(not b for b in blocks) or len(covered) != len(set(covered))
                or set(covered) != states):
            v.append(f"observations of {a} are not a partition of the states")
            continue
        for b in blocks:
            if len({model.d(a, s) for s in b}) > 1:
                v.append(f"availability not uniform on observation block {_fmt(b)} of {a}")
    return ValidationReport(v)


# ---------------------------------------------------------------------------
# Updates


def _default_perfect(model, formula):
    from atld.mc_perfect import check
    return check(model, formula)


def _default_epistemic(model, formula):
    from atld.mc_epistemic import check_epistemic
    return check_epistemic(model, formula)


def _check_ids(model: Model, spec: UpdateSpec) -> None:
    agents = set(model.agents)
    for it in spec.items:
        if it.action not in model.actions:
            raise ModelError(f"unknown action {it.action!r} in update")
        unknown = (it.targets | it.informed) - agents
        if unknown:
            raise ModelError(f"unknown agents {sorted(unknown)} in update")


def _precondition_sets(model, spec, evaluate) -> list:
    return [frozenset(evaluate(model, it.precondition)) for it in spec.items]


def _upd_sets(model: Model, spec: UpdateSpec, sat: list) -> dict:
    out = {}
    for it, states in zip(spec.items, sat):
        for a in it.targets:
            for s in states:
                out.setdefault((a, s), set()).add(it.action)
    return out


def upd_set(model: Model, spec: UpdateSpec, agent: str, state: str,
            evaluate: Evaluator | None = None) -> frozenset:
    """Actions the update adds to / removes from ``agent`` at ``state``."""
    _check_ids(model, spec)
    evaluate = evaluate or _default_perfect
    return frozenset(_upd_sets(model, spec, _precondition_sets(model, spec, evaluate)).get((agent, state), ()))


def _granted(model, upd) -> dict:
    av = dict(model.availability)
    for key, acts in upd.items():
        av[key] = av.get(key, frozenset()) | acts
    return av


def _removed(model, upd) -> dict:
    av = dict(model.availability)
    for key, acts in upd.items():
        cur = av.get(key, frozenset())
        if not cur <= acts:  # reasonableness: never empty the action set
            av[key] = cur - acts
    return av


def apply_grant(model: Model, spec: UpdateSpec, evaluate: Evaluator | None = None) -> Model:
    if spec.sign != "+":
        raise ModelError("apply_grant needs a '+' update")
    _check_ids(model, spec)
    sat = _precondition_sets(model, spec, evaluate or _default_perfect)
    return model.with_availability(_granted(model, _upd_sets(model, spec, sat)))


def apply_remove(model: Model, spec: UpdateSpec, evaluate: Evaluator | None = None) -> Model:
    if spec.sign != "-":
        raise ModelError("apply_remove needs a '-' update")
    _check_ids(model, spec)
    sat = _precondition_sets(model, spec, evaluate or _default_perfect)
    return model.with_availability(_removed(model, _upd_sets(model, spec, sat)))


def apply_update(model: Model, spec: UpdateSpec, evaluate: Evaluator | None = None) -> Model:
    """Perfect-information update: dispatch on the sign."""
    fn = apply_grant if spec.sign == "+" else apply_remove
    return fn(model, spec, evaluate)


def _refine(blocks, cut: frozenset) -> tuple:
    out = []
    for b in blocks:
        for part in (b & cut, b - cut):
            if part:
                out.append(part)
    return tuple(out)


def apply_epistemic(model: Model, spec: UpdateSpec, evaluate: Evaluator | None = None) -> Model:
    """Update availability and inform every target and informed agent of
    each item's precondition (its observation blocks are split along it).

    Preconditions are evaluated in ``model``, before the update.
    """
    _check_ids(model, spec)
    sat = _precondition_sets(model, spec, evaluate or _default_epistemic)
    upd = _upd_sets(model, spec, sat)
    av = _granted(model, upd) if spec.sign == "+" else _removed(model, upd)
    obs = dict(model.observations)
    for it, states in zip(spec.items, sat):
        for a in it.targets | it.informed:
            obs[a] = _refine(obs[a], states)
    new = replace(model, availability=av, observations=obs)
    _share_arena(model, new)
    for a in new.agents:
        for b in new.observations[a]:
            if len({new.d(a, s) for s in b}) > 1:
                raise UniformityViolation(
                    f"availability of {a} not uniform on {_fmt(b)} after {spec}")
    return new


# ---------------------------------------------------------------------------
# State tagging


def state_tags(model: Model) -> dict:
    """Fresh proposition per state: ``@state:<id>``, or ``@state<k>:<id>``
    if that family is already in use."""
    used = set(model.propositions)
    for lab in model.labelling.values():
        used |= lab
    k = 1
    while True:
        family = "@state:" if k == 1 else f"@state{k}:"
        if not any(p.startswith(family) for p in used):
            return {s: family + s for s in model.states}
        k += 1


def tag_states(model: Model) -> Model:
    """The model with one fresh proposition per state, true only there."""
    tags = state_tags(model)
    labelling = {s: model.labelling[s] | {tags[s]} for s in model.states}
    new = Model(
        model.agents, model.actions, model.propositions + tuple(tags[s] for s in model.states),
        model.states, labelling, model.availability, model.transitions, model.observations,
    )
    return new


# ---------------------------------------------------------------------------
# JSON documents


def _list(data, key) -> list:
    val = data.get(key, [])
    if not isinstance(val, list):
        raise ModelFormatError(f"'{key}' must be a list")
    return val


def _closure(states, groups, agent) -> tuple:
    # union-find over the declared groups (blocks or pairs)
    parent = {s: s for s in states}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for grp in groups:
        if not isinstance(grp, list):
            raise ModelFormatError(f"observations of {agent} must be lists of state ids")
        for s in grp:
            if s not in parent:
                raise ModelFormatError(f"observations of {agent} mention unknown state {s!r}")
        for s, t in zip(grp, grp[1:]):
            parent[find(s)] = find(t)
    blocks = {}
    for s in states:
        blocks.setdefault(find(s), set()).add(s)
    return tuple(frozenset(b) for b in blocks.values())


def model_from_dict(data: dict, *, allow_reserved: bool = False) -> Model:
    """Build a model from its JSON document; rejects duplicate or missing
    transition entries and unknown identifiers."""
    if not isinstance(data, dict):
        raise ModelFormatError("model document must be a JSON object")
    agents = [str(a) for a in _list(data, "agents")]
    actions = [str(a) for a in _list(data, "actions")]
    props = [str(p) for p in _list(data, "propositions")]
    states, labelling = [], {}
    for entry in _list(data, "states"):
        if isinstance(entry, str):
            entry = {"id": entry}
        sid = str(entry["id"])
        states.append(sid)
        labelling[sid] = frozenset(entry.get("label", []))
    if not allow_reserved:
        bad = [p for p in props if p.startswith(RESERVED_PREFIX)]
        bad += [p for lab in labelling.values() for p in lab if p.startswith(RESERVED_PREFIX)]
        if bad:
            raise ModelFormatError(f"proposition names starting with '@' are reserved: {sorted(set(bad))}")
    sset, aset, gset = set(states), set(actions), set(agents)

    availability = {}
    av = data.get("availability", {})
    if not isinstance(av, dict):
        raise ModelFormatError("'availability' must map agent -> state -> actions")
    for a, per_state in av.items():
        if a not in gset:
            raise ModelFormatError(f"availability for unknown agent {a!r}")
        for s, acts in per_state.items():
            if s not in sset:
                raise ModelFormatError(f"availability for unknown state {s!r}")
            unknown = set(acts) - aset
            if unknown:
                raise ModelFormatError(f"unknown actions {sorted(unknown)} at ({a},{s})")
            availability[(a, s)] = frozenset(acts)

    transitions = {}
    for entry in _list(data, "transitions"):
        src, dst, prof = entry.get("from"), entry.get("to"), entry.get("profile", {})
        if src not in sset or dst not in sset:
            raise ModelFormatError(f"transition {entry} mentions an unknown state")
        if set(prof) != gset:
            raise ModelFormatError(f"transition {entry} must give an action for every agent")
        key = (src, tuple(prof[a] for a in agents))
        if not set(key[1]) <= aset:
            raise ModelFormatError(f"transition {entry} uses an unknown action")
        if key in transitions:
            raise ModelFormatError(f"duplicate transition from {src} under {prof}")
        transitions[key] = dst
    default = data.get("default_transition")
    if default not in (None, "self-loop"):
        raise ModelFormatError(f"unsupported default_transition {default!r}")
    for s in states:
        for prof in itertools.product(actions, repeat=len(agents)):
            if (s, prof) not in transitions:
                if default == "self-loop":
                    transitions[(s, prof)] = s
                else:
                    raise ModelFormatError(f"missing transition from {s} under ({','.join(prof)})")

    observations = {}
    for a, groups in (data.get("observations") or {}).items():
        if a not in gset:
            raise ModelFormatError(f"observations for unknown agent {a!r}")
        observations[a] = _closure(states, groups, a)
    return Model(agents, actions, props, states, labelling, availability, transitions, observations)


def model_to_dict(model: Model) -> dict:
    """Canonical JSON document: declaration order, full transition table."""
    order = {a: i for i, a in enumerate(model.actions)}
    porder = {p: i for i, p in enumerate(model.propositions)}
    doc = {
        "agents": list(model.agents),
        "actions": list(model.actions),
        "propositions": list(model.propositions),
        "states": [
            {"id": s, "label": sorted(model.labelling[s], key=lambda p: (porder.get(p, len(porder)), p))}
            for s in model.states
        ],
        "availability": {
            a: {s: sorted(model.d(a, s), key=order.__getitem__) for s in model.states}
            for a in model.agents
        },
        "transitions": [
            {"from": s, "profile": dict(zip(model.agents, prof)), "to": model.transitions[(s, prof)]}
            for s in model.states
            for prof in itertools.product(model.actions, repeat=len(model.agents))
        ],
    }
    if not model.is_perfect_information:
        sorder = {s: i for i, s in enumerate(model.states)}
        doc["observations"] = {
            a: [sorted(b, key=sorder.__getitem__) for b in model.observations[a]]
            for a in model.agents
        }
    return doc


def dump_model(model: Model) -> str:
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def load_model(path, *, allow_reserved: bool = False) -> Model:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(data, allow_reserved=allow_reserved)


def save_model(model: Model, path) -> None:
    with open(path, "w") as fh:
        fh.write(dump_model(model))
