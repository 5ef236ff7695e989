"""Stochastic concurrent game structures with imperfect information.

Labels (strings) are what model files and reports use; internally every
state, agent, action and atom is a dense integer index into the label
tuples of the CGS. Joint actions are tuples of action indices ordered by
agent index.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

from .errors import BindingError, DistributionError, IllegalActionError, ModelError
from .utils import format_rational, parse_rational

logger = logging.getLogger(__name__)


class Distribution(Mapping):
    """Finite distribution with exact rational probabilities.

    Zero-probability entries are dropped on construction; the remaining
    probabilities must be positive and sum to exactly 1.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs):
        cleaned = {}
        for outcome, p in dict(probs).items():
            p = Fraction(p)
            if p < 0 or p > 1:
                raise DistributionError(f"probability {format_rational(p)} of {outcome!r} is outside [0, 1]")
            if p:
                cleaned[outcome] = p
        total = sum(cleaned.values(), Fraction(0))
        if total != 1:
            raise DistributionError(f"probabilities sum to {format_rational(total)}, not 1")
        self._probs = dict(sorted(cleaned.items()))

    @classmethod
    def dirac(cls, outcome):
        return cls({outcome: Fraction(1)})

    def __getitem__(self, outcome):
        return self._probs[outcome]

    def __iter__(self):
        return iter(self._probs)

    def __len__(self):
        return len(self._probs)

    def __hash__(self):
        return hash(frozenset(self._probs.items()))

    def __repr__(self):
        inner = ", ".join(f"{k!r}: {format_rational(v)}" for k, v in self._probs.items())
        return f"Distribution({{{inner}}})"

    def prob(self, outcome):
        return self._probs.get(outcome, Fraction(0))

    def mass(self, outcomes):
        return sum((p for o, p in self._probs.items() if o in outcomes), Fraction(0))

    @property
    def support(self):
        return tuple(self._probs)

    @property
    def is_dirac(self):
        return len(self._probs) == 1


def product_distribution(distributions):
    """Product of independent distributions; outcomes are tuples of components."""
    distributions = list(distributions)
    probs = {}
    for combo in itertools.product(*(d.items() for d in distributions)):
        outcome = tuple(o for o, _ in combo)
        probs[outcome] = math.prod((p for _, p in combo), start=Fraction(1))
    return Distribution(probs)


@dataclass(frozen=True)
class Violation:
    kind: str
    location: str
    message: str

    def __str__(self):
        return f"{self.kind} at {self.location}: {self.message}"


@dataclass(frozen=True, eq=False)
class CGS:
    agents: tuple
    actions: tuple
    atoms: tuple
    states: tuple
    legality: tuple  # [state][agent] -> tuple of action indices
    transitions: Mapping = field(repr=False)  # (state, joint action) -> Distribution over states
    labeling: tuple  # [state] -> frozenset of atom indices
    observation: tuple  # [agent] -> tuple of classes, each a sorted tuple of states

    @property
    def n_states(self):
        return len(self.states)

    @property
    def n_agents(self):
        return len(self.agents)

    @cached_property
    def _class_of(self):
        table = []
        for classes in self.observation:
            row = [0] * len(self.states)
            for k, members in enumerate(classes):
                for s in members:
                    row[s] = k
            table.append(tuple(row))
        return tuple(table)

    @cached_property
    def _state_lookup(self):
        return {label: i for i, label in enumerate(self.states)}

    @cached_property
    def _agent_lookup(self):
        return {label: i for i, label in enumerate(self.agents)}

    @cached_property
    def _action_lookup(self):
        return {label: i for i, label in enumerate(self.actions)}

    @cached_property
    def _atom_lookup(self):
        return {label: i for i, label in enumerate(self.atoms)}

    def state_index(self, state):
        return _resolve(state, self._state_lookup, len(self.states), "state")

    def agent_index(self, agent):
        return _resolve(agent, self._agent_lookup, len(self.agents), "agent")

    def action_index(self, action):
        return _resolve(action, self._action_lookup, len(self.actions), "action")

    def atom_index(self, atom):
        return _resolve(atom, self._atom_lookup, len(self.atoms), "atom")

    def states_with_atom(self, atom):
        p = self.atom_index(atom)
        return frozenset(s for s in range(self.n_states) if p in self.labeling[s])

    def legal(self, s, agent):
        return self.legality[s][agent]

    def class_members(self, agent, k):
        return self.observation[agent][k]

    def label_table(self):
        return {
            "states": list(self.states),
            "agents": list(self.agents),
            "actions": list(self.actions),
            "atoms": list(self.atoms),
        }


def _resolve(key, lookup, size, kind):
    if isinstance(key, int) and not isinstance(key, bool):
        if 0 <= key < size:
            return key
    elif key in lookup:
        return lookup[key]
    raise BindingError(f"unknown {kind} {key!r}")


def obs_class(cgs, agent, s):
    """Canonical observation-class index of state s for the agent.

    Classes are numbered by their lowest-index member, so under the
    identity partition the class of s is s itself.
    """
    a = cgs.agent_index(agent)
    return cgs._class_of[a][cgs.state_index(s)]


def joint_actions(cgs, s, agents=None):
    """Legal action tuples of the given agents at s, in lexicographic order."""
    agents = range(cgs.n_agents) if agents is None else agents
    return list(itertools.product(*(cgs.legality[s][a] for a in agents)))


def successors(cgs, s, joint_action):
    """delta(s, joint action) as a Distribution over state indices."""
    s = cgs.state_index(s)
    if isinstance(joint_action, Mapping):
        if len(joint_action) != cgs.n_agents:
            raise BindingError(f"joint action must assign every agent exactly once, got {dict(joint_action)!r}")
        resolved = [None] * cgs.n_agents
        for agent, action in joint_action.items():
            resolved[cgs.agent_index(agent)] = cgs.action_index(action)
        if any(x is None for x in resolved):
            raise BindingError(f"joint action must assign every agent exactly once, got {dict(joint_action)!r}")
        joint_action = tuple(resolved)
    joint_action = tuple(joint_action)
    if len(joint_action) != cgs.n_agents:
        raise BindingError(f"joint action {joint_action!r} does not cover the {cgs.n_agents} agents")
    for a, c in enumerate(joint_action):
        if c not in cgs.legality[s][a]:
            raise IllegalActionError(cgs.states[s], cgs.agents[a], cgs.actions[c])
    return cgs.transitions[(s, joint_action)]


def is_deterministic(cgs):
    return all(d.is_dirac for d in cgs.transitions.values())


# --- loading and validation -------------------------------------------------


def load_model(path):
    """Read a model file and return its raw JSON structure."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ModelError(f"cannot read model file {path}: {e}") from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"model file {path} is not valid JSON: {e}") from e


def _labels(raw, key, report, allow_empty=False):
    value = raw.get(key)
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        report("schema", key, f"'{key}' must be a list of strings")
        return None
    if not value and not allow_empty:
        report("schema", key, f"'{key}' must not be empty")
        return None
    seen = set()
    for x in value:
        if x in seen:
            report("duplicate-label", key, f"label {x!r} declared twice")
        seen.add(x)
    return value


def validate_cgs(raw):
    """Return every violation of the CGS well-formedness assumptions (empty if valid)."""
    violations = []

    def report(kind, location, message):
        violations.append(Violation(kind, location, message))

    if not isinstance(raw, Mapping):
        report("schema", "$", "model must be a JSON object")
        return violations

    agents = _labels(raw, "agents", report)
    actions = _labels(raw, "actions", report)
    atoms = _labels(raw, "atoms", report, allow_empty=True)

    states = []
    raw_states = raw.get("states")
    if not isinstance(raw_states, list) or not raw_states:
        report("schema", "states", "'states' must be a non-empty list of {id, atoms} objects")
    else:
        for i, entry in enumerate(raw_states):
            if not isinstance(entry, Mapping) or not isinstance(entry.get("id"), str):
                report("schema", f"states[{i}]", "state entry needs a string 'id'")
                continue
            sid = entry["id"]
            if sid in states:
                report("duplicate-label", f"states[{i}]", f"state {sid!r} declared twice")
            states.append(sid)
            labels = entry.get("atoms", [])
            if not isinstance(labels, list):
                report("schema", f"states[{i}].atoms", "'atoms' must be a list")
                continue
            for p in labels:
                if atoms is not None and p not in atoms:
                    report("unknown-reference", f"states[{i}].atoms", f"unknown atom {p!r}")

    if agents is None or actions is None or not states:
        return violations
    state_set, agent_set, action_set = set(states), set(agents), set(actions)

    # legality
    legal = {}
    raw_legality = raw.get("legality")
    if not isinstance(raw_legality, Mapping):
        report("schema", "legality", "'legality' must map states to {agent: [actions]}")
        raw_legality = {}
    for s in raw_legality:
        if s not in state_set:
            report("unknown-reference", f"legality.{s}", f"unknown state {s!r}")
    for s in states:
        row = raw_legality.get(s, {})
        if not isinstance(row, Mapping):
            report("schema", f"legality.{s}", "legality row must map agents to action lists")
            row = {}
        for a in row:
            if a not in agent_set:
                report("unknown-reference", f"legality.{s}.{a}", f"unknown agent {a!r}")
        for a in agents:
            acts = row.get(a)
            if not isinstance(acts, list) or not acts:
                report("empty-legality", f"legality.{s}.{a}", f"agent {a!r} has no legal action in state {s!r}")
                continue
            unknown = [c for c in acts if not isinstance(c, str) or c not in action_set]
            for c in unknown:
                report("unknown-reference", f"legality.{s}.{a}", f"unknown action {c!r}")
            if not unknown:
                legal[(s, a)] = frozenset(acts)

    # observation partitions
    raw_obs = raw.get("observation", {})
    if not isinstance(raw_obs, Mapping):
        report("schema", "observation", "'observation' must map agents to lists of state classes")
        raw_obs = {}
    for a in raw_obs:
        if a not in agent_set:
            report("unknown-reference", f"observation.{a}", f"unknown agent {a!r}")
    for a in agents:
        classes = raw_obs.get(a)
        if classes is None:
            continue
        if not isinstance(classes, list) or not all(isinstance(k, list) for k in classes):
            report("schema", f"observation.{a}", "partition must be a list of state lists")
            continue
        seen = {}
        for k, members in enumerate(classes):
            if not members:
                report("partition", f"observation.{a}[{k}]", "empty observation class")
            for s in members:
                if not isinstance(s, str) or s not in state_set:
                    report("unknown-reference", f"observation.{a}[{k}]", f"unknown state {s!r}")
                elif s in seen:
                    report("partition", f"observation.{a}[{k}]", f"state {s!r} also appears in class {seen[s]}")
                else:
                    seen[s] = k
        for s in states:
            if s not in seen:
                report("partition", f"observation.{a}", f"state {s!r} is not covered by any class")
        for k, members in enumerate(classes):
            members = [s for s in members if isinstance(s, str) and s in state_set and (s, a) in legal]
            for s in members[1:]:
                if legal[(s, a)] != legal[(members[0], a)]:
                    report(
                        "uniformity",
                        f"observation.{a}[{k}]",
                        f"agent {a!r} cannot distinguish {members[0]!r} and {s!r} but their legal actions differ",
                    )

    # transitions
    defined = set()
    raw_transitions = raw.get("transitions")
    if not isinstance(raw_transitions, list):
        report("schema", "transitions", "'transitions' must be a list")
        raw_transitions = []
    for i, entry in enumerate(raw_transitions):
        where = f"transitions[{i}]"
        if not isinstance(entry, Mapping):
            report("schema", where, "transition entry must be an object")
            continue
        s = entry.get("state")
        if not isinstance(s, str) or s not in state_set:
            report("unknown-reference", f"{where}.state", f"unknown state {s!r}")
            s = None
        move = entry.get("action")
        key = None
        if not isinstance(move, Mapping):
            report("schema", f"{where}.action", "'action' must map every agent to an action")
        else:
            ok = True
            for a in move:
                if a not in agent_set:
                    report("unknown-reference", f"{where}.action", f"unknown agent {a!r}")
                    ok = False
            for a in agents:
                c = move.get(a)
                if c is None:
                    report("schema", f"{where}.action", f"joint action does not assign agent {a!r}")
                    ok = False
                elif not isinstance(c, str) or c not in action_set:
                    report("unknown-reference", f"{where}.action", f"unknown action {c!r}")
                    ok = False
                elif s is not None and (s, a) in legal and c not in legal[(s, a)]:
                    report("illegal-transition", f"{where}.action", f"action {c!r} is not legal for {a!r} in {s!r}")
                    ok = False
            if ok and s is not None:
                key = (s, tuple(move[a] for a in agents))
                if key in defined:
                    report("duplicate-transition", where, f"transition for {s!r} under {dict(move)} defined twice")
                defined.add(key)
        dist = entry.get("dist")
        if not isinstance(dist, Mapping):
            report("schema", f"{where}.dist", "'dist' must map states to probabilities")
            continue
        total = Fraction(0)
        well_typed = True
        for t, p in dist.items():
            if t not in state_set:
                report("unknown-reference", f"{where}.dist", f"unknown state {t!r}")
            try:
                value = parse_rational(p)
            except DistributionError as e:
                report("bad-probability", f"{where}.dist.{t}", str(e))
                well_typed = False
                continue
            if value > 1:
                report("bad-probability", f"{where}.dist.{t}", f"probability {format_rational(value)} exceeds 1")
                well_typed = False
            total += value
        if well_typed and total != 1:
            report("sum", f"{where}.dist", f"probabilities sum to {format_rational(total)}")

    # seriality: every legal joint action of every state has a distribution
    for s in states:
        sets = [legal.get((s, a)) for a in agents]
        if any(x is None for x in sets):
            continue
        ordered = [sorted(x, key=actions.index) for x in sets]
        for combo in itertools.product(*ordered):
            if (s, combo) not in defined:
                move = dict(zip(agents, combo))
                report("missing-transition", f"transitions.{s}", f"no distribution for joint action {move}")

    return violations


def build_cgs(raw):
    """Validate a raw model structure and build the immutable CGS."""
    violations = validate_cgs(raw)
    if violations:
        raise ModelError(f"model has {len(violations)} violation(s)", violations)

    agents = tuple(raw["agents"])
    actions = tuple(raw["actions"])
    atoms = tuple(raw.get("atoms", []))
    states = tuple(entry["id"] for entry in raw["states"])
    s_idx = {x: i for i, x in enumerate(states)}
    c_idx = {x: i for i, x in enumerate(actions)}
    p_idx = {x: i for i, x in enumerate(atoms)}

    labeling = tuple(frozenset(p_idx[p] for p in entry.get("atoms", [])) for entry in raw["states"])
    legality = tuple(
        tuple(tuple(sorted(c_idx[c] for c in set(raw["legality"][s][a]))) for a in agents) for s in states
    )
    observation = []
    for a in agents:
        classes = raw.get("observation", {}).get(a)
        if classes is None:
            classes = [[s] for s in states]
        observation.append(tuple(sorted(tuple(sorted(s_idx[s] for s in k)) for k in classes)))

    transitions = {}
    for entry in raw["transitions"]:
        s = s_idx[entry["state"]]
        move = tuple(c_idx[entry["action"][a]] for a in agents)
        transitions[(s, move)] = Distribution({s_idx[t]: parse_rational(p) for t, p in entry["dist"].items()})

    cgs = CGS(
        agents=agents,
        actions=actions,
        atoms=atoms,
        states=states,
        legality=legality,
        transitions=transitions,
        labeling=labeling,
        observation=tuple(observation),
    )
    logger.debug("built CGS with %d states, %d agents, %d transitions", cgs.n_states, cgs.n_agents, len(transitions))
    return cgs


def read_cgs(path):
    raw = load_model(path)
    cgs = build_cgs(raw)
    logger.info("loaded model %s: %d states, %d agents", path, cgs.n_states, cgs.n_agents)
    return cgs


def cgs_to_dict(cgs):
    """Serialise a CGS in the model file format."""
    observation = {}
    for a, classes in enumerate(cgs.observation):
        if any(len(k) > 1 for k in classes):
            observation[cgs.agents[a]] = [[cgs.states[s] for s in k] for k in classes]
    transitions = []
    for (s, move), dist in sorted(cgs.transitions.items()):
        transitions.append({
            "state": cgs.states[s],
            "action": {cgs.agents[a]: cgs.actions[c] for a, c in enumerate(move)},
            "dist": {cgs.states[t]: format_rational(p) for t, p in dist.items()},
        })
    return {
        "agents": list(cgs.agents),
        "actions": list(cgs.actions),
        "atoms": list(cgs.atoms),
        "states": [
            {"id": label, "atoms": [cgs.atoms[p] for p in sorted(cgs.labeling[s])]}
            for s, label in enumerate(cgs.states)
        ],
        "legality": {
            cgs.states[s]: {cgs.agents[a]: [cgs.actions[c] for c in row[a]] for a in range(cgs.n_agents)}
            for s, row in enumerate(cgs.legality)
        },
        "observation": observation,
        "transitions": transitions,
    }
