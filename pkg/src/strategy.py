"""Uniform memoryless strategies and their enumeration.

A deterministic uniform strategy of an agent picks one action per
observation class; a coalition assignment bundles one such strategy per
coalition member. Assignments are enumerated in lexicographic order over
(agent index, class index, action index), so position i of the
enumeration is a stable identifier of an assignment.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import ProfileError
from .model import Distribution


@dataclass(frozen=True)
class UniformStrategy:
    agent: int
    choice: tuple  # [observation class] -> action index

    def action_at(self, cgs, s):
        return self.choice[cgs._class_of[self.agent][s]]


@dataclass(frozen=True)
class ProbabilisticMemorylessStrategy:
    agent: int
    choice: tuple  # [state] -> Distribution over action indices
    uniform: bool = False


@dataclass(frozen=True)
class CoalitionAssignment:
    strategies: tuple  # UniformStrategy per coalition member, ordered by agent index

    @property
    def coalition(self):
        return tuple(st.agent for st in self.strategies)

    def action(self, cgs, agent, s):
        for st in self.strategies:
            if st.agent == agent:
                return st.action_at(cgs, s)
        raise KeyError(f"agent {agent} is not in the coalition")

    def actions_at(self, cgs, s):
        return {st.agent: st.action_at(cgs, s) for st in self.strategies}


def coalition_indices(cgs, coalition):
    """Sorted agent indices of a coalition given by labels or indices."""
    return tuple(sorted({cgs.agent_index(a) for a in coalition}))


def _class_actions(cgs, agent):
    # legality is constant on a class (uniformity); read it off the representative
    return [cgs.legality[members[0]][agent] for members in cgs.observation[agent]]


def strategy_count(cgs, coalition):
    agents = coalition_indices(cgs, coalition)
    return math.prod(len(acts) for a in agents for acts in _class_actions(cgs, a))


def enumerate_uniform_strategies(cgs, coalition, start=0, stop=None):
    """Yield every CoalitionAssignment once, in lexicographic order.

    `start`/`stop` select a contiguous index range of the enumeration.
    """
    agents = coalition_indices(cgs, coalition)
    slots = [(a, acts) for a in agents for acts in _class_actions(cgs, a)]
    combos = itertools.product(*(acts for _, acts in slots))
    for combo in itertools.islice(combos, start, stop):
        yield _assemble(agents, slots, combo)


def assignment_at(cgs, coalition, index):
    """The assignment at position `index` of the enumeration (mixed-radix decoding)."""
    agents = coalition_indices(cgs, coalition)
    slots = [(a, acts) for a in agents for acts in _class_actions(cgs, a)]
    total = math.prod(len(acts) for _, acts in slots)
    if not 0 <= index < total:
        raise IndexError(f"assignment index {index} outside [0, {total})")
    digits = []
    for _, acts in reversed(slots):
        index, digit = divmod(index, len(acts))
        digits.append(acts[digit])
    return _assemble(agents, slots, tuple(reversed(digits)))


def _assemble(agents, slots, combo):
    per_agent = {a: [] for a in agents}
    for (a, _), c in zip(slots, combo):
        per_agent[a].append(c)
    return CoalitionAssignment(tuple(UniformStrategy(a, tuple(per_agent[a])) for a in agents))


def dirac_lift(cgs, strategy):
    """The probabilistic memoryless strategy playing a uniform strategy's action with probability 1."""
    return ProbabilisticMemorylessStrategy(
        agent=strategy.agent,
        choice=tuple(Distribution.dirac(strategy.action_at(cgs, s)) for s in range(cgs.n_states)),
        uniform=True,
    )


def is_uniform(cgs, strategy):
    """True iff the strategy plays identical distributions on each observation class of its agent."""
    if len(strategy.choice) != cgs.n_states:
        raise ProfileError(f"strategy of agent {cgs.agents[strategy.agent]!r} is not total on states")
    for members in cgs.observation[strategy.agent]:
        first = strategy.choice[members[0]]
        if any(strategy.choice[s] != first for s in members[1:]):
            return False
    return True


def respects_legality(cgs, strategy):
    return all(
        set(strategy.choice[s].support) <= set(cgs.legality[s][strategy.agent]) for s in range(cgs.n_states)
    )


def assignment_to_json(cgs, assignment):
    """{agent: {class representative state: action}}; the representative is the lowest-index member."""
    out = {}
    for st in assignment.strategies:
        classes = cgs.observation[st.agent]
        out[cgs.agents[st.agent]] = {
            cgs.states[members[0]]: cgs.actions[c] for members, c in zip(classes, st.choice)
        }
    return out
