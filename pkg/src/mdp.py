"""Single-adversary MDPs induced by a fixed coalition strategy, and their exact solution.

Extremal until-probabilities are computed in two stages: a qualitative
graph precomputation of the states with value exactly 0 or 1, then
policy iteration with exact rational solves on the remaining states.
Target states count as absorbing success and states that are neither safe
nor target as absorbing failure.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx

from . import linalg
from .model import joint_actions
from .strategy import coalition_indices
from .utils import format_rational

logger = logging.getLogger(__name__)

MIN = "min"
MAX = "max"


@dataclass(frozen=True)
class MDP:
    n_states: int
    opponents: tuple  # agent indices merged into the adversary
    moves: tuple  # [state] -> tuple of opponent action tuples
    transitions: tuple  # [state] -> tuple of Distributions, aligned with moves

    def post(self, s, m):
        return self.transitions[s][m].support


@dataclass(frozen=True)
class UntilObjective:
    safe: frozenset
    target: frozenset


@dataclass(frozen=True)
class Solution:
    values: tuple  # [state] -> Fraction
    policy: tuple  # [state] -> index of the chosen adversary move


def induce_mdp(cgs, coalition, assignment):
    """Fix the coalition's actions and merge every other agent into one adversary."""
    members = coalition_indices(cgs, coalition)
    opponents = tuple(a for a in range(cgs.n_agents) if a not in members)
    moves, transitions = [], []
    for s in range(cgs.n_states):
        fixed = assignment.actions_at(cgs, s)
        row_moves = joint_actions(cgs, s, opponents)
        row = []
        for opp in row_moves:
            full = [None] * cgs.n_agents
            for a, c in fixed.items():
                full[a] = c
            for a, c in zip(opponents, opp):
                full[a] = c
            row.append(cgs.transitions[(s, tuple(full))])
        moves.append(tuple(row_moves))
        transitions.append(tuple(row))
    return MDP(cgs.n_states, opponents, tuple(moves), tuple(transitions))


def restrict(mdp, policy):
    """The MDP keeping only the move chosen by a memoryless policy (a Markov chain)."""
    return MDP(
        mdp.n_states,
        mdp.opponents,
        tuple((mdp.moves[s][policy[s]],) for s in range(mdp.n_states)),
        tuple((mdp.transitions[s][policy[s]],) for s in range(mdp.n_states)),
    )


# --- qualitative precomputation ----------------------------------------------------


def _live(mdp, obj):
    return frozenset(s for s in obj.safe if s not in obj.target and 0 <= s < mdp.n_states)


def _graph(mdp, live):
    g = nx.DiGraph()
    g.add_nodes_from(range(mdp.n_states))
    for s in live:
        for m in range(len(mdp.moves[s])):
            g.add_edges_from((s, t) for t in mdp.post(s, m))
    return g


def _backward_closure(g, seeds):
    reached = set(seeds)
    for t in seeds:
        reached |= nx.ancestors(g, t)
    return reached


def _prob0_max(mdp, obj, live):
    reach = _backward_closure(_graph(mdp, live), obj.target)
    return frozenset(range(mdp.n_states)) - reach


def _prob0_min(mdp, obj, live):
    """States where the adversary can avoid the target forever."""
    forced = set(obj.target)
    changed = True
    while changed:
        changed = False
        for s in sorted(live - forced):
            if all(forced.intersection(mdp.post(s, m)) for m in range(len(mdp.moves[s]))):
                forced.add(s)
                changed = True
    return frozenset(range(mdp.n_states)) - forced


def _prob1_min(mdp, obj, live, zero_min):
    escape = _backward_closure(_graph(mdp, live), zero_min)
    return frozenset(range(mdp.n_states)) - escape


def _prob1_max(mdp, obj, live):
    """States from which some adversary policy reaches the target almost surely."""
    keep = set(range(mdp.n_states))
    while True:
        reach = set(obj.target)
        changed = True
        while changed:
            changed = False
            for s in sorted((live & keep) - reach):
                if any(
                    all(t in keep for t in mdp.post(s, m)) and reach.intersection(mdp.post(s, m))
                    for m in range(len(mdp.moves[s]))
                ):
                    reach.add(s)
                    changed = True
        if reach == keep:
            return frozenset(keep)
        keep = reach


def prob01(mdp, obj, mode):
    """(zero-set, one-set) of the extremal until-probability, by graph fixpoints only."""
    live = _live(mdp, obj)
    if mode == MAX:
        return _prob0_max(mdp, obj, live), _prob1_max(mdp, obj, live)
    zero = _prob0_min(mdp, obj, live)
    return zero, _prob1_min(mdp, obj, live, zero)


# --- quantitative solution -----------------------------------------------------


def _q_value(dist, values):
    return sum((p * values[t] for t, p in dist.items()), Fraction(0))


def _solve_region(mdp, policy, region, values):
    """Solve x_s = sum_t P(s,t) x_t on `region` with the values outside it fixed."""
    index = {s: i for i, s in enumerate(region)}
    n = len(region)
    a = [[Fraction(0)] * n for _ in range(n)]
    b = [Fraction(0)] * n
    for s, i in index.items():
        a[i][i] += 1
        for t, p in mdp.transitions[s][policy[s]].items():
            if t in index:
                a[i][index[t]] -= p
            else:
                b[i] += p * values[t]
    for s, x in zip(region, linalg.solve(a, b)):
        values[s] = x


def _initial_max_policy(mdp, obj, live, unknown):
    # every unknown state moves, with positive probability, strictly closer to the target
    policy = {}
    reached = set(obj.target)
    frontier = True
    while frontier:
        frontier = False
        for s in sorted(live - reached):
            for m in range(len(mdp.moves[s])):
                if reached.intersection(mdp.post(s, m)):
                    policy[s] = m
                    break
        newly = {s for s in policy if s not in reached}
        if newly:
            reached |= newly
            frontier = True
    return {s: policy[s] for s in unknown}


def extremal_until(mdp, obj, mode):
    """Exact min/max probability of (safe U target) per state, with an optimal adversary policy."""
    live = _live(mdp, obj)
    if mode == MAX:
        zero = _prob0_max(mdp, obj, live)
        one = _prob1_max(mdp, obj, live)
    else:
        zero = _prob0_min(mdp, obj, live)
        one = _prob1_min(mdp, obj, live, zero)
    unknown = sorted(set(range(mdp.n_states)) - zero - one)

    values = [Fraction(1) if s in one else Fraction(0) for s in range(mdp.n_states)]
    policy = [0] * mdp.n_states
    if mode == MAX:
        for s, m in _initial_max_policy(mdp, obj, live, unknown).items():
            policy[s] = m

    rounds = 0
    while unknown:
        rounds += 1
        _solve_region(mdp, policy, unknown, values)
        improved = False
        for s in unknown:
            current = values[s]
            q = [_q_value(d, values) for d in mdp.transitions[s]]
            best = max(q) if mode == MAX else min(q)
            better = best > current if mode == MAX else best < current
            if better:
                policy[s] = q.index(best)
                improved = True
        if not improved:
            break
    logger.debug("until solve (%s): %d unknown states, %d policy-iteration rounds", mode, len(unknown), rounds)
    return Solution(tuple(values), tuple(_lowest_index_policy(mdp, obj, live, values)))


def _lowest_index_policy(mdp, obj, live, values):
    """Lowest-index move attaining `values` at each live state.

    A positive-value state whose lowest optimal move never reaches the
    target (an optimal-looking cycle) takes the lowest optimal move that
    does instead.
    """
    optimal = {s: [m for m, d in enumerate(mdp.transitions[s]) if _q_value(d, values) == values[s]] for s in live}
    policy = [0] * mdp.n_states
    for s in live:
        policy[s] = optimal[s][0]
    while True:
        good = _backward_closure(_graph(restrict(mdp, policy), live), obj.target)
        stuck = sorted(s for s in live if values[s] > 0 and s not in good)
        moved = False
        for s in stuck:
            m = next((m for m in optimal[s] if good.intersection(mdp.post(s, m))), policy[s])
            moved |= m != policy[s]
            policy[s] = m
        if not moved:
            return policy


def extremal_next(mdp, target, mode):
    """Per state, the min/max over adversary moves of the one-step mass on `target`."""
    values, policy = [], []
    for s in range(mdp.n_states):
        q = [d.mass(target) for d in mdp.transitions[s]]
        best = max(q) if mode == MAX else min(q)
        values.append(best)
        policy.append(q.index(best))
    return Solution(tuple(values), tuple(policy))


def policy_values(mdp, obj, policy):
    """Until-probabilities of the Markov chain obtained by fixing an adversary policy."""
    return extremal_until(restrict(mdp, policy), obj, MIN).values


def mdp_to_dict(cgs, mdp, solution=None):
    """Debug dump of an induced MDP (and optionally its solution) with labels and rational strings."""
    out = {
        "states": list(cgs.states),
        "opponents": [cgs.agents[a] for a in mdp.opponents],
        "moves": {
            cgs.states[s]: [
                {
                    "action": {cgs.agents[a]: cgs.actions[c] for a, c in zip(mdp.opponents, move)},
                    "dist": {cgs.states[t]: format_rational(p) for t, p in dist.items()},
                }
                for move, dist in zip(mdp.moves[s], mdp.transitions[s])
            ]
            for s in range(mdp.n_states)
        },
    }
    if solution is not None:
        out["values"] = {cgs.states[s]: format_rational(v) for s, v in enumerate(solution.values)}
        out["policy"] = {cgs.states[s]: m for s, m in enumerate(solution.policy)}
    return out
