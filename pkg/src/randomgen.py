"""Random small CGSs and PATL formulas for checker-versus-oracle fuzzing.

Probabilities come from a fixed palette of small rationals so exact
solves stay cheap and every failing instance can be replayed from its seed.
"""
from __future__ import annotations

from fractions import Fraction

from config import settings

from .logic import Atom, Comparison, Finally, Globally, Next, Not, Or, Strategic, Top, Until
from .model import build_cgs
from .utils import parse_rational

# ways to split probability mass over distinct successors, palette values only
_SPLITS = (
    ("1",),
    ("1/2", "1/2"),
    ("1/3", "2/3"),
    ("1/4", "3/4"),
    ("1/3", "1/3", "1/3"),
    ("1/4", "1/4", "1/2"),
)


def _palette_splits():
    palette = {parse_rational(p) for p in settings.RATIONAL_PALETTE}
    return [s for s in _SPLITS if all(parse_rational(p) in palette for p in s)]


def _random_partition(rng, states, imperfect):
    if not imperfect:
        return [[s] for s in states]
    tags = rng.integers(0, len(states), size=len(states))
    groups = {}
    for s, tag in zip(states, tags):
        groups.setdefault(int(tag), []).append(s)
    return [groups[t] for t in sorted(groups)]


def random_cgs(rng, n_states=None, n_agents=2, max_actions=2, n_atoms=2, imperfect=True, deterministic=False):
    """A random well-formed CGS drawn with a numpy Generator.

    Legality is drawn per observation class, so uniformity holds by construction.
    """
    if n_states is None:
        n_states = int(rng.integers(1, 6))
    states = [f"s{i}" for i in range(n_states)]
    agents = [f"a{i + 1}" for i in range(n_agents)]
    actions = ["x", "y", "z", "w"][:max_actions]
    atoms = ["p", "q", "r"][:n_atoms]

    observation, legality = {}, {s: {} for s in states}
    for a in agents:
        classes = _random_partition(rng, states, imperfect)
        observation[a] = classes
        for members in classes:
            k = int(rng.integers(1, max_actions + 1))
            chosen = sorted(rng.choice(len(actions), size=k, replace=False).tolist())
            for s in members:
                legality[s][a] = [actions[c] for c in chosen]

    splits = [("1",)] if deterministic else [s for s in _palette_splits() if len(s) <= n_states]
    transitions = []
    for s in states:
        grids = [[]]
        for a in agents:
            grids = [g + [c] for g in grids for c in legality[s][a]]
        for combo in grids:
            split = splits[int(rng.integers(0, len(splits)))]
            targets = rng.choice(n_states, size=len(split), replace=False).tolist()
            transitions.append({
                "state": s,
                "action": dict(zip(agents, combo)),
                "dist": {states[t]: p for t, p in zip(targets, split)},
            })

    raw = {
        "agents": agents,
        "actions": actions,
        "atoms": atoms,
        "states": [{"id": s, "atoms": [p for p in atoms if rng.random() < 0.5]} for s in states],
        "legality": legality,
        "observation": observation,
        "transitions": transitions,
    }
    return build_cgs(raw)


def _thresholds():
    return [Fraction(0)] + [parse_rational(p) for p in settings.RATIONAL_PALETTE]


def random_patl_formula(rng, cgs, depth=2, boolean_depth=2):
    """A random PATL state formula over the CGS's atoms and agents with modality depth <= depth."""
    thresholds = _thresholds()
    comparisons = list(Comparison)

    def leaf():
        if not cgs.atoms or rng.random() < 0.15:
            return Top()
        return Atom(cgs.atoms[int(rng.integers(0, len(cgs.atoms)))])

    def state(d, b):
        roll = rng.random()
        if d > 0 and roll < 0.5:
            return modality(d)
        if b > 0 and roll < 0.65:
            return Not(state(d, b - 1))
        if b > 0 and roll < 0.8:
            return Or(state(d, b - 1), state(d, b - 1))
        return leaf()

    def modality(d):
        members = tuple(sorted(a for a in cgs.agents if rng.random() < 0.5))
        kind = int(rng.integers(0, 4))
        inner = lambda: state(d - 1, 1)  # noqa: E731
        if kind == 0:
            path = Next(inner())
        elif kind == 1:
            path = Until(inner(), inner())
        elif kind == 2:
            path = Finally(inner())
        else:
            path = Globally(inner())
        cmp = comparisons[int(rng.integers(0, len(comparisons)))]
        threshold = thresholds[int(rng.integers(0, len(thresholds)))]
        return Strategic(members, cmp, threshold, path)

    return state(depth, boolean_depth)
