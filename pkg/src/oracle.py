"""Ground truth for the checker: brute-force enumeration, induced Markov chains and sampling.

Nothing here goes through `src.mdp`: the brute-force oracle enumerates
every coalition assignment together with every deterministic memoryless
adversary policy and solves the resulting Markov chain directly.
"""
from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx
import numpy as np
from scipy.stats import norm

from config import settings

from . import linalg
from .errors import DistributionError, FragmentError, OracleGuardError, ProfileError
from .logic import Atom, Comparison, Next, Not, Or, Top, bind_formula, desugar, is_patl, state_subformulas
from .mdp import UntilObjective
from .model import Distribution, is_deterministic, joint_actions, product_distribution, successors
from .strategy import (
    ProbabilisticMemorylessStrategy,
    coalition_indices,
    enumerate_uniform_strategies,
    is_uniform,
    strategy_count,
)
from .utils import format_rational, parse_rational

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MarkovChain:
    n_states: int
    rows: tuple  # [state] -> Distribution over states


@dataclass(frozen=True)
class NextObjective:
    target: frozenset


@dataclass(frozen=True)
class OracleVerdicts:
    formula: object  # desugared, bound
    labels: dict  # state subformula -> frozenset of satisfying states

    @property
    def satisfying_states(self):
        return self.labels[self.formula]


# --- induced chains ----------------------------------------------------------------


def _profile_by_agent(cgs, profile):
    strategies = profile.values() if isinstance(profile, Mapping) else profile
    by_agent = {}
    for st in strategies:
        if not isinstance(st, ProbabilisticMemorylessStrategy):
            raise ProfileError(f"profile entry {st!r} is not a memoryless strategy")
        if st.agent in by_agent:
            raise ProfileError(f"agent {cgs.agents[st.agent]!r} has two strategies in the profile")
        if len(st.choice) != cgs.n_states:
            raise ProfileError(f"strategy of agent {cgs.agents[st.agent]!r} is not total on states")
        for s, dist in enumerate(st.choice):
            if not isinstance(dist, Distribution):
                raise ProfileError(f"choice of agent {cgs.agents[st.agent]!r} at {cgs.states[s]!r} is not a distribution")
            illegal = set(dist.support) - set(cgs.legality[s][st.agent])
            if illegal:
                names = ", ".join(cgs.actions[c] for c in sorted(illegal))
                raise ProfileError(f"agent {cgs.agents[st.agent]!r} plays illegal action(s) {names} at {cgs.states[s]!r}")
        by_agent[st.agent] = st
    missing = [cgs.agents[a] for a in range(cgs.n_agents) if a not in by_agent]
    if missing:
        raise ProfileError(f"profile has no strategy for agent(s) {', '.join(missing)}")
    return by_agent


def induced_chain(cgs, profile):
    """The finite Markov chain of a full memoryless profile: p(s,t) = sum over joint actions of prob * delta."""
    by_agent = _profile_by_agent(cgs, profile)
    rows = []
    for s in range(cgs.n_states):
        joint = product_distribution(by_agent[a].choice[s] for a in range(cgs.n_agents))
        acc = defaultdict(Fraction)
        for move, q in joint.items():
            for t, p in cgs.transitions[(s, move)].items():
                acc[t] += q * p
        rows.append(Distribution(acc))
    return MarkovChain(cgs.n_states, tuple(rows))


def dirac_profile(cgs, assignment, opponents, adversary_moves):
    """Full Dirac profile from a coalition assignment and a per-state opponent action tuple."""
    strategies = [
        ProbabilisticMemorylessStrategy(
            st.agent, tuple(Distribution.dirac(st.action_at(cgs, s)) for s in range(cgs.n_states)), True
        )
        for st in assignment.strategies
    ]
    for i, a in enumerate(opponents):
        strategies.append(
            ProbabilisticMemorylessStrategy(
                a, tuple(Distribution.dirac(adversary_moves[s][i]) for s in range(cgs.n_states))
            )
        )
    return tuple(sorted(strategies, key=lambda st: st.agent))


def load_profile(cgs, raw):
    """Profile file contents {agent: {state: action | {action: "num/den"}}} to strategies ordered by agent."""
    if not isinstance(raw, Mapping):
        raise ProfileError("profile must map agents to per-state choices")
    unknown = [a for a in raw if a not in cgs.agents]
    if unknown:
        raise ProfileError(f"profile names unknown agent(s) {', '.join(map(repr, unknown))}")
    profile = []
    for a, agent in enumerate(cgs.agents):
        if agent not in raw:
            raise ProfileError(f"profile has no strategy for agent {agent!r}")
        table = raw[agent]
        if not isinstance(table, Mapping):
            raise ProfileError(f"strategy of agent {agent!r} must map states to choices")
        for key in table:
            if key not in cgs.states:
                if isinstance(key, str) and "," in key:
                    raise ProfileError(
                        f"choice of agent {agent!r} is keyed by the history {key!r}; only memoryless profiles are supported"
                    )
                raise ProfileError(f"strategy of agent {agent!r} names unknown state {key!r}")
        choice = []
        for s, state in enumerate(cgs.states):
            if state not in table:
                raise ProfileError(f"strategy of agent {agent!r} has no choice at state {state!r}")
            choice.append(_parse_choice(cgs, agent, state, table[state]))
        st = ProbabilisticMemorylessStrategy(a, tuple(choice))
        profile.append(ProbabilisticMemorylessStrategy(a, st.choice, is_uniform(cgs, st)))
    _profile_by_agent(cgs, profile)
    return tuple(profile)


def _parse_choice(cgs, agent, state, value):
    def action(label):
        if label not in cgs.actions:
            raise ProfileError(f"agent {agent!r} plays unknown action {label!r} at {state!r}")
        return cgs.actions.index(label)

    if isinstance(value, str):
        return Distribution.dirac(action(value))
    if isinstance(value, Mapping):
        try:
            return Distribution({action(c): parse_rational(p) for c, p in value.items()})
        except DistributionError as e:
            raise ProfileError(f"choice of agent {agent!r} at {state!r}: {e}") from e
    raise ProfileError(f"choice of agent {agent!r} at {state!r} must be an action or a distribution")


# --- exact chain solves ------------------------------------------------------------


def chain_regions(mc, safe, target):
    """(zero, one): states where (safe U target) has probability exactly 0, resp. exactly 1."""
    everything = set(range(mc.n_states))
    g = nx.DiGraph()
    g.add_nodes_from(everything)
    for s in everything:
        if s in safe and s not in target:
            g.add_edges_from((s, t) for t in mc.rows[s])
    reach = set(target)
    for t in target:
        reach |= nx.ancestors(g, t)
    zero = everything - reach
    escape = set(zero)
    for t in zero:
        escape |= nx.ancestors(g, t)
    return frozenset(zero), frozenset(everything - escape)


def chain_until_probability(mc, safe, target):
    """Exact probability of (safe U target) from every state of the chain."""
    zero, one = chain_regions(mc, safe, target)
    unknown = [s for s in range(mc.n_states) if s not in zero and s not in one]
    index = {s: i for i, s in enumerate(unknown)}
    a = [[Fraction(int(i == j)) for j in range(len(unknown))] for i in range(len(unknown))]
    b = [Fraction(0)] * len(unknown)
    for s, i in index.items():
        for t, p in mc.rows[s].items():
            if t in index:
                a[i][index[t]] -= p
            elif t in one:
                b[i] += p
    values = [Fraction(1) if s in one else Fraction(0) for s in range(mc.n_states)]
    for s, x in zip(unknown, linalg.solve(a, b)):
        values[s] = x
    return tuple(values)


def chain_next_probability(mc, target):
    return tuple(row.mass(target) for row in mc.rows)


def _chain_values(mc, objective):
    if isinstance(objective, UntilObjective):
        return chain_until_probability(mc, objective.safe, objective.target)
    return chain_next_probability(mc, objective.target)


# --- brute-force checking ------------------------------------------------------------


def _objective(path, labels):
    if isinstance(path, Next):
        return NextObjective(labels[path.operand])
    return UntilObjective(labels[path.left], labels[path.right])


def _brute_force_strategic(cgs, g, labels, guard):
    coalition = coalition_indices(cgs, g.coalition)
    opponents = tuple(a for a in range(cgs.n_agents) if a not in coalition)
    moves = [joint_actions(cgs, s, opponents) for s in range(cgs.n_states)]
    combinations = strategy_count(cgs, coalition) * math.prod(len(m) for m in moves)
    if combinations > guard:
        logger.warning("brute force refused for %s: %d combinations", g, combinations)
        raise OracleGuardError(combinations, guard)

    objective = _objective(g.path, labels)
    pick = min if g.cmp.mode == "min" else max
    satisfied = set()
    for assignment in enumerate_uniform_strategies(cgs, coalition):
        extremal = None
        for policy in itertools.product(*(range(len(m)) for m in moves)):
            chosen = [moves[s][policy[s]] for s in range(cgs.n_states)]
            mc = induced_chain(cgs, dirac_profile(cgs, assignment, opponents, chosen))
            values = _chain_values(mc, objective)
            extremal = values if extremal is None else tuple(map(pick, extremal, values))
        satisfied.update(s for s in range(cgs.n_states) if g.cmp.holds(extremal[s], g.threshold))
    return frozenset(satisfied)


def _prepare(cgs, formula):
    desugared = desugar(formula)
    ok, diagnostic = is_patl(desugared)
    if not ok:
        raise FragmentError(diagnostic)
    return bind_formula(desugared, cgs)


def _label_all(cgs, formula, strategic):
    labels = {}
    everything = frozenset(range(cgs.n_states))
    for g in state_subformulas(formula):
        if isinstance(g, Atom):
            labels[g] = cgs.states_with_atom(g.name)
        elif isinstance(g, Top):
            labels[g] = everything
        elif isinstance(g, Not):
            labels[g] = everything - labels[g.operand]
        elif isinstance(g, Or):
            labels[g] = labels[g.left] | labels[g.right]
        else:
            labels[g] = strategic(g, labels)
    return OracleVerdicts(formula, labels)


def brute_force_check(cgs, formula, guard=None):
    """Per-state verdicts of every state subformula by exhaustive enumeration.

    Raises OracleGuardError instead of truncating when a strategic subformula
    would need more than `guard` strategy x policy combinations.
    """
    guard = settings.BRUTE_FORCE_GUARD if guard is None else guard
    bound = _prepare(cgs, formula)
    return _label_all(cgs, bound, lambda g, labels: _brute_force_strategic(cgs, g, labels, guard))


def disagreements(report, verdicts):
    """(state label, subformula text) pairs where a CheckReport and OracleVerdicts differ."""
    found = []
    for g, sat in verdicts.labels.items():
        mine = report.labels.get(g)
        if mine is None:
            continue
        for s in sorted(sat ^ mine):
            found.append((report.cgs.states[s], str(g)))
    return found


# --- classical ATL_ir on deterministic structures -------------------------------------


def _atl_strategic(cgs, g, labels):
    sure = g.cmp is Comparison.GE and g.threshold == 1
    never = g.cmp is Comparison.LE and g.threshold == 0
    if not (sure or never):
        raise ValueError(f"classical ATL_ir reading needs a bound >=1 or <=0, got {g}")
    coalition = coalition_indices(cgs, g.coalition)
    opponents = tuple(a for a in range(cgs.n_agents) if a not in coalition)
    path = g.path

    def step(s, fixed, opp):
        full = [None] * cgs.n_agents
        for a, c in fixed.items():
            full[a] = c
        for a, c in zip(opponents, opp):
            full[a] = c
        return successors(cgs, s, tuple(full)).support[0]

    winning = set()
    for assignment in enumerate_uniform_strategies(cgs, coalition):
        fixed = {s: assignment.actions_at(cgs, s) for s in range(cgs.n_states)}
        outcomes = {
            s: [step(s, fixed[s], opp) for opp in joint_actions(cgs, s, opponents)] for s in range(cgs.n_states)
        }
        quantifier = all if sure else any
        if isinstance(path, Next):
            good = labels[path.operand]
            hit = {s for s in range(cgs.n_states) if quantifier(t in good for t in outcomes[s])}
        else:
            # attractor of the target for whoever wants the until to hold
            safe, hit = labels[path.left], set(labels[path.right])
            grown = True
            while grown:
                grown = False
                for s in sorted(safe - hit):
                    if quantifier(t in hit for t in outcomes[s]):
                        hit.add(s)
                        grown = True
        winning |= hit if sure else set(range(cgs.n_states)) - hit
    return frozenset(winning)


def atl_ir_check(cgs, formula):
    """Classical ATL_ir verdicts on a deterministic CGS: <<C>>{>=1} means every play satisfies the path."""
    if not is_deterministic(cgs):
        raise ValueError("classical ATL_ir evaluation needs a CGS with Dirac transitions only")
    bound = _prepare(cgs, formula)
    return _label_all(cgs, bound, lambda g, labels: _atl_strategic(cgs, g, labels))


# --- Monte Carlo estimation ----------------------------------------------------------------


@dataclass(frozen=True)
class SampleEstimate:
    estimate: float
    successes: int
    samples: int
    half_width: float
    lower: float
    upper: float
    exact: Fraction | None = None
    truncated: int = 0

    def to_dict(self):
        return {
            "estimate": self.estimate,
            "exact": None if self.exact is None else format_rational(self.exact),
            "successes": self.successes,
            "samples": self.samples,
            "confidence": settings.CONFIDENCE_LEVEL,
            "half_width": self.half_width,
            "interval": [self.lower, self.upper],
            "truncated": self.truncated,
        }


def wilson_interval(successes, samples, confidence=None):
    """(center, half-width) of the Wilson score interval."""
    confidence = settings.CONFIDENCE_LEVEL if confidence is None else confidence
    z = float(norm.ppf(0.5 + confidence / 2))
    p = successes / samples
    denom = 1 + z * z / samples
    center = (p + z * z / (2 * samples)) / denom
    half = z * math.sqrt(p * (1 - p) / samples + z * z / (4 * samples * samples)) / denom
    return center, half


def _exact_estimate(value, samples):
    v = float(value)
    return SampleEstimate(v, round(v * samples), samples, 0.0, v, v, exact=Fraction(value))


def _sampling_rows(mc):
    rows = []
    for row in mc.rows:
        succ = np.array(row.support, dtype=np.int64)
        cum = np.cumsum([float(p) for p in row.values()])
        cum[-1] = 1.0
        rows.append((succ, cum))
    return rows


def _sample_block(task):
    rows, start, kind, good, stop, step_bound, size, seed_seq = task
    rng = np.random.default_rng(seed_seq)
    if kind == "next":
        succ, cum = rows[start]
        drawn = succ[np.searchsorted(cum, rng.random(size), side="right")]
        return int(np.isin(drawn, list(good)).sum()), 0
    successes = truncated = 0
    for _ in range(size):
        s = start
        for _ in range(step_bound):
            if s in good:
                successes += 1
                break
            if s in stop:
                break
            succ, cum = rows[s]
            s = int(succ[np.searchsorted(cum, rng.random(), side="right")])
        else:
            truncated += 1
    return successes, truncated


def monte_carlo_estimate(cgs, profile, start, objective, samples=None, seed=None, step_bound=None, jobs=1):
    """Frequency estimate of a Next/Until objective from `start` under a full memoryless profile.

    Samples are split into blocks of MC_BLOCK_SIZE, each with its own child
    seed of `seed`, so the result does not depend on `jobs`. Until-walks end
    on entering the chain's probability-0 or probability-1 region.
    """
    samples = settings.DEFAULT_SAMPLES if samples is None else samples
    seed = settings.DEFAULT_SEED if seed is None else seed
    step_bound = settings.DEFAULT_STEP_BOUND if step_bound is None else step_bound
    if samples < 1:
        raise ValueError("sample count must be at least 1")
    mc = induced_chain(cgs, profile)
    s0 = cgs.state_index(start)

    if isinstance(objective, UntilObjective):
        zero, one = chain_regions(mc, objective.safe, objective.target)
        if s0 in one or s0 in zero:
            return _exact_estimate(int(s0 in one), samples)
        kind, good, stop = "until", one, zero
    else:
        target = objective.target if isinstance(objective, NextObjective) else frozenset(objective)
        mass = mc.rows[s0].mass(target)
        if mass in (0, 1):
            return _exact_estimate(mass, samples)
        kind, good, stop = "next", frozenset(target), frozenset()

    block = max(1, settings.MC_BLOCK_SIZE)
    sizes = [min(block, samples - lo) for lo in range(0, samples, block)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    rows = _sampling_rows(mc)
    tasks = [(rows, s0, kind, good, stop, step_bound, n, sq) for n, sq in zip(sizes, seeds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sample_block, tasks))
    else:
        results = [_sample_block(t) for t in tasks]

    successes = sum(r[0] for r in results)
    truncated = sum(r[1] for r in results)
    if truncated:
        logger.warning("%d of %d walks hit the step bound %d and count as failures", truncated, samples, step_bound)
    center, half = wilson_interval(successes, samples)
    return SampleEstimate(
        successes / samples, successes, samples, half, max(0.0, center - half), min(1.0, center + half),
        truncated=truncated,
    )


def monte_carlo_history_estimate(cgs, policy, start, objective, samples=None, seed=None, step_bound=None):
    """Estimate for a history-dependent profile given as a callable.

    `policy(history)` receives the tuple of visited state indices and
    returns a joint action (tuple of action indices ordered by agent) or a
    Distribution over joint actions. Walks are cut at `step_bound` steps and
    a cut walk counts as a failure, so the estimate is biased low.
    """
    samples = settings.DEFAULT_SAMPLES if samples is None else samples
    seed = settings.DEFAULT_SEED if seed is None else seed
    step_bound = settings.DEFAULT_STEP_BOUND if step_bound is None else step_bound
    if samples < 1:
        raise ValueError("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    s0 = cgs.state_index(start)
    until = isinstance(objective, UntilObjective)

    def draw(dist):
        items = list(dist.items())
        cum = np.cumsum([float(p) for _, p in items])
        cum[-1] = 1.0
        return items[int(np.searchsorted(cum, rng.random(), side="right"))][0]

    def step(history):
        choice = policy(history)
        move = draw(choice) if isinstance(choice, Distribution) else tuple(choice)
        return draw(successors(cgs, history[-1], move))

    successes = truncated = 0
    for _ in range(samples):
        history = (s0,)
        if not until:
            successes += step(history) in objective.target
            continue
        for _ in range(step_bound):
            s = history[-1]
            if s in objective.target:
                successes += 1
                break
            if s not in objective.safe:
                break
            history += (step(history),)
        else:
            truncated += 1
    logger.warning(
        "history-dependent profile: walks cut at %d steps (%d of %d cut, counted as failures); estimate may be biased low",
        step_bound, truncated, samples,
    )
    center, half = wilson_interval(successes, samples)
    return SampleEstimate(
        successes / samples, successes, samples, half, max(0.0, center - half), min(1.0, center + half),
        truncated=truncated,
    )
