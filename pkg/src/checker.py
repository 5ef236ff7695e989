"""Bottom-up PATL model checking with deterministic uniform memoryless coalition strategies.

For a strategic subformula <<C>>^{cmp d} psi the coalition's strategies
are enumerated in a fixed order; each one is fixed in the model, the
remaining agents are merged into a single adversary, and the resulting
MDP is solved exactly. A state satisfies the subformula as soon as one
strategy keeps the adversary's extremum (min for >=, >; max for <=, <)
in relation with d; the first such strategy is reported as its witness.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from config import settings

from .errors import FragmentError
from .logic import Atom, Next, Not, Or, Strategic, Top, bind_formula, desugar, is_patl, state_subformulas
from .mdp import UntilObjective, extremal_next, extremal_until, induce_mdp
from .strategy import (
    assignment_at,
    coalition_indices,
    enumerate_uniform_strategies,
    strategy_count,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Witness:
    assignment_index: int
    assignment: object  # CoalitionAssignment
    value: Fraction


@dataclass
class StrategicResult:
    satisfied: frozenset
    witnesses: dict  # state -> Witness
    strategies_total: int
    strategies_explored: int
    extremum: str


@dataclass
class CheckReport:
    cgs: object
    formula: object  # as given, after binding
    desugared: object
    subformulas: list
    labels: dict  # subformula -> frozenset of satisfying states
    strategic: dict = field(default_factory=dict)  # subformula -> StrategicResult
    timings: dict = field(default_factory=dict)  # subformula -> seconds (only when requested)

    @property
    def satisfying_states(self):
        return self.labels[self.desugared]

    def holds_at(self, state):
        return self.cgs.state_index(state) in self.satisfying_states

    def verdicts(self, subformula=None):
        sat = self.labels[self.desugared if subformula is None else subformula]
        return [s in sat for s in range(self.cgs.n_states)]


def prepare(cgs, formula):
    """Desugar, gate on the PATL fragment, and bind identifiers to the CGS."""
    desugared = desugar(formula)
    ok, diagnostic = is_patl(desugared)
    if not ok:
        raise FragmentError(diagnostic)
    return bind_formula(formula, cgs), bind_formula(desugared, cgs)


def path_objective(path, labels):
    if isinstance(path, Next):
        return labels[path.operand]
    return UntilObjective(labels[path.left], labels[path.right])


def objective_values(cgs, coalition, assignment, cmp, objective):
    """Adversary-extremal values of the objective once the coalition plays `assignment`."""
    mdp = induce_mdp(cgs, coalition, assignment)
    if isinstance(objective, UntilObjective):
        return extremal_until(mdp, objective, cmp.mode).values
    return extremal_next(mdp, objective, cmp.mode).values


def _scan_chunk(task):
    """First satisfying assignment index (and value) per pending state within one index range."""
    cgs, coalition, cmp, threshold, objective, start, stop, pending = task
    found = {}
    pending = set(pending)
    for offset, assignment in enumerate(enumerate_uniform_strategies(cgs, coalition, start, stop)):
        values = objective_values(cgs, coalition, assignment, cmp, objective)
        for s in sorted(pending):
            if cmp.holds(values[s], threshold):
                found[s] = (start + offset, values[s])
                pending.discard(s)
        if not pending:
            break
    return found


def eval_strategic(cgs, coalition, cmp, threshold, path, labels, jobs=1):
    """Satisfying states of <<coalition>>^{cmp threshold} path, with per-state first witnesses."""
    coalition = coalition_indices(cgs, coalition)
    objective = path_objective(path, labels)
    total = strategy_count(cgs, coalition)
    chunk = max(1, settings.CHUNK_SIZE)
    ranges = [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]
    first = {}
    n = cgs.n_states

    def merge(results):
        for found in results:
            for s, hit in found.items():
                if s not in first:
                    first[s] = hit

    def tasks(batch):
        pending = tuple(s for s in range(n) if s not in first)
        return [(cgs, coalition, cmp, threshold, objective, lo, hi, pending) for lo, hi in batch]

    if jobs <= 1:
        for rng in ranges:
            merge([_scan_chunk(tasks([rng])[0])])
            if len(first) == n:
                break
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i in range(0, len(ranges), jobs):
                merge(pool.map(_scan_chunk, tasks(ranges[i:i + jobs])))
                if len(first) == n:
                    break

    witnesses = {
        s: Witness(idx, assignment_at(cgs, coalition, idx), value) for s, (idx, value) in sorted(first.items())
    }
    explored = max(w.assignment_index for w in witnesses.values()) + 1 if len(witnesses) == n else total
    return StrategicResult(frozenset(witnesses), witnesses, total, explored, cmp.mode)


def check(cgs, formula, jobs=1, timings=False):
    """Label every state with the truth of every state subformula of `formula`."""
    bound, desugared = prepare(cgs, formula)
    subformulas = state_subformulas(desugared)
    report = CheckReport(cgs, bound, desugared, subformulas, {})
    everything = frozenset(range(cgs.n_states))
    for g in subformulas:
        started = time.perf_counter()
        if isinstance(g, Atom):
            sat = cgs.states_with_atom(g.name)
        elif isinstance(g, Top):
            sat = everything
        elif isinstance(g, Not):
            sat = everything - report.labels[g.operand]
        elif isinstance(g, Or):
            sat = report.labels[g.left] | report.labels[g.right]
        elif isinstance(g, Strategic):
            result = eval_strategic(cgs, g.coalition, g.cmp, g.threshold, g.path, report.labels, jobs=jobs)
            report.strategic[g] = result
            sat = result.satisfied
            logger.debug(
                "%s: %d/%d states satisfied after %d of %d strategies",
                g, len(sat), cgs.n_states, result.strategies_explored, result.strategies_total,
            )
        else:
            raise FragmentError(f"unexpected subformula {g}")
        report.labels[g] = sat
        if timings:
            report.timings[g] = time.perf_counter() - started
    return report
