"""Turn check reports, estimates and violations into JSON-ready dicts and readable tables."""
import json

import pandas as pd

from .checker import path_objective
from .mdp import UntilObjective, extremal_next, extremal_until, induce_mdp, mdp_to_dict
from .strategy import assignment_to_json
from .utils import format_rational

CHECK_MARK = '✓'
CROSS_MARK = '✗'


def _kind(g):
    return type(g).__name__.lower()


def _selected_states(report, initial):
    if initial is None:
        return list(range(report.cgs.n_states))
    return [report.cgs.state_index(initial)]


def report_to_dict(report, initial=None):
    """Schema-stable dict of a CheckReport; `initial` restricts per-state data to one state."""
    cgs = report.cgs
    states = _selected_states(report, initial)
    subformulas = []
    for g in report.subformulas:
        entry = {
            'formula': str(g),
            'kind': _kind(g),
            'satisfied': [cgs.states[s] for s in states if s in report.labels[g]],
        }
        result = report.strategic.get(g)
        if result is not None:
            entry['extremum'] = result.extremum
            entry['witnesses'] = {
                cgs.states[s]: {
                    'assignment_index': w.assignment_index,
                    'strategy': assignment_to_json(cgs, w.assignment),
                    'value': format_rational(w.value),
                }
                for s, w in result.witnesses.items()
                if s in states
            }
            entry['statistics'] = {
                'strategies_total': result.strategies_total,
                'strategies_explored': result.strategies_explored,
            }
        if g in report.timings:
            entry['seconds'] = round(report.timings[g], 6)
        subformulas.append(entry)

    out = {
        'formula': str(report.formula),
        'desugared': str(report.desugared),
        'model': cgs.label_table(),
        'initial': None if initial is None else cgs.states[states[0]],
        'verdicts': {cgs.states[s]: s in report.satisfying_states for s in states},
        'subformulas': subformulas,
    }
    if report.timings:
        out['total_seconds'] = round(sum(report.timings.values()), 6)
    return out


def summary_table(report, initial=None):
    """DataFrame with one row per state and one column per state subformula, marked ✓/✗."""
    states = _selected_states(report, initial)
    data = {
        str(g): [CHECK_MARK if s in report.labels[g] else CROSS_MARK for s in states]
        for g in report.subformulas
    }
    return pd.DataFrame(data, index=pd.Index([report.cgs.states[s] for s in states], name='state'))


def format_report(report, initial=None):
    cgs = report.cgs
    lines = [f'formula:   {report.formula}', f'desugared: {report.desugared}', '']
    with pd.option_context('display.max_columns', None, 'display.width', 200, 'display.max_colwidth', 60):
        lines.append(summary_table(report, initial).to_string())
    states = set(_selected_states(report, initial))
    for g, result in report.strategic.items():
        lines.append('')
        lines.append(
            f'{g}  [{result.extremum} over adversaries; '
            f'{result.strategies_explored}/{result.strategies_total} strategies explored]'
        )
        for s, w in result.witnesses.items():
            if s not in states:
                continue
            strategy = json.dumps(assignment_to_json(cgs, w.assignment), sort_keys=True)
            lines.append(f'  {cgs.states[s]}: value {format_rational(w.value)} with #{w.assignment_index} {strategy}')
        if g in report.timings:
            lines.append(f'  {report.timings[g]:.3f}s')
    return '\n'.join(lines)


def witness_mdp_dumps(report):
    """Induced MDP of the first witness of every strategic subformula, for debugging."""
    dumps = []
    for g, result in report.strategic.items():
        if not result.witnesses:
            continue
        w = result.witnesses[min(result.witnesses)]
        mdp = induce_mdp(report.cgs, w.assignment.coalition, w.assignment)
        objective = path_objective(g.path, report.labels)
        if isinstance(objective, UntilObjective):
            solution = extremal_until(mdp, objective, result.extremum)
        else:
            solution = extremal_next(mdp, objective, result.extremum)
        dump = mdp_to_dict(report.cgs, mdp, solution)
        dump['formula'] = str(g)
        dump['assignment_index'] = w.assignment_index
        dumps.append(dump)
    return dumps


def violations_to_dict(violations):
    return [{'kind': v.kind, 'location': v.location, 'message': v.message} for v in violations]


def format_estimate(estimate):
    if estimate.exact is not None:
        return f'{format_rational(estimate.exact)} (exact, {estimate.samples} samples not needed)'
    text = (
        f'{estimate.estimate:.6f} ± {estimate.half_width:.6f} '
        f'[{estimate.lower:.6f}, {estimate.upper:.6f}] from {estimate.successes}/{estimate.samples} samples'
    )
    if estimate.truncated:
        text += f' ({estimate.truncated} walks truncated)'
    return text
