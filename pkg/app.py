#!/usr/bin/env python
"""
Command-line entry point for the PATL model checker.

Usage:
    python app.py validate models/coin.json
    python app.py check models/coin.json "<<a1>>{>=1/2} F heads" --initial s0
    python app.py check election/election.json --formulas election/election.formulas --format json
    python app.py simulate models/coin.json --profile profile.json --initial s0 --until true heads
    python app.py gen-election --candidates 2 --committee 1 --voters 2 --p 1/2 --out election
    python app.py strategies models/imperfect_guess.json --coalition guesser --count

Exit codes: 0 satisfied / valid, 1 unsatisfied / invalid model, 2 usage or processing error.
Reports go to stdout, logs to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from config import settings
from src.checker import check
from src.election import ElectionConfig, FIXED_ARRIVAL, UNIFORM_ARRIVAL, write_election
from src.errors import ModelError, PatlError
from src.logic import parse_formula, parse_formula_file
from src.mdp import UntilObjective
from src.model import load_model, read_cgs, validate_cgs
from src.oracle import NextObjective, brute_force_check, disagreements, load_profile, monte_carlo_estimate
from src.reporting import (
    format_estimate,
    format_report,
    report_to_dict,
    violations_to_dict,
    witness_mdp_dumps,
)
from src.strategy import assignment_to_json, enumerate_uniform_strategies, strategy_count
from src.utils import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: Path | None = None
    formula: str | None = None
    formulas: Path | None = None
    initial: str | None = None
    seed: int = settings.DEFAULT_SEED
    samples: int = settings.DEFAULT_SAMPLES
    jobs: int = settings.DEFAULT_JOBS
    fmt: str = 'human'

    @classmethod
    def from_args(cls, args):
        config = cls(
            command=args.command,
            model=Path(args.model) if getattr(args, 'model', None) else None,
            formula=getattr(args, 'formula', None),
            formulas=Path(args.formulas) if getattr(args, 'formulas', None) else None,
            initial=getattr(args, 'initial', None),
            seed=getattr(args, 'seed', settings.DEFAULT_SEED),
            samples=getattr(args, 'samples', settings.DEFAULT_SAMPLES),
            jobs=getattr(args, 'jobs', settings.DEFAULT_JOBS),
            fmt=args.format,
        )
        for path in (config.model, config.formulas):
            if path is not None and not path.is_file():
                raise FileNotFoundError(f'no such file: {path}')
        if config.jobs < 1:
            raise ValueError('--jobs must be at least 1')
        if config.samples < 1:
            raise ValueError('--samples must be at least 1')
        return config


def emit(cfg, payload, human):
    if cfg.fmt == 'json':
        print(json.dumps(payload, indent=2, ensure_ascii=False))
    else:
        print(human)


# --- commands ---------------------------------------------------------------------


def cmd_validate(cfg, args):
    raw = load_model(cfg.model)
    violations = validate_cgs(raw)
    logger.info('%s: %d violation(s)', cfg.model, len(violations))
    human = '\n'.join(str(v) for v in violations) if violations else f'{cfg.model}: valid'
    emit(cfg, {'model': str(cfg.model), 'valid': not violations, 'violations': violations_to_dict(violations)}, human)
    return EXIT_FAIL if violations else EXIT_OK


def _formulas(cfg):
    if cfg.formulas is not None:
        return parse_formula_file(cfg.formulas)
    if cfg.formula is None:
        raise ValueError('give a formula or --formulas FILE')
    return [('formula', parse_formula(cfg.formula))]


def cmd_check(cfg, args):
    cgs = read_cgs(cfg.model)
    if cfg.initial is not None:
        cgs.state_index(cfg.initial)
    named = _formulas(cfg)
    payloads, texts, verdicts, dumps = [], [], [], []
    for name, formula in named:
        report = check(cgs, formula, jobs=cfg.jobs, timings=args.timings)
        if args.oracle:
            mismatches = disagreements(report, brute_force_check(cgs, formula))
            if mismatches:
                state, sub = mismatches[0]
                raise PatlError(
                    f'oracle disagrees with the checker on {sub} at state {state} '
                    f'({len(mismatches)} mismatch(es) in {name})'
                )
            logger.info('%s: oracle agrees on every state and subformula', name)
        if args.dump_mdp:
            dumps.extend(dict(d, name=name) for d in witness_mdp_dumps(report))
        if cfg.initial is not None:
            verdicts.append(report.holds_at(cfg.initial))
        else:
            verdicts.append(all(report.verdicts()))
        payloads.append(dict(name=name, **report_to_dict(report, cfg.initial)))
        texts.append(f'[{name}]\n{format_report(report, cfg.initial)}')

    if args.dump_mdp:
        Path(args.dump_mdp).write_text(json.dumps(dumps, indent=2) + '\n', encoding='utf-8')
        logger.info('wrote %d induced MDP dump(s) to %s', len(dumps), args.dump_mdp)
    payload = payloads[0] if cfg.formulas is None else {'formulas': payloads}
    emit(cfg, payload, '\n\n'.join(texts))
    return EXIT_OK if all(verdicts) else EXIT_FAIL


def _state_set(cgs, text, jobs):
    return check(cgs, parse_formula(text), jobs=jobs).satisfying_states


def cmd_simulate(cfg, args):
    cgs = read_cgs(cfg.model)
    with open(args.profile, encoding='utf-8') as f:
        profile = load_profile(cgs, json.load(f))
    if args.next is not None:
        objective = NextObjective(_state_set(cgs, args.next, cfg.jobs))
        described = f'X {args.next}'
    else:
        safe, target = args.until
        objective = UntilObjective(_state_set(cgs, safe, cfg.jobs), _state_set(cgs, target, cfg.jobs))
        described = f'({safe}) U ({target})'
    estimate = monte_carlo_estimate(
        cgs, profile, cfg.initial, objective,
        samples=cfg.samples, seed=cfg.seed, step_bound=args.step_bound, jobs=cfg.jobs,
    )
    payload = dict(objective=described, initial=cfg.initial, seed=cfg.seed, **estimate.to_dict())
    emit(cfg, payload, f'P[{described}] from {cfg.initial}: {format_estimate(estimate)}')
    return EXIT_OK


def cmd_gen_election(cfg, args):
    election = ElectionConfig.from_counts(
        args.candidates,
        args.committee,
        args.voters,
        split_probability=args.p,
        arrival=args.arrival,
        uncertain_preferences=args.uncertain_preferences,
    )
    model_path, formulas_path = write_election(election, args.out)
    emit(cfg, {'model': str(model_path), 'formulas': str(formulas_path)}, f'wrote {model_path}\nwrote {formulas_path}')
    return EXIT_OK


def cmd_strategies(cfg, args):
    cgs = read_cgs(cfg.model)
    coalition = [a for a in args.coalition.split(',') if a] if args.coalition else []
    total = strategy_count(cgs, coalition)
    if not args.list:
        emit(cfg, {'coalition': coalition, 'count': total}, str(total))
        return EXIT_OK
    for i, assignment in enumerate(enumerate_uniform_strategies(cgs, coalition, 0, args.limit)):
        print(json.dumps({'index': i, 'strategy': assignment_to_json(cgs, assignment)}, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    'validate': cmd_validate,
    'check': cmd_check,
    'simulate': cmd_simulate,
    'gen-election': cmd_gen_election,
    'strategies': cmd_strategies,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbose', action='store_true', help='Log at DEBUG level')
    common.add_argument('--format', choices=['human', 'json'], default='human', help='Output format')

    ap = argparse.ArgumentParser(description='Exact PATL model checking of stochastic CGSs with imperfect information')
    sub = ap.add_subparsers(dest='command', required=True)

    p = sub.add_parser('validate', parents=[common], help='Report every well-formedness violation of a model')
    p.add_argument('model', help='Path to model JSON')

    p = sub.add_parser('check', parents=[common], help='Check a PATL formula on every state')
    p.add_argument('model', help='Path to model JSON')
    p.add_argument('formula', nargs='?', help='PATL formula in concrete syntax')
    p.add_argument('--formulas', help='File of `name: formula` lines')
    p.add_argument('--initial', help='Only report (and decide the exit code by) this state')
    p.add_argument('--jobs', type=int, default=settings.DEFAULT_JOBS, help='Worker processes for the strategy search')
    p.add_argument('--timings', action='store_true', help='Include wall-clock timings in the report')
    p.add_argument('--dump-mdp', help='Write the induced MDP of each first witness to this JSON file')
    p.add_argument('--oracle', action='store_true', help='Cross-check every verdict by brute force')

    p = sub.add_parser('simulate', parents=[common], help='Monte Carlo estimate under a memoryless profile')
    p.add_argument('model', help='Path to model JSON')
    p.add_argument('--profile', required=True, help='Profile JSON {agent: {state: action | {action: "p"}}}')
    p.add_argument('--initial', required=True, help='Start state')
    objective = p.add_mutually_exclusive_group(required=True)
    objective.add_argument('--next', metavar='TARGET', help='Objective X TARGET (a state formula)')
    objective.add_argument('--until', nargs=2, metavar=('SAFE', 'TARGET'), help='Objective SAFE U TARGET')
    p.add_argument('--seed', type=int, default=settings.DEFAULT_SEED, help='Random seed')
    p.add_argument('--samples', type=int, default=settings.DEFAULT_SAMPLES, help='Number of sampled plays')
    p.add_argument('--step-bound', type=int, default=settings.DEFAULT_STEP_BOUND, help='Maximum steps per play')
    p.add_argument('--jobs', type=int, default=settings.DEFAULT_JOBS, help='Worker processes for sampling')

    p = sub.add_parser('gen-election', parents=[common], help='Write an online approval election model')
    p.add_argument('--candidates', type=int, default=settings.DEFAULT_CANDIDATES, help='Number of candidates m')
    p.add_argument('--committee', type=int, default=settings.DEFAULT_COMMITTEE_SIZE, help='Committee size k')
    p.add_argument('--voters', type=int, default=settings.DEFAULT_VOTERS, help='Number of voters n')
    p.add_argument('--p', default=settings.DEFAULT_SPLIT_PROBABILITY, help='Split-vote selection probability "num/den"')
    p.add_argument('--arrival', choices=[FIXED_ARRIVAL, UNIFORM_ARRIVAL], default=FIXED_ARRIVAL)
    p.add_argument('--uncertain-preferences', action='store_true', help='Range over every preference matrix')
    p.add_argument('--out', default='election', help='Output directory')

    p = sub.add_parser('strategies', parents=[common], help='Count or list uniform coalition strategies')
    p.add_argument('model', help='Path to model JSON')
    p.add_argument('--coalition', default='', help='Comma-separated agents (empty for the empty coalition)')
    mode = p.add_mutually_exclusive_group()
    mode.add_argument('--count', action='store_true', help='Print the number of assignments (default)')
    mode.add_argument('--list', action='store_true', help='Print assignments as JSON lines')
    p.add_argument('--limit', type=int, default=100, help='Maximum number of listed assignments')
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging('DEBUG' if args.verbose else settings.LOG_LEVEL)
    try:
        cfg = RunConfig.from_args(args)
        return COMMANDS[cfg.command](cfg, args)
    except ModelError as e:
        print(f'error: {e}', file=sys.stderr)
        for v in e.violations:
            print(f'  {v}', file=sys.stderr)
        return EXIT_ERROR
    except (PatlError, OSError, ValueError) as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_ERROR
    except Exception:
        logger.exception('Error while running %s', args.command)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
