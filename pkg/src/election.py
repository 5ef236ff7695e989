"""Online approval elections as stochastic CGSs, plus the property formulas stated for them.

Candidates are interviewed one at a time. Every voter answers y or n; a
unanimous answer selects (rejects) the candidate for sure, a split answer
selects with probability p and rejects with 1 - p. The election stops
once the committee is full or no candidate is pending.

A state is (preference matrix, status of every candidate, candidate
under interview). Voters see the statuses, the interview and their own
preference row only.
"""
from __future__ import annotations

import itertools
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from config import settings

from .errors import ConfigError
from .model import build_cgs, cgs_to_dict
from .utils import format_rational, parse_rational

logger = logging.getLogger(__name__)

PENDING, SELECTED, REJECTED = "p", "S", "R"
FIXED_ARRIVAL = "fixed"
UNIFORM_ARRIVAL = "uniform"


def default_likes(n_voters, n_candidates):
    """Voter i (0-based) likes candidate j (0-based) iff i + j is even."""
    return tuple(tuple((i + j) % 2 == 0 for j in range(n_candidates)) for i in range(n_voters))


@dataclass(frozen=True)
class ElectionConfig:
    candidates: int = settings.DEFAULT_CANDIDATES
    committee_size: int = settings.DEFAULT_COMMITTEE_SIZE
    voters: tuple = tuple(f"v{i + 1}" for i in range(settings.DEFAULT_VOTERS))
    likes: tuple | None = None  # [voter][candidate] -> bool
    split_probability: Fraction = field(default_factory=lambda: parse_rational(settings.DEFAULT_SPLIT_PROBABILITY))
    # (candidate index, votes as a "y"/"n" tuple ordered like voters) -> probability of selection
    split_overrides: dict = field(default_factory=dict)
    arrival: str = FIXED_ARRIVAL
    uncertain_preferences: bool = False

    @classmethod
    def from_counts(cls, candidates, committee_size, n_voters, split_probability=None, **kwargs):
        p = settings.DEFAULT_SPLIT_PROBABILITY if split_probability is None else split_probability
        p = p if isinstance(p, Fraction) else parse_rational(p)
        return cls(
            candidates=candidates,
            committee_size=committee_size,
            voters=tuple(f"v{i + 1}" for i in range(n_voters)),
            split_probability=p,
            **kwargs,
        )

    def validate(self):
        if not isinstance(self.candidates, int) or self.candidates < 1:
            raise ConfigError(f"candidate count must be at least 1, got {self.candidates!r}")
        if not isinstance(self.committee_size, int) or self.committee_size < 1:
            raise ConfigError(f"committee size must be at least 1, got {self.committee_size!r}")
        if self.committee_size > self.candidates:
            raise ConfigError(f"committee size {self.committee_size} exceeds the {self.candidates} candidate(s)")
        if not self.voters or len(set(self.voters)) != len(self.voters):
            raise ConfigError("voters must be a non-empty list of distinct names")
        if self.likes is not None:
            if len(self.likes) != len(self.voters) or any(len(row) != self.candidates for row in self.likes):
                raise ConfigError("preference matrix must have one row per voter and one column per candidate")
        if self.arrival not in (FIXED_ARRIVAL, UNIFORM_ARRIVAL):
            raise ConfigError(f"arrival must be {FIXED_ARRIVAL!r} or {UNIFORM_ARRIVAL!r}, got {self.arrival!r}")
        for key, p in [(None, self.split_probability), *self.split_overrides.items()]:
            if not 0 < Fraction(p) < 1:
                where = "" if key is None else f" for {key!r}"
                raise ConfigError(f"split-vote probability{where} must lie strictly between 0 and 1, got {format_rational(p)}")
        for j, votes in self.split_overrides:
            if not 0 <= j < self.candidates or len(votes) != len(self.voters) or len(set(votes)) < 2:
                raise ConfigError(f"split override {(j, votes)!r} is not a split vote on a known candidate")
        return self

    def split(self, j, votes):
        return Fraction(self.split_overrides.get((j, tuple(votes)), self.split_probability))

    def preference_matrices(self):
        if self.uncertain_preferences:
            cells = len(self.voters) * self.candidates
            return [
                tuple(tuple(bits[i * self.candidates:(i + 1) * self.candidates]) for i in range(len(self.voters)))
                for bits in itertools.product((False, True), repeat=cells)
            ]
        return [self.likes if self.likes is not None else default_likes(len(self.voters), self.candidates)]


def _state_label(cfg, prefs_id, statuses, interview):
    head = f"P{prefs_id}/" if cfg.uncertain_preferences else ""
    tail = "-" if interview is None else str(interview + 1)
    return f"{head}{''.join(statuses)}@{tail}"


def _arrivals(cfg, statuses):
    """Distribution of the next interviewed candidate, or None when the election is over."""
    pending = [j for j, st in enumerate(statuses) if st == PENDING]
    if statuses.count(SELECTED) >= cfg.committee_size or not pending:
        return {None: Fraction(1)}
    if cfg.arrival == FIXED_ARRIVAL:
        return {pending[0]: Fraction(1)}
    return {j: Fraction(1, len(pending)) for j in pending}


def election_model(cfg):
    """Build the election CGS over all states reachable from the start of the election."""
    cfg.validate()
    voters = list(cfg.voters)
    m = cfg.candidates
    matrices = cfg.preference_matrices()

    start = tuple(PENDING for _ in range(m))
    frontier = deque()
    seen = {}
    for pid in range(len(matrices)):
        for j in _arrivals(cfg, start):
            frontier.append((pid, start, j))
    order = []
    while frontier:
        state = frontier.popleft()
        if state in seen:
            continue
        seen[state] = len(order)
        order.append(state)
        pid, statuses, j = state
        if j is None:
            continue
        for outcome in (SELECTED, REJECTED):
            after = statuses[:j] + (outcome,) + statuses[j + 1:]
            for nxt in _arrivals(cfg, after):
                frontier.append((pid, after, nxt))

    labels = {st: _state_label(cfg, *st) for st in order}
    atoms = (
        [f"interview_{j + 1}" for j in range(m)]
        + [f"selected_{j + 1}" for j in range(m)]
        + [f"rejected_{j + 1}" for j in range(m)]
        + [f"likes_{v}_{j + 1}" for v in voters for j in range(m)]
        + ["done"]
    )

    def atoms_of(state):
        pid, statuses, j = state
        out = [f"selected_{c + 1}" for c, st in enumerate(statuses) if st == SELECTED]
        out += [f"rejected_{c + 1}" for c, st in enumerate(statuses) if st == REJECTED]
        out += [f"likes_{v}_{c + 1}" for i, v in enumerate(voters) for c in range(m) if matrices[pid][i][c]]
        out += ["done"] if j is None else [f"interview_{j + 1}"]
        return out

    legality, transitions = {}, []
    for state in order:
        pid, statuses, j = state
        label = labels[state]
        if j is None:
            legality[label] = {v: ["n"] for v in voters}
            transitions.append({"state": label, "action": {v: "n" for v in voters}, "dist": {label: "1"}})
            continue
        legality[label] = {v: ["y", "n"] for v in voters}
        for votes in itertools.product("yn", repeat=len(voters)):
            if all(x == "y" for x in votes):
                outcomes = {SELECTED: Fraction(1)}
            elif all(x == "n" for x in votes):
                outcomes = {REJECTED: Fraction(1)}
            else:
                p = cfg.split(j, votes)
                outcomes = {SELECTED: p, REJECTED: 1 - p}
            dist = {}
            for outcome, q in outcomes.items():
                after = statuses[:j] + (outcome,) + statuses[j + 1:]
                for nxt, r in _arrivals(cfg, after).items():
                    target = labels[(pid, after, nxt)]
                    dist[target] = dist.get(target, Fraction(0)) + q * r
            transitions.append({
                "state": label,
                "action": dict(zip(voters, votes)),
                "dist": {t: format_rational(p) for t, p in dist.items()},
            })

    observation = {}
    if len(matrices) > 1:
        for i, v in enumerate(voters):
            classes = {}
            for state in order:
                pid, statuses, j = state
                classes.setdefault((matrices[pid][i], statuses, j), []).append(labels[state])
            observation[v] = list(classes.values())

    raw = {
        "agents": voters,
        "actions": ["y", "n"],
        "atoms": atoms,
        "states": [{"id": labels[st], "atoms": atoms_of(st)} for st in order],
        "legality": legality,
        "observation": observation,
        "transitions": transitions,
    }
    cgs = build_cgs(raw)
    logger.info("election model: %d candidates, %d voters, %d states", m, len(voters), cgs.n_states)
    return cgs


@dataclass(frozen=True)
class ElectionFormula:
    name: str
    text: str
    patl: bool
    note: str = ""


def _conjunction(parts):
    return " & ".join(f"({p})" for p in parts)


def election_formulas(cfg):
    """The election properties instantiated for the configured voters and candidates.

    The two preference-driven properties conjoin path formulas under one
    modality and are marked as outside PATL.
    """
    cfg.validate()
    voters = list(cfg.voters)
    candidates = range(1, cfg.candidates + 1)
    out = []
    for j in candidates:
        out.append(ElectionFormula(f"cannot_select_rejected_{j}", f"rejected_{j} -> !<<*>>{{>=1}} F selected_{j}", True))

    some_liked = _conjunction(
        " | ".join(f"(likes_{v}_{j} & F selected_{j})" for j in candidates) for v in voters
    )
    out.append(ElectionFormula(
        "someone_liked_selected",
        f"<<*>>{{>=1/2}} ({some_liked})",
        False,
        "conjunction of path formulas; check the PATL pieces <<*>>{>=1/2} F selected_j separately",
    ))
    all_liked = _conjunction(f"likes_{v}_{j} -> F selected_{j}" for v in voters for j in candidates)
    out.append(ElectionFormula(
        "all_liked_selected",
        f"<<*>>{{>=1/2}} ({all_liked})",
        False,
        "conjunction of path formulas; check the PATL pieces <<*>>{>=1/2} F selected_j separately",
    ))
    for j in candidates:
        for v in voters:
            out.append(ElectionFormula(
                f"interview_{j}_at_most_quarter_{v}", f"interview_{j} -> <<{v}>>{{<=1/4}} X selected_{j}", True
            ))
    return out


def write_election(cfg, out_dir):
    """Write `election.json` and the `election.formulas` sidecar; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cgs = election_model(cfg)
    model_path = out_dir / "election.json"
    model_path.write_text(json.dumps(cgs_to_dict(cgs), indent=2) + "\n", encoding="utf-8")

    lines = [
        f"# online approval election: {cfg.candidates} candidate(s), committee of {cfg.committee_size}, "
        f"voters {', '.join(cfg.voters)}, split probability {format_rational(cfg.split_probability)}",
    ]
    for f in election_formulas(cfg):
        if f.patl:
            lines.append(f"{f.name}: {f.text}")
        else:
            lines.append(f"# not PATL ({f.note}): {f.name}: {f.text}")
    formulas_path = out_dir / "election.formulas"
    formulas_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("wrote %s and %s", model_path, formulas_path)
    return model_path, formulas_path
