import itertools
from fractions import Fraction

import numpy as np
import pytest

from src import linalg
from src.mdp import (
    MAX,
    MDP,
    MIN,
    UntilObjective,
    extremal_next,
    extremal_until,
    induce_mdp,
    mdp_to_dict,
    policy_values,
    prob01,
)
from src.model import Distribution
from src.oracle import chain_until_probability, dirac_profile, induced_chain
from src.randomgen import random_cgs
from src.strategy import enumerate_uniform_strategies

HALF = Fraction(1, 2)


def _mdp(rows):
    """MDP over states 0..n-1 from per-state lists of {successor: probability} moves."""
    return MDP(
        len(rows),
        (0,),
        tuple(tuple((m,) for m in range(len(moves))) for moves in rows),
        tuple(tuple(Distribution(d) for d in moves) for moves in rows),
    )


# state 0 may go to the target (1) or the sink (2) for sure
SURE = _mdp([[{1: 1}, {2: 1}], [{1: 1}], [{2: 1}]])
# state 0: a coin between target and sink, or a coin between staying and the target
MIXED = _mdp([[{1: HALF, 2: HALF}, {0: HALF, 1: HALF}], [{1: 1}], [{2: 1}]])
EVERYWHERE = frozenset({0, 1, 2})


def test_retry_chain_has_value_one_half(coin):
    assignment = next(enumerate_uniform_strategies(coin, []))
    mdp = induce_mdp(coin, [], assignment)
    obj = UntilObjective(frozenset(range(coin.n_states)), coin.states_with_atom("win"))
    values = extremal_until(mdp, obj, MIN).values
    assert values[coin.state_index("retry")] == HALF
    assert values[coin.state_index("again")] == 1
    assert values[coin.state_index("win")] == 1
    assert values[coin.state_index("lose")] == 0
    assert values[coin.state_index("s0")] == 0


def test_induce_mdp_fixes_coalition_actions(dirac_reach):
    assignment = next(enumerate_uniform_strategies(dirac_reach, ["1"]))
    mdp = induce_mdp(dirac_reach, ["1"], assignment)
    assert mdp.opponents == (1,)
    # agent 1 plays a at s0; agent 2 chooses a or b and both lead to s1
    assert mdp.moves[0] == ((0,), (1,))
    assert [d.support for d in mdp.transitions[0]] == [(1,), (1,)]


def test_adversary_decides_sure_target_or_sink():
    obj = UntilObjective(EVERYWHERE, frozenset({1}))
    low = extremal_until(SURE, obj, MIN)
    high = extremal_until(SURE, obj, MAX)
    assert low.values == (0, 1, 0)
    assert high.values == (1, 1, 0)
    assert low.policy[0] == 1
    assert high.policy[0] == 0


def test_mixed_moves():
    obj = UntilObjective(EVERYWHERE, frozenset({1}))
    low = extremal_until(MIXED, obj, MIN)
    high = extremal_until(MIXED, obj, MAX)
    assert low.values[0] == HALF
    assert high.values[0] == 1
    assert high.policy[0] == 1


@pytest.mark.parametrize(
    "rows,mode,expected",
    [
        # both moves of state 0 reach the target surely; the lower index wins
        ([[{1: 1}, {2: 1}], [{2: 1}], [{2: 1}]], MAX, 0),
        ([[{1: 1}, {2: 1}], [{2: 1}], [{2: 1}]], MIN, 0),
        # staying put keeps value 1 on paper but never reaches the target
        ([[{0: 1}, {1: 1}], [{1: 1}]], MAX, 1),
        ([[{0: 1}, {0: HALF, 1: HALF}], [{1: 1}]], MAX, 1),
    ],
)
def test_ties_go_to_the_lowest_move_that_attains_the_value(rows, mode, expected):
    mdp = _mdp(rows)
    target = frozenset({len(rows) - 1})
    obj = UntilObjective(frozenset(range(len(rows))), target)
    solution = extremal_until(mdp, obj, mode)
    assert solution.policy[0] == expected
    assert policy_values(mdp, obj, solution.policy) == solution.values


def test_prob01_regions():
    obj = UntilObjective(EVERYWHERE, frozenset({1}))
    assert prob01(MIXED, obj, MIN) == (frozenset({2}), frozenset({1}))
    assert prob01(MIXED, obj, MAX) == (frozenset({2}), frozenset({0, 1}))


def test_target_everywhere_is_one():
    obj = UntilObjective(frozenset(), EVERYWHERE)
    assert extremal_until(MIXED, obj, MIN).values == (1, 1, 1)


def test_unsafe_start_is_zero():
    obj = UntilObjective(frozenset({1, 2}), frozenset({1}))
    assert extremal_until(MIXED, obj, MAX).values == (0, 1, 0)


def test_policy_values_reproduce_fixed_choices():
    obj = UntilObjective(EVERYWHERE, frozenset({1}))
    assert policy_values(MIXED, obj, (0, 0, 0)) == (HALF, 1, 0)
    assert policy_values(MIXED, obj, (1, 0, 0)) == (1, 1, 0)


def test_extremal_next():
    assert extremal_next(MIXED, frozenset({1}), MIN).values[0] == HALF
    assert extremal_next(MIXED, frozenset({2}), MIN).values[0] == 0
    assert extremal_next(MIXED, frozenset({2}), MAX).values[0] == HALF


def _random_instances(seed, count):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        cgs = random_cgs(rng, n_states=int(rng.integers(1, 5)))
        everything = range(cgs.n_states)
        safe = frozenset(s for s in everything if rng.random() < 0.7)
        target = frozenset(s for s in everything if rng.random() < 0.3)
        for assignment in enumerate_uniform_strategies(cgs, ["a1"]):
            yield cgs, assignment, UntilObjective(safe, target)


def test_min_never_exceeds_max():
    for cgs, assignment, obj in _random_instances(5, 25):
        mdp = induce_mdp(cgs, ["a1"], assignment)
        low = extremal_until(mdp, obj, MIN).values
        high = extremal_until(mdp, obj, MAX).values
        assert all(0 <= lo <= hi <= 1 for lo, hi in zip(low, high))


def test_next_complementation():
    for cgs, assignment, obj in _random_instances(6, 25):
        mdp = induce_mdp(cgs, ["a1"], assignment)
        rest = frozenset(range(cgs.n_states)) - obj.target
        low = extremal_next(mdp, obj.target, MIN).values
        high = extremal_next(mdp, rest, MAX).values
        assert all(lo == 1 - hi for lo, hi in zip(low, high))


def test_prob01_agrees_with_values():
    for cgs, assignment, obj in _random_instances(8, 25):
        mdp = induce_mdp(cgs, ["a1"], assignment)
        for mode in (MIN, MAX):
            zero, one = prob01(mdp, obj, mode)
            values = extremal_until(mdp, obj, mode).values
            for s, v in enumerate(values):
                assert (v == 0) == (s in zero)
                assert (v == 1) == (s in one)


def test_returned_policy_attains_the_values():
    for cgs, assignment, obj in _random_instances(9, 25):
        mdp = induce_mdp(cgs, ["a1"], assignment)
        for mode in (MIN, MAX):
            solution = extremal_until(mdp, obj, mode)
            assert policy_values(mdp, obj, solution.policy) == solution.values


def test_values_match_enumerated_adversaries():
    for cgs, assignment, obj in _random_instances(10, 25):
        mdp = induce_mdp(cgs, ["a1"], assignment)
        per_policy = []
        for policy in itertools.product(*(range(len(m)) for m in mdp.moves)):
            chosen = [mdp.moves[s][policy[s]] for s in range(cgs.n_states)]
            mc = induced_chain(cgs, dirac_profile(cgs, assignment, mdp.opponents, chosen))
            per_policy.append(chain_until_probability(mc, obj.safe, obj.target))
        low = tuple(min(v[s] for v in per_policy) for s in range(cgs.n_states))
        high = tuple(max(v[s] for v in per_policy) for s in range(cgs.n_states))
        assert extremal_until(mdp, obj, MIN).values == low
        assert extremal_until(mdp, obj, MAX).values == high


def test_mdp_to_dict_uses_labels(dirac_reach):
    assignment = next(enumerate_uniform_strategies(dirac_reach, ["1"]))
    mdp = induce_mdp(dirac_reach, ["1"], assignment)
    obj = UntilObjective(frozenset(range(4)), dirac_reach.states_with_atom("p"))
    dumped = mdp_to_dict(dirac_reach, mdp, extremal_until(mdp, obj, MIN))
    assert dumped["opponents"] == ["2"]
    assert dumped["moves"]["s0"][1] == {"action": {"2": "b"}, "dist": {"s1": "1"}}
    assert dumped["values"]["s0"] == "1"


def test_linalg_solve():
    assert linalg.solve([[2, 1], [1, 3]], [3, 5]) == [Fraction(4, 5), Fraction(7, 5)]
    assert linalg.solve([[0, 1], [1, 0]], [2, 3]) == [3, 2]
    assert linalg.solve([], []) == []


def test_linalg_singular():
    with pytest.raises(ValueError):
        linalg.solve([[1, 2], [2, 4]], [1, 2])
