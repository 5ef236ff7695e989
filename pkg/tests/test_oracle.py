import logging
from fractions import Fraction

import pytest

from conftest import model_raw
from src.checker import check
from src.errors import OracleGuardError, ProfileError
from src.logic import parse_formula
from src.mdp import UntilObjective
from src.model import build_cgs
from src.oracle import (
    NextObjective,
    brute_force_check,
    chain_regions,
    chain_until_probability,
    induced_chain,
    load_profile,
    monte_carlo_estimate,
    monte_carlo_history_estimate,
    wilson_interval,
)

HALF = Fraction(1, 2)


def _all_go(cgs):
    return load_profile(cgs, {"a1": {s: "go" for s in cgs.states}})


def _coin_flipping_pair(cgs):
    mixed = {"a": "1/2", "b": "1/2"}
    table = {"s0": mixed, "s1": "a", "s2": "a", "s3": "a"}
    return load_profile(cgs, {"1": table, "2": dict(table)})


def _until(cgs, atom):
    return UntilObjective(frozenset(range(cgs.n_states)), cgs.states_with_atom(atom))


def test_independent_mixing_multiplies(dirac_reach):
    mc = induced_chain(dirac_reach, _coin_flipping_pair(dirac_reach))
    row = mc.rows[dirac_reach.state_index("s0")]
    assert dict(row) == {0: Fraction(1, 4), 1: HALF, 2: Fraction(1, 4)}
    assert chain_until_probability(mc, frozenset(range(4)), dirac_reach.states_with_atom("p"))[0] == 1


def test_retry_chain(coin):
    mc = induced_chain(coin, _all_go(coin))
    obj = _until(coin, "win")
    values = chain_until_probability(mc, obj.safe, obj.target)
    assert values[coin.state_index("retry")] == HALF
    assert values[coin.state_index("again")] == 1
    assert values[coin.state_index("s0")] == 0
    zero, one = chain_regions(mc, obj.safe, obj.target)
    assert one == {coin.state_index("win"), coin.state_index("again")}
    assert coin.state_index("lose") in zero


def test_profile_must_cover_every_agent(dirac_reach):
    profile = _coin_flipping_pair(dirac_reach)
    with pytest.raises(ProfileError, match="no strategy"):
        induced_chain(dirac_reach, profile[:1])


def test_guard_refuses_instead_of_truncating(dirac_reach):
    with pytest.raises(OracleGuardError) as e:
        brute_force_check(dirac_reach, parse_formula("<<1>>{>=1} F p"), guard=1)
    assert e.value.combinations == 16


def test_brute_force_on_fixture(dirac_reach):
    verdicts = brute_force_check(dirac_reach, parse_formula("<<1>>{>=1} F p"))
    assert verdicts.satisfying_states == {0, 1}


@pytest.mark.parametrize(
    "raw,message",
    [
        ({"a1": {"s0,s1": "go"}}, "only memoryless profiles are supported"),
        ({"a1": {"s0": "go"}, "a9": {}}, "unknown agent"),
        ({"a1": {"s0": "go"}}, "no choice at state"),
        ({"a1": {"s0": "jump"}}, "unknown action"),
        ({"a1": {"s0": {"go": "0.5"}}}, "a1"),
        ({"a1": {"s0": 3}}, "must be an action or a distribution"),
        (["go"], "must map agents"),
    ],
)
def test_load_profile_errors(coin, raw, message):
    with pytest.raises(ProfileError, match=message):
        load_profile(coin, raw)


def test_load_profile_rejects_illegal_support(dirac_reach):
    table = {"s0": "a", "s1": "b", "s2": "a", "s3": "a"}
    with pytest.raises(ProfileError, match="illegal"):
        load_profile(dirac_reach, {"1": table, "2": {s: "a" for s in dirac_reach.states}})


def test_load_profile_marks_uniformity(imperfect_guess):
    same = {"s0": "l", "hl": "l", "hr": "l", "won": "l", "lost": "l"}
    nature = {s: "l" for s in imperfect_guess.states}
    profile = load_profile(imperfect_guess, {"guesser": same, "nature": nature})
    assert profile[0].uniform
    split = dict(same, hr="r")
    profile = load_profile(imperfect_guess, {"guesser": split, "nature": nature})
    assert not profile[0].uniform


def test_wilson_interval():
    center, half = wilson_interval(50, 100, confidence=0.95)
    assert center == pytest.approx(0.5)
    assert half == pytest.approx(0.0962, abs=1e-3)


def test_exact_shortcut_skips_sampling(coin):
    profile = _all_go(coin)
    est = monte_carlo_estimate(coin, profile, "win", _until(coin, "win"), samples=500)
    assert est.exact == 1 and est.estimate == 1.0 and est.half_width == 0.0
    est = monte_carlo_estimate(coin, profile, "heads", NextObjective(coin.states_with_atom("heads")), samples=500)
    assert est.exact == 1
    assert est.to_dict()["exact"] == "1"


def test_fair_coin(coin):
    est = monte_carlo_estimate(coin, _all_go(coin), "s0", NextObjective(coin.states_with_atom("heads")), samples=10_000)
    assert est.exact is None
    assert abs(est.estimate - 0.5) < 0.05
    assert est.lower <= est.estimate <= est.upper


def test_retry_estimate(coin):
    est = monte_carlo_estimate(coin, _all_go(coin), "retry", _until(coin, "win"), samples=10_000)
    assert abs(est.estimate - 0.5) < 0.05
    assert est.truncated == 0


@pytest.mark.parametrize(
    "start,objective,exact",
    [
        ("s0", lambda cgs: NextObjective(cgs.states_with_atom("heads")), HALF),
        ("retry", lambda cgs: _until(cgs, "win"), HALF),
        ("retry", lambda cgs: NextObjective(cgs.states_with_atom("win")), Fraction(1, 3)),
    ],
)
def test_intervals_cover_the_exact_value(coin, start, objective, exact):
    profile = _all_go(coin)
    covered = 0
    for seed in range(100):
        est = monte_carlo_estimate(coin, profile, start, objective(coin), samples=1000, seed=seed)
        covered += est.lower <= float(exact) <= est.upper
    assert covered >= 97


def test_sampling_does_not_depend_on_workers(coin):
    profile = _all_go(coin)
    obj = _until(coin, "win")
    one = monte_carlo_estimate(coin, profile, "retry", obj, samples=3000, seed=7, jobs=1)
    many = monte_carlo_estimate(coin, profile, "retry", obj, samples=3000, seed=7, jobs=2)
    assert one == many


def test_step_bound_counts_cut_walks_as_failures(coin, caplog):
    with caplog.at_level(logging.WARNING):
        est = monte_carlo_estimate(coin, _all_go(coin), "retry", _until(coin, "win"), samples=200, step_bound=1)
    assert est.truncated == 200
    assert est.successes == 0
    assert "step bound" in caplog.text


def test_history_policy(imperfect_guess, caplog):
    hr = imperfect_guess.state_index("hr")

    def peek(history):
        return (1, 0) if history[-1] == hr else (0, 0)

    obj = _until(imperfect_guess, "win")
    with caplog.at_level(logging.WARNING):
        est = monte_carlo_history_estimate(imperfect_guess, peek, "s0", obj, samples=500)
    assert est.estimate == 1.0
    assert "biased low" in caplog.text


def test_history_policy_on_retry_chain(coin):
    est = monte_carlo_history_estimate(coin, lambda history: (0,), "retry", _until(coin, "win"), samples=2000)
    assert abs(est.estimate - 0.5) < 0.06


def _relabelled(name):
    raw = model_raw(name)
    raw["states"] = list(reversed(raw["states"]))
    return build_cgs(raw)


@pytest.mark.parametrize(
    "name,text",
    [
        ("dirac_reach.json", "<<1>>{>=1} F p"),
        ("dirac_reach.json", "<<>>{<1} (!p U p)"),
        ("imperfect_guess.json", "<<guesser>>{>=1} X win"),
        ("imperfect_guess.json", "!<<nature>>{>1/2} G !win"),
        ("coin.json", "<<a1>>{>=1/2} F win"),
    ],
)
def test_verdicts_survive_state_renumbering(name, text):
    original = build_cgs(model_raw(name))
    renamed = _relabelled(name)
    formula = parse_formula(text)
    for run in (check, brute_force_check):
        before = run(original, formula).satisfying_states
        after = run(renamed, formula).satisfying_states
        assert {original.states[s] for s in before} == {renamed.states[s] for s in after}
