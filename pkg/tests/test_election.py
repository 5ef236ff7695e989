from fractions import Fraction

import pytest

from src.checker import check
from src.election import (
    PENDING,
    UNIFORM_ARRIVAL,
    ElectionConfig,
    default_likes,
    election_formulas,
    election_model,
    write_election,
)
from src.errors import ConfigError, DistributionError
from src.logic import desugar, is_patl, parse_formula, parse_formula_file
from src.model import cgs_to_dict, obs_class, successors, validate_cgs
from src.oracle import brute_force_check, induced_chain, load_profile

HALF = Fraction(1, 2)


def _model(m=2, k=1, n=2, **kwargs):
    return election_model(ElectionConfig.from_counts(m, k, n, **kwargs))


def _statuses(label):
    return label.split("/")[-1].split("@")[0]


def test_single_candidate_single_voter():
    cgs = _model(1, 1, 1)
    assert cgs.states == ("p@1", "S@-", "R@-")
    assert validate_cgs(cgs_to_dict(cgs)) == []
    assert successors(cgs, "p@1", {"v1": "y"}).support == (cgs.state_index("S@-"),)
    assert successors(cgs, "p@1", {"v1": "n"}).support == (cgs.state_index("R@-"),)


def test_two_candidates_two_voters_states():
    cgs = _model()
    assert set(cgs.states) == {"pp@1", "Sp@-", "Rp@2", "RS@-", "RR@-"}


def test_unanimous_votes_are_sure():
    cgs = _model()
    assert successors(cgs, "pp@1", {"v1": "y", "v2": "y"}).support == (cgs.state_index("Sp@-"),)
    assert successors(cgs, "Rp@2", {"v1": "n", "v2": "n"}).support == (cgs.state_index("RR@-"),)


def test_split_votes_use_the_split_probability():
    cgs = _model(split_probability="1/3")
    dist = successors(cgs, "pp@1", {"v1": "y", "v2": "n"})
    assert dist.prob(cgs.state_index("Sp@-")) == Fraction(1, 3)
    assert dist.prob(cgs.state_index("Rp@2")) == Fraction(2, 3)


def test_split_overrides():
    cgs = _model(split_probability=Fraction(1, 3), split_overrides={(0, ("y", "n")): Fraction(3, 4)})
    assert successors(cgs, "pp@1", {"v1": "y", "v2": "n"}).prob(cgs.state_index("Sp@-")) == Fraction(3, 4)
    assert successors(cgs, "pp@1", {"v1": "n", "v2": "y"}).prob(cgs.state_index("Sp@-")) == Fraction(1, 3)


def test_split_row_of_the_induced_chain():
    cgs = _model()
    yes = {s: "y" if "@-" not in s else "n" for s in cgs.states}
    no = {s: "n" for s in cgs.states}
    row = induced_chain(cgs, load_profile(cgs, {"v1": yes, "v2": no})).rows[cgs.state_index("pp@1")]
    assert dict(row) == {cgs.state_index("Sp@-"): HALF, cgs.state_index("Rp@2"): HALF}


def test_finished_elections_are_absorbing():
    cgs = _model(3, 2, 2)
    done = cgs.states_with_atom("done")
    assert done
    n_action = cgs.action_index("n")
    for s in done:
        assert all(cgs.legality[s][a] == (n_action,) for a in range(cgs.n_agents))
        assert successors(cgs, s, (n_action,) * cgs.n_agents).support == (s,)


def test_statuses_only_leave_pending():
    cgs = _model(3, 2, 2, arrival=UNIFORM_ARRIVAL)
    for (s, _), dist in cgs.transitions.items():
        before = _statuses(cgs.states[s])
        for t in dist:
            after = _statuses(cgs.states[t])
            assert all(x == y or x == PENDING for x, y in zip(before, after))


def test_uniform_arrival():
    cgs = _model(2, 1, 1, arrival=UNIFORM_ARRIVAL)
    assert {"pp@1", "pp@2"} <= set(cgs.states)
    assert successors(cgs, "pp@1", {"v1": "n"}).support == (cgs.state_index("Rp@2"),)


def test_default_likes():
    assert default_likes(2, 3) == ((True, False, True), (False, True, False))
    cgs = _model()
    start = cgs.state_index("pp@1")
    assert {cgs.atoms[p] for p in cgs.labeling[start]} == {"interview_1", "likes_v1_1", "likes_v2_2"}


def test_uncertain_preferences_hide_other_rows():
    cgs = _model(1, 1, 2, uncertain_preferences=True)
    assert cgs.n_states == 12
    same_row = [obs_class(cgs, "v1", f"P{i}/p@1") for i in (0, 1)]
    assert same_row[0] == same_row[1]
    assert obs_class(cgs, "v1", "P2/p@1") != same_row[0]
    assert obs_class(cgs, "v2", "P0/p@1") == obs_class(cgs, "v2", "P2/p@1")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(m=1, k=2, n=1),
        dict(m=2, k=0, n=1),
        dict(m=2, k=1, n=0),
        dict(split_probability="1"),
        dict(split_probability="0"),
        dict(arrival="random"),
    ],
)
def test_bad_configurations(kwargs):
    with pytest.raises(ConfigError):
        _model(**kwargs)


def test_decimal_split_probability_is_rejected():
    with pytest.raises(DistributionError):
        ElectionConfig.from_counts(2, 1, 2, split_probability="0.5")


def test_formula_fragments():
    formulas = election_formulas(ElectionConfig.from_counts(2, 1, 2))
    by_name = {f.name: f for f in formulas}
    assert by_name["cannot_select_rejected_1"].patl
    assert by_name["interview_2_at_most_quarter_v1"].patl
    assert not by_name["someone_liked_selected"].patl
    assert not by_name["all_liked_selected"].patl
    for f in formulas:
        assert is_patl(desugar(parse_formula(f.text)))[0] == f.patl


def test_rejected_candidates_stay_unselected():
    cfg = ElectionConfig.from_counts(2, 1, 2)
    cgs = election_model(cfg)
    for f in election_formulas(cfg):
        if f.name.startswith("cannot_select_rejected_"):
            formula = parse_formula(f.text)
            assert check(cgs, formula).verdicts() == [True] * cgs.n_states
            assert brute_force_check(cgs, formula).satisfying_states == set(range(cgs.n_states))


def test_one_voter_cannot_block_a_split():
    cfg = ElectionConfig.from_counts(2, 1, 2)
    cgs = election_model(cfg)
    formula = parse_formula("interview_1 -> <<v1>>{<=1/4} X selected_1")
    report = check(cgs, formula)
    assert not report.holds_at("pp@1")
    assert report.holds_at("Rp@2")
    assert report.satisfying_states == brute_force_check(cgs, formula).satisfying_states


def test_write_election(tmp_path):
    cfg = ElectionConfig.from_counts(2, 1, 2)
    model_path, formulas_path = write_election(cfg, tmp_path / "out")
    assert model_path.exists()
    text = formulas_path.read_text(encoding="utf-8")
    assert "# not PATL" in text
    named = parse_formula_file(formulas_path)
    assert [name for name, _ in named] == [
        "cannot_select_rejected_1",
        "cannot_select_rejected_2",
        "interview_1_at_most_quarter_v1",
        "interview_1_at_most_quarter_v2",
        "interview_2_at_most_quarter_v1",
        "interview_2_at_most_quarter_v2",
    ]
