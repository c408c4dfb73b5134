from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ailab.errors import ScenarioSyntaxError, ValidationError
from ailab.scenario import (
    bundled_scenario_names,
    format_probability,
    load_bundled,
    parse_probability,
    parse_scenario,
    resolve_scenario,
    serialize_scenario,
)

MINIMAL_SEARCH = {
    "kind": "search",
    "version": "1",
    "body": {
        "states": [{"id": "a"}, {"id": "b"}],
        "edges": [{"from": "a", "action": "go", "to": "b", "cost": 1}],
        "initial": "a",
        "goal": {"type": "state_id", "id": "b"},
    },
}


def test_minimal_two_state_document():
    doc = parse_scenario(json.dumps(MINIMAL_SEARCH))
    assert doc.kind == "search"
    assert len(doc.spec.states) == 2
    assert len(doc.spec.edges) == 1


def test_round_trip_every_bundled_scenario():
    for name in bundled_scenario_names():
        doc = load_bundled(name)
        again = parse_scenario(serialize_scenario(doc))
        assert again.kind == doc.kind
        assert again.version == doc.version
        assert again.spec == doc.spec, name


def test_default_deck_fixture_counts():
    deck = load_bundled("red_black_default.deck").spec
    assert (deck.hit_deck.red, deck.hit_deck.black, deck.hit_deck.face) == (2, 2, 1)
    assert (deck.stand_deck.red, deck.stand_deck.black) == (1, 1)
    assert deck.scores.bust == -5
    assert dict(deck.scores.by_max_count) == {1: 1, 2: 5, 3: 15}
    assert deck.scores.jackpot == 30


def test_malformed_json_reports_line_and_column():
    with pytest.raises(ScenarioSyntaxError) as err:
        parse_scenario('{"kind": "search",\n  "version": }')
    assert err.value.line == 2
    assert err.value.column is not None


def test_unknown_kind_rejected():
    with pytest.raises(ValidationError):
        parse_scenario(json.dumps({"kind": "chess", "version": "1", "body": {}}))


def test_unknown_version_rejected():
    bad = dict(MINIMAL_SEARCH, version="2")
    with pytest.raises(ValidationError, match="version"):
        parse_scenario(json.dumps(bad))


def test_kind_mismatch_rejected():
    with pytest.raises(ValidationError, match="expected"):
        parse_scenario(json.dumps(MINIMAL_SEARCH), kind="map")


def test_nonstochastic_transition_row_names_the_city():
    raw = json.loads(serialize_scenario(load_bundled("country_a.map")))
    raw["body"]["transition"]["dunmore"]["dunmore"] = "1/6"  # row now sums to 5/6
    with pytest.raises(ValidationError, match="dunmore"):
        parse_scenario(json.dumps(raw))


def test_edge_to_missing_state_rejected():
    bad = json.loads(json.dumps(MINIMAL_SEARCH))
    bad["body"]["edges"][0]["to"] = "zzz"
    with pytest.raises(ValidationError):
        parse_scenario(json.dumps(bad))


def test_heuristic_must_cover_all_states():
    bad = json.loads(json.dumps(MINIMAL_SEARCH))
    bad["body"]["heuristic"] = {"a": 1}
    with pytest.raises(ValidationError):
        parse_scenario(json.dumps(bad))


def test_negative_cost_rejected_at_parse_time():
    bad = json.loads(json.dumps(MINIMAL_SEARCH))
    bad["body"]["edges"][0]["cost"] = -1
    with pytest.raises(ValidationError):
        parse_scenario(json.dumps(bad))


def test_unknown_body_keys_rejected():
    bad = json.loads(json.dumps(MINIMAL_SEARCH))
    bad["body"]["frontier"] = []
    with pytest.raises(ValidationError):
        parse_scenario(json.dumps(bad))


def test_probability_parsing_normalizes_to_lowest_terms():
    assert parse_probability("4/6") == Fraction(2, 3)
    assert format_probability(parse_probability("4/6")) == "2/3"
    assert parse_probability("1") == Fraction(1)


@pytest.mark.parametrize("text", ["7/6", "-1/6", "1/0", "a/b", "0.5"])
def test_bad_probabilities_rejected(text):
    with pytest.raises(ValidationError):
        parse_probability(text)


def test_non_dice_expressible_row_rejected():
    raw = json.loads(serialize_scenario(load_bundled("country_a.map")))
    row = raw["body"]["transition"]["avren"]
    row["avren"] = "1/5"
    row["brig"] = "2/5"
    row["haloway"] = "2/5"
    with pytest.raises(ValidationError, match="die"):
        parse_scenario(json.dumps(raw))


def test_grid_requires_full_cell_coverage():
    raw = json.loads(serialize_scenario(load_bundled("grid3x3")))
    raw["body"]["cells"] = raw["body"]["cells"][:-1]
    with pytest.raises(ValidationError):
        parse_scenario(json.dumps(raw))


def test_map_adjacency_must_be_symmetric():
    raw = json.loads(serialize_scenario(load_bundled("country_a.map")))
    raw["body"]["cities"][0]["neighbors"].append("dunmore")
    with pytest.raises(ValidationError, match="symmetric"):
        parse_scenario(json.dumps(raw))


def test_transition_mass_outside_neighborhood_rejected():
    raw = json.loads(serialize_scenario(load_bundled("country_a.map")))
    row = raw["body"]["transition"]["avren"]
    row["elsmere"] = "1/6"
    row["brig"] = "2/6"
    with pytest.raises(ValidationError, match="non-neighbor"):
        parse_scenario(json.dumps(raw))


def test_resolve_scenario_by_bundled_name_and_path(tmp_path):
    doc = resolve_scenario("house.search")
    assert doc.kind == "search"
    path = tmp_path / "mine.json"
    path.write_text(json.dumps(MINIMAL_SEARCH), encoding="utf-8")
    assert resolve_scenario(str(path)).kind == "search"
    with pytest.raises(ValidationError):
        resolve_scenario("does-not-exist")


def test_deck_with_uncovered_max_count_rejected():
    raw = json.loads(serialize_scenario(load_bundled("red_black_default.deck")))
    raw["body"]["hit_deck"]["red"] = 3  # max count 4 now achievable on stand
    with pytest.raises(ValidationError, match="max counts"):
        parse_scenario(json.dumps(raw))


@st.composite
def deck_bodies(draw):
    red = draw(st.integers(1, 4))
    black = draw(st.integers(1, 4))
    counts = range(1, max(red, black) + 2)
    return {
        "hit_deck": {"red": red, "black": black, "face": draw(st.integers(1, 3))},
        "stand_deck": {
            "red": draw(st.integers(0, 2)),
            "black": draw(st.integers(1, 2)),
        },
        "scores": {
            "bust": draw(st.integers(-50, 0)),
            "by_max_count": {
                str(k): draw(st.integers(0, 50)) for k in counts
            },
            "jackpot": draw(st.integers(0, 500)),
        },
        "jackpot_rule": draw(
            st.sampled_from(["hit_on_empty_deck", "auto_on_full_hand"])
        ),
    }


@given(body=deck_bodies())
@settings(max_examples=40)
def test_generated_decks_round_trip(body):
    text = json.dumps({"kind": "deck", "version": "1", "body": body})
    doc = parse_scenario(text)
    again = parse_scenario(serialize_scenario(doc))
    assert again.spec == doc.spec
