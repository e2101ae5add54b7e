from __future__ import annotations

import json

import pytest

from qgen.mcq import Mcq, McqOption, ParseCategory, ParseFailure, parse_mcq_json
from tests.malformed_corpus import MALFORMED_CASES

VALID_JSON = json.dumps({
    "stem": "Apakah hasil 5 + (-3)?",
    "options": [
        {"label": "A", "text": "8"},
        {"label": "B", "text": "2"},
        {"label": "C", "text": "-2"},
        {"label": "D", "text": "-8"},
    ],
    "answer_key": "B",
    "explanation": "Gerak tiga unit ke kiri.",
}, ensure_ascii=False)


def test_valid_json_parses():
    mcq = parse_mcq_json(VALID_JSON)
    assert isinstance(mcq, Mcq)
    assert mcq.answer_key == "B"
    assert mcq.stem == "Apakah hasil 5 + (-3)?"
    assert [o.label for o in mcq.options] == ["A", "B", "C", "D"]


def test_fenced_json_parses_identically():
    fenced = f"```json\n{VALID_JSON}\n```"
    assert parse_mcq_json(fenced) == parse_mcq_json(VALID_JSON)


def test_bare_fence_without_language_tag():
    fenced = f"```\n{VALID_JSON}\n```"
    assert isinstance(parse_mcq_json(fenced), Mcq)


def test_question_key_alias():
    payload = json.loads(VALID_JSON)
    payload["question"] = payload.pop("stem")
    assert isinstance(parse_mcq_json(json.dumps(payload)), Mcq)


def test_options_as_plain_array():
    payload = json.loads(VALID_JSON)
    payload["options"] = ["8", "2", "-2", "-8"]
    mcq = parse_mcq_json(json.dumps(payload))
    assert isinstance(mcq, Mcq)
    assert mcq.option_text("A") == "8"
    assert mcq.option_text("D") == "-8"


def test_options_as_label_map():
    payload = json.loads(VALID_JSON)
    payload["options"] = {"A": "8", "B": "2", "C": "-2", "D": "-8"}
    mcq = parse_mcq_json(json.dumps(payload))
    assert isinstance(mcq, Mcq)
    assert mcq.option_text("B") == "2"


def test_answer_as_option_text():
    payload = json.loads(VALID_JSON)
    payload["answer_key"] = "-2"
    mcq = parse_mcq_json(json.dumps(payload))
    assert isinstance(mcq, Mcq)
    assert mcq.answer_key == "C"


def test_answer_with_trailing_punctuation():
    payload = json.loads(VALID_JSON)
    payload["answer_key"] = "b)"
    mcq = parse_mcq_json(json.dumps(payload))
    assert isinstance(mcq, Mcq)
    assert mcq.answer_key == "B"


def test_three_options_bad_count():
    payload = json.loads(VALID_JSON)
    payload["options"] = payload["options"][:3]
    result = parse_mcq_json(json.dumps(payload))
    assert isinstance(result, ParseFailure)
    assert result.category is ParseCategory.BAD_OPTION_COUNT


def test_truncated_json_not_json():
    result = parse_mcq_json(VALID_JSON[:-10])
    assert isinstance(result, ParseFailure)
    assert result.category is ParseCategory.NOT_JSON


@pytest.mark.parametrize("raw,expected", MALFORMED_CASES, ids=range(len(MALFORMED_CASES)))
def test_malformed_corpus_categories(raw, expected):
    result = parse_mcq_json(raw)
    assert isinstance(result, ParseFailure)
    assert result.category is expected
    assert result.raw_text == raw


def test_mcq_invariants_enforced_on_construction():
    options = tuple(McqOption(l, t) for l, t in zip("ABCD", ["a", "b", "c", "d"]))
    with pytest.raises(ValueError):
        Mcq(stem="", options=options, answer_key="A")
    with pytest.raises(ValueError):
        Mcq(stem="s", options=options[:3], answer_key="A")
    with pytest.raises(ValueError):
        Mcq(stem="s", options=options, answer_key="E")
    dup = tuple(McqOption(l, "x") for l in "ABCD")
    with pytest.raises(ValueError):
        Mcq(stem="s", options=dup, answer_key="A")


def test_mcq_serialization_round_trip():
    mcq = parse_mcq_json(VALID_JSON)
    assert Mcq.from_dict(mcq.to_dict()) == mcq


def test_parse_failure_serialization_round_trip():
    failure = parse_mcq_json("prose only")
    assert ParseFailure.from_dict(failure.to_dict()) == failure
