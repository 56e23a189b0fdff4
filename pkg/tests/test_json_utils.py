import json

from hypothesis import given, strategies as st

from mqmcat.json_utils import first_json_object, iter_json_objects


def test_bare_object():
    assert first_json_object('{"a": 1}') == {"a": 1}


def test_object_inside_prose_and_fences():
    raw = 'Sure! Here is the answer:\n```json\n{"translation": "hallo", "explanation": "x"}\n```\ndone'
    assert first_json_object(raw) == {"translation": "hallo", "explanation": "x"}


def test_multiple_objects_yield_left_to_right():
    raw = '{"a": 1} noise {"b": 2}'
    assert list(iter_json_objects(raw)) == [{"a": 1}, {"b": 2}]


def test_nested_braces_and_strings_with_braces():
    raw = 'prefix {"outer": {"inner": [1, 2]}, "s": "curly } inside \\" quote"} suffix'
    objs = list(iter_json_objects(raw))
    assert objs == [{"outer": {"inner": [1, 2]}, "s": 'curly } inside " quote'}]


def test_unbalanced_and_invalid_candidates_are_skipped():
    assert list(iter_json_objects("{{{ nope")) == []
    assert list(iter_json_objects('{"a": } {"b": 2}')) == [{"b": 2}]


def test_no_object_returns_none():
    assert first_json_object("just words") is None
    assert first_json_object("") is None


def test_non_dict_json_is_ignored():
    assert list(iter_json_objects("[1, 2, 3]")) == []


@given(st.dictionaries(st.text(min_size=1, max_size=6), st.one_of(st.integers(), st.text(max_size=8)), max_size=4))
def test_any_embedded_object_is_recovered(obj):
    raw = "chatter before " + json.dumps(obj) + " chatter after"
    assert first_json_object(raw) == obj
