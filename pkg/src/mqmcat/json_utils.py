"""Lenient extraction of JSON objects from model output.

Models wrap JSON in prose and code fences; this scans for balanced
top-level ``{...}`` spans (string- and escape-aware) and yields each
parseable object in order of appearance.
"""
from __future__ import annotations

import json
from typing import Iterator


def iter_json_objects(text: str) -> Iterator[dict]:
    """Yield every parseable JSON object found in text, left to right."""
    i = 0
    n = len(text)
    while i < n:
        if text[i] != "{":
            i += 1
            continue
        end = _match_braces(text, i)
        if end is None:
            i += 1
            continue
        try:
            obj = json.loads(text[i : end + 1])
        except ValueError:
            i += 1
            continue
        if isinstance(obj, dict):
            yield obj
            i = end + 1
        else:
            i += 1


def first_json_object(text: str) -> dict | None:
    for obj in iter_json_objects(text):
        return obj
    return None


def _match_braces(text: str, start: int) -> int | None:
    """Index of the brace closing text[start], or None if unbalanced."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
    return None
