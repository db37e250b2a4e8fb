from __future__ import annotations

import json
from typing import Any, Iterable


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``dotted.key=value``; the value is read as JSON, else kept as a string."""
    if "=" not in text:
        raise ValueError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key or any(not part for part in key.split(".")):
        raise ValueError(f"override {text!r} has an empty key segment")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def set_by_path(data: dict, path: str, value: Any) -> dict:
    node = data
    parts = path.split(".")
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = node[part] = {}
        elif not isinstance(child, dict):
            raise ValueError(f"cannot set {path!r}: {part!r} is not a mapping")
        node = child
    node[parts[-1]] = value
    return data


def apply_overrides(data: dict, overrides: Iterable[str]) -> dict:
    for text in overrides:
        key, value = parse_override(text)
        set_by_path(data, key, value)
    return data
