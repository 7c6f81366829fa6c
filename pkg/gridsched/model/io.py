"""Scenario file loading, saving and dotted-path overrides."""

import json
import logging
import os
from typing import Any, Dict, Iterable, Union

from gridsched.errors import SchemaError
from gridsched.model.scenario import Scenario
from gridsched.model.validation import validate_scenario

logger = logging.getLogger("model")


def scenario_to_json(scenario: Scenario) -> str:
    """Canonical text form: sorted keys, indent 2, trailing newline."""
    return json.dumps(scenario.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _step_into(container: Any, part: str, path: str) -> Any:
    if isinstance(container, list):
        try:
            return container[int(part)]
        except (ValueError, IndexError):
            raise SchemaError(f"override path {path!r}: bad list index {part!r}") from None
    if isinstance(container, dict):
        if part not in container:
            raise SchemaError(f"override path {path!r}: no field {part!r}")
        return container[part]
    raise SchemaError(f"override path {path!r}: cannot descend into {part!r}")


def apply_overrides(document: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """
    Applies `dotted.path=value` overrides in place and returns the document.

    Values are parsed as JSON when possible (numbers, booleans, lists, null), otherwise kept
    as strings. List elements are addressed by index: `homes.0.battery.capacity_kwh=7`.
    """
    for item in overrides:
        path, sep, raw = item.partition("=")
        path = path.strip()
        if not sep or not path:
            raise SchemaError(f"override {item!r} is not of the form key=value")
        parts = path.split(".")
        target: Any = document
        for part in parts[:-1]:
            target = _step_into(target, part, path)
        last = parts[-1]
        value = _parse_value(raw)
        if isinstance(target, list):
            try:
                target[int(last)] = value
            except (ValueError, IndexError):
                raise SchemaError(f"override path {path!r}: bad list index {last!r}") from None
        elif isinstance(target, dict):
            target[last] = value
        else:
            raise SchemaError(f"override path {path!r}: cannot set {last!r}")
        logger.info(f"Scenario override {path} = {value!r}")
    return document


def load_scenario(path: Union[str, os.PathLike], overrides: Iterable[str] = ()) -> Scenario:
    """Reads a scenario JSON file, applies overrides and validates it."""
    try:
        with open(path, "r") as f:
            document = json.load(f)
    except FileNotFoundError:
        raise SchemaError(f"scenario file {os.fspath(path)!r} not found") from None
    except json.JSONDecodeError as e:
        raise SchemaError(f"scenario file {os.fspath(path)!r} is not valid JSON",
                          [f"line {e.lineno} column {e.colno}: {e.msg}"]) from None
    if not isinstance(document, dict):
        raise SchemaError(f"scenario file {os.fspath(path)!r} must hold a JSON object")
    apply_overrides(document, overrides)
    return validate_scenario(document)


def save_scenario(scenario: Scenario, path: Union[str, os.PathLike]) -> None:
    """Atomic write: temp file, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    tmp_path = path + ".tmp"
    with open(tmp_path, "w") as f:
        f.write(scenario_to_json(scenario))
    os.replace(tmp_path, path)
    logger.debug(f"Saved scenario to {path}")


def override_scenario(scenario: Scenario, overrides: Iterable[str]) -> Scenario:
    """Applies dotted-path overrides to an in-memory scenario and re-validates it."""
    overrides = tuple(overrides)
    if not overrides:
        return scenario
    document = json.loads(scenario_to_json(scenario))
    return validate_scenario(apply_overrides(document, overrides))
