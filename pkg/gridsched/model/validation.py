"""Turns raw scenario documents into validated Scenario objects."""

import logging
from typing import Any, Mapping, Union

from pydantic import ValidationError

from gridsched.errors import InvariantError, SchemaError
from gridsched.model.scenario import Scenario

logger = logging.getLogger("model")

_SCHEMA_TYPES = {"missing", "extra_forbidden", "model_type", "model_attributes_type", "json_invalid"}


def _is_schema_problem(error_type: str) -> bool:
    return error_type in _SCHEMA_TYPES or error_type.endswith("_type") or error_type.endswith("_parsing")


def _describe(error: Mapping[str, Any]) -> str:
    loc = ".".join(str(part) for part in error.get("loc", ())) or "<root>"
    msg = str(error.get("msg", "invalid"))
    if msg.startswith("Value error, "):
        msg = msg[len("Value error, "):]
    return f"{loc}: {msg}"


def validate_scenario(raw: Union[Scenario, Mapping[str, Any]]) -> Scenario:
    """
    Validates a scenario document or re-checks an existing Scenario.

    Every violation is collected. If any of them is structural (missing field, unknown
    field, wrong type) a SchemaError is raised, otherwise an InvariantError.
    """
    payload = raw.model_dump() if isinstance(raw, Scenario) else raw
    try:
        scenario = Scenario.model_validate(payload)
    except ValidationError as e:
        errors = e.errors()
        violations = [_describe(err) for err in errors]
        if any(_is_schema_problem(err.get("type", "")) for err in errors):
            raise SchemaError("scenario does not match the schema", violations) from None
        raise InvariantError("scenario violates domain invariants", violations) from None

    logger.debug(f"Validated scenario: {len(scenario.homes)} homes, {scenario.grid.num_slots} slots")
    return scenario
