"""JSON schemas for the documents the command line reads and writes."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from ..errors import InvalidArgumentError

NAMES = ("records", "decomposition", "bound", "certification")


class SchemaViolation(InvalidArgumentError):
    def __init__(self, name: str, path: str, message: str):
        super().__init__(f"{name} document invalid at {path}: {message}")
        self.path = path


@lru_cache(maxsize=None)
def load(name: str) -> dict:
    if name not in NAMES:
        raise InvalidArgumentError(f"unknown schema {name!r}")
    return json.loads(resources.files(__name__).joinpath(f"{name}.schema.json").read_text())


def validate(doc, name: str) -> None:
    """Raise :class:`SchemaViolation` naming the first offending JSON path."""
    validator = jsonschema.Draft202012Validator(load(name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaViolation(name, err.json_path, err.message)
