"""Feature under development: the data that fills the first-iteration prompt.

A feature is described by free text, named example inputs, expected outputs,
and optionally the class the production code should grow. Features are loaded
from a small TOML file so they stay human-editable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .errors import FeatureValidationError


@dataclass(frozen=True)
class FeatureInput:
    """One named example input, value kept verbatim as text."""

    name: str
    value: str


@dataclass(frozen=True)
class FeatureSpec:
    """Description of the feature a session develops.

    ``declared_functions`` lists the function names the feature promises
    (used by the completion checklist); when empty, the expected output
    literals stand in for them.
    """

    description: str
    inputs: tuple[FeatureInput, ...] = ()
    expected_outputs: tuple[str, ...] = ()
    target_class_hint: str | None = None
    declared_functions: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.description.strip():
            raise FeatureValidationError("feature description must not be empty")
        for item in self.inputs:
            if not item.name.strip():
                raise FeatureValidationError("every feature input needs a non-empty name")

    def checklist(self) -> tuple[str, ...]:
        """Entries the completion check must see referenced by passing tests."""
        if self.declared_functions:
            return self.declared_functions
        return self.expected_outputs

    def to_dict(self) -> dict[str, Any]:
        return {
            "description": self.description,
            "inputs": [{"name": i.name, "value": i.value} for i in self.inputs],
            "expected_outputs": list(self.expected_outputs),
            "target_class_hint": self.target_class_hint,
            "declared_functions": list(self.declared_functions),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FeatureSpec":
        return cls(
            description=data["description"],
            inputs=tuple(FeatureInput(i["name"], i["value"]) for i in data.get("inputs", [])),
            expected_outputs=tuple(data.get("expected_outputs", [])),
            target_class_hint=data.get("target_class_hint"),
            declared_functions=tuple(data.get("declared_functions", [])),
        )


def _as_text(value: Any) -> str:
    # Slot values are opaque text; tolerate bare TOML numbers/booleans.
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def load_feature_file(path: str | Path) -> FeatureSpec:
    """Parse a feature TOML file into a validated FeatureSpec."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise FeatureValidationError(f"cannot read feature file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise FeatureValidationError(f"feature file {path} is not valid TOML: {exc}") from exc

    if "description" not in data:
        raise FeatureValidationError(f"feature file {path} is missing 'description'")

    raw_inputs = data.get("inputs", [])
    if not isinstance(raw_inputs, list):
        raise FeatureValidationError("'inputs' must be an array of {name, value} tables")
    inputs = []
    for entry in raw_inputs:
        if not isinstance(entry, dict) or "name" not in entry or "value" not in entry:
            raise FeatureValidationError("each input needs both 'name' and 'value'")
        inputs.append(FeatureInput(name=str(entry["name"]), value=_as_text(entry["value"])))

    return FeatureSpec(
        description=str(data["description"]),
        inputs=tuple(inputs),
        expected_outputs=tuple(_as_text(v) for v in data.get("expected_outputs", [])),
        target_class_hint=data.get("target_class_hint"),
        declared_functions=tuple(str(v) for v in data.get("declared_functions", [])),
    )


def _snake_case(name: str) -> str:
    step = re.sub(r"(.)([A-Z][a-z]+)", r"\1_\2", name)
    return re.sub(r"([a-z0-9])([A-Z])", r"\1_\2", step).lower()


def default_filenames(feature: FeatureSpec) -> tuple[str, str]:
    """(test filename, production filename) derived from the class hint."""
    if feature.target_class_hint:
        stem = _snake_case(feature.target_class_hint)
    else:
        stem = "feature"
    return f"test_{stem}.py", f"{stem}.py"
