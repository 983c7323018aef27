"""Rubric domain types shared by the synthesis, reward, and evaluation stacks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class RubricRole(str, Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"
    NEGATIVE = "negative"

    @property
    def is_positive(self) -> bool:
        return self is not RubricRole.NEGATIVE


@dataclass(frozen=True)
class RubricSpec:
    """One atomic, verifiable criterion with a signed weight and a role.

    Negative roles carry negative weights (penalty items); explicit and
    implicit roles carry positive weights.
    """

    id: str
    criterion: str
    weight: float
    role: RubricRole
    rationale: str = ""
    fatal: bool = False

    def __post_init__(self) -> None:
        if not self.criterion.strip():
            raise ValueError("rubric criterion must be nonempty")
        if (self.role is RubricRole.NEGATIVE) != (self.weight < 0):
            raise ValueError(
                f"rubric {self.id!r}: role {self.role.value} inconsistent with weight {self.weight}"
            )

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "criterion": self.criterion,
            "weight": self.weight,
            "role": self.role.value,
            "rationale": self.rationale,
            "fatal": self.fatal,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RubricSpec":
        return cls(
            id=str(d["id"]),
            criterion=d["criterion"],
            weight=float(d["weight"]),
            role=RubricRole(d["role"]),
            rationale=d.get("rationale", ""),
            fatal=bool(d.get("fatal", False)),
        )


def load_rubric_file(path: str | Path) -> list[RubricSpec]:
    """Rubric files are JSON arrays of {id, criterion, weight, role, fatal}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data.get("rubrics", [])
    return [RubricSpec.from_dict(d) for d in data]
