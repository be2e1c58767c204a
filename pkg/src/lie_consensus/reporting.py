"""Small result records shared by the axiom checkers and verify suites."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    """Outcome of one sampled property check."""

    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": float(self.measured),
            "tolerance": float(self.tolerance),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class Bound:
    """A supremum-type constant that may be infinite (Euclidean factors)."""

    value: float
    bounded: bool = True

    def __float__(self) -> float:
        return self.value


UNBOUNDED = Bound(math.inf, bounded=False)


@dataclass
class CheckSuite:
    """Named collection of checks, e.g. all axioms of one potential."""

    name: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": [c.as_dict() for c in self.checks],
        }
