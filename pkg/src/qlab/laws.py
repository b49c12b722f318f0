"""Law-violation records and the exception that carries them."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Violation:
    law: str
    witness: tuple = ()
    detail: str = ""

    def __str__(self):
        w = ", ".join(map(str, self.witness))
        s = f"{self.law}({w})"
        return f"{s}: {self.detail}" if self.detail else s

    def to_json(self, labels=None):
        return {"law": self.law, "witness": [str(w) for w in self.witness], "detail": self.detail}


class StructureError(ValueError):
    """Raised when a table fails its axioms; ``violations`` lists every witness found."""

    def __init__(self, kind: str, violations: list[Violation]):
        self.kind = kind
        self.violations = list(violations)
        head = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"invalid {kind}: {head}{more}")


@dataclass
class LawLog:
    """Collects the first witness per law; ``limit`` caps the scan per law."""

    violations: list[Violation] = field(default_factory=list)
    _seen: set = field(default_factory=set)

    def fail(self, law: str, *witness, detail: str = "") -> None:
        if law in self._seen:
            return
        self._seen.add(law)
        self.violations.append(Violation(law, tuple(witness), detail))

    def failed(self, law: str) -> bool:
        return law in self._seen

    def __bool__(self):
        return bool(self.violations)
