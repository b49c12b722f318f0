"""Resource budgets shared by every exhaustive construction.

Budgets are configuration: callers pass a :class:`Budget` explicitly or rely on
:func:`default_budget`, which reads ``QLAB_BUDGET`` (``carrier=4096,scan=1000000``).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace


class BudgetExceeded(RuntimeError):
    """A construction would exceed its configured resource limit.

    Distinct from a mathematical refutation: nothing was decided.
    """

    def __init__(self, what: str, needed: int, limit: int):
        super().__init__(f"{what}: needs {needed}, budget is {limit}")
        self.what = what
        self.needed = needed
        self.limit = limit


@dataclass(frozen=True)
class Budget:
    carrier: int = 4096
    scan: int = 10**6

    def check_carrier(self, what: str, size: int) -> None:
        if size > self.carrier:
            raise BudgetExceeded(what, size, self.carrier)

    def check_scan(self, what: str, size: int) -> None:
        if size > self.scan:
            raise BudgetExceeded(what, size, self.scan)

    def with_(self, **kw) -> "Budget":
        return replace(self, **kw)


def parse_budget(text: str, base: Budget | None = None) -> Budget:
    base = base or Budget()
    fields = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in ("carrier", "scan"):
            raise ValueError(f"unknown budget field {key!r}")
        fields[key] = int(value)
    return replace(base, **fields)


def default_budget() -> Budget:
    env = os.environ.get("QLAB_BUDGET")
    return parse_budget(env) if env else Budget()
