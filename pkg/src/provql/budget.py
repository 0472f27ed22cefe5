"""Wall-clock budgets for long-running statements."""

from __future__ import annotations

import time
from typing import Optional

from .errors import BudgetExceeded


class Deadline:
    """Absolute wall-clock cutoff; `None` seconds means unlimited."""

    __slots__ = ("cutoff",)

    def __init__(self, seconds: Optional[float] = None):
        self.cutoff = None if seconds is None else time.monotonic() + seconds

    def expired(self) -> bool:
        return self.cutoff is not None and time.monotonic() >= self.cutoff

    def check(self, what: str = "statement") -> None:
        if self.expired():
            raise BudgetExceeded(f"{what} exceeded its time budget")


UNLIMITED = Deadline(None)
