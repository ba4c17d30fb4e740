"""Exception types shared across the package.

Each error corresponds to a contract violation or a resource limit that
callers are expected to handle; plain bugs raise the usual built-ins.
"""

from __future__ import annotations


class EmptyWordError(ValueError):
    """A word-level predicate or constructor received an empty word."""


class NotCyclicallyReducedError(ValueError):
    """A relator failed the cyclic-reduction requirement."""


class CapExceededError(RuntimeError):
    """An enumeration would produce more items than the configured cap."""


class DomainError(ValueError):
    """A numeric parameter fell outside its documented domain."""


class CountExceedsUniverseError(ValueError):
    """A requested relator count exceeds the size of the sampling universe."""


class LengthMismatchError(ValueError):
    """A relator's length disagrees with the presentation's word length."""


class BudgetExceededError(RuntimeError):
    """An exact search exceeded its node or size budget.

    Carries enough structure for callers to report which check gave up.
    """

    def __init__(self, check: str, limit: int, detail: str = ""):
        self.check = check
        self.limit = limit
        self.detail = detail
        msg = f"budget exceeded in {check} (limit {limit})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NoCrossingError(ValueError):
    """A threshold estimate was requested but the statistic never crosses the level."""


class NonMonotoneTrendError(ValueError):
    """A threshold estimate was requested on a non-monotone statistic."""


class PresentationFormatError(ValueError):
    """A presentation file failed to parse; carries the offending line number."""

    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")
