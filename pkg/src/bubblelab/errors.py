"""Exception hierarchy shared by all bubblelab modules.

The CLI maps these onto exit codes: configuration problems, ingestion
problems, and computation problems each get their own code.
"""


class BubbleLabError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfig(BubbleLabError):
    """Parameters or run configuration violate an invariant."""


class InsufficientHistory(BubbleLabError):
    """An agent rule needs more past prices than are available."""


class MalformedRow(BubbleLabError):
    """A CSV row could not be parsed."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NonContiguousTime(BubbleLabError):
    """The time column of a CSV does not advance by exactly one."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OutOfRange(BubbleLabError):
    """A price lies outside the admissible [p_min, p_max] band."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NonPositiveExcess(BubbleLabError):
    """An excess price needed strictly positive was zero or negative.

    ``index`` is the absolute time index of the first offending value.
    Signals that the requested window lies outside a bubble regime.
    """

    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"non-positive excess price at t={index}")
        self.index = index


class TooFewPoints(BubbleLabError):
    """Not enough observations for a two-parameter fit."""


class DegenerateRegressor(BubbleLabError):
    """The regressor has no usable variance."""


class FiniteHorizonSingularity(BubbleLabError):
    """A positive-feedback iteration blew past floating-point range.

    ``last_finite_index`` is the time of the last finite value produced.
    """

    def __init__(self, last_finite_index: int):
        super().__init__(
            f"iteration diverged; last finite value at t={last_finite_index}"
        )
        self.last_finite_index = last_finite_index


class NoValidCells(BubbleLabError):
    """A sweep grid holds no valid cell to aggregate over."""
