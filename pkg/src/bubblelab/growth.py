"""Deterministic iteration of the three bubble growth models.

All three share one update: the excess price is multiplied by
exp(log-growth) each step.  What differs is where the log-growth comes
from:

  exponential      g = a                     (constant rate)
  price_feedback   g = a + b * excess[t-1]   (rate grows with the level)
  return_feedback  g = a + b * g[t-1]        (rate feeds on itself)

Positive feedback makes these maps blow up in finite time by
construction; the iteration reports that as an error instead of
emitting non-finite values.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import FiniteHorizonSingularity, InvalidConfig
from .series import ExcessSeries

EXPONENTIAL = "exponential"
PRICE_FEEDBACK = "price_feedback"
RETURN_FEEDBACK = "return_feedback"


@dataclass(frozen=True)
class GrowthModel:
    """Parameters of one generative bubble model.

    ``a`` is the base log-growth per step, ``b`` the feedback coefficient
    (zero for the exponential variant), ``start`` the initial excess
    price, and ``initial_log_return`` seeds the return-feedback
    recursion.
    """

    variant: str
    a: float
    b: float = 0.0
    start: float = 60.0
    initial_log_return: Optional[float] = None

    def __post_init__(self):
        if self.variant not in (EXPONENTIAL, PRICE_FEEDBACK, RETURN_FEEDBACK):
            raise InvalidConfig(f"unknown model variant {self.variant!r}")
        if not self.start > 0:
            raise InvalidConfig(f"initial excess price must be positive, got {self.start}")
        for name in ("a", "b", "start"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidConfig(f"parameter {name} must be finite")
        if self.variant == RETURN_FEEDBACK:
            if self.initial_log_return is None or not math.isfinite(
                self.initial_log_return
            ):
                raise InvalidConfig("return feedback needs a finite initial log-return")

    @staticmethod
    def exponential(a: float, start: float = 60.0) -> "GrowthModel":
        return GrowthModel(EXPONENTIAL, a=a, b=0.0, start=start)

    @staticmethod
    def price_feedback(a: float, b: float, start: float = 60.0) -> "GrowthModel":
        return GrowthModel(PRICE_FEEDBACK, a=a, b=b, start=start)

    @staticmethod
    def return_feedback(
        a: float, b: float, initial_log_return: float, start: float = 60.0
    ) -> "GrowthModel":
        return GrowthModel(
            RETURN_FEEDBACK, a=a, b=b, start=start, initial_log_return=initial_log_return
        )


def _step_log_growth(model: GrowthModel, level: float, prev_g: float) -> float:
    if model.variant == PRICE_FEEDBACK:
        return model.a + model.b * level
    if model.variant == RETURN_FEEDBACK:
        return model.a + model.b * prev_g
    return model.a + model.b * level  # exponential: b is 0, same arithmetic path


def iterate(model: GrowthModel, steps: int, noise=None) -> ExcessSeries:
    """Run the model forward, returning excess prices at t = 0..steps.

    ``noise`` is an optional callable returning an additive perturbation
    of each step's log-growth (see iterate_noisy).  Raises
    FiniteHorizonSingularity once a value leaves floating-point range.
    """
    if steps < 0:
        raise InvalidConfig(f"steps must be non-negative, got {steps}")
    values: List[float] = [model.start]
    g = model.initial_log_return if model.initial_log_return is not None else 0.0
    for t in range(1, steps + 1):
        g = _step_log_growth(model, values[-1], g)
        if noise is not None:
            g += noise()
        try:
            nxt = values[-1] * math.exp(g)
        except OverflowError:
            raise FiniteHorizonSingularity(t - 1) from None
        if not math.isfinite(nxt):
            raise FiniteHorizonSingularity(t - 1)
        values.append(nxt)
    return ExcessSeries(0, tuple(values))


def iterate_noisy(
    model: GrowthModel, steps: int, sigma: float, seed: int
) -> ExcessSeries:
    """Iterate with Gaussian noise of std-dev ``sigma`` on each log-growth."""
    if sigma < 0:
        raise InvalidConfig(f"noise std-dev must be non-negative, got {sigma}")
    rng = random.Random(seed)
    return iterate(model, steps, noise=lambda: rng.gauss(0.0, sigma))


@dataclass(frozen=True)
class ComparisonRow:
    """One row of the exponential-vs-feedback comparison table."""

    t: int
    exponential: float
    exponential_pct: Optional[int]
    feedback: float
    feedback_pct: Optional[int]


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def table2(
    steps: int = 23,
    a1: float = math.log(1.1),
    a2: float = math.log(1.09),
    b2: float = 1e-4,
    start: float = 60.0,
) -> Tuple[ComparisonRow, ...]:
    """Side-by-side iteration of the exponential and price-feedback models.

    Default parameters give roughly 10% growth per step for both; the
    feedback column overtakes the exponential one at t = 10 and pulls
    away as its growth rate accelerates.  Percent columns are discrete
    returns rounded to the nearest whole percent.
    """
    exp_series = iterate(GrowthModel.exponential(a1, start), steps)
    fb_series = iterate(GrowthModel.price_feedback(a2, b2, start), steps)
    rows = []
    for t in range(steps + 1):
        e, f = exp_series.values[t], fb_series.values[t]
        if t == 0:
            pe = pf = None
        else:
            pe = _round_half_up(100.0 * (e / exp_series.values[t - 1] - 1.0))
            pf = _round_half_up(100.0 * (f / fb_series.values[t - 1] - 1.0))
        rows.append(ComparisonRow(t, e, pe, f, pf))
    return tuple(rows)


def table2_csv(rows: Tuple[ComparisonRow, ...]) -> str:
    """Render comparison rows as CSV, prices at two decimals."""
    out = ["t,exponential,exponential_pct,feedback,feedback_pct"]
    for r in rows:
        pe = "" if r.exponential_pct is None else str(r.exponential_pct)
        pf = "" if r.feedback_pct is None else str(r.feedback_pct)
        out.append(f"{r.t},{r.exponential:.2f},{pe},{r.feedback:.2f},{pf}")
    return "\n".join(out) + "\n"
