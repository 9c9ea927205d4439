"""Core time-series types, derived series, and CSV ingestion.

Prices are stored at full binary precision and only formatted (to two
decimals) when written out.  All types are immutable after construction
and all operations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import (
    InvalidConfig,
    MalformedRow,
    NonContiguousTime,
    NonPositiveExcess,
    OutOfRange,
)

# Smallest admissible calibration window, in price points.  Five points
# give four return observations, hence df = 2 for the two-parameter
# price-model fit and df = 1 for the return-model fit (which consumes one
# extra lag) -- the smallest windows with a defined t-quantile.
MIN_WINDOW = 5


@dataclass(frozen=True)
class ExperimentParams:
    """Constants of the experimental market.

    r: interest rate per period, dividend: payout per period,
    n_traders: number of forecasters, [p_min, p_max]: admissible price band.
    """

    r: float = 0.05
    dividend: float = 3.00
    n_traders: int = 6
    p_min: float = 0.0
    p_max: float = 1000.0

    def __post_init__(self):
        if not self.r > 0:
            raise InvalidConfig(f"interest rate must be positive, got {self.r}")
        if self.dividend < 0:
            raise InvalidConfig(f"dividend must be non-negative, got {self.dividend}")
        if self.n_traders < 1:
            raise InvalidConfig(f"need at least one trader, got {self.n_traders}")
        if not self.p_min < self.p_max:
            raise InvalidConfig(
                f"price band is empty: [{self.p_min}, {self.p_max}]"
            )
        pf = self.dividend / self.r
        if not (self.p_min <= pf <= self.p_max):
            raise InvalidConfig(
                f"fundamental price {pf} outside [{self.p_min}, {self.p_max}]"
            )

    @property
    def fundamental(self) -> float:
        """Discounted-dividend equilibrium price dividend/r."""
        return self.dividend / self.r

    def clamp(self, price: float) -> float:
        """Clip a price into the admissible band."""
        return min(max(price, self.p_min), self.p_max)


def fundamental_price(params: ExperimentParams) -> float:
    """Equilibrium price dividend/r (60 under default parameters)."""
    if not params.r > 0:
        raise InvalidConfig("interest rate must be positive")
    return params.dividend / params.r


def _check_values(values: Sequence[float], what: str) -> tuple:
    vals = tuple(float(v) for v in values)
    if len(vals) < 1:
        raise InvalidConfig(f"{what} needs at least one value")
    for i, v in enumerate(vals):
        if not math.isfinite(v):
            raise InvalidConfig(f"{what} has non-finite value at offset {i}")
    return vals


@dataclass(frozen=True)
class PriceSeries:
    """Realized prices on a contiguous integer time index starting at t0."""

    t0: int
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, "price series"))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def t_end(self) -> int:
        return self.t0 + len(self.values) - 1

    def offset(self, t: int) -> int:
        """Position of absolute time t inside the series."""
        if not (self.t0 <= t <= self.t_end):
            raise ValueError(f"t={t} outside series range [{self.t0}, {self.t_end}]")
        return t - self.t0

    def at(self, t: int) -> float:
        return self.values[self.offset(t)]


@dataclass(frozen=True)
class ExcessSeries:
    """Prices minus the fundamental; the state variable of the feedback models."""

    t0: int
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, "excess series"))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def t_end(self) -> int:
        return self.t0 + len(self.values) - 1

    def offset(self, t: int) -> int:
        if not (self.t0 <= t <= self.t_end):
            raise ValueError(f"t={t} outside series range [{self.t0}, {self.t_end}]")
        return t - self.t0

    def at(self, t: int) -> float:
        return self.values[self.offset(t)]

    def to_prices(self, params: ExperimentParams) -> PriceSeries:
        """Shift back above the fundamental, yielding a plain price series."""
        pf = params.fundamental
        return PriceSeries(self.t0, tuple(v + pf for v in self.values))


DISCRETE = "discrete"
LOG_EXCESS = "log_excess"


@dataclass(frozen=True)
class ReturnSeries:
    """Period returns; ``kind`` distinguishes discrete from log-excess returns."""

    t0: int
    values: tuple
    kind: str

    def __post_init__(self):
        if self.kind not in (DISCRETE, LOG_EXCESS):
            raise InvalidConfig(f"unknown return kind {self.kind!r}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Window:
    """Inclusive [start, end] calibration window on the time axis."""

    start: int
    end: int

    def __post_init__(self):
        if self.end < self.start + MIN_WINDOW - 1:
            raise InvalidConfig(
                f"window [{self.start}, {self.end}] shorter than "
                f"{MIN_WINDOW} points"
            )

    def __len__(self) -> int:
        return self.end - self.start + 1


def excess_series(prices: PriceSeries, params: ExperimentParams) -> ExcessSeries:
    """Subtract the fundamental price from every observation."""
    pf = fundamental_price(params)
    return ExcessSeries(prices.t0, tuple(v - pf for v in prices.values))


def discrete_returns(series) -> ReturnSeries:
    """Per-period discrete returns value[t]/value[t-1] - 1.

    Works on price or excess series alike; every value must be strictly
    positive for the ratio to be meaningful.
    """
    vals = series.values
    if len(vals) < 2:
        raise InvalidConfig("need at least two observations for returns")
    for i, v in enumerate(vals):
        if v <= 0:
            raise ValueError(
                f"non-positive value at t={series.t0 + i}; "
                "discrete returns need strictly positive levels"
            )
    rets = tuple(vals[i + 1] / vals[i] - 1.0 for i in range(len(vals) - 1))
    return ReturnSeries(series.t0 + 1, rets, DISCRETE)


def log_excess_returns(excess: ExcessSeries) -> ReturnSeries:
    """Natural-log growth rates log(excess[t]/excess[t-1]).

    Defined only while the excess price stays strictly positive; a zero or
    negative value raises NonPositiveExcess naming the first offending
    time index (the window lies outside a bubble regime).
    """
    vals = excess.values
    if len(vals) < 2:
        raise InvalidConfig("need at least two observations for returns")
    for i, v in enumerate(vals):
        if v <= 0:
            raise NonPositiveExcess(excess.t0 + i)
    rets = tuple(math.log(vals[i + 1] / vals[i]) for i in range(len(vals) - 1))
    return ReturnSeries(excess.t0 + 1, rets, LOG_EXCESS)


# ---------------------------------------------------------------------------
# CSV interface: header `t,price[,h1..hH]`, decimal point, UTF-8.
# ---------------------------------------------------------------------------


def load_csv(
    path,
    params: Optional[ExperimentParams] = None,
    time_col: str = "t",
    price_col: str = "price",
):
    """Read a price series, plus per-trader forecast columns when present.

    Returns ``(PriceSeries, forecasts)`` where ``forecasts`` is a tuple of
    per-trader tuples (one per h1..hH column, aligned with the series) or
    None when the file has no forecast columns.
    """
    params = params or ExperimentParams()
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise MalformedRow(1, "empty file")

    header = [c.strip() for c in lines[0].split(",")]
    if time_col not in header or price_col not in header:
        raise MalformedRow(1, f"header must name {time_col!r} and {price_col!r} columns")
    t_idx = header.index(time_col)
    p_idx = header.index(price_col)
    fc_idx = []
    h = 1
    while f"h{h}" in header:
        fc_idx.append(header.index(f"h{h}"))
        h += 1

    times, prices = [], []
    forecasts = [[] for _ in fc_idx]
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        fields = [c.strip() for c in raw.split(",")]
        if len(fields) != len(header):
            raise MalformedRow(
                lineno, f"expected {len(header)} fields, found {len(fields)}"
            )
        try:
            t = int(fields[t_idx])
            p = float(fields[p_idx])
            fvals = [float(fields[j]) for j in fc_idx]
        except ValueError as exc:
            raise MalformedRow(lineno, str(exc)) from None
        if times and t != times[-1] + 1:
            raise NonContiguousTime(
                lineno, f"time jumps from {times[-1]} to {t}"
            )
        if not (params.p_min <= p <= params.p_max):
            raise OutOfRange(
                lineno,
                f"price {p} outside [{params.p_min}, {params.p_max}]",
            )
        times.append(t)
        prices.append(p)
        for col, v in zip(forecasts, fvals):
            col.append(v)

    if not prices:
        raise MalformedRow(2, "no data rows")
    series = PriceSeries(times[0], tuple(prices))
    if fc_idx:
        return series, tuple(tuple(col) for col in forecasts)
    return series, None


def write_csv(path, series, forecasts=None, decimals: int = 2) -> None:
    """Write a series (price or excess) in the `t,price[,h1..hH]` format.

    Values are printed with a fixed number of decimals, matching the
    presentation of the experimental data.
    """
    cols = ["t", "price"]
    if forecasts:
        cols += [f"h{h + 1}" for h in range(len(forecasts))]
        for col in forecasts:
            if len(col) != len(series):
                raise InvalidConfig("forecast columns must match the series length")
    out = [",".join(cols)]
    for i, v in enumerate(series.values):
        row = [str(series.t0 + i), f"{v:.{decimals}f}"]
        if forecasts:
            row += [f"{col[i]:.{decimals}f}" for col in forecasts]
        out.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
