"""Two-parameter least squares with Student-t confidence bounds, plus the
model-specific fitting wrappers used by the calibration pipeline.

The quantity of interest everywhere is the *lower* endpoint of the
confidence interval for each coefficient: joint positivity of both lower
bounds is the significance signal for super-exponential growth.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateRegressor, NonPositiveExcess, TooFewPoints
from .series import ExcessSeries, PriceSeries, Window
from .studentt import t_quantile

MODEL_PRICE = "price"
MODEL_RETURN = "return"
MODEL_RATIONAL = "rational"

# Regressor spread below a few ulps of its own magnitude carries no
# information; treat it as constant rather than dividing by noise.
_DEGENERACY_ULPS = 32.0


@dataclass(frozen=True)
class OlsFit:
    """Result of a simple linear regression y = a + b*x.

    ``a_lower``/``b_lower`` are the lower endpoints of the confidence
    intervals (two-sided 95% by default, one-sided 95% behind a flag).
    ``perfect`` marks an interpolating fit (zero residual sum of squares),
    where the standard errors collapse to zero.
    """

    model: str
    a: float
    b: float
    se_a: float
    se_b: float
    a_lower: float
    b_lower: float
    n: int
    df: int
    r2: float
    perfect: bool = False

    def to_json_dict(self) -> dict:
        return {
            "model": self.model,
            "a": self.a,
            "b": self.b,
            "se_a": self.se_a,
            "se_b": self.se_b,
            "a_lower": self.a_lower,
            "b_lower": self.b_lower,
            "n": self.n,
            "df": self.df,
            "r2": self.r2,
            "perfect": self.perfect,
        }


def ols2(
    x: Sequence[float],
    y: Sequence[float],
    model: str = MODEL_PRICE,
    one_sided: bool = False,
) -> OlsFit:
    """Least-squares estimate of y = a + b*x with homoskedastic errors.

    Residual variance uses n-2 degrees of freedom; the lower confidence
    bounds subtract t(0.975, df) standard errors (t(0.95, df) when
    ``one_sided`` is set).
    """
    n = len(x)
    if n != len(y):
        raise TooFewPoints(f"x and y lengths differ: {n} vs {len(y)}")
    if n < 3:
        raise TooFewPoints(f"need at least 3 points for a two-parameter fit, got {n}")

    x = [float(v) for v in x]
    y = [float(v) for v in y]
    xmax, xmin = max(x), min(x)
    spread = xmax - xmin
    scale = max(abs(xmax), abs(xmin), 1.0)
    if spread <= _DEGENERACY_ULPS * sys.float_info.epsilon * scale:
        raise DegenerateRegressor(
            f"regressor spread {spread:g} is indistinguishable from constant"
        )

    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    sxx = math.fsum((xi - mean_x) ** 2 for xi in x)
    sxy = math.fsum((xi - mean_x) * (yi - mean_y) for xi, yi in zip(x, y))
    b = sxy / sxx
    a = mean_y - b * mean_x

    residuals = [yi - a - b * xi for xi, yi in zip(x, y)]
    ssr = math.fsum(e * e for e in residuals)
    sst = math.fsum((yi - mean_y) ** 2 for yi in y)
    df = n - 2

    if ssr <= 0.0:
        ssr = 0.0
    s2 = ssr / df
    se_b = math.sqrt(s2 / sxx)
    se_a = math.sqrt(s2 * math.fsum(xi * xi for xi in x) / (n * sxx))

    if sst > 0.0:
        r2 = 1.0 - ssr / sst
        r2 = min(max(r2, 0.0), 1.0)
    else:
        r2 = 1.0  # constant response fitted exactly

    tq = t_quantile(0.95 if one_sided else 0.975, df)
    return OlsFit(
        model=model,
        a=a,
        b=b,
        se_a=se_a,
        se_b=se_b,
        a_lower=a - tq * se_a,
        b_lower=b - tq * se_b,
        n=n,
        df=df,
        r2=r2,
        perfect=(ssr == 0.0),
    )


def _window_slice(excess: ExcessSeries, window: Window) -> list:
    """Excess values on [start, end], checked strictly positive."""
    if window.start < excess.t0 or window.end > excess.t_end:
        raise ValueError(
            f"window [{window.start}, {window.end}] outside series range "
            f"[{excess.t0}, {excess.t_end}]"
        )
    lo = excess.offset(window.start)
    hi = excess.offset(window.end)
    vals = excess.values[lo : hi + 1]
    for i, v in enumerate(vals):
        if v <= 0:
            raise NonPositiveExcess(window.start + i)
    return list(vals)


def fit_price_model(
    excess: ExcessSeries, window: Window, one_sided: bool = False
) -> OlsFit:
    """Regress the log growth rate on the lagged excess-price level.

    Pairs are x = excess[t-1], y = log(excess[t]/excess[t-1]) for t in
    (start, end]; a positive slope means the growth rate itself grows
    with the price level.
    """
    vals = _window_slice(excess, window)
    xs = vals[:-1]
    ys = [math.log(vals[i + 1] / vals[i]) for i in range(len(vals) - 1)]
    if len(xs) < 3:
        raise TooFewPoints(f"window yields {len(xs)} pairs, need 3")
    return ols2(xs, ys, model=MODEL_PRICE, one_sided=one_sided)


def fit_return_model(
    excess: ExcessSeries, window: Window, one_sided: bool = False
) -> OlsFit:
    """Regress the log growth rate on its own lag.

    Pair construction consumes one extra lag relative to the price model,
    so a window of the same length yields one fewer observation; only
    data inside [start, end] is touched.
    """
    vals = _window_slice(excess, window)
    g = [math.log(vals[i + 1] / vals[i]) for i in range(len(vals) - 1)]
    xs = g[:-1]
    ys = g[1:]
    if len(xs) < 3:
        raise TooFewPoints(f"window yields {len(xs)} pairs, need 3")
    return ols2(xs, ys, model=MODEL_RETURN, one_sided=one_sided)


@dataclass(frozen=True)
class RationalBubbleFit:
    """Constant-rate bubble calibration p_t = anchor + scale*(1+rate)^t.

    ``rate_lower``/``rate_upper`` bound the implied growth rate at the
    95% level, the interval used to test whether traders price in a rate
    above the market interest rate.
    """

    rate: float
    scale: float
    anchor: float
    rate_lower: float
    rate_upper: float
    ols: OlsFit

    def exceeds_rate(self, r: float) -> bool:
        """True when the whole confidence interval lies above r."""
        return self.rate_lower > r

    def to_json_dict(self) -> dict:
        return {
            "rate": self.rate,
            "scale": self.scale,
            "anchor": self.anchor,
            "rate_lower": self.rate_lower,
            "rate_upper": self.rate_upper,
            "ols": self.ols.to_json_dict(),
        }


def fit_rational_bubble(
    prices: PriceSeries,
    window: Window,
    anchor: float = 60.0,
    one_sided: bool = False,
) -> RationalBubbleFit:
    """Fit the constant-growth bubble by regressing log(p - anchor) on t.

    The slope maps to rate = exp(slope) - 1 and the intercept to the
    deviation scale at t = 0.  Every price in the window must exceed the
    anchor (default: the fundamental under standard parameters).
    """
    if window.start < prices.t0 or window.end > prices.t_end:
        raise ValueError(
            f"window [{window.start}, {window.end}] outside series range "
            f"[{prices.t0}, {prices.t_end}]"
        )
    ts = list(range(window.start, window.end + 1))
    devs = []
    for t in ts:
        d = prices.at(t) - anchor
        if d <= 0:
            raise NonPositiveExcess(t, f"price at t={t} does not exceed anchor {anchor}")
        devs.append(math.log(d))
    fit = ols2(ts, devs, model=MODEL_RATIONAL, one_sided=one_sided)
    tq = t_quantile(0.95 if one_sided else 0.975, fit.df)
    slope_hi = fit.b + tq * fit.se_b
    return RationalBubbleFit(
        rate=math.expm1(fit.b),
        scale=math.exp(fit.a),
        anchor=anchor,
        rate_lower=math.expm1(fit.b_lower),
        rate_upper=math.expm1(slope_hi),
        ols=fit,
    )
