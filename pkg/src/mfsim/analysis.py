"""Scaling and tail estimators.

Detrended fluctuation analysis (DFA), its multifractal extension, least-squares
power-law tail fits on the empirical CCDF, and the relative-price transform for
externally supplied order-flow records.  All estimators are pure functions of
their inputs; series are 1-D float arrays.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EstimationError, OrderFlowParseError, ParameterError

DEFAULT_MIN_SCALE = 8
DEFAULT_NUM_SCALES = 30

#: Default moment orders for the multifractal analysis.
DEFAULT_Q_GRID = np.arange(-4.0, 4.0 + 0.25, 0.5)


@dataclass(frozen=True)
class DfaResult:
    """Detrended fluctuation function and the exponent fitted to it."""

    scales: np.ndarray
    fluctuations: np.ndarray
    hurst: float
    hurst_stderr: float
    fit_range: tuple[int, int]


@dataclass(frozen=True)
class MfDfaResult:
    """Generalized exponents H(q) and mass exponents tau(q) = q*H(q) - 1."""

    q_grid: np.ndarray
    hq: np.ndarray
    tau: np.ndarray


@dataclass(frozen=True)
class TailFitResult:
    """Power-law tail index of an empirical CCDF, P(>v) ~ v**-beta."""

    beta: float
    beta_stderr: float
    fit_range: tuple[float, float]
    n_tail: int


@dataclass(frozen=True)
class OrderFlowRecord:
    """One incoming order with the quotes prevailing just before it arrived."""

    time: float
    side: str  # "buy" | "sell"
    price: float
    best_bid: float
    best_ask: float


def default_scales(n: int, min_scale: int = DEFAULT_MIN_SCALE,
                   num: int = DEFAULT_NUM_SCALES) -> np.ndarray:
    """Logarithmically spaced integer window sizes between min_scale and n // 4."""
    if n < 4 * min_scale:
        raise ParameterError(f"series of length {n} is too short for scale {min_scale}")
    grid = np.geomspace(min_scale, n // 4, num=num)
    return np.unique(np.round(grid).astype(int))


def _segment_fluctuations(profile: np.ndarray, scale: int, order: int) -> np.ndarray:
    """Mean squared residual of a degree-`order` fit in each window of `scale` points.

    Windows partition the profile forward and backward (2 * (n // scale) total),
    so the tail beyond the last full window is still used.
    """
    n = profile.size
    n_win = n // scale
    x = np.arange(scale, dtype=float)
    design = np.vander(x, order + 1)
    q, _ = np.linalg.qr(design)
    forward = profile[: n_win * scale].reshape(n_win, scale).T
    backward = profile[n - n_win * scale:].reshape(n_win, scale).T
    windows = np.concatenate([forward, backward], axis=1)
    resid = windows - q @ (q.T @ windows)
    return np.mean(resid * resid, axis=0)


def _loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log y vs log x, with its standard error."""
    lx = np.log(x)
    ly = np.log(y)
    m = lx.size
    lx_c = lx - lx.mean()
    sxx = float(lx_c @ lx_c)
    slope = float(lx_c @ ly) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    if m <= 2:
        return slope, 0.0
    resid = ly - (slope * lx + intercept)
    s2 = float(resid @ resid) / (m - 2)
    return slope, math.sqrt(s2 / sxx)


def _select_fit_scales(scales: np.ndarray, fit_range: tuple[int, int] | None):
    if fit_range is None:
        fit_range = (int(scales[0]), int(scales[-1]) + 1)
    lo, hi = fit_range
    mask = (scales >= lo) & (scales < hi)
    if mask.sum() < 2:
        raise ParameterError(f"fit range {fit_range} covers fewer than 2 scales")
    return mask, (int(lo), int(hi))


def _validated_series(series, min_len: int = 1) -> np.ndarray:
    arr = np.asarray(series, dtype=float).ravel()
    if arr.size < min_len:
        raise ParameterError(f"series must have at least {min_len} points, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("series contains non-finite values")
    return arr


def dfa(series, detrend_order: int = 1, scales=None,
        fit_range: tuple[int, int] | None = None) -> DfaResult:
    """Detrended fluctuation analysis of a series.

    The mean-subtracted series is integrated into a profile, partitioned into
    non-overlapping windows of each scale (forward and backward), detrended
    window-by-window with a polynomial of degree `detrend_order`, and the
    root-mean-square fluctuation F per scale is fitted as F ~ scale**hurst
    over `fit_range` (half-open, lo <= scale < hi).
    """
    if detrend_order < 1:
        raise ParameterError("detrend_order must be >= 1")
    arr = _validated_series(series, min_len=4 * DEFAULT_MIN_SCALE)
    if scales is None:
        scales = default_scales(arr.size)
    else:
        scales = np.unique(np.asarray(scales, dtype=int))
        if scales[0] <= detrend_order + 1:
            raise ParameterError("smallest scale must exceed detrend_order + 1")
        if arr.size < 4 * scales[-1]:
            raise ParameterError(
                f"series of length {arr.size} is too short for scale {scales[-1]}")
    profile = np.cumsum(arr - arr.mean())
    fluct = np.empty(scales.size)
    for i, s in enumerate(scales):
        fluct[i] = math.sqrt(np.mean(_segment_fluctuations(profile, int(s), detrend_order)))
    if np.any(fluct == 0.0):
        raise EstimationError("zero fluctuation at some scale; series has no variation")
    mask, fit_range = _select_fit_scales(scales, fit_range)
    slope, stderr = _loglog_fit(scales[mask].astype(float), fluct[mask])
    return DfaResult(scales=scales, fluctuations=fluct, hurst=slope,
                     hurst_stderr=stderr, fit_range=fit_range)


def mfdfa(series, q_grid=None, detrend_order: int = 1, scales=None,
          fit_range: tuple[int, int] | None = None) -> MfDfaResult:
    """Multifractal DFA: q-th order fluctuation functions and mass exponents.

    For each scale the window fluctuations of `dfa` are averaged with moment
    order q (q = 0 via the exponential of the mean log).  Windows with exactly
    zero fluctuation are excluded from the moment average so that q <= 0 stays
    finite.  tau(q) = q * H(q) - 1 by construction.
    """
    if q_grid is None:
        q_grid = DEFAULT_Q_GRID
    q_grid = np.asarray(q_grid, dtype=float).ravel()
    if not np.all(np.isfinite(q_grid)):
        raise ParameterError("q_grid contains non-finite values")
    arr = _validated_series(series, min_len=4 * DEFAULT_MIN_SCALE)
    if scales is None:
        scales = default_scales(arr.size)
    else:
        scales = np.unique(np.asarray(scales, dtype=int))
        if arr.size < 4 * scales[-1]:
            raise ParameterError(
                f"series of length {arr.size} is too short for scale {scales[-1]}")
    profile = np.cumsum(arr - arr.mean())
    fq = np.empty((q_grid.size, scales.size))
    for j, s in enumerate(scales):
        fsq = _segment_fluctuations(profile, int(s), detrend_order)
        fsq = fsq[fsq > 0.0]
        if fsq.size == 0:
            raise EstimationError(f"all windows at scale {s} have zero fluctuation")
        log_fsq_mean = np.mean(np.log(fsq))
        for i, q in enumerate(q_grid):
            if q == 0.0:
                fq[i, j] = math.exp(0.5 * log_fsq_mean)
            else:
                fq[i, j] = np.mean(fsq ** (q / 2.0)) ** (1.0 / q)
    mask, _ = _select_fit_scales(scales, fit_range)
    lx = scales[mask].astype(float)
    hq = np.array([_loglog_fit(lx, fq[i, mask])[0] for i in range(q_grid.size)])
    tau = q_grid * hq - 1.0
    return MfDfaResult(q_grid=q_grid, hq=hq, tau=tau)


def ccdf_tail_fit(values, fit_fraction: float = 0.01,
                  min_tail: int = 200) -> TailFitResult:
    """Least-squares power-law fit to the upper tail of the empirical CCDF.

    The top max(fit_fraction * n, min_tail) order statistics are kept; the
    j-th largest value is paired with P(>v) = j / n and the slope of
    log P vs log v gives -beta.
    """
    v = np.asarray(values, dtype=float).ravel()
    if not 0.0 < fit_fraction < 1.0:
        raise ParameterError("fit_fraction must lie in (0, 1)")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ParameterError("values must be finite and nonnegative")
    n = v.size
    if n * fit_fraction < 50:
        raise EstimationError(
            f"need at least {math.ceil(50 / fit_fraction)} points for fit_fraction={fit_fraction}")
    k = min(n, max(int(round(n * fit_fraction)), min_tail))
    top = np.sort(v)[::-1][:k]
    prob = np.arange(1, k + 1, dtype=float) / n
    keep = top > 0.0
    if keep.sum() < 50:
        raise EstimationError("fewer than 50 positive values in the tail")
    top, prob = top[keep], prob[keep]
    slope, stderr = _loglog_fit(top, prob)
    return TailFitResult(beta=-slope, beta_stderr=stderr,
                         fit_range=(float(top.min()), float(top.max())),
                         n_tail=int(top.size))


def relative_prices_from_orderflow(records) -> np.ndarray:
    """Log distance of each order's price to the prevailing same-side best.

    Buys: x = ln(price) - ln(best_bid); sells: x = ln(best_ask) - ln(price).
    `records` must be time-ordered, with best_bid/best_ask the quotes in force
    just before each order arrived.
    """
    out = np.empty(len(records))
    for i, rec in enumerate(records):
        if rec.price <= 0 or rec.best_bid <= 0 or rec.best_ask <= 0:
            raise OrderFlowParseError(f"record {i}: prices must be positive", index=i)
        if rec.best_bid >= rec.best_ask:
            raise OrderFlowParseError(
                f"record {i}: best_bid {rec.best_bid} not below best_ask {rec.best_ask}",
                index=i)
        if rec.side == "buy":
            out[i] = math.log(rec.price) - math.log(rec.best_bid)
        elif rec.side == "sell":
            out[i] = math.log(rec.best_ask) - math.log(rec.price)
        else:
            raise OrderFlowParseError(f"record {i}: unknown side {rec.side!r}", index=i)
    return out


_ORDERFLOW_HEADER = ["time", "side", "price", "best_bid", "best_ask"]
_SIDE_CODES = {"B": "buy", "S": "sell"}


def read_orderflow_csv(path) -> list[OrderFlowRecord]:
    """Parse an order-flow CSV with header time,side,price,best_bid,best_ask.

    side is B or S.  Raises OrderFlowParseError with the offending row index.
    """
    records: list[OrderFlowRecord] = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != _ORDERFLOW_HEADER:
            raise OrderFlowParseError(
                f"expected header {','.join(_ORDERFLOW_HEADER)}, got {header}")
        for i, row in enumerate(reader):
            if len(row) != 5:
                raise OrderFlowParseError(f"row {i}: expected 5 fields, got {len(row)}",
                                          index=i)
            side = _SIDE_CODES.get(row[1].strip())
            if side is None:
                raise OrderFlowParseError(f"row {i}: side must be B or S, got {row[1]!r}",
                                          index=i)
            try:
                records.append(OrderFlowRecord(
                    time=float(row[0]), side=side, price=float(row[2]),
                    best_bid=float(row[3]), best_ask=float(row[4])))
            except ValueError as exc:
                raise OrderFlowParseError(f"row {i}: {exc}", index=i) from exc
    return records
