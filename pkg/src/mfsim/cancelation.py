"""Stochastic cancelation of resting orders.

Two laws: a three-factor model where the per-order probability combines the
order's position relative to the opposite best, the same-side order imbalance,
and the inverse of the total book depth; and a memoryless alternative with one
flat rate.  A scan draws one uniform per resting order in ascending id order,
so a round is reproducible from its seed stream alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .lob import BUY, SELL, LimitOrderBook

MODES = ("mike_farmer", "poisson")
IMBALANCE_KINDS = ("same_side", "signed")


@dataclass(frozen=True)
class CancelParams:
    """Parameters of the cancelation law.

    mode "mike_farmer": P_i = A * (1 - exp(-y_i)) * (n_imb + B) / N_tot,
    clamped to [0, 1], with y_i the order's current log-distance to the
    opposite best over its entry-time distance (y_i := 1 when the entry
    distance was 0) and n_imb the same-side order fraction.  mode "poisson":
    every resting order is canceled with probability poisson_rate.
    `imbalance` switches n_imb to the signed fraction (N_side - N_opp) / N_tot,
    kept as an alternative reading of the imbalance factor.
    """

    mode: str = "mike_farmer"
    A: float = 1.12
    B: float = 0.2
    poisson_rate: float = 0.01
    imbalance: str = "same_side"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.imbalance not in IMBALANCE_KINDS:
            raise ParameterError(
                f"imbalance must be one of {IMBALANCE_KINDS}, got {self.imbalance!r}")
        if self.mode == "mike_farmer":
            if self.A <= 0:
                raise ParameterError(f"A must be positive, got {self.A}")
            if self.B < 0:
                raise ParameterError(f"B must be nonnegative, got {self.B}")
        if self.mode == "poisson" and not 0.0 <= self.poisson_rate <= 1.0:
            raise ParameterError(
                f"poisson_rate must lie in [0, 1], got {self.poisson_rate}")


def cancel_probabilities(book: LimitOrderBook,
                         params: CancelParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-order cancel probabilities, ascending id; pure read of the book.

    Orders that need a current distance (entry distance > 0) but have no
    opposite best this step get probability 0; an order whose entry distance
    was 0 uses y := 1 regardless.
    """
    snap = book.snapshot()
    n = snap.ids.size
    if n == 0:
        return snap.ids, np.empty(0)
    if params.mode == "poisson":
        return snap.ids, np.full(n, params.poisson_rate)
    bb = book.best_bid()
    ba = book.best_ask()
    buys = snap.sides == BUY
    n_buy = int(buys.sum())
    dist = np.zeros(n)
    has_opp = np.zeros(n, dtype=bool)
    if ba is not None:
        dist[buys] = ba - snap.prices[buys]
        has_opp[buys] = True
    if bb is not None:
        dist[~buys] = snap.prices[~buys] - bb
        has_opp[~buys] = True
    d0 = snap.initial_distances
    nonzero = d0 > 0.0
    y = np.ones(n)
    y[nonzero] = dist[nonzero] / d0[nonzero]
    live = ~nonzero | has_opp
    if params.imbalance == "same_side":
        imb_buy = n_buy / n
        imb_sell = (n - n_buy) / n
    else:
        imb_buy = (2 * n_buy - n) / n
        imb_sell = -imb_buy
    imb = np.where(buys, imb_buy, imb_sell)
    p = params.A * (1.0 - np.exp(-y)) * (imb + params.B) / n
    np.clip(p, 0.0, 1.0, out=p)
    p[~live] = 0.0
    return snap.ids, p


def cancel_scan(book: LimitOrderBook, params: CancelParams, step: int,
                rng: np.random.Generator) -> list[int]:
    """Ids to cancel this step: one uniform per resting order, ascending id.

    Decision-for-decision equivalent to thresholding cancel_probabilities
    against the same uniform draws (a property the test suite pins); written
    as a scalar loop because the book rarely holds more than a few dozen
    orders and small-array overhead dominates the vectorized form.
    """
    n_buy = book._count[BUY]
    n = n_buy + book._count[SELL]
    if n == 0:
        return []
    ids = np.sort(np.concatenate((book._ids[BUY][:n_buy],
                                  book._ids[SELL][:n - n_buy])))
    u = rng.random(n).tolist()
    out: list[int] = []
    if params.mode == "poisson":
        rate = params.poisson_rate
        return [int(oid) for j, oid in enumerate(ids.tolist()) if u[j] < rate]
    bb = book.best_bid()
    ba = book.best_ask()
    prices = book._price[ids].tolist()
    d0s = book._dist0[ids].tolist()
    sides = book._side[ids].tolist()
    if params.imbalance == "same_side":
        imb_buy = n_buy / n
        imb_sell = (n - n_buy) / n
    else:
        imb_buy = (2 * n_buy - n) / n
        imb_sell = -imb_buy
    a = params.A
    b = params.B
    for j, oid in enumerate(ids.tolist()):
        if sides[j] == BUY:
            opp = ba
            dist = ba - prices[j] if ba is not None else 0.0
            imb = imb_buy
        else:
            opp = bb
            dist = prices[j] - bb if bb is not None else 0.0
            imb = imb_sell
        d0 = d0s[j]
        if d0 > 0.0:
            if opp is None:
                continue
            y = dist / d0
        else:
            y = 1.0
        p = a * (1.0 - math.exp(-y)) * (imb + b) / n
        if p > 1.0:
            p = 1.0
        if u[j] < p:
            out.append(int(oid))
    return out
