"""Limit order book in log-price space with strict price-time priority.

Every order has size one, so a marketable order consumes exactly the head of
the opposite best queue and partial fills cannot occur.  Order attributes live
in flat arrays indexed by order id, and each side keeps a compact array of
active ids (removal swaps in the last element), so per-step scans over the
whole book reduce to numpy reductions.  Ids are assigned in submission order;
the FIFO head of a price level is therefore the smallest active id at that
price.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import OrderNotFoundError, ParameterError

BUY = 1
SELL = -1
_SIDE_CODE = {"buy": BUY, "sell": SELL}
_SIDE_NAME = {BUY: "buy", SELL: "sell"}


@dataclass(frozen=True)
class Order:
    """Read-only view of one resting order."""

    id: int
    side: str
    log_price: float
    entry_time: int
    initial_distance: float


@dataclass(frozen=True)
class BookEvent:
    """Outcome of one book operation on one order."""

    kind: str  # "rested" | "executed" | "canceled"
    order_id: int
    step: int
    side: str
    log_price: float
    trade_price_log: float | None = None


class BookSnapshot(NamedTuple):
    """Resting orders in ascending id order, as parallel arrays."""

    ids: np.ndarray
    sides: np.ndarray
    prices: np.ndarray
    initial_distances: np.ndarray


class LimitOrderBook:
    """Continuous double auction with unit orders on a log-price axis.

    The book starts seeded with one bid and one ask around an initial mid so
    the first incoming order always has a quote to price against; the seed is
    forgotten once the transient is discarded.  `tick`, when set, rounds
    every computed log-price to the nearest multiple.
    """

    def __init__(self, seed_bid: float | None = -0.01, seed_ask: float | None = 0.01,
                 initial_mid: float = 0.0, tick: float | None = None,
                 record_events: bool = False):
        if tick is not None and tick <= 0:
            raise ParameterError(f"tick must be positive, got {tick}")
        if seed_bid is not None and seed_ask is not None and seed_bid >= seed_ask:
            raise ParameterError("seed bid must be strictly below seed ask")
        self.tick = tick
        self.last_mid = float(initial_mid)
        cap = 1024
        self._price = np.empty(cap)
        self._dist0 = np.empty(cap)
        self._entry = np.empty(cap, dtype=np.int64)
        self._side = np.zeros(cap, dtype=np.int8)  # 0 = not resting
        self._pos = np.empty(cap, dtype=np.int64)
        self._ids = {BUY: np.empty(256, dtype=np.int64),
                     SELL: np.empty(256, dtype=np.int64)}
        self._count = {BUY: 0, SELL: 0}
        self._best = {BUY: None, SELL: None}
        self._best_dirty = {BUY: False, SELL: False}
        self._next_id = 0
        self.n_submitted = 0
        self.n_executed_incoming = 0
        self.n_executed_resting = 0
        self.n_canceled = 0
        self.event_log: list[BookEvent] | None = [] if record_events else None
        if seed_bid is not None:
            self._seed_order(BUY, seed_bid, seed_ask)
        if seed_ask is not None:
            self._seed_order(SELL, seed_ask, seed_bid)

    # -- internal storage ---------------------------------------------------

    def _seed_order(self, side: int, price: float, opposite: float | None) -> None:
        price = self._round_tick(price)
        dist = abs(opposite - price) if opposite is not None else 0.0
        self.n_submitted += 1
        oid = self._alloc_id()
        self._insert(oid, side, price, entry=-1, dist0=dist)

    def _round_tick(self, price: float) -> float:
        if self.tick is None:
            return price
        return round(price / self.tick) * self.tick

    def _alloc_id(self) -> int:
        oid = self._next_id
        self._next_id += 1
        if oid >= self._price.size:
            new_cap = 2 * self._price.size
            for name in ("_price", "_dist0", "_entry", "_side", "_pos"):
                old = getattr(self, name)
                grown = np.zeros(new_cap, dtype=old.dtype)
                grown[: old.size] = old
                setattr(self, name, grown)
        return oid

    def _insert(self, oid: int, side: int, price: float, entry: int,
                dist0: float) -> None:
        self._price[oid] = price
        self._dist0[oid] = dist0
        self._entry[oid] = entry
        self._side[oid] = side
        arr = self._ids[side]
        cnt = self._count[side]
        if cnt >= arr.size:
            grown = np.empty(2 * arr.size, dtype=np.int64)
            grown[:cnt] = arr[:cnt]
            self._ids[side] = arr = grown
        arr[cnt] = oid
        self._pos[oid] = cnt
        self._count[side] = cnt + 1
        if not self._best_dirty[side]:
            best = self._best[side]
            if best is None:
                self._best[side] = price
            else:
                self._best[side] = max(best, price) if side == BUY else min(best, price)

    def _remove(self, oid: int) -> int:
        if oid < 0 or oid >= self._next_id or self._side[oid] == 0:
            raise OrderNotFoundError(oid)
        side = int(self._side[oid])
        arr = self._ids[side]
        cnt = self._count[side]
        pos = self._pos[oid]
        last = arr[cnt - 1]
        arr[pos] = last
        self._pos[last] = pos
        self._count[side] = cnt - 1
        self._side[oid] = 0
        if not self._best_dirty[side] and self._price[oid] == self._best[side]:
            self._best_dirty[side] = True  # another order may share the price
        return side

    def _best_price(self, side: int) -> float | None:
        cnt = self._count[side]
        if cnt == 0:
            self._best[side] = None
            self._best_dirty[side] = False
            return None
        if self._best_dirty[side]:
            prices = self._price[self._ids[side][:cnt]]
            self._best[side] = float(prices.max() if side == BUY else prices.min())
            self._best_dirty[side] = False
        return self._best[side]

    # -- queries ------------------------------------------------------------

    @property
    def n_resting(self) -> int:
        return self._count[BUY] + self._count[SELL]

    def side_count(self, side: str) -> int:
        return self._count[_SIDE_CODE[side]]

    def best_bid(self) -> float | None:
        return self._best_price(BUY)

    def best_ask(self) -> float | None:
        return self._best_price(SELL)

    def quote(self):
        """(best_bid_log, best_ask_log, spread_log, mid_log).

        spread is defined only with both sides quoted; mid falls back to the
        last defined mid, which this call refreshes whenever both sides exist.
        """
        bb = self._best_price(BUY)
        ba = self._best_price(SELL)
        if bb is None or ba is None:
            return bb, ba, None, self.last_mid
        mid = 0.5 * (bb + ba)
        self.last_mid = mid
        return bb, ba, ba - bb, mid

    def order(self, order_id: int) -> Order:
        if order_id < 0 or order_id >= self._next_id or self._side[order_id] == 0:
            raise OrderNotFoundError(order_id)
        return Order(id=order_id, side=_SIDE_NAME[int(self._side[order_id])],
                     log_price=float(self._price[order_id]),
                     entry_time=int(self._entry[order_id]),
                     initial_distance=float(self._dist0[order_id]))

    def resting_ids(self, side: str | None = None) -> np.ndarray:
        """Active order ids, ascending; optionally restricted to one side."""
        if side is None:
            both = np.concatenate([self._ids[BUY][: self._count[BUY]],
                                   self._ids[SELL][: self._count[SELL]]])
            return np.sort(both)
        code = _SIDE_CODE[side]
        return np.sort(self._ids[code][: self._count[code]].copy())

    def snapshot(self) -> BookSnapshot:
        """Parallel arrays over all resting orders, ascending id."""
        ids = np.concatenate([self._ids[BUY][: self._count[BUY]],
                              self._ids[SELL][: self._count[SELL]]])
        ids.sort()
        return BookSnapshot(ids=ids, sides=self._side[ids],
                            prices=self._price[ids],
                            initial_distances=self._dist0[ids])

    # -- operations ---------------------------------------------------------

    def submit(self, side: str, x: float, step: int) -> BookEvent:
        """Place one unit order priced x above the same-side best (log units).

        Buys price at best_bid + x, sells at best_ask - x; when the same-side
        best is missing, last_mid stands in as the reference.  The order
        executes against the head of the opposite best queue when x reaches
        the spread or the computed price reaches the opposite best (both are
        checked so the boundary case cannot be lost to rounding); with no
        opposite quote it always rests.
        """
        code = _SIDE_CODE.get(side)
        if code is None:
            raise ParameterError(f"side must be 'buy' or 'sell', got {side!r}")
        if not math.isfinite(x):
            raise ParameterError(f"relative price must be finite, got {x}")
        bb = self._best_price(BUY)
        ba = self._best_price(SELL)
        same = bb if code == BUY else ba
        opp = ba if code == BUY else bb
        ref = same if same is not None else self.last_mid
        price = self._round_tick(ref + x if code == BUY else ref - x)
        self.n_submitted += 1
        oid = self._alloc_id()
        marketable = opp is not None and (
            (code == BUY and (price >= opp or x >= opp - ref))
            or (code == SELL and (price <= opp or x >= ref - opp)))
        if marketable:
            head = self._queue_head(-code)
            self._remove(head)
            self.n_executed_incoming += 1
            self.n_executed_resting += 1
            event = BookEvent(kind="executed", order_id=oid, step=step, side=side,
                              log_price=price, trade_price_log=opp)
            if self.event_log is not None:
                self.event_log.append(event)
                self.event_log.append(BookEvent(
                    kind="executed", order_id=head, step=step,
                    side=_SIDE_NAME[-code], log_price=opp, trade_price_log=opp))
            return event
        if opp is not None:
            dist0 = opp - price if code == BUY else price - opp
        else:
            dist0 = max(self.last_mid - price if code == BUY else price - self.last_mid,
                        0.0)
        self._insert(oid, code, price, entry=step, dist0=dist0)
        event = BookEvent(kind="rested", order_id=oid, step=step, side=side,
                          log_price=price)
        if self.event_log is not None:
            self.event_log.append(event)
        return event

    def _queue_head(self, side: int) -> int:
        """Oldest order at the side's best price (smallest id there)."""
        cnt = self._count[side]
        ids = self._ids[side][:cnt]
        prices = self._price[ids]
        best = prices.max() if side == BUY else prices.min()
        return int(ids[prices == best].min())

    def cancel(self, order_id: int, step: int = -1) -> BookEvent:
        """Remove one resting order; FIFO order of the survivors is untouched."""
        side = self._remove(order_id)
        self.n_canceled += 1
        event = BookEvent(kind="canceled", order_id=order_id, step=step,
                          side=_SIDE_NAME[side],
                          log_price=float(self._price[order_id]))
        if self.event_log is not None:
            self.event_log.append(event)
        return event

    def check_conservation(self) -> bool:
        """Every submitted order is resting, executed, or canceled."""
        return self.n_submitted == (self.n_resting + self.n_executed_resting
                                    + self.n_canceled + self.n_executed_incoming)


def write_event_log(path, events) -> None:
    """Dump book events as CSV (step, kind, order_id, side, log_price, trade_price_log)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "kind", "order_id", "side", "log_price",
                         "trade_price_log"])
        for ev in events:
            writer.writerow([ev.step, ev.kind, ev.order_id, ev.side,
                             repr(ev.log_price),
                             "" if ev.trade_price_log is None else repr(ev.trade_price_log)])
