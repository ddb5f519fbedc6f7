"""Price-time-priority limit-order book with cancellation position capture.

Two ladders of price levels (buy descending, sell ascending), each level a
FIFO queue of resting orders. Incoming submissions match against the opposite
ladder best price first, FIFO within a level, trading at the maker's price;
any remainder rests. Cancels remove quantity from a referenced resting order
and capture the order's book coordinates *before* removal.

A book instance covers one instrument-day and is single-threaded; books for
different instruments can be driven in parallel.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

from .orderflow import EventKind, OrderEvent, Side


class LobError(Exception):
    """Base class for book application errors."""


class DanglingCancel(LobError):
    """Cancel referenced an order id that is not resting."""

    def __init__(self, order_id: int):
        super().__init__(f"cancel references unknown or inactive order {order_id}")
        self.order_id = order_id


class CancelExceedsRemaining(LobError):
    pass


class DuplicateOrderId(LobError):
    pass


class UnknownLevel(LobError):
    pass


class UnknownOrder(LobError):
    pass


class CrossedBookInvariantViolation(LobError):
    pass


@dataclass(slots=True, eq=False)
class RestingOrder:
    order_id: int
    side: Side
    price_ticks: int
    remaining_size: int
    arrival_seq: int


@dataclass(slots=True, eq=False)
class PriceLevel:
    price_ticks: int
    queue: deque[RestingOrder]


@dataclass(frozen=True, slots=True)
class Trade:
    maker_id: int
    taker_id: int
    price_ticks: int
    size: int


@dataclass(frozen=True, slots=True)
class CancellationRecord:
    """Book coordinates of one cancellation, measured at the instant it hits.

    ``level_rank``/``queue_rank`` are 1-based (1 = best price level, 1 = front
    of the queue) and include the cancelled order itself, so the fractional
    coordinates span (0, 1] and the last order in a queue maps to 1.
    """

    cancel_index: int        # per-book counter, +1 for each cancellation
    side: Side
    level_rank: int          # rank of the order's price level under priority
    side_levels: int         # occupied price levels on this side
    level_orders: int        # orders queued at this level, cancelled one included
    side_orders: int         # total resting orders on this side
    queue_rank: int          # FIFO position within the level
    rel_level: float         # level_rank / side_levels
    norm_level: float        # rel_level rescaled by the level's share of side_orders
    queue_frac: float        # queue_rank / level_orders
    cancelled_size: int

    def __post_init__(self) -> None:
        ok = (
            1 <= self.level_rank <= self.side_levels
            and 1 <= self.queue_rank <= self.level_orders
            and self.level_orders <= self.side_orders
            and self.cancelled_size > 0
            and self.rel_level == self.level_rank / self.side_levels
            and self.queue_frac == self.queue_rank / self.level_orders
            and self.norm_level
            == (self.level_rank * self.side_orders) / (self.side_levels * self.level_orders)
        )
        if not ok:
            raise ValueError(f"inconsistent cancellation record: {self}")


@dataclass(slots=True)
class ApplyOutcome:
    trades: list[Trade]
    cancellation: CancellationRecord | None = None
    rested: int | None = None


class _BookSide:
    """One ladder: levels keyed by price, heap of (priority-signed) prices."""

    __slots__ = ("sign", "levels", "heap", "order_count", "total_size")

    def __init__(self, side: Side):
        # Buy prices are negated so the heap minimum is always the best price.
        self.sign = -1 if side is Side.BUY else 1
        self.levels: dict[int, PriceLevel] = {}
        self.heap: list[int] = []
        self.order_count = 0
        self.total_size = 0

    def best_price(self) -> int | None:
        heap = self.heap
        levels = self.levels
        while heap:
            price = self.sign * heap[0]
            if price in levels:
                return price
            heapq.heappop(heap)
        return None

    def sorted_prices(self) -> list[int]:
        """Prices in priority order (descending for buys, ascending for sells)."""
        return sorted(self.levels, reverse=self.sign < 0)

    def add_order(self, order: RestingOrder) -> None:
        level = self.levels.get(order.price_ticks)
        if level is None:
            level = PriceLevel(order.price_ticks, deque())
            self.levels[order.price_ticks] = level
            heapq.heappush(self.heap, self.sign * order.price_ticks)
        level.queue.append(order)
        self.order_count += 1
        self.total_size += order.remaining_size


class LimitOrderBook:
    """Order book for a single instrument-day."""

    __slots__ = ("buy", "sell", "index", "cancel_count")

    def __init__(self) -> None:
        self.buy = _BookSide(Side.BUY)
        self.sell = _BookSide(Side.SELL)
        self.index: dict[int, RestingOrder] = {}
        self.cancel_count = 0

    def _side(self, side: Side) -> _BookSide:
        return self.buy if side is Side.BUY else self.sell

    def best_bid(self) -> int | None:
        return self.buy.best_price()

    def best_ask(self) -> int | None:
        return self.sell.best_price()

    def apply(self, event: OrderEvent) -> ApplyOutcome:
        """Apply one event, returning trades, cancellation capture, and rest.

        Raises DanglingCancel / CancelExceedsRemaining / DuplicateOrderId on
        bad input; the book is left unchanged in those cases.
        """
        if event.kind is EventKind.CANCEL:
            return self._apply_cancel(event)
        return self._apply_submission(event)

    def _apply_submission(self, event: OrderEvent) -> ApplyOutcome:
        index = self.index
        if event.order_id in index:
            raise DuplicateOrderId(f"order {event.order_id} already resting")
        side = event.side
        is_buy = side is Side.BUY
        own, opp = (self.buy, self.sell) if is_buy else (self.sell, self.buy)
        remaining = event.size
        price = event.price_ticks
        trades: list[Trade] = []

        while remaining > 0:
            best = opp.best_price()
            if best is None:
                break
            if is_buy:
                if best > price:
                    break
            elif best < price:
                break
            queue = opp.levels[best].queue
            while remaining > 0 and queue:
                maker = queue[0]
                take = maker.remaining_size
                if take > remaining:
                    take = remaining
                maker.remaining_size -= take
                remaining -= take
                opp.total_size -= take
                trades.append(Trade(maker.order_id, event.order_id, best, take))
                if maker.remaining_size == 0:
                    queue.popleft()
                    del index[maker.order_id]
                    opp.order_count -= 1
            if not queue:
                del opp.levels[best]

        rested = None
        if remaining > 0:
            order = RestingOrder(event.order_id, side, price, remaining, event.seq)
            own.add_order(order)
            index[event.order_id] = order
            rested = event.order_id
            best_opp = opp.best_price()
            if best_opp is not None:
                crossed = price >= best_opp if is_buy else price <= best_opp
                if crossed:
                    raise CrossedBookInvariantViolation(
                        f"book crossed after resting {event.order_id} at {price}"
                    )
        return ApplyOutcome(trades, None, rested)

    def _apply_cancel(self, event: OrderEvent) -> ApplyOutcome:
        order = self.index.get(event.order_id)
        if order is None:
            raise DanglingCancel(event.order_id)
        qty = event.size if event.size > 0 else order.remaining_size
        if qty > order.remaining_size:
            raise CancelExceedsRemaining(
                f"cancel {qty} > remaining {order.remaining_size} for order {order.order_id}"
            )
        book_side = self.buy if order.side is Side.BUY else self.sell
        levels = book_side.levels
        price = order.price_ticks
        queue = levels[price].queue
        if order.side is Side.BUY:
            rank = 1 + sum(1 for q in levels if q > price)
        else:
            rank = 1 + sum(1 for q in levels if q < price)
        n_levels = len(levels)
        n_at_level = len(queue)
        n_side = book_side.order_count
        pos = queue.index(order) + 1
        self.cancel_count += 1
        # Integer products before the single division keep the flat-book
        # identity (equal queues => normalized level == level rank) exact.
        record = CancellationRecord(
            cancel_index=self.cancel_count,
            side=order.side,
            level_rank=rank,
            side_levels=n_levels,
            level_orders=n_at_level,
            side_orders=n_side,
            queue_rank=pos,
            rel_level=rank / n_levels,
            norm_level=(rank * n_side) / (n_levels * n_at_level),
            queue_frac=pos / n_at_level,
            cancelled_size=qty,
        )

        order.remaining_size -= qty
        book_side.total_size -= qty
        if order.remaining_size == 0:
            queue.remove(order)
            del self.index[order.order_id]
            book_side.order_count -= 1
            if not queue:
                del levels[price]
        return ApplyOutcome([], record, None)

    # -- position queries ---------------------------------------------------

    def level_rank(self, side: Side, price_ticks: int) -> int:
        """1-based rank of a price level under price priority."""
        book_side = self._side(side)
        if price_ticks not in book_side.levels:
            raise UnknownLevel(f"no {side.name} level at {price_ticks}")
        return book_side.sorted_prices().index(price_ticks) + 1

    def queue_position(self, order_id: int) -> int:
        """1-based FIFO position of a resting order within its level."""
        order = self.index.get(order_id)
        if order is None:
            raise UnknownOrder(f"order {order_id} not resting")
        queue = self._side(order.side).levels[order.price_ticks].queue
        return queue.index(order) + 1

    def snapshot_depth(self, side: Side) -> tuple[int, int, list[int]]:
        """(occupied levels, resting orders, per-level queue lengths) for a side."""
        book_side = self._side(side)
        sizes = [len(book_side.levels[p].queue) for p in book_side.sorted_prices()]
        return len(sizes), book_side.order_count, sizes

    # -- diagnostics ----------------------------------------------------------

    def to_state_dict(self) -> dict:
        """JSON-ready dump of resting state, in priority order."""
        def dump(side: _BookSide) -> list[dict]:
            return [
                {
                    "price_ticks": price,
                    "queue": [
                        {"order_id": o.order_id, "remaining_size": o.remaining_size}
                        for o in side.levels[price].queue
                    ],
                }
                for price in side.sorted_prices()
            ]

        return {"buy": dump(self.buy), "sell": dump(self.sell)}

    def check_invariants(self) -> None:
        """Full consistency audit (test hook; O(book size))."""
        bid, ask = self.best_bid(), self.best_ask()
        if bid is not None and ask is not None and bid >= ask:
            raise CrossedBookInvariantViolation(f"crossed book at rest: {bid} >= {ask}")
        seen = 0
        for side_obj, side in ((self.buy, Side.BUY), (self.sell, Side.SELL)):
            count = 0
            total = 0
            for price, level in side_obj.levels.items():
                assert level.queue, f"empty level {price} retained"
                arrivals = [o.arrival_seq for o in level.queue]
                assert arrivals == sorted(arrivals), "queue not in arrival order"
                for order in level.queue:
                    assert order.remaining_size > 0
                    assert order.price_ticks == price and order.side is side
                    assert self.index.get(order.order_id) is order, "index out of sync"
                    count += 1
                    total += order.remaining_size
            assert count == side_obj.order_count, "order_count out of sync"
            assert total == side_obj.total_size, "total_size out of sync"
            seen += count
        assert seen == len(self.index), "index holds stale entries"
