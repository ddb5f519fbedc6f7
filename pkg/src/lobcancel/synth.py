"""Synthetic order flow with known cancellation-position laws.

The stream generator maintains its own book replica while emitting events, so
every cancel targets a live resting order and the stream replays cleanly. At
each cancellation it picks the price level and the queue position with
probabilities proportional to the configured law densities evaluated on the
current book's grid, which makes the replayed position profiles converge to
the injected laws up to book-discreteness effects.

Also hosts the uniform-queue experiment: queues of random length with a
uniformly chosen cancellation position, whose relative-position density shows
the mechanical peaks at multiples of 1/10 caused by queue-length discreteness.
"""
from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta

import numpy as np

from .lob import LimitOrderBook
from .orderflow import EventKind, OrderEvent, Side
from .profiles import UNIT_BIN_SPEC, EmpiricalPdf, accumulate_pdf


class ConfigInvalid(ValueError):
    pass


@dataclass(frozen=True)
class UniformLaw:
    """Every admissible rank equally likely."""


@dataclass(frozen=True)
class TruncLogNormalLaw:
    mu: float
    sigma: float


@dataclass(frozen=True)
class ExpProfileLaw:
    beta: float


PositionLaw = UniformLaw | TruncLogNormalLaw | ExpProfileLaw


class _RankSampler:
    """Draws a 1-based rank k of n with weight = law density at k/n.

    Cumulative weights are cached per n, so repeated draws against books of
    similar shape cost O(log n) each.
    """

    def __init__(self, law: PositionLaw, rng: random.Random):
        self.law = law
        self.rng = rng
        self.uniform = isinstance(law, UniformLaw)
        self._cum: dict[int, list[float]] = {}

    def _weights(self, n: int) -> list[float]:
        law = self.law
        if isinstance(law, TruncLogNormalLaw):
            inv_two_s2 = 1.0 / (2.0 * law.sigma**2)
            raw = [
                math.exp(-((math.log(k / n) - law.mu) ** 2) * inv_two_s2) / (k / n)
                for k in range(1, n + 1)
            ]
        elif isinstance(law, ExpProfileLaw):
            raw = [1.0 - math.exp(law.beta * k / n) for k in range(1, n + 1)]
        else:
            raw = [1.0] * n
        cum: list[float] = []
        total = 0.0
        for w in raw:
            total += w
            cum.append(total)
        if total <= 0.0:
            cum = [float(k) for k in range(1, n + 1)]  # fall back to uniform
        return cum

    def draw(self, n: int) -> int:
        if n == 1:
            return 1
        if self.uniform:
            return self.rng.randrange(n) + 1
        cum = self._cum.get(n)
        if cum is None:
            cum = self._cum[n] = self._weights(n)
        r = self.rng.random() * cum[-1]
        return min(bisect_right(cum, r), n - 1) + 1


@dataclass(frozen=True)
class GenConfig:
    """Stream generator settings; the seed fully determines the output."""

    seed: int = 0
    n_events: int = 100_000
    instrument: str = "SYN001"
    trading_day: date = date(2003, 6, 2)
    level_law: PositionLaw = field(default_factory=UniformLaw)
    queue_law: PositionLaw = field(default_factory=UniformLaw)
    limit_share: float = 0.6
    marketable_share: float = 0.2
    cancel_share: float = 0.2
    initial_levels: int = 80
    initial_queue: int = 6
    mid_price_ticks: int = 10_000

    def __post_init__(self) -> None:
        shares = (self.limit_share, self.marketable_share, self.cancel_share)
        if any(s < 0.0 for s in shares) or abs(sum(shares) - 1.0) > 1e-9:
            raise ConfigInvalid(f"arrival mix must be non-negative and sum to 1, got {shares}")
        if self.n_events < 0:
            raise ConfigInvalid("n_events must be >= 0")
        if self.initial_levels < 1 or self.initial_queue < 1:
            raise ConfigInvalid("initial book must have at least one level and one order")
        if self.mid_price_ticks <= self.initial_levels:
            raise ConfigInvalid("mid price too low for the requested initial depth")


class _SessionClock:
    """Millisecond clock that walks the two continuous sessions in order."""

    AM_MS = 7_200_000  # 09:30 - 11:30
    PM_MS = 7_200_000  # 13:00 - 15:00

    def __init__(self, day: date, n_events: int):
        self.base_am = datetime.combine(day, time(9, 30))
        self.base_pm = datetime.combine(day, time(13, 0))
        budget = self.AM_MS + self.PM_MS - 400_000  # leave headroom before the close
        self.dt_ms = max(1, min(1000, budget // max(n_events, 1)))
        self.pos_ms = 0

    def next(self) -> datetime:
        ms = self.pos_ms
        self.pos_ms += self.dt_ms
        if ms < self.AM_MS:
            return self.base_am + timedelta(milliseconds=ms)
        return self.base_pm + timedelta(milliseconds=ms - self.AM_MS)


def generate_stream(config: GenConfig) -> list[OrderEvent]:
    """Emit a replayable event stream of exactly ``config.n_events`` events.

    The stream opens with non-crossing limits building ``initial_levels``
    price levels of ``initial_queue`` orders per side, then mixes limits,
    marketables, and full cancels per the configured shares. Sides starved of
    resting orders fall back to limit submissions, which keeps the book deep
    enough for the position laws to act on.
    """
    rng = random.Random(config.seed)
    book = LimitOrderBook()
    clock = _SessionClock(config.trading_day, config.n_events)
    level_sampler = _RankSampler(config.level_law, rng)
    queue_sampler = _RankSampler(config.queue_law, rng)
    events: list[OrderEvent] = []
    next_id = 1
    target_depth = config.initial_levels * config.initial_queue
    min_side_orders = max(1, target_depth // 4)
    max_side_orders = target_depth + target_depth // 2
    band = config.initial_levels
    cancel_cut = config.limit_share + config.marketable_share

    def emit(kind: EventKind, side: Side, price: int, size: int, order_id: int) -> None:
        ev = OrderEvent(
            seq=len(events) + 1,
            timestamp=clock.next(),
            instrument=config.instrument,
            order_id=order_id,
            kind=kind,
            side=side,
            price_ticks=price,
            size=size,
        )
        events.append(ev)
        book.apply(ev)

    def emit_limit(side: Side) -> None:
        # Placement depth follows the level law so per-level inflow balances
        # the law-shaped cancellation outflow and queues keep their depth.
        # Front placements step inside the spread when a gap is open.
        nonlocal next_id
        bid, ask = book.best_bid(), book.best_ask()
        offset = level_sampler.draw(band) - 1
        if side is Side.BUY:
            if offset == 0 and bid is not None and ask is not None and ask - bid > 1 and rng.random() < 0.5:
                price = bid + 1
            else:
                anchor = bid if bid is not None else (ask - 1 if ask is not None else config.mid_price_ticks)
                price = anchor - offset
        else:
            if offset == 0 and bid is not None and ask is not None and ask - bid > 1 and rng.random() < 0.5:
                price = ask - 1
            else:
                anchor = ask if ask is not None else (bid + 1 if bid is not None else config.mid_price_ticks)
                price = anchor + offset
        emit(EventKind.LIMIT, side, max(price, 1), rng.randrange(1, 11) * 100, next_id)
        next_id += 1

    # Seed phase: two ladders of stacked non-crossing limits. Depths are
    # randomized around initial_queue so queue lengths mix from the start;
    # a single shared length would alias the position grid k/n against the
    # profile bins.
    mid = config.mid_price_ticks
    lo_depth = max(1, config.initial_queue // 2)
    hi_depth = config.initial_queue + config.initial_queue // 2
    for level in range(config.initial_levels):
        for side, price in ((Side.BUY, mid - 1 - level), (Side.SELL, mid + 1 + level)):
            for _ in range(rng.randrange(lo_depth, hi_depth + 1)):
                if len(events) >= config.n_events:
                    return events
                emit(EventKind.LIMIT, side, price, rng.randrange(1, 11) * 100, next_id)
                next_id += 1

    while len(events) < config.n_events:
        side = Side.BUY if rng.random() < 0.5 else Side.SELL
        own = book.buy if side is Side.BUY else book.sell
        opp = book.sell if side is Side.BUY else book.buy
        u = rng.random()
        # Depth guards: starved sides fall back to limits, overgrown sides to
        # cancels, keeping queue lengths near the configured depth. A zero
        # cancel share disables the overflow diversion: such streams must not
        # contain cancel events at all.
        want_cancel = u >= cancel_cut or (
            config.cancel_share > 0.0
            and u < config.limit_share
            and own.order_count > max_side_orders
        )
        if want_cancel and own.order_count > min_side_orders:
            prices = own.sorted_prices()
            rank = level_sampler.draw(len(prices))
            queue = own.levels[prices[rank - 1]].queue
            victim = queue[queue_sampler.draw(len(queue)) - 1]
            emit(EventKind.CANCEL, side, victim.price_ticks, 0, victim.order_id)
        elif config.limit_share <= u < cancel_cut and opp.order_count > min_side_orders:
            price = opp.best_price()
            emit(EventKind.MARKETABLE, side, price, rng.randrange(1, 23) * 100, next_id)
            next_id += 1
        else:
            emit_limit(side)
    return events


# -- uniform-queue experiment ---------------------------------------------------


@dataclass(frozen=True)
class QueueSimConfig:
    n_queues: int = 1_000_000
    max_length: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_queues < 1:
            raise ConfigInvalid("n_queues must be >= 1")
        if self.max_length < 1:
            raise ConfigInvalid("max_length must be >= 1")


@dataclass
class QueueSimResult:
    n_queues: int
    mass_values: np.ndarray  # distinct relative positions, ascending
    mass_probs: np.ndarray   # occurrence probability of each value
    pdf: EmpiricalPdf        # the same draws, binned on the standard grid

    def prob_at(self, value: float) -> float:
        """Exact point mass at a relative position (0 when never observed)."""
        idx = np.searchsorted(self.mass_values, value)
        if idx < self.mass_values.size and self.mass_values[idx] == value:
            return float(self.mass_probs[idx])
        return 0.0

    def top_masses(self, k: int) -> list[tuple[float, float]]:
        """The k largest point masses as (value, probability), descending."""
        order = np.argsort(self.mass_probs)[::-1][:k]
        return [(float(self.mass_values[i]), float(self.mass_probs[i])) for i in order]


def simulate_uniform_queues(config: QueueSimConfig) -> QueueSimResult:
    """Relative cancellation positions in queues with no position preference.

    Queue lengths are uniform on [1, max_length] and the cancelled position is
    uniform within each queue. The relative position y/n then piles up on
    coarse rationals, which is the mechanical source of the peaks at
    multiples of 0.1; the two largest masses sit at 1 and 1/2.
    """
    rng = np.random.default_rng(config.seed)
    lengths = rng.integers(1, config.max_length, size=config.n_queues, endpoint=True)
    positions = rng.integers(1, lengths, endpoint=True)
    rel = positions / lengths
    values, counts = np.unique(rel, return_counts=True)
    return QueueSimResult(
        n_queues=config.n_queues,
        mass_values=values,
        mass_probs=counts / config.n_queues,
        pdf=accumulate_pdf(rel, UNIT_BIN_SPEC),
    )
