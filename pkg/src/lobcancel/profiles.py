"""Cancellation position profiles, order classification, and ratio statistics.

Replays an instrument-day's events through the book, tags every submission
with an aggressiveness class, and collects three per-side cancellation
coordinates: the relative price level on (0, 1], the normalized level on the
positive reals (book-shape effect divided out), and the relative queue
position on (0, 1]. Binned densities and per-class cancellation ratios are
built from the accumulated samples.

Only events stamped inside the continuous sessions feed the statistics.
Opening-call and cool-period events are held and flushed into the book, in
arrival order, when the first continuous-session event arrives; they are
tallied in diagnostics but excluded from profiles and ratios.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum

import numpy as np

from .lob import (
    CancelExceedsRemaining,
    CancellationRecord,
    DanglingCancel,
    DuplicateOrderId,
    LimitOrderBook,
    Trade,
)
from .orderflow import (
    CONTINUOUS_PHASES,
    HELD_PHASES,
    EventKind,
    OrderEvent,
    SessionPhase,
    Side,
    phase_of,
    split_days,
)


class AggressivenessClass(Enum):
    FULLY_FILLED = "fully_filled"
    PARTIALLY_FILLED = "partially_filled"
    INSIDE_SPREAD = "inside_spread"
    AT_BEST = "at_best"
    INSIDE_BOOK = "inside_book"


# Classes that can hold resting quantity, in reporting order (r1..r4).
CANCELLABLE_CLASSES = (
    AggressivenessClass.PARTIALLY_FILLED,
    AggressivenessClass.INSIDE_SPREAD,
    AggressivenessClass.AT_BEST,
    AggressivenessClass.INSIDE_BOOK,
)


def classify_submission(
    side: Side,
    price_ticks: int,
    pre_best_bid: int | None,
    pre_best_ask: int | None,
    traded_on_arrival: bool,
    rested: bool,
) -> AggressivenessClass:
    """Aggressiveness class of a submission, fixed at arrival.

    Orders that trade immediately are FULLY_FILLED (nothing rested) or
    PARTIALLY_FILLED (a remainder rested). Orders that rest untouched are
    classed by their price against the pre-arrival book: strictly between the
    quotes, equal to the same-side best, or behind it. With an empty same-side
    book a non-crossing order counts as INSIDE_SPREAD when an opposite best
    exists, INSIDE_BOOK when the whole book is empty.
    """
    if traded_on_arrival:
        return (
            AggressivenessClass.PARTIALLY_FILLED if rested else AggressivenessClass.FULLY_FILLED
        )
    same_best = pre_best_bid if side is Side.BUY else pre_best_ask
    opp_best = pre_best_ask if side is Side.BUY else pre_best_bid
    if same_best is None:
        if opp_best is None:
            return AggressivenessClass.INSIDE_BOOK
        return AggressivenessClass.INSIDE_SPREAD
    if price_ticks == same_best:
        return AggressivenessClass.AT_BEST
    better = price_ticks > same_best if side is Side.BUY else price_ticks < same_best
    return AggressivenessClass.INSIDE_SPREAD if better else AggressivenessClass.INSIDE_BOOK


# -- record coordinate helpers -------------------------------------------------


def relative_level(record: CancellationRecord) -> float:
    """Price-level rank over occupied levels; in (0, 1], 1 = worst level."""
    return record.level_rank / record.side_levels


def normalized_level(record: CancellationRecord) -> float:
    """Relative level divided by the level's share of the side's orders."""
    return (record.level_rank * record.side_orders) / (record.side_levels * record.level_orders)


def relative_queue_position(record: CancellationRecord) -> float:
    """FIFO rank over queue length; in (0, 1], 1 = back of the queue."""
    return record.queue_rank / record.level_orders


# -- replay -------------------------------------------------------------------


@dataclass(slots=True)
class OrderLifecycle:
    order_id: int
    side: Side
    kind: EventKind
    price_ticks: int
    size: int
    seq: int
    submit_phase: SessionPhase
    klass: AggressivenessClass
    in_scope: bool               # submitted during a continuous session
    arrival_fill: int = 0
    rested_qty: int = 0
    cancel_events: int = 0
    cancelled_in_scope: bool = False


@dataclass(frozen=True, slots=True)
class CancelObservation:
    """One successful cancellation with its stream context."""

    instrument: str
    seq: int
    timestamp: datetime
    phase: SessionPhase
    record: CancellationRecord
    order_class: AggressivenessClass
    in_profile: bool   # counts toward the position densities
    in_ratio: bool     # counts toward C / r / per-class ratios


@dataclass
class DayResult:
    instrument: str
    book: LimitOrderBook
    lifecycles: dict[int, OrderLifecycle]
    observations: list[CancelObservation]
    diagnostics: Counter
    trades: list[Trade] | None = None


def replay_day(
    events: list[OrderEvent], *, collect_trades: bool = False
) -> DayResult:
    """Replay one instrument-day (events in stream order) through a fresh book."""
    book = LimitOrderBook()
    lifecycles: dict[int, OrderLifecycle] = {}
    observations: list[CancelObservation] = []
    diagnostics: Counter = Counter()
    trades: list[Trade] | None = [] if collect_trades else None
    instrument = events[0].instrument if events else ""

    held: list[OrderEvent] = []
    flushed = False

    def apply_one(ev: OrderEvent, phase: SessionPhase) -> None:
        continuous = phase in CONTINUOUS_PHASES
        if ev.kind is EventKind.CANCEL:
            try:
                outcome = book.apply(ev)
            except DanglingCancel:
                diagnostics["dangling_cancels"] += 1
                return
            except CancelExceedsRemaining:
                diagnostics["cancel_exceeds_remaining"] += 1
                return
            record = outcome.cancellation
            life = lifecycles[ev.order_id]
            life.cancel_events += 1
            in_ratio = continuous and life.in_scope
            if in_ratio:
                life.cancelled_in_scope = True
            else:
                if not continuous:
                    diagnostics["cancels_outside_continuous"] += 1
                elif not life.in_scope:
                    diagnostics["cancels_of_precontinuous_orders"] += 1
            observations.append(
                CancelObservation(
                    instrument=ev.instrument,
                    seq=ev.seq,
                    timestamp=ev.timestamp,
                    phase=phase,
                    record=record,
                    order_class=life.klass,
                    in_profile=continuous,
                    in_ratio=in_ratio,
                )
            )
        else:
            pre_bid = book.best_bid()
            pre_ask = book.best_ask()
            try:
                outcome = book.apply(ev)
            except DuplicateOrderId:
                diagnostics["duplicate_order_ids"] += 1
                return
            filled = sum(t.size for t in outcome.trades)
            if trades is not None:
                trades.extend(outcome.trades)
            klass = classify_submission(
                ev.side, ev.price_ticks, pre_bid, pre_ask, filled > 0, outcome.rested is not None
            )
            lifecycles[ev.order_id] = OrderLifecycle(
                order_id=ev.order_id,
                side=ev.side,
                kind=ev.kind,
                price_ticks=ev.price_ticks,
                size=ev.size,
                seq=ev.seq,
                submit_phase=phase,
                klass=klass,
                in_scope=continuous,
                arrival_fill=filled,
                rested_qty=ev.size - filled,
            )

    for ev in events:
        phase = phase_of(ev.timestamp)
        if not flushed:
            if phase in HELD_PHASES:
                held.append(ev)
                diagnostics["held_events"] += 1
                continue
            for held_ev in held:
                apply_one(held_ev, phase_of(held_ev.timestamp))
            held.clear()
            flushed = True
        apply_one(ev, phase)
    for held_ev in held:  # no continuous event ever arrived
        apply_one(held_ev, phase_of(held_ev.timestamp))

    return DayResult(instrument, book, lifecycles, observations, diagnostics, trades)


# -- accumulation ---------------------------------------------------------------


@dataclass
class SideAccumulator:
    """Single-writer per-side sample and count store; merge is associative."""

    side: Side
    rel_levels: list[float] = field(default_factory=list)
    norm_levels: list[float] = field(default_factory=list)
    queue_fracs: list[float] = field(default_factory=list)
    orders_by_class: Counter = field(default_factory=Counter)
    cancelled_by_class: Counter = field(default_factory=Counter)
    orders_total: int = 0
    cancelled_orders: int = 0
    cancel_events: int = 0

    def add_observation(self, obs: CancelObservation) -> None:
        if obs.in_profile:
            rec = obs.record
            self.rel_levels.append(rec.rel_level)
            self.norm_levels.append(rec.norm_level)
            self.queue_fracs.append(rec.queue_frac)
        if obs.in_ratio:
            self.cancel_events += 1

    def add_lifecycle(self, life: OrderLifecycle) -> None:
        if not life.in_scope:
            return
        self.orders_total += 1
        self.orders_by_class[life.klass] += 1
        if life.cancelled_in_scope:
            self.cancelled_orders += 1
            self.cancelled_by_class[life.klass] += 1

    def merge(self, other: "SideAccumulator") -> None:
        self.rel_levels.extend(other.rel_levels)
        self.norm_levels.extend(other.norm_levels)
        self.queue_fracs.extend(other.queue_fracs)
        self.orders_by_class.update(other.orders_by_class)
        self.cancelled_by_class.update(other.cancelled_by_class)
        self.orders_total += other.orders_total
        self.cancelled_orders += other.cancelled_orders
        self.cancel_events += other.cancel_events


@dataclass
class InstrumentProfile:
    instrument: str
    buy: SideAccumulator = field(default_factory=lambda: SideAccumulator(Side.BUY))
    sell: SideAccumulator = field(default_factory=lambda: SideAccumulator(Side.SELL))
    diagnostics: Counter = field(default_factory=Counter)
    days: int = 0

    def accumulator(self, side: Side) -> SideAccumulator:
        return self.buy if side is Side.BUY else self.sell

    def add_day(self, day: DayResult) -> None:
        self.days += 1
        self.diagnostics.update(day.diagnostics)
        for obs in day.observations:
            self.accumulator(obs.record.side).add_observation(obs)
        for life in day.lifecycles.values():
            self.accumulator(life.side).add_lifecycle(life)

    def merge(self, other: "InstrumentProfile") -> None:
        self.buy.merge(other.buy)
        self.sell.merge(other.sell)
        self.diagnostics.update(other.diagnostics)
        self.days += other.days


@dataclass
class ProfileRun:
    per_instrument: dict[str, InstrumentProfile]
    observations: list[CancelObservation]

    def ensemble(self) -> InstrumentProfile:
        """Pooled accumulator over all instruments (raw-sample weighting)."""
        pooled = InstrumentProfile("__ensemble__")
        for code in sorted(self.per_instrument):
            pooled.merge(self.per_instrument[code])
        return pooled


def profile_events(events: list[OrderEvent]) -> ProfileRun:
    """Split events into instrument-days, replay each, accumulate profiles."""
    per_instrument: dict[str, InstrumentProfile] = {}
    observations: list[CancelObservation] = []
    for (instrument, _day), day_events in sorted(split_days(events).items()):
        day = replay_day(day_events)
        profile = per_instrument.get(instrument)
        if profile is None:
            profile = per_instrument[instrument] = InstrumentProfile(instrument)
        profile.add_day(day)
        observations.extend(day.observations)
    return ProfileRun(per_instrument, observations)


# -- ratio report ----------------------------------------------------------------


@dataclass(frozen=True)
class ClassRatio:
    orders: int
    cancelled: int

    @property
    def ratio(self) -> float | None:
        return self.cancelled / self.orders if self.orders else None


@dataclass(frozen=True)
class SideRatios:
    orders: int
    cancelled_orders: int
    cancel_events: int
    by_class: dict[AggressivenessClass, ClassRatio]

    @property
    def ratio(self) -> float | None:
        return self.cancelled_orders / self.orders if self.orders else None


def ratio_report(acc: SideAccumulator) -> SideRatios:
    """Cancellation ratios for one side: overall and per cancellable class.

    The overall denominator counts every effective submission in scope (all
    of them either rest or trade on arrival); class denominators restrict to
    the class. Fully filled orders appear only in the overall denominator:
    they hold no resting quantity, so they cannot be cancelled.
    """
    by_class = {
        klass: ClassRatio(acc.orders_by_class[klass], acc.cancelled_by_class[klass])
        for klass in CANCELLABLE_CLASSES
    }
    return SideRatios(
        orders=acc.orders_total,
        cancelled_orders=acc.cancelled_orders,
        cancel_events=acc.cancel_events,
        by_class=by_class,
    )


# -- empirical densities ----------------------------------------------------------


class PdfError(ValueError):
    pass


class EmptySample(PdfError):
    pass


class SampleOutsideDomain(PdfError):
    pass


UNIT_INTERVAL = "unit_interval"
POSITIVE_RAY = "positive_ray"

DEFAULT_UNIT_BINS = 50
DEFAULT_LOG_BINS = 60


@dataclass(frozen=True)
class BinSpec:
    """Histogram layout: k uniform bins on (0, 1] or k log-uniform bins."""

    kind: str  # "uniform" | "log_uniform"
    bins: int
    lo: float | None = None  # log_uniform only; defaults to sample min
    hi: float | None = None  # log_uniform only; defaults to sample max

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "log_uniform"):
            raise ValueError(f"unknown bin spec kind {self.kind!r}")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")


UNIT_BIN_SPEC = BinSpec("uniform", DEFAULT_UNIT_BINS)
LOG_BIN_SPEC = BinSpec("log_uniform", DEFAULT_LOG_BINS)


@dataclass(frozen=True)
class EmpiricalPdf:
    """Binned density; integrates to one over its bins by construction."""

    bin_edges: np.ndarray
    density: np.ndarray
    count: int
    domain: str

    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def centers(self) -> np.ndarray:
        edges = self.bin_edges
        if self.domain == POSITIVE_RAY:
            return np.sqrt(edges[:-1] * edges[1:])
        return 0.5 * (edges[:-1] + edges[1:])

    def integral(self) -> float:
        return float(np.sum(self.density * self.widths()))

    def nonempty_bins(self) -> int:
        return int(np.count_nonzero(self.density))

    def to_dict(self) -> dict:
        return {
            "edges": [float(e) for e in self.bin_edges],
            "density": [float(d) for d in self.density],
            "count": self.count,
            "domain": self.domain,
        }


def pdf_from_edges(samples: np.ndarray, edges: np.ndarray, domain: str) -> EmpiricalPdf:
    counts, _ = np.histogram(samples, bins=edges)
    n = int(counts.sum())
    widths = np.diff(edges)
    density = counts / (n * widths) if n else np.zeros_like(widths)
    return EmpiricalPdf(np.asarray(edges, float), density, n, domain)


def accumulate_pdf(samples, spec: BinSpec) -> EmpiricalPdf:
    """Bin samples into a normalized density per the given spec.

    Raises EmptySample on no data and SampleOutsideDomain when a sample falls
    outside (0, 1] for uniform bins or outside the positive reals (or an
    explicit [lo, hi]) for log-uniform bins.
    """
    xs = np.asarray(samples, dtype=float)
    if xs.size == 0:
        raise EmptySample("no samples to bin")
    if spec.kind == "uniform":
        if np.any(xs <= 0.0) or np.any(xs > 1.0):
            raise SampleOutsideDomain("samples must lie in (0, 1]")
        edges = np.linspace(0.0, 1.0, spec.bins + 1)
        return pdf_from_edges(xs, edges, UNIT_INTERVAL)
    if np.any(xs <= 0.0):
        raise SampleOutsideDomain("samples must be positive")
    lo = spec.lo if spec.lo is not None else float(xs.min())
    hi = spec.hi if spec.hi is not None else float(xs.max())
    if lo <= 0.0:
        raise SampleOutsideDomain("log-uniform bins need a positive lower edge")
    if not hi > lo:
        raise PdfError("degenerate bin range: all samples identical")
    if np.any(xs < lo) or np.any(xs > hi):
        raise SampleOutsideDomain(f"samples outside [{lo}, {hi}]")
    edges = np.geomspace(lo, hi, spec.bins + 1)
    edges[0] = lo
    edges[-1] = hi
    return pdf_from_edges(xs, edges, POSITIVE_RAY)
