"""Event-driven bid/ask queue state machine with jump reinitialization.

The reduced order book tracked here is a triple (bid price in ticks, bid queue
size, ask queue size), with the spread pinned at one tick so the ask price is
always ``bid_price_ticks + 1``. Each order-book event adds a signed size to one
queue: positive deltas are limit orders, negative deltas are market orders or
cancellations. When an event would take its queue to zero or below, that queue
is *depleted*: the price moves one tick (ask depletion -> up, bid depletion ->
down), the depleting event is consumed entirely (no residual carries into the
next price level), and both queues are redrawn from a `ReinitRule`.

The same boundary behavior, applied to an arbitrary piecewise-constant planar
path instead of a live book, is the regulating map implemented by `regulate`:
follow the input increments inside the open positive quadrant and, whenever the
path attempts to exit, jump to a fresh interior point drawn by the rule. The
price path is a pure function of the jump record: +1 tick per ask-side jump,
-1 per bid-side jump (`price_from_hits`).

Guarantees
----------
- No output sample ever has a negative queue; both queues are strictly
  positive immediately after every jump, and the state (0, 0) never appears.
- Between consecutive jumps, increments of the regulated path equal the
  increments of the input (same floating-point additions; exact to the last
  bit whenever sizes and reinitialization draws are integer-valued).
- One jump <=> one price change of exactly one tick, on every input.
- Identical (events, initial state, rule, seed) give identical outputs.

Queue sizes are real-valued rather than integer so the same machinery serves
both raw event replay and rescaled (size / sqrt(n)) inputs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

BID = "bid"
ASK = "ask"

#: Jump-side labels. Ask depletion raises the price; bid depletion lowers it.
ASK_DEPLETED = "ask_depleted"
BID_DEPLETED = "bid_depleted"

#: ReinitRule variants.
IID = "iid"
PEGGED = "pegged"
GENERAL = "general"


@dataclass(frozen=True)
class OrderEvent:
    """One order-book event: a signed size change of one best-quote queue."""

    time: float
    side: str
    delta: float

    def __post_init__(self):
        if not math.isfinite(self.time) or self.time < 0:
            raise ValueError(f"event time must be finite and >= 0, got {self.time}")
        if self.side not in (BID, ASK):
            raise ValueError(f"side must be {BID!r} or {ASK!r}, got {self.side!r}")
        if not math.isfinite(self.delta) or self.delta == 0:
            raise ValueError(f"delta must be finite and nonzero, got {self.delta}")


@dataclass(frozen=True)
class BookState:
    """Best-quote book state: bid price in ticks and the two queue sizes.

    The ask price is implicitly ``bid_price_ticks + 1`` (one-tick spread).
    """

    bid_price_ticks: int
    tick: float
    q_bid: float
    q_ask: float

    def __post_init__(self):
        if self.tick <= 0 or not math.isfinite(self.tick):
            raise ValueError(f"tick must be positive, got {self.tick}")
        if self.q_bid < 0 or self.q_ask < 0:
            raise ValueError(
                f"queue sizes must be >= 0, got ({self.q_bid}, {self.q_ask})"
            )

    @property
    def ask_price_ticks(self):
        return self.bid_price_ticks + 1


def _validate_pair(pair, what):
    b, a = float(pair[0]), float(pair[1])
    if not (b > 0 and a > 0 and math.isfinite(b) and math.isfinite(a)):
        raise ValueError(f"{what} must be a strictly positive finite pair, got {pair}")
    return b, a


@dataclass(frozen=True)
class ReinitRule:
    """How both queues are redrawn after a depletion.

    variant "iid"
        New state is a fresh draw: `sampler_up(rng)` after an ask depletion
        (price increase), `sampler_down(rng)` after a bid depletion. Samplers
        must return strictly positive pairs (q_bid, q_ask).
    variant "pegged"
        A fraction of the *surviving* queue follows the price to the new
        level: after a price increase the new state is
        (eps_b + pegged_beta_bid * q_bid_pre, eps_a); after a decrease it is
        (eps_b, eps_a + pegged_beta_ask * q_ask_pre), with (eps_b, eps_a)
        drawn from the matching sampler. A depleted coordinate contributes
        nothing (its positive part is zero).
    variant "general"
        New state is ``g((q_bid_pre, q_ask_pre), eps)`` with eps drawn from
        the matching sampler; `g` must return a strictly positive pair and
        should be bounded below by a fixed multiple of min(eps) so that
        reinitializations cannot accumulate on the axes.
    """

    variant: str = IID
    sampler_up: object = None
    sampler_down: object = None
    pegged_beta_bid: float = 0.0
    pegged_beta_ask: float = 0.0
    g: object = None

    def __post_init__(self):
        if self.variant not in (IID, PEGGED, GENERAL):
            raise ValueError(f"unknown reinit variant {self.variant!r}")
        if self.sampler_up is None or self.sampler_down is None:
            raise ValueError("both sampler_up and sampler_down are required")
        if self.variant == PEGGED:
            for beta in (self.pegged_beta_bid, self.pegged_beta_ask):
                if not (0 <= beta < 1):
                    raise ValueError(f"pegged betas must lie in [0, 1), got {beta}")
        if self.variant == GENERAL and self.g is None:
            raise ValueError("variant 'general' requires g")

    def draw(self, side, pre_bid, pre_ask, rng):
        """Redraw both queues after a depletion of `side`.

        `side` is ASK_DEPLETED or BID_DEPLETED; (pre_bid, pre_ask) is the state
        just before the jump (the depleted coordinate may be <= 0 and is
        ignored by the pegged variant). Returns a strictly positive pair.
        """
        sampler = self.sampler_up if side == ASK_DEPLETED else self.sampler_down
        eps = sampler(rng)
        eps_b, eps_a = _validate_pair(eps, "reinitialization draw")
        if self.variant == IID:
            new = (eps_b, eps_a)
        elif self.variant == PEGGED:
            if side == ASK_DEPLETED:
                new = (eps_b + self.pegged_beta_bid * max(pre_bid, 0.0), eps_a)
            else:
                new = (eps_b, eps_a + self.pegged_beta_ask * max(pre_ask, 0.0))
        else:
            new = self.g((pre_bid, pre_ask), (eps_b, eps_a))
        return _validate_pair(new, "post-jump state")


def exponential_reinit(mean_bid, mean_ask):
    """IID rule with independent exponential queue draws (same law both sides)."""

    def sampler(rng):
        return (rng.exponential(mean_bid), rng.exponential(mean_ask))

    return ReinitRule(variant=IID, sampler_up=sampler, sampler_down=sampler)


def geometric_reinit(mean_bid, mean_ask):
    """IID rule drawing integer-valued queues >= 1 (geometric on {1, 2, ...})."""
    p_b = 1.0 / mean_bid
    p_a = 1.0 / mean_ask

    def sampler(rng):
        return (float(rng.geometric(p_b)), float(rng.geometric(p_a)))

    return ReinitRule(variant=IID, sampler_up=sampler, sampler_down=sampler)


@dataclass(frozen=True)
class Jump:
    """One boundary jump: when, which side depleted, and the redrawn state."""

    tau: float
    side: str
    post_state: tuple


@dataclass(frozen=True)
class RegulatedPath:
    """A path confined to the positive quadrant by jump reinitialization.

    samples is an (n, 3) float array of rows (time, q_bid, q_ask); the stored
    value at a jump time is the post-jump state. jumps records (tau, side,
    post_state) in time order.
    """

    samples: np.ndarray
    jumps: tuple = field(default_factory=tuple)

    @property
    def times(self):
        return self.samples[:, 0]

    @property
    def q_bid(self):
        return self.samples[:, 1]

    @property
    def q_ask(self):
        return self.samples[:, 2]


@dataclass(frozen=True)
class PricePath:
    """Piecewise-constant price in ticks; steps rows are (time, price_ticks)."""

    steps: np.ndarray

    @property
    def times(self):
        return self.steps[:, 0]

    @property
    def price_ticks(self):
        return self.steps[:, 1].astype(np.int64)


def apply_event(book, ev, rule, rng):
    """Apply one event to the book, redrawing both queues on depletion.

    Returns the new BookState. If the affected queue stays strictly positive
    the other queue and the price are untouched; if the event drives it to
    zero or below, the price moves one tick against the depleted side, the
    event is consumed, and both queues are redrawn via `rule`.
    """
    if not isinstance(ev, OrderEvent):
        ev = OrderEvent(*ev)
    if ev.side == BID:
        q = book.q_bid + ev.delta
        if q > 0:
            return BookState(book.bid_price_ticks, book.tick, q, book.q_ask)
        new_b, new_a = rule.draw(BID_DEPLETED, q, book.q_ask, rng)
        return BookState(book.bid_price_ticks - 1, book.tick, new_b, new_a)
    q = book.q_ask + ev.delta
    if q > 0:
        return BookState(book.bid_price_ticks, book.tick, book.q_bid, q)
    new_b, new_a = rule.draw(ASK_DEPLETED, book.q_bid, q, rng)
    return BookState(book.bid_price_ticks + 1, book.tick, new_b, new_a)


def regulate(times, values, rule, rng):
    """Regulate a sampled planar path into the positive quadrant.

    Parameters
    ----------
    times : (n,) array of non-decreasing sample times.
    values : (n, 2) array, the unregulated path sampled at `times`
        (column 0 = bid coordinate, column 1 = ask). The first sample must be
        strictly inside the positive quadrant.
    rule, rng : reinitialization rule and the generator feeding its draws.

    The output follows the input increments exactly between jumps. A sample
    whose bid or ask coordinate is <= 0 triggers a jump at that sample time:
    the side is whichever coordinate reached <= 0 (ask wins the measure-zero
    tie, deterministically), and the stored sample is the redrawn state.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != 2 or len(times) != len(values):
        raise ValueError("values must be (n, 2) with one row per time")
    if len(times) == 0:
        raise ValueError("empty path")
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be non-decreasing")
    b0, a0 = values[0]
    if not (b0 > 0 and a0 > 0):
        raise ValueError(f"path must start strictly inside the quadrant, got ({b0}, {a0})")

    out = np.empty_like(values)
    out[0] = values[0]
    jumps = []
    off_b = 0.0
    off_a = 0.0
    for i in range(1, len(times)):
        qb = values[i, 0] + off_b
        qa = values[i, 1] + off_a
        if qa <= 0 or qb <= 0:
            if qa <= 0 and qb <= 0:
                # Both down at the same sample: charge the deeper breach,
                # exact ties to the ask side.
                side = ASK_DEPLETED if qa <= qb else BID_DEPLETED
            else:
                side = ASK_DEPLETED if qa <= 0 else BID_DEPLETED
            new_b, new_a = rule.draw(side, qb, qa, rng)
            jumps.append(Jump(float(times[i]), side, (new_b, new_a)))
            off_b = new_b - values[i, 0]
            off_a = new_a - values[i, 1]
            qb, qa = new_b, new_a
        out[i, 0] = qb
        out[i, 1] = qa
    samples = np.column_stack([times, out])
    return RegulatedPath(samples=samples, jumps=tuple(jumps))


def replay(events, initial, rule, rng):
    """Fold `apply_event` over an event stream.

    Parameters
    ----------
    events : sequence of OrderEvent (or (time, side, delta) triples), sorted
        by time, or a columnar (times, sides, deltas) triple with sides given
        as an integer array (0 = bid, 1 = ask).
    initial : BookState strictly inside the quadrant.
    rule, rng : reinitialization rule and generator.

    Returns (RegulatedPath, PricePath). The regulated path has the initial
    state at time 0.0 followed by one sample per event; the price path starts
    at the initial bid price and records one step per price change. The jump
    count always equals the price-change count.
    """
    if not (initial.q_bid > 0 and initial.q_ask > 0):
        raise ValueError("initial book must have strictly positive queues")
    times, sides, deltas = _as_columns(events)
    if np.any(np.diff(times) < 0):
        k = int(np.argmax(np.diff(times) < 0)) + 1
        raise ValueError(f"events not sorted by time (first regression at index {k})")

    n = len(times)
    samples = np.empty((n + 1, 3))
    samples[0] = (0.0, initial.q_bid, initial.q_ask)
    jumps = []
    price_steps = [(0.0, float(initial.bid_price_ticks))]

    q_bid = initial.q_bid
    q_ask = initial.q_ask
    ticks = initial.bid_price_ticks
    for i in range(n):
        delta = deltas[i]
        t = times[i]
        if sides[i] == 0:
            q = q_bid + delta
            if q > 0:
                q_bid = q
            else:
                q_bid, q_ask = rule.draw(BID_DEPLETED, q, q_ask, rng)
                ticks -= 1
                jumps.append(Jump(t, BID_DEPLETED, (q_bid, q_ask)))
                price_steps.append((t, float(ticks)))
        else:
            q = q_ask + delta
            if q > 0:
                q_ask = q
            else:
                q_bid, q_ask = rule.draw(ASK_DEPLETED, q_bid, q, rng)
                ticks += 1
                jumps.append(Jump(t, ASK_DEPLETED, (q_bid, q_ask)))
                price_steps.append((t, float(ticks)))
        samples[i + 1] = (t, q_bid, q_ask)

    path = RegulatedPath(samples=samples, jumps=tuple(jumps))
    prices = PricePath(steps=np.array(price_steps))
    return path, prices


def price_from_hits(path, start_ticks):
    """Price path implied by a RegulatedPath's jump record alone.

    The price at time t is ``start_ticks + #(ask jumps <= t) - #(bid jumps <= t)``.
    """
    steps = [(path.times[0] if len(path.samples) else 0.0, float(start_ticks))]
    ticks = int(start_ticks)
    for j in path.jumps:
        ticks += 1 if j.side == ASK_DEPLETED else -1
        steps.append((j.tau, float(ticks)))
    return PricePath(steps=np.array(steps))


def _as_columns(events):
    """Normalize an event stream to (times, sides01, deltas) float/int arrays."""
    if isinstance(events, tuple) and len(events) == 3:
        times, sides, deltas = events
        times = np.asarray(times, dtype=float)
        sides = np.asarray(sides)
        deltas = np.asarray(deltas, dtype=float)
        if sides.dtype.kind in "US":
            bad = ~np.isin(sides, (BID, ASK))
            if np.any(bad):
                raise ValueError(f"unknown side {sides[np.argmax(bad)]!r}")
            sides = (sides == ASK).astype(np.int8)
        else:
            sides = sides.astype(np.int8)
            if np.any((sides != 0) & (sides != 1)):
                raise ValueError("integer sides must be 0 (bid) or 1 (ask)")
        if np.any(deltas == 0):
            k = int(np.argmax(deltas == 0))
            raise ValueError(f"zero delta at event index {k}")
        if np.any(times < 0) or not np.all(np.isfinite(times)):
            raise ValueError("event times must be finite and >= 0")
        return times, sides, deltas
    times = np.array([e.time for e in events], dtype=float)
    sides = np.array([0 if e.side == BID else 1 for e in events], dtype=np.int8)
    deltas = np.array([e.delta for e in events], dtype=float)
    return times, sides, deltas


def events_to_list(times, sides, deltas):
    """Columnar stream -> list of OrderEvent (sides as 0/1 or 'bid'/'ask')."""
    sides = np.asarray(sides)
    if sides.dtype.kind in "US":
        names = sides
    else:
        names = np.where(np.asarray(sides).astype(int) == 0, BID, ASK)
    return [
        OrderEvent(float(t), str(s), float(d))
        for t, s, d in zip(np.asarray(times, dtype=float), names, np.asarray(deltas, dtype=float))
    ]
