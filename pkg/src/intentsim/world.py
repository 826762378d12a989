"""World state for the delivery simulation: grid, riders, orders.

Movement uses the Manhattan metric with x-before-y axis priority. Order
lifecycle is pending -> assigned -> picked_up -> delivered; the order book
keeps every order ever created so conservation can be checked at any tick.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field

from . import personas
from .config import SimConfig

PENDING = "pending"
ASSIGNED = "assigned"
PICKED_UP = "picked_up"
DELIVERED = "delivered"


@dataclass(frozen=True)
class Position:
    x: int
    y: int


def manhattan(a: Position, b: Position) -> int:
    return abs(a.x - b.x) + abs(a.y - b.y)


def move_toward(pos: Position, target: Position, max_dist: int) -> Position:
    """Advance from ``pos`` toward ``target`` by at most ``max_dist`` grid units.

    Budget is spent along x first, then y; reaches ``target`` exactly whenever
    the Manhattan distance fits in the budget.
    """
    budget = max_dist
    dx = target.x - pos.x
    step_x = max(-budget, min(budget, dx))
    budget -= abs(step_x)
    dy = target.y - pos.y
    step_y = max(-budget, min(budget, dy))
    return Position(pos.x + step_x, pos.y + step_y)


@dataclass
class Order:
    id: int
    pickup: Position
    dropoff: Position
    payment: float
    created_tick: int
    state: str = PENDING
    rider_id: int | None = None
    delivered_tick: int | None = None


@dataclass
class RiderState:
    id: int
    persona: str
    position: Position
    shift_start: int
    shift_end: int
    held_orders: list[int] = field(default_factory=list)
    earnings: float = 0.0
    labor_cost: float = 0.0
    orders_completed: int = 0
    distance_ridden: int = 0
    at_work: bool = False
    # Per-day bookkeeping used for rankings and cost accrual.
    ticks_worked_today: int = 0
    day_mark_distance: int = 0
    day_mark_earnings: float = 0.0
    day_mark_orders: int = 0
    yesterday_distance: int = 0
    yesterday_earnings: float = 0.0
    yesterday_orders: int = 0


@dataclass
class WorldState:
    config: SimConfig
    tick: int
    riders: list[RiderState]
    order_book: dict[int, Order]
    pending_ids: set[int]
    rng: random.Random
    next_order_id: int = 0

    @property
    def day(self) -> int:
        return self.tick // self.config.steps_per_day

    def rider(self, rider_id: int) -> RiderState:
        return self.riders[rider_id]


def shift_active(shift_start: int, shift_end: int, tick_of_day: int, steps_per_day: int) -> bool:
    """Whether a tick falls inside the [start, end) working window.

    Shifts with start == end mean the rider does not work; start > end wraps
    past midnight. Comparison is exact integer arithmetic: a tick's hour point
    is tick_of_day * 24 / steps_per_day.
    """
    if shift_start == shift_end:
        return False
    t24 = tick_of_day * 24
    lo = shift_start * steps_per_day
    hi = shift_end * steps_per_day
    if shift_start < shift_end:
        return lo <= t24 < hi
    return t24 >= lo or t24 < hi


def init_world(config: SimConfig) -> WorldState:
    """Create the tick-0 world: seeded riders, personas, empty order book."""
    config.validate()
    rng = random.Random(config.seed)
    riders: list[RiderState] = []
    for rider_id in range(config.n_riders):
        persona = personas.make_persona(rider_id, rng)
        x = rng.randrange(config.grid_size)
        y = rng.randrange(config.grid_size)
        start, end = personas.draw_initial_shift(rng)
        riders.append(
            RiderState(
                id=rider_id,
                persona=persona,
                position=Position(x, y),
                shift_start=start,
                shift_end=end,
            )
        )
    return WorldState(
        config=config,
        tick=0,
        riders=riders,
        order_book={},
        pending_ids=set(),
        rng=rng,
    )


def poisson_draw(rng: random.Random, rate: float) -> int:
    """Seeded Poisson sample (Knuth's product method)."""
    if rate <= 0:
        return 0
    limit = math.exp(-rate)
    count = 0
    product = rng.random()
    while product > limit:
        count += 1
        product *= rng.random()
    return count


def is_peak_tick(tick_of_day: int, config: SimConfig) -> bool:
    """Within +/-5 ticks (circularly) of any configured peak."""
    spd = config.steps_per_day
    for peak in config.peak_ticks_per_day:
        delta = abs(tick_of_day - peak)
        if min(delta, spd - delta) <= 5:
            return True
    return False


def generate_orders(tick: int, world: WorldState) -> list[Order]:
    """Draw this tick's new orders and append them to the book as pending."""
    config = world.config
    if tick != world.tick:
        raise ValueError(f"generate_orders tick {tick} != world tick {world.tick}")
    rate = config.base_order_rate
    if is_peak_tick(tick % config.steps_per_day, config):
        rate *= config.peak_multiplier
    count = poisson_draw(world.rng, rate)
    lo, hi = config.payment_range
    created: list[Order] = []
    for _ in range(count):
        order = Order(
            id=world.next_order_id,
            pickup=Position(
                world.rng.randrange(config.grid_size),
                world.rng.randrange(config.grid_size),
            ),
            dropoff=Position(
                world.rng.randrange(config.grid_size),
                world.rng.randrange(config.grid_size),
            ),
            payment=round(world.rng.uniform(lo, hi), 2),
            created_tick=tick,
        )
        world.next_order_id += 1
        world.order_book[order.id] = order
        world.pending_ids.add(order.id)
        created.append(order)
    return created


def assign_orders(
    world: WorldState,
    rider_id: int,
    selection: list[int],
    offered_ids: list[int],
    writer=None,
) -> WorldState:
    """Apply one rider's order selection, tolerating malformed choices.

    Ids outside the offered list are rejected; surviving picks are processed
    in offered order and truncated once the rider reaches the hold cap. The
    outcome (accepted / rejected / truncated) is logged as a decision event.
    """
    if not 0 <= rider_id < len(world.riders):
        raise ValueError(f"unknown rider {rider_id}")
    rider = world.riders[rider_id]
    cap = world.config.order_cap
    selected = list(selection)
    offered_set = set(offered_ids)
    rejected = [oid for oid in selected if oid not in offered_set or oid not in world.pending_ids]
    valid_in_offer_order = [
        oid for oid in offered_ids if oid in selected and oid not in rejected
    ]
    accepted: list[int] = []
    truncated: list[int] = []
    for oid in valid_in_offer_order:
        if len(rider.held_orders) >= cap:
            truncated.append(oid)
            continue
        order = world.order_book[oid]
        order.state = ASSIGNED
        order.rider_id = rider_id
        world.pending_ids.discard(oid)
        rider.held_orders.append(oid)
        accepted.append(oid)
    if writer is not None:
        writer.emit(
            "decision",
            world.tick,
            {
                "agent": rider_id,
                "decision": "order_selection",
                "offered": list(offered_ids),
                "selected": selected,
                "accepted": accepted,
                "rejected": rejected,
                "truncated": truncated,
            },
        )
        for oid in accepted:
            writer.emit(
                "order_event",
                world.tick,
                {"event": "assigned", "order": oid, "agent": rider_id},
            )
    return world


def world_digest(world: WorldState) -> str:
    """Content digest of the full world, including the generator state."""
    riders = [
        {
            "id": r.id,
            "persona": r.persona,
            "pos": [r.position.x, r.position.y],
            "shift": [r.shift_start, r.shift_end],
            "held": list(r.held_orders),
            "earnings": round(r.earnings, 6),
            "labor_cost": round(r.labor_cost, 6),
            "orders_completed": r.orders_completed,
            "distance": r.distance_ridden,
        }
        for r in world.riders
    ]
    orders = [
        {
            "id": o.id,
            "pickup": [o.pickup.x, o.pickup.y],
            "dropoff": [o.dropoff.x, o.dropoff.y],
            "payment": o.payment,
            "created": o.created_tick,
            "state": o.state,
            "rider": o.rider_id,
            "delivered": o.delivered_tick,
        }
        for o in sorted(world.order_book.values(), key=lambda o: o.id)
    ]
    rng_state = hashlib.sha256(repr(world.rng.getstate()).encode()).hexdigest()
    blob = json.dumps(
        {"tick": world.tick, "riders": riders, "orders": orders, "rng": rng_state},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
