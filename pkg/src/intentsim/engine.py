"""Discrete-step simulation loop.

Each tick runs, in order: day-start work-hours decisions (with yesterday's
rankings in context), order generation, order selection for at-work riders
below the hold cap, movement toward the earliest-held order's objective
with pickup/delivery state flips, and wage accrual. Every per-rider phase
iterates in ascending rider id so a run is a pure function of (config,
backend); traces from two identical runs match byte for byte.
"""

from __future__ import annotations

import dataclasses
import heapq
from collections import deque
from dataclasses import dataclass

from .backends.types import DecisionContext, OfferedOrder, ThoughtPair
from .config import SimConfig, config_digest
from .errors import BackendError, DecisionParseError
from .trace import TraceWriter
from .world import (
    ASSIGNED,
    DELIVERED,
    PICKED_UP,
    WorldState,
    assign_orders,
    generate_orders,
    init_world,
    manhattan,
    move_toward,
    shift_active,
    world_digest,
)

OFFER_LIMIT = 10
MEMORY_WINDOW = 50


@dataclass
class DayStats:
    """Yesterday's rankings, recomputed at the start of every day."""

    distance_rank: dict[int, int]
    earnings_rank: dict[int, int]
    orders_rank: dict[int, int]
    leader_id: int
    leader_shift: tuple[int, int]


def _rank(values: dict[int, float]) -> dict[int, int]:
    # Rank 1 is the highest value; ties resolve to the lower rider id.
    ordered = sorted(values.items(), key=lambda kv: (-kv[1], kv[0]))
    return {rider_id: idx + 1 for idx, (rider_id, _) in enumerate(ordered)}


def _stats_from_yesterday(world: WorldState) -> DayStats:
    riders = world.riders
    if not riders:
        return DayStats({}, {}, {}, leader_id=-1, leader_shift=(0, 0))
    distance_rank = _rank({r.id: float(r.yesterday_distance) for r in riders})
    earnings_rank = _rank({r.id: r.yesterday_earnings for r in riders})
    orders_rank = _rank({r.id: float(r.yesterday_orders) for r in riders})
    leader_id = next(rid for rid, rank in earnings_rank.items() if rank == 1)
    leader = world.rider(leader_id)
    return DayStats(
        distance_rank=distance_rank,
        earnings_rank=earnings_rank,
        orders_rank=orders_rank,
        leader_id=leader_id,
        leader_shift=(leader.shift_start, leader.shift_end),
    )


def _roll_over_day(world: WorldState) -> DayStats:
    """Close out yesterday's per-rider totals and return fresh rankings."""
    for r in world.riders:
        r.yesterday_distance = r.distance_ridden - r.day_mark_distance
        r.yesterday_earnings = r.earnings - r.day_mark_earnings
        r.yesterday_orders = r.orders_completed - r.day_mark_orders
        r.day_mark_distance = r.distance_ridden
        r.day_mark_earnings = r.earnings
        r.day_mark_orders = r.orders_completed
    return _stats_from_yesterday(world)


class SimulationSession:
    """Cross-tick state that is not part of the world proper."""

    def __init__(
        self,
        world: WorldState,
        backend,
        writer: TraceWriter | None,
        inspector: bool = True,
    ):
        self.world = world
        self.backend = backend
        self.writer = writer
        self.inspector = inspector
        self.stats: DayStats | None = None
        self.memories: dict[int, deque[str]] = {
            r.id: deque(maxlen=MEMORY_WINDOW) for r in world.riders
        }
        if writer is not None and hasattr(backend, "exchange_sink"):
            backend.exchange_sink = self._log_exchange

    def _log_exchange(self, agent_id: int, payload: dict) -> None:
        if self.writer is not None:
            self.writer.emit("llm_exchange", self.world.tick, {"agent": agent_id, **payload})

    def emit(self, kind: str, payload: dict) -> None:
        if self.writer is not None:
            self.writer.emit(kind, self.world.tick, payload)

    def record_thought(self, rider_id: int, decision_kind: str, pair: ThoughtPair | None) -> None:
        if pair is None:
            self.emit(
                "thought",
                {
                    "agent": rider_id,
                    "decision": decision_kind,
                    "bounded": "",
                    "rational": "",
                    "missing": True,
                },
            )
            return
        bounded = pair.bounded if self.inspector else ""
        self.emit(
            "thought",
            {
                "agent": rider_id,
                "decision": decision_kind,
                "bounded": bounded,
                "rational": pair.rational,
                "missing": False,
            },
        )
        text = (
            f"bounded: {bounded} | rational: {pair.rational}"
            if bounded
            else f"rational: {pair.rational}"
        )
        self.memories[rider_id].append(text)


def _base_context(session: SimulationSession, rider, stats: DayStats) -> DecisionContext:
    world = session.world
    return DecisionContext(
        rider_id=rider.id,
        persona=rider.persona,
        position=(rider.position.x, rider.position.y),
        yesterday_shift=(rider.shift_start, rider.shift_end),
        distance_rank=stats.distance_rank[rider.id],
        earnings_rank=stats.earnings_rank[rider.id],
        orders_rank=stats.orders_rank[rider.id],
        n_riders=world.config.n_riders,
        leader_id=stats.leader_id,
        leader_shift=stats.leader_shift,
        current_tick=world.tick,
        day=world.day,
        memory=tuple(list(session.memories[rider.id])[-5:]),
    )


def _work_hours_phase(session: SimulationSession) -> None:
    world = session.world
    stats = session.stats
    contexts = [_base_context(session, r, stats) for r in world.riders]
    try:
        results = session.backend.decide_work_hours_batch(contexts)
    except (BackendError, DecisionParseError) as exc:
        # Whole-batch failure: every rider falls back independently.
        results = [exc] * len(contexts)
    for rider, outcome in zip(world.riders, results):
        if isinstance(outcome, Exception):
            session.emit(
                "warning",
                {
                    "agent": rider.id,
                    "message": f"work-hours backend failed: {outcome}; keeping yesterday's hours",
                },
            )
            session.record_thought(rider.id, "work_hours", None)
        else:
            decision, pair = outcome
            rider.shift_start = decision.go_to_work_hour
            rider.shift_end = decision.get_off_work_hour
            session.record_thought(rider.id, "work_hours", pair)
        session.emit(
            "decision",
            {
                "agent": rider.id,
                "decision": "work_hours",
                "start": rider.shift_start,
                "end": rider.shift_end,
            },
        )


def _offer_for(world: WorldState, rider) -> list[OfferedOrder]:
    if not world.pending_ids:
        return []
    rx, ry = rider.position.x, rider.position.y
    book = world.order_book
    scored = []
    for oid in world.pending_ids:
        pickup = book[oid].pickup
        scored.append((abs(pickup.x - rx) + abs(pickup.y - ry), oid))
    offers = []
    for dist, oid in heapq.nsmallest(OFFER_LIMIT, scored):
        order = book[oid]
        offers.append(
            OfferedOrder(
                id=oid,
                pickup=(order.pickup.x, order.pickup.y),
                dropoff=(order.dropoff.x, order.dropoff.y),
                payment=order.payment,
                pickup_distance=dist,
            )
        )
    return offers


def _selection_phase(session: SimulationSession) -> None:
    world = session.world
    cap = world.config.order_cap
    for rider in world.riders:
        if not rider.at_work or len(rider.held_orders) >= cap:
            continue
        offers = _offer_for(world, rider)
        if not offers:
            continue
        ctx = dataclasses.replace(
            _base_context(session, rider, session.stats),
            capacity_left=cap - len(rider.held_orders),
            offered=tuple(offers),
        )
        try:
            selection, pair = session.backend.select_orders(ctx)
        except (BackendError, DecisionParseError) as exc:
            session.emit(
                "warning",
                {
                    "agent": rider.id,
                    "message": f"order-selection backend failed: {exc}; selecting nothing",
                },
            )
            session.record_thought(rider.id, "order_selection", None)
            continue
        session.record_thought(rider.id, "order_selection", pair)
        assign_orders(
            world,
            rider.id,
            list(selection.order_ids),
            [o.id for o in offers],
            session.writer,
        )


def _movement_phase(session: SimulationSession) -> None:
    world = session.world
    config = world.config
    for rider in world.riders:
        if not rider.at_work:
            continue
        if rider.held_orders:
            order = world.order_book[rider.held_orders[0]]
            objective = order.pickup if order.state == ASSIGNED else order.dropoff
            new_pos = move_toward(rider.position, objective, config.max_move_per_step)
            moved = manhattan(rider.position, new_pos)
            if moved:
                rider.distance_ridden += moved
                rider.position = new_pos
            if order.state == ASSIGNED and rider.position == order.pickup:
                order.state = PICKED_UP
                session.emit(
                    "order_event",
                    {"event": "picked_up", "order": order.id, "agent": rider.id},
                )
            elif order.state == PICKED_UP and rider.position == order.dropoff:
                order.state = DELIVERED
                order.delivered_tick = world.tick
                rider.earnings += order.payment
                rider.orders_completed += 1
                rider.held_orders.pop(0)
                session.emit(
                    "order_event",
                    {
                        "event": "delivered",
                        "order": order.id,
                        "agent": rider.id,
                        "payment": order.payment,
                    },
                )
        session.emit(
            "position",
            {
                "agent": rider.id,
                "x": rider.position.x,
                "y": rider.position.y,
                "held": len(rider.held_orders),
            },
        )


def _accrual_phase(session: SimulationSession) -> None:
    world = session.world
    config = world.config
    for rider in world.riders:
        if rider.at_work:
            rider.labor_cost += config.wage_rate
            rider.ticks_worked_today += 1
    if world.tick % config.steps_per_day == config.steps_per_day - 1:
        for rider in world.riders:
            if rider.ticks_worked_today:
                session.emit(
                    "cost_accrual",
                    {
                        "agent": rider.id,
                        "amount": config.wage_rate * rider.ticks_worked_today,
                        "ticks": rider.ticks_worked_today,
                    },
                )
            rider.ticks_worked_today = 0


def step_world(
    world: WorldState,
    backend,
    writer: TraceWriter | None = None,
    session: SimulationSession | None = None,
) -> WorldState:
    """Advance the world one tick. See the module docstring for phase order."""
    if world.tick >= world.config.total_steps:
        raise ValueError("simulation already ran its configured steps")
    if session is None:
        session = SimulationSession(world, backend, writer)
    config = world.config
    tick_of_day = world.tick % config.steps_per_day
    if tick_of_day == 0:
        session.stats = _roll_over_day(world)
        if world.riders:
            _work_hours_phase(session)
    elif session.stats is None:
        session.stats = _stats_from_yesterday(world)
    for rider in world.riders:
        rider.at_work = shift_active(
            rider.shift_start, rider.shift_end, tick_of_day, config.steps_per_day
        )
    created = generate_orders(world.tick, world)
    for order in created:
        session.emit(
            "order_event",
            {
                "event": "created",
                "order": order.id,
                "pickup": [order.pickup.x, order.pickup.y],
                "dropoff": [order.dropoff.x, order.dropoff.y],
                "payment": order.payment,
            },
        )
    _selection_phase(session)
    _movement_phase(session)
    _accrual_phase(session)
    world.tick += 1
    return world


def replay_simulation(trace_path, out_path) -> WorldState:
    """Re-run a scripted-backend trace from its recorded config.

    With scripted backends the rerun reproduces the original file byte for
    byte; callers compare the two paths to prove it.
    """
    from .backends.scripted import scripted_from_descriptor
    from .trace import load_trace

    log = load_trace(trace_path)
    start = log.events[0]
    config = SimConfig.from_dict(start.payload["config"])
    backend = scripted_from_descriptor(start.payload["backend"])
    return run_simulation(
        config,
        backend,
        out_path,
        inspector=start.payload.get("inspector", True),
        created=log.header.created,
    )


def run_simulation(
    config: SimConfig,
    backend,
    trace_path,
    *,
    inspector: bool = True,
    created: str | None = None,
    world: WorldState | None = None,
) -> WorldState:
    """Run the full configured horizon, writing the event trace."""
    if world is None:
        world = init_world(config)
    digest = config_digest(config)
    with TraceWriter(trace_path, digest, config.seed, created) as writer:
        writer.emit(
            "sim_start",
            0,
            {
                "config": config.to_dict(),
                "backend": backend.describe(),
                "inspector": inspector,
                "rider_start": {
                    str(r.id): [r.position.x, r.position.y] for r in world.riders
                },
            },
        )
        session = SimulationSession(world, backend, writer, inspector=inspector)
        while world.tick < config.total_steps:
            step_world(world, backend, writer, session=session)
        writer.emit(
            "sim_end",
            world.tick,
            {
                "orders_created": world.next_order_id,
                "riders": {
                    str(r.id): {
                        "earnings": round(r.earnings, 6),
                        "labor_cost": round(r.labor_cost, 6),
                        "orders_completed": r.orders_completed,
                        "distance_ridden": r.distance_ridden,
                        "x": r.position.x,
                        "y": r.position.y,
                    }
                    for r in world.riders
                },
                "world_digest": world_digest(world),
            },
        )
    return world
