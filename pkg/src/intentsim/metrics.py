"""Observational reports computed from a simulation trace.

All reports are pure functions of the event stream: the daily labor cost
per delivered order (the over-competition index), rider position heat
maps, effective working hours (ticks spent holding at least one order),
and per-agent hours-vs-orders totals. Re-running any report on the same
trace yields byte-identical CSV output.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AuditError


def sim_config_from_events(events) -> dict:
    for event in events:
        if event.kind == "sim_start":
            return event.payload["config"]
    raise AuditError("trace has no sim_start event")


@dataclass
class InvolutionSeries:
    days: list[int] = field(default_factory=list)
    cost: list[float] = field(default_factory=list)
    delivered: list[int] = field(default_factory=list)
    index: list[float] = field(default_factory=list)
    flagged_days: list[int] = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["day", "cost", "orders", "index"])
        for i, day in enumerate(self.days):
            writer.writerow([day, f"{self.cost[i]:.6f}", self.delivered[i], f"{self.index[i]:.6f}"])
        return out.getvalue()


def involution_index(events) -> InvolutionSeries:
    """Daily labor cost per delivered order.

    Days with zero deliveries keep the raw cost (divisor clamped to 1) and
    are flagged rather than dropped, preserving the series length.
    """
    events = list(events)
    config = sim_config_from_events(events)
    spd = config["steps_per_day"]
    n_days = config["total_steps"] // spd
    cost = [0.0] * n_days
    delivered = [0] * n_days
    for event in events:
        day = event.tick // spd
        if day >= n_days:
            continue
        if event.kind == "cost_accrual":
            cost[day] += event.payload["amount"]
        elif event.kind == "order_event" and event.payload.get("event") == "delivered":
            delivered[day] += 1
    series = InvolutionSeries()
    for day in range(n_days):
        series.days.append(day)
        series.cost.append(cost[day])
        series.delivered.append(delivered[day])
        series.index.append(cost[day] / max(delivered[day], 1))
        if delivered[day] == 0:
            series.flagged_days.append(day)
    return series


@dataclass
class HeatmapGrid:
    window: int
    size: int
    counts: list[list[float]]
    total_events: int

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        for row in self.counts:
            writer.writerow([f"{v:g}" for v in row])
        return out.getvalue()


def position_heatmap(events, window: int, window_ticks: int, downsample: int = 1) -> HeatmapGrid:
    """Visit counts per cell over one tick window.

    ``downsample`` > 1 averages f x f blocks into one cell (the raw grid
    conserves total event mass; averaged grids trade that for compactness).
    """
    events = list(events)
    config = sim_config_from_events(events)
    size = config["grid_size"]
    counts = [[0.0] * size for _ in range(size)]
    total = 0
    lo = window * window_ticks
    hi = lo + window_ticks
    for event in events:
        if event.kind != "position" or not lo <= event.tick < hi:
            continue
        counts[event.payload["y"]][event.payload["x"]] += 1.0
        total += 1
    if downsample > 1:
        f = downsample
        reduced_size = (size + f - 1) // f
        reduced = [[0.0] * reduced_size for _ in range(reduced_size)]
        for y in range(size):
            for x in range(size):
                reduced[y // f][x // f] += counts[y][x]
        for y in range(reduced_size):
            for x in range(reduced_size):
                reduced[y][x] /= f * f
        return HeatmapGrid(window=window, size=reduced_size, counts=reduced, total_events=total)
    return HeatmapGrid(window=window, size=size, counts=counts, total_events=total)


@dataclass(frozen=True)
class HoursRow:
    agent_id: int
    total_hours_worked: float
    effective_hours: float
    total_orders: int


def effective_hours(events, day: int) -> list[HoursRow]:
    """Per-agent worked vs order-holding hours for one day."""
    events = list(events)
    config = sim_config_from_events(events)
    spd = config["steps_per_day"]
    lo, hi = day * spd, (day + 1) * spd
    worked: dict[int, int] = {}
    holding: dict[int, int] = {}
    orders: dict[int, int] = {}
    for event in events:
        if not lo <= event.tick < hi:
            continue
        if event.kind == "position":
            agent = event.payload["agent"]
            worked[agent] = worked.get(agent, 0) + 1
            if event.payload.get("held", 0) > 0:
                holding[agent] = holding.get(agent, 0) + 1
        elif event.kind == "order_event" and event.payload.get("event") == "delivered":
            agent = event.payload["agent"]
            orders[agent] = orders.get(agent, 0) + 1
    to_hours = 24.0 / spd
    rows = []
    for agent in range(config["n_riders"]):
        rows.append(
            HoursRow(
                agent_id=agent,
                total_hours_worked=worked.get(agent, 0) * to_hours,
                effective_hours=holding.get(agent, 0) * to_hours,
                total_orders=orders.get(agent, 0),
            )
        )
    return rows


def hours_vs_orders(events) -> list[tuple[int, float, int]]:
    """Whole-run (agent, hours worked, orders delivered) totals."""
    events = list(events)
    config = sim_config_from_events(events)
    spd = config["steps_per_day"]
    worked: dict[int, int] = {}
    orders: dict[int, int] = {}
    for event in events:
        if event.kind == "position":
            agent = event.payload["agent"]
            worked[agent] = worked.get(agent, 0) + 1
        elif event.kind == "order_event" and event.payload.get("event") == "delivered":
            agent = event.payload["agent"]
            orders[agent] = orders.get(agent, 0) + 1
    to_hours = 24.0 / spd
    return [
        (agent, worked.get(agent, 0) * to_hours, orders.get(agent, 0))
        for agent in range(config["n_riders"])
    ]


def hours_vs_orders_csv(rows: list[tuple[int, float, int]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["agent_id", "hours", "orders"])
    for agent, hours, orders in rows:
        writer.writerow([agent, f"{hours:.6f}", orders])
    return out.getvalue()


def effective_hours_csv(rows_by_day: dict[int, list[HoursRow]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["day", "agent_id", "total_hours", "effective_hours", "orders"])
    for day in sorted(rows_by_day):
        for row in rows_by_day[day]:
            writer.writerow(
                [
                    day,
                    row.agent_id,
                    f"{row.total_hours_worked:.6f}",
                    f"{row.effective_hours:.6f}",
                    row.total_orders,
                ]
            )
    return out.getvalue()


def write_metrics_reports(events, out_dir: str | Path, window_ticks: int = 1200, downsample: int = 4) -> list[Path]:
    """Emit the standard CSV bundle for one trace; returns written paths."""
    events = list(events)
    config = sim_config_from_events(events)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    involution_path = out / "involution.csv"
    involution_path.write_text(involution_index(events).to_csv(), encoding="utf-8")
    written.append(involution_path)

    rows = hours_vs_orders(events)
    hours_path = out / "hours_vs_orders.csv"
    hours_path.write_text(hours_vs_orders_csv(rows), encoding="utf-8")
    written.append(hours_path)

    n_days = config["total_steps"] // config["steps_per_day"]
    per_day = {day: effective_hours(events, day) for day in range(n_days)}
    effective_path = out / "effective_hours.csv"
    effective_path.write_text(effective_hours_csv(per_day), encoding="utf-8")
    written.append(effective_path)

    n_windows = max(1, (config["total_steps"] + window_ticks - 1) // window_ticks)
    for window in range(n_windows):
        grid = position_heatmap(events, window, window_ticks, downsample=downsample)
        path = out / f"heatmap_window{window}.csv"
        path.write_text(grid.to_csv(), encoding="utf-8")
        written.append(path)
    return written
