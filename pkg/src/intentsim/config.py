"""Simulation configuration: defaults, validation, file parsing, digests.

The config file format is plain ``key = value`` text, one key per line,
with ``#`` comments. Keys are exactly the :class:`SimConfig` field names.
List-valued fields (``peak_ticks_per_day``, ``payment_range``) take
comma-separated values.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ConfigError

DEFAULT_PEAK_TICKS: tuple[int, ...] = (40, 60, 90)


@dataclass(frozen=True)
class SimConfig:
    """All tunables of the delivery-world simulation."""

    grid_size: int = 200
    total_steps: int = 3600
    steps_per_day: int = 120
    n_riders: int = 100
    max_move_per_step: int = 30
    order_cap: int = 3
    peak_ticks_per_day: tuple[int, ...] = DEFAULT_PEAK_TICKS
    base_order_rate: float = 3.0
    peak_multiplier: float = 3.0
    wage_rate: float = 1.0
    payment_range: tuple[float, float] = (5.0, 15.0)
    seed: int = 42

    def __post_init__(self) -> None:
        object.__setattr__(self, "peak_ticks_per_day", tuple(self.peak_ticks_per_day))
        object.__setattr__(self, "payment_range", tuple(self.payment_range))
        self.validate()

    def validate(self) -> None:
        if self.grid_size <= 0:
            raise ConfigError("grid_size", "must be > 0")
        if self.steps_per_day <= 0:
            raise ConfigError("steps_per_day", "must be > 0")
        if self.total_steps < 0 or self.total_steps % self.steps_per_day != 0:
            raise ConfigError(
                "total_steps",
                f"must be a non-negative multiple of steps_per_day ({self.steps_per_day})",
            )
        if self.n_riders < 0:
            raise ConfigError("n_riders", "must be >= 0")
        if self.max_move_per_step <= 0:
            raise ConfigError("max_move_per_step", "must be > 0")
        if self.order_cap < 1:
            raise ConfigError("order_cap", "must be >= 1")
        for p in self.peak_ticks_per_day:
            if not 0 <= p < self.steps_per_day:
                raise ConfigError(
                    "peak_ticks_per_day",
                    f"tick {p} outside [0, {self.steps_per_day})",
                )
        if self.base_order_rate < 0:
            raise ConfigError("base_order_rate", "must be >= 0")
        if self.peak_multiplier < 0:
            raise ConfigError("peak_multiplier", "must be >= 0")
        if self.wage_rate < 0:
            raise ConfigError("wage_rate", "must be >= 0")
        lo, hi = self.payment_range
        if lo < 0 or hi < lo:
            raise ConfigError("payment_range", "need 0 <= min <= max")
        if not isinstance(self.seed, int):
            raise ConfigError("seed", "must be an integer")

    @property
    def n_days(self) -> int:
        return self.total_steps // self.steps_per_day

    def to_dict(self) -> dict:
        d = asdict(self)
        d["peak_ticks_per_day"] = list(self.peak_ticks_per_day)
        d["payment_range"] = list(self.payment_range)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown config key")
        return cls(**data)


def config_digest(config: SimConfig) -> str:
    """Stable sha256 over the canonical JSON form of the config."""
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_INT_FIELDS = {
    "grid_size",
    "total_steps",
    "steps_per_day",
    "n_riders",
    "max_move_per_step",
    "order_cap",
    "seed",
}
_FLOAT_FIELDS = {"base_order_rate", "peak_multiplier", "wage_rate"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
        if key == "peak_ticks_per_day":
            return tuple(int(part.strip()) for part in raw.split(",") if part.strip())
        if key == "payment_range":
            parts = [float(part.strip()) for part in raw.split(",") if part.strip()]
            if len(parts) != 2:
                raise ConfigError(key, "expected two comma-separated numbers")
            return tuple(parts)
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse value {raw!r}") from exc
    raise ConfigError(key, "unknown config key")


def parse_config_text(text: str) -> SimConfig:
    values: dict = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError("<line>", f"line {line_no}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key in values:
            raise ConfigError(key, f"duplicated on line {line_no}")
        values[key] = _parse_value(key, raw)
    return SimConfig(**values)


def load_config(path: str | Path) -> SimConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def save_config(config: SimConfig, path: str | Path) -> None:
    lines = []
    for key, value in config.to_dict().items():
        if isinstance(value, list):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
