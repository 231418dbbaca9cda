"""Training configuration: step-size schedules and the trainer's knob set."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

from .errors import InputError


@dataclass(frozen=True)
class Constant:
    """Fixed step size eta in (0, 1)."""

    eta: float

    def __post_init__(self):
        if not (0.0 < self.eta < 1.0):
            raise InputError(f"constant step size must lie in (0, 1), got {self.eta}")


@dataclass(frozen=True)
class Diminishing:
    """Step size theta / t with theta in (1/2, 1]."""

    theta: float

    def __post_init__(self):
        if not (0.5 < self.theta <= 1.0):
            raise InputError(f"diminishing theta must lie in (1/2, 1], got {self.theta}")


Schedule = Constant | Diminishing


def parse_schedule(text: str) -> Schedule:
    """Parse 'constant:0.1' or 'diminishing:1.0' (CLI / config-file form)."""
    name, _, value = text.partition(":")
    if not value:
        raise InputError(f"schedule must look like 'constant:0.1' or 'diminishing:1.0', got {text!r}")
    try:
        num = float(value)
    except ValueError:
        raise InputError(f"schedule value is not a number: {text!r}") from None
    if name == "constant":
        return Constant(num)
    if name == "diminishing":
        return Diminishing(num)
    raise InputError(f"unknown schedule {name!r}; expected 'constant' or 'diminishing'")


def schedule_text(schedule: Schedule) -> str:
    if isinstance(schedule, Constant):
        return f"constant:{schedule.eta!r}"
    return f"diminishing:{schedule.theta!r}"


@dataclass(frozen=True)
class TrainConfig:
    C: float = 1.0
    epsilon: float = 0.0
    schedule: Schedule = field(default_factory=lambda: Diminishing(1.0))
    batch_size: int = 1
    block_size: int = 256
    iterations: int = 100
    master_seed: int = 0
    learn_bias: bool = False

    def __post_init__(self):
        if not (self.C > 0.0 and math.isfinite(self.C)):
            raise InputError(f"C must be a positive finite real, got {self.C}")
        if not (self.epsilon >= 0.0 and math.isfinite(self.epsilon)):
            raise InputError(f"epsilon must be a nonnegative finite real, got {self.epsilon}")
        for name in ("batch_size", "block_size", "iterations"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value >= 1):
                raise InputError(f"{name} must be a positive integer, got {value}")
        if not isinstance(self.master_seed, int):
            raise InputError(f"master_seed must be an integer, got {self.master_seed!r}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schedule"] = schedule_text(self.schedule)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        schedule = data.get("schedule", "diminishing:1.0")
        if isinstance(schedule, str):
            data["schedule"] = parse_schedule(schedule)
        return cls(**data)


def one_pass_iterations(n: int, batch_size: int) -> int:
    """Iteration count for one pass over an n-sample dataset."""
    if n < 1 or batch_size < 1:
        raise InputError("n and batch_size must be positive")
    return max(1, n // batch_size)
