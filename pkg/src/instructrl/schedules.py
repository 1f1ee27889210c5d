"""Regularization-weight schedules.

Desk-scale runs rescale the annealing period in proportion to their total
update budget; the factory functions below encode the reference ratios
(halving one fifth of the way through for the value learner; for the
PPO-style learner a linear decrement of 0.008 per fifteenth of the budget
down to a 0.01 floor).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class LambdaSchedule:
    kind: str                  # constant | halving | linear
    initial: float
    period: int = 1            # updates between anneal events
    delta: float = 0.0         # linear only
    floor: float = 0.0         # linear only

    def __post_init__(self):
        if self.kind not in ("constant", "halving", "linear"):
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if self.initial < 0:
            raise ConfigError("lambda must be non-negative")
        if self.kind != "constant" and self.period < 1:
            raise ConfigError("period must be >= 1")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "initial": self.initial,
            "period": self.period,
            "delta": self.delta,
            "floor": self.floor,
        }

    @staticmethod
    def from_json(data: dict) -> "LambdaSchedule":
        return LambdaSchedule(
            kind=data["kind"],
            initial=float(data["initial"]),
            period=int(data.get("period", 1)),
            delta=float(data.get("delta", 0.0)),
            floor=float(data.get("floor", 0.0)),
        )


def constant(value: float) -> LambdaSchedule:
    return LambdaSchedule(kind="constant", initial=value)


def halving(initial: float, period: int) -> LambdaSchedule:
    return LambdaSchedule(kind="halving", initial=initial, period=period)


def linear(initial: float, delta: float, period: int, floor: float) -> LambdaSchedule:
    return LambdaSchedule(kind="linear", initial=initial, period=period, delta=delta, floor=floor)


def anneal_lambda(schedule: LambdaSchedule, update_index: int) -> float:
    """Regularization weight in effect at a given update."""
    if schedule.kind == "constant":
        return schedule.initial
    events = update_index // schedule.period
    if schedule.kind == "halving":
        return schedule.initial * 0.5**events
    return max(schedule.floor, schedule.initial - schedule.delta * events)


def value_learner_default_schedule(total_updates: int, initial: float = 0.15) -> LambdaSchedule:
    return halving(initial, max(1, total_updates // 5))


def ppo_default_schedule(total_updates: int, initial: float = 0.05) -> LambdaSchedule:
    return linear(initial, 0.008, max(1, total_updates // 15), 0.01)
