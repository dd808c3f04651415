"""Domain types shared by the analytic and simulation layers.

Time is a 64-bit float in normalized units: energy arrives as a Poisson
process of rate 1, transmissions are instantaneous, and the sensor's
battery stores at most one energy unit. Age of information (AoI) of a
source grows at slope 1 and drops to 0 exactly when one of its updates
is successfully received.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class Feedback(str, Enum):
    """Whether the sensor learns the fate of each transmission."""

    NOFB = "nofb"
    WFB = "wfb"


class Scheduler(str, Enum):
    """How attempts are assigned to sources when M >= 2."""

    SINGLE = "single"
    ROUND_ROBIN = "rr"
    MAX_AGE_FIRST = "maf"


class Regime(str, Enum):
    """Structure of an optimal single-source policy."""

    THRESHOLD = "threshold"
    GREEDY = "greedy"


def _check_probability(q: float) -> float:
    # q = 1 makes every AoI formula diverge; q = 0 is a valid degenerate case
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must satisfy 0 <= q < 1, got {q!r}")
    return float(q)


@dataclass(frozen=True, slots=True)
class ChannelSpec:
    """Erasure channel with Poisson energy arrivals of normalized rate 1."""

    q: float
    rate: float = 1.0

    def __post_init__(self) -> None:
        _check_probability(self.q)
        if self.rate != 1.0:
            raise ValueError("energy arrival rate is normalized to 1")


@dataclass(slots=True)
class BatteryState:
    """Unit-capacity battery; an arrival at a full battery is lost."""

    level: int = 0

    def __post_init__(self) -> None:
        if self.level not in (0, 1):
            raise ValueError("battery level must be 0 or 1")

    def harvest(self) -> bool:
        """Absorb one energy arrival. Returns False if it overflowed."""
        if self.level == 1:
            return False
        self.level = 1
        return True

    def discharge(self) -> None:
        """Spend the stored unit on a transmission."""
        if self.level != 1:
            raise RuntimeError("transmission attempted with an empty battery")
        self.level = 0


@dataclass(slots=True)
class SourceState:
    """Destination-side view of one source."""

    source_id: int
    last_success_time: float = 0.0
    success_count: int = 0

    def aoi(self, t: float) -> float:
        age = t - self.last_success_time
        if age < 0:
            raise ValueError("clock ran backwards past the last success")
        return age

    def record_success(self, t: float) -> None:
        if t < self.last_success_time:
            raise ValueError("success time precedes the previous one")
        self.last_success_time = t
        self.success_count += 1


_VALID_PAIRS = {
    Feedback.NOFB: (Scheduler.SINGLE, Scheduler.ROUND_ROBIN),
    Feedback.WFB: (Scheduler.SINGLE, Scheduler.MAX_AGE_FIRST),
}


@dataclass(frozen=True, slots=True)
class PolicySpec:
    """Policy family: threshold gamma (0 encodes greedy) plus scheduler.

    Without feedback the sensor cannot react to erasures, so its attempts
    follow the fixed round-robin order; with feedback it retransmits the
    same source greedily until success and picks the next source by
    maximum age.
    """

    feedback: Feedback
    scheduler: Scheduler
    gamma: float

    def __post_init__(self) -> None:
        feedback = Feedback(self.feedback)
        scheduler = Scheduler(self.scheduler)
        object.__setattr__(self, "feedback", feedback)
        object.__setattr__(self, "scheduler", scheduler)
        if not (math.isfinite(self.gamma) and self.gamma >= 0.0):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma!r}")
        if scheduler not in _VALID_PAIRS[feedback]:
            raise ValueError(f"scheduler {scheduler.value} is invalid for {feedback.value}")


@dataclass(frozen=True, slots=True)
class EpochRecord:
    """One renewal cycle of one source.

    y is the time between two consecutive successful deliveries, R the AoI
    area accumulated over it, attempts the number of transmissions this
    source made inside the cycle.
    """

    source_id: int
    y: float
    R: float
    attempts: int

    def __post_init__(self) -> None:
        if self.y <= 0.0:
            raise ValueError("epoch length must be positive")
        if self.R < 0.0:
            raise ValueError("AoI area cannot be negative")
        if self.attempts < 1:
            raise ValueError("an epoch ends with a success, so attempts >= 1")


@dataclass(frozen=True, slots=True)
class AnalyticSolution:
    """Solved single-source problem: optimal AoI and the threshold achieving it."""

    regime: Regime
    lambda_star: float
    threshold: float
    q: float
    M: int = 1

    def __post_init__(self) -> None:
        if (self.regime is Regime.GREEDY) != (self.threshold == 0.0):
            raise ValueError("greedy regime means threshold 0 and vice versa")
        if self.lambda_star < 0.0 or self.threshold < 0.0:
            raise ValueError("AoI and threshold are nonnegative")


@dataclass(frozen=True, slots=True)
class SimResult:
    """Aggregated output of one simulation run."""

    per_source_mean: tuple[float, ...]
    per_source_ci: tuple[float, ...]
    mean_aoi: float
    ci_half_width: float
    arrivals: int
    overflows: int
    attempts: int
    successes: int
    epochs_per_source: int
    seed: int

    def __post_init__(self) -> None:
        if any(m < 0.0 for m in self.per_source_mean):
            raise ValueError("per-source mean AoI cannot be negative")
        if not self.successes <= self.attempts <= self.arrivals - self.overflows:
            raise ValueError("counters violate successes <= attempts <= arrivals - overflows")


def aoi_area_increment(a_start: float, duration: float) -> float:
    """AoI area under a unit-slope segment starting at age a_start.

    Additive over partitions of an interval, which is what makes it usable
    as the simulator's accumulation primitive.
    """
    if a_start < 0.0 or duration < 0.0:
        raise ValueError("a_start and duration must be nonnegative")
    return a_start * duration + 0.5 * duration * duration
