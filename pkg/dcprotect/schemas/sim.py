"""
Simulation Schemas
Scenarios, engine configuration and timing reports
"""
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from dcprotect.schemas.goose import BusConfig, RetransmitSchedule
from dcprotect.schemas.grid import Contingency, FaultSpec
from dcprotect.schemas.settings import RelayTimeSettings


class WaveformSource(str, Enum):
    BUILTIN_SOLVER = "builtin_solver"
    FIXTURE_TABLE = "fixture_table"


class Scheme(str, Enum):
    ADAPTIVE = "adaptive"
    BASELINE = "baseline"


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1)
    contingency: Contingency = Contingency()
    fault: FaultSpec
    fault_time: float = Field(default=0.01, ge=0)
    adjacent_failure: FrozenSet[str] = frozenset()
    breaker_failure: FrozenSet[str] = frozenset()
    duration: float = Field(default=0.5, gt=0)
    sample_step: float = Field(default=1e-4, gt=0)
    row: Optional[str] = None
    column: Optional[str] = None

    @model_validator(mode="after")
    def check_times(self) -> "Scenario":
        if self.fault_time >= self.duration:
            raise ValueError(f"fault_time {self.fault_time} must be before the end of the run ({self.duration})")
        return self


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    bus: BusConfig = BusConfig()
    schedule: RetransmitSchedule = RetransmitSchedule()
    times: RelayTimeSettings = RelayTimeSettings()
    waveform_source: WaveformSource = WaveformSource.BUILTIN_SOLVER
    rng_seed: int = Field(default=0, ge=0)
    pickup_persistence: int = Field(default=3, ge=1)
    drop_ratio: float = Field(default=0.95, gt=0, le=1)
    baseline_curve: str = "iec_standard_inverse"
    baseline_time_multiplier: float = Field(default=0.025, ge=0.025, le=1.5)
    report_relay: str = "R12"
    early_stop: bool = True

    @property
    def failure_window(self) -> float:
        """Time a picked-up relay waits for neighbour evidence before presuming a protection failure"""
        first_retransmit = self.schedule.burst_intervals[0] if self.schedule.burst_intervals else 0.0
        return 2.0 * self.bus.max_latency + first_retransmit

    @property
    def staleness_window(self) -> float:
        """Age past which a neighbour status counts as nothing heard: two missed heartbeats"""
        return 2.0 * self.schedule.heartbeat_interval + self.bus.max_latency

    @classmethod
    def from_settings(cls, **overrides) -> "SimConfig":
        from dcprotect.config import settings
        values = dict(
            bus=BusConfig.from_settings(),
            schedule=RetransmitSchedule.from_settings(),
            times=RelayTimeSettings.from_settings(),
            rng_seed=settings.seed,
            pickup_persistence=settings.pickup_persistence,
            drop_ratio=settings.drop_ratio,
            baseline_curve=settings.baseline_curve,
            baseline_time_multiplier=settings.baseline_time_multiplier,
            report_relay=settings.report_relay,
        )
        values.update(overrides)
        return cls(**values)


class EventRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    time_ns: int
    actor: str
    kind: str
    detail: str = ""

    def render(self) -> str:
        line = f"{self.time_ns} {self.actor} {self.kind}"
        return f"{line} {self.detail}" if self.detail else line


def _seconds(ns: Optional[int]) -> Optional[float]:
    return None if ns is None else ns / 1e9


class RelayTiming(BaseModel):
    """Nanoseconds from fault inception; None is N/D"""
    model_config = ConfigDict(frozen=True)

    pickup_ns: Optional[int] = None
    trip_command_ns: Optional[int] = None
    fault_clear_ns: Optional[int] = None

    @model_validator(mode="after")
    def check_order(self) -> "RelayTiming":
        present = [t for t in (self.pickup_ns, self.trip_command_ns, self.fault_clear_ns) if t is not None]
        if any(b < a for a, b in zip(present, present[1:])):
            raise ValueError("timings must satisfy pickup <= trip_command <= fault_clear")
        return self

    @computed_field
    @property
    def pickup(self) -> Optional[float]:
        return _seconds(self.pickup_ns)

    @computed_field
    @property
    def trip_command(self) -> Optional[float]:
        return _seconds(self.trip_command_ns)

    @computed_field
    @property
    def fault_clear(self) -> Optional[float]:
        return _seconds(self.fault_clear_ns)

    @property
    def tripped(self) -> bool:
        return self.trip_command_ns is not None


class WaveformSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    time: float
    relay: str
    amperes: float


class SchemeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: Scheme
    timings: Dict[str, RelayTiming] = {}
    events: Tuple[EventRecord, ...] = ()
    fault_isolated_ns: Optional[int] = None
    end_ns: int = 0
    frames_published: int = 0
    frames_delivered: int = 0
    trace: Tuple[WaveformSample, ...] = ()
    frame_capture: str = ""

    def timing(self, relay: str) -> RelayTiming:
        return self.timings.get(relay, RelayTiming())


class TimingReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: str
    adaptive: SchemeReport
    baseline: SchemeReport
    waveform_source: WaveformSource = WaveformSource.BUILTIN_SOLVER

    def scheme(self, scheme: Scheme) -> SchemeReport:
        return self.adaptive if scheme == Scheme.ADAPTIVE else self.baseline


class ComparisonRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: str
    row: Optional[str] = None
    column: Optional[str] = None
    adaptive: Optional[RelayTiming] = None
    baseline: Optional[RelayTiming] = None
    error: Optional[str] = None


class ComparisonTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    relay: str
    rows: List[ComparisonRow] = []
    text: str = ""
