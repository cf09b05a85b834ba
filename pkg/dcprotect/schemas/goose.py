"""
GOOSE Schemas
Frame, bus configuration and retransmission schedule
"""
from enum import IntEnum
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

UINT16_MAX = 2**16 - 1
UINT32_MAX = 2**32 - 1
UINT64_MAX = 2**64 - 1

GRID_STATUS_PUBLISHER = 0


class EntryKind(IntEnum):
    PICKED_UP = 1
    TRIPPED = 2
    BREAKER_CLOSED = 3
    LINE_IN_SERVICE = 4
    SOURCE_IN_SERVICE = 5
    DELAY_PENDING = 6


class DatasetEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: int = Field(..., ge=0, le=255)
    entry_id: int = Field(..., ge=0, le=UINT32_MAX)
    value: bool


class GooseFrame(BaseModel):
    model_config = ConfigDict(frozen=True)

    app_id: int = Field(default=1, ge=0, le=UINT16_MAX)
    publisher_id: int = Field(..., ge=0, le=UINT32_MAX)
    st_num: int = Field(default=1, ge=0, le=UINT32_MAX)
    sq_num: int = Field(default=0, ge=0, le=UINT32_MAX)
    timestamp: int = Field(default=0, ge=0, le=UINT64_MAX, description="Nanoseconds")
    dataset: Tuple[DatasetEntry, ...] = ()

    def values(self, kind: int) -> dict:
        """entry_id -> value for every entry of one kind"""
        return {e.entry_id: e.value for e in self.dataset if e.kind == kind}


class BusConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    base_latency: float = Field(default=66e-6, ge=0)
    jitter: float = Field(default=0.0, ge=0, description="Uniform half-width (s)")
    loss_probability: float = Field(default=0.0, ge=0, lt=1)
    security_overhead: float = Field(default=0.0, ge=0)
    rng_seed: int = Field(default=0, ge=0, le=UINT64_MAX)

    @property
    def nominal_latency(self) -> float:
        return self.base_latency + self.security_overhead

    @property
    def max_latency(self) -> float:
        return self.base_latency + self.security_overhead + self.jitter

    @classmethod
    def from_settings(cls) -> "BusConfig":
        from dcprotect.config import settings
        return cls(
            base_latency=settings.base_latency,
            jitter=settings.jitter,
            loss_probability=settings.loss_probability,
            security_overhead=settings.security_overhead,
            rng_seed=settings.seed,
        )


class RetransmitSchedule(BaseModel):
    model_config = ConfigDict(frozen=True)

    burst_intervals: Tuple[float, ...] = (1e-3, 2e-3, 4e-3, 8e-3)
    heartbeat_interval: float = Field(default=1.0, gt=0)

    @field_validator("burst_intervals")
    @classmethod
    def check_intervals(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        for interval in v:
            if interval <= 0:
                raise ValueError("retransmission intervals must be strictly positive")
        for a, b in zip(v, v[1:]):
            if b < a:
                raise ValueError("retransmission intervals must be nondecreasing")
        return v

    @property
    def offsets(self) -> Tuple[float, ...]:
        """Cumulative send offsets after the initial transmission"""
        out = []
        total = 0.0
        for interval in self.burst_intervals:
            total += interval
            out.append(total)
        return tuple(out)

    @classmethod
    def from_settings(cls) -> "RetransmitSchedule":
        from dcprotect.config import settings
        return cls(burst_intervals=tuple(settings.retransmit_intervals), heartbeat_interval=settings.heartbeat_interval)


class Delivery(BaseModel):
    model_config = ConfigDict(frozen=True)

    subscriber: str
    time_ns: int = Field(..., ge=0)
    frame: GooseFrame
