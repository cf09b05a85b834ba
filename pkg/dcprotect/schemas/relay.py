"""
Relay Schemas
"""
from enum import Enum
from typing import FrozenSet, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class RelayState(str, Enum):
    IDLE = "idle"
    PICKED_UP = "picked_up"
    DELAY_PENDING = "delay_pending"
    TRIPPED = "tripped"


class DecisionKind(str, Enum):
    INSTANT_TRIP = "instant_trip"
    DELAYED_TRIP = "delayed_trip"
    WAIT = "wait"


class Decision(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: DecisionKind
    delay: Optional[float] = Field(None, ge=0, description="Seconds, delayed_trip only")
    rule: Optional[int] = Field(None, ge=1, le=3, description="Decision rule that fired (1-3)")

    @model_validator(mode="after")
    def check_delay(self) -> "Decision":
        if (self.kind == DecisionKind.DELAYED_TRIP) != (self.delay is not None):
            raise ValueError("delay is set exactly for delayed_trip decisions")
        return self

    @classmethod
    def instant(cls, rule: Optional[int]) -> "Decision":
        return cls(kind=DecisionKind.INSTANT_TRIP, rule=rule)

    @classmethod
    def delayed(cls, delay: float) -> "Decision":
        return cls(kind=DecisionKind.DELAYED_TRIP, delay=delay, rule=2)

    @classmethod
    def wait(cls) -> "Decision":
        return cls(kind=DecisionKind.WAIT)


class NeighborMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    relay: str
    opposite_adjacent: Optional[str] = None
    downstream_same_direction: FrozenSet[str] = frozenset()
    downstream_opposite_direction: FrozenSet[str] = frozenset()
    upstream_of_opposite: FrozenSet[str] = frozenset()

    @model_validator(mode="after")
    def check_self(self) -> "NeighborMap":
        if self.opposite_adjacent == self.relay:
            raise ValueError(f"{self.relay} cannot be its own opposite adjacent relay")
        for name in ("downstream_same_direction", "downstream_opposite_direction", "upstream_of_opposite"):
            if self.relay in getattr(self, name):
                raise ValueError(f"{self.relay} listed in its own {name}")
        return self

    @property
    def all_neighbors(self) -> FrozenSet[str]:
        others = self.downstream_same_direction | self.downstream_opposite_direction | self.upstream_of_opposite
        return others | ({self.opposite_adjacent} if self.opposite_adjacent else frozenset())


class NeighborStatus(BaseModel):
    """Last known status of one neighbour, as carried by its GOOSE frames"""
    picked_up: bool = False
    tripped: bool = False
    breaker_closed: bool = True
    delay_pending: bool = False
    last_update_ns: Optional[int] = None
    st_num: int = -1
    stale: bool = True


class RelayEventKind(str, Enum):
    PICKUP = "pickup"
    DROP = "drop"
    DELAY_START = "delay_start"
    DELAY_CANCEL = "delay_cancel"
    TRIP_COMMAND = "trip_command"
    GROUP_CHANGE = "group_change"


class RelayEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    relay: str
    kind: RelayEventKind
    time_ns: int
    publish: bool = False
    detail: str = ""
