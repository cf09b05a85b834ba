"""
Settings Schemas
Inverse-time curves, breaker timing, adaptive setting groups and the
per-relay minimum fault current table they are clustered from
"""
from typing import Any, Dict, Iterator, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from dcprotect.schemas.grid import Contingency, FaultCurrent, NotDetected


class IdmtCurve(BaseModel):
    """t = T * (k / ((I/Is)^alpha - 1) + l)"""
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1)
    k: float = Field(..., gt=0)
    alpha: float = Field(..., gt=0)
    l: float = Field(default=0.0, ge=0)
    standard: Optional[str] = None
    label: Optional[str] = None


class RelayTimeSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    t_tr: float = Field(default=4e-3, ge=0, description="Trip relay delay (s)")
    t_cb_op: float = Field(default=15e-3, ge=0, description="Breaker mechanism (s)")
    t_arc: float = Field(default=5e-3, ge=0, description="Arc extinction (s)")
    t_reset: float = Field(default=5e-3, ge=0, description="Relay reset (s)")

    @property
    def clearing_time(self) -> float:
        """Trip command to current interruption"""
        return self.t_tr + self.t_cb_op + self.t_arc

    @classmethod
    def from_settings(cls) -> "RelayTimeSettings":
        from dcprotect.config import settings
        return cls(t_tr=settings.t_tr, t_cb_op=settings.t_cb_op, t_arc=settings.t_arc, t_reset=settings.t_reset)


class IdmtConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    curve: IdmtCurve
    time_multiplier: float = Field(default=0.025, ge=0.025, le=1.5)
    pickup: float = Field(..., gt=0, description="Is in amperes")


class SettingGroup(BaseModel):
    model_config = ConfigDict(frozen=True)

    group_id: int = Field(..., ge=1)
    lower_bound: float = Field(..., ge=0)
    upper_bound: float = Field(..., gt=0)
    pickup_current: float = Field(..., gt=0)
    activation_conditions: Tuple[Contingency, ...] = ()

    @model_validator(mode="after")
    def check_bounds(self) -> "SettingGroup":
        if self.lower_bound >= self.upper_bound:
            raise ValueError(
                f"group {self.group_id}: lower bound {self.lower_bound} must be below upper bound {self.upper_bound}"
            )
        return self

    @property
    def width_ratio(self) -> float:
        return (self.upper_bound - self.lower_bound) / self.upper_bound

    def contains(self, value: float, closed_top: bool = False) -> bool:
        if closed_top:
            return self.lower_bound <= value <= self.upper_bound
        return self.lower_bound <= value < self.upper_bound


class SettingGroupSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    relay: str = Field(..., min_length=1)
    groups: Tuple[SettingGroup, ...]
    default_group: int
    ratio: float = Field(default=0.10, gt=0, lt=1)
    width: float = Field(..., gt=0)
    width_override: Optional[float] = Field(None, gt=0)
    diagnostics: Tuple[str, ...] = ()

    _activation: Dict[Contingency, int] = PrivateAttr(default_factory=dict)

    @field_validator("groups")
    @classmethod
    def check_groups(cls, v: Tuple[SettingGroup, ...]) -> Tuple[SettingGroup, ...]:
        if not v:
            raise ValueError("setting group set is empty")
        ids = [g.group_id for g in v]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate group ids {ids}")
        return v

    @model_validator(mode="after")
    def check_partition(self) -> "SettingGroupSet":
        if self.default_group not in {g.group_id for g in self.groups}:
            raise ValueError(f"default group {self.default_group} is not defined")
        seen: Dict[Contingency, int] = {}
        for group in self.groups:
            for condition in group.activation_conditions:
                if condition in seen:
                    raise ValueError(
                        f"contingency {condition.label} activates groups {seen[condition]} and {group.group_id}"
                    )
                seen[condition] = group.group_id
        ordered = sorted(self.groups, key=lambda g: g.lower_bound)
        for low, high in zip(ordered, ordered[1:]):
            if low.upper_bound > high.lower_bound + 1e-9:
                raise ValueError(f"groups {low.group_id} and {high.group_id} overlap")
        return self

    def model_post_init(self, __context: Any) -> None:
        self._activation = {
            condition: group.group_id
            for group in self.groups
            for condition in group.activation_conditions
        }

    @property
    def strict(self) -> bool:
        return self.width_override is None

    def group(self, group_id: int) -> SettingGroup:
        for group in self.groups:
            if group.group_id == group_id:
                return group
        raise KeyError(group_id)

    def group_for(self, contingency: Contingency) -> Optional[int]:
        return self._activation.get(contingency)

    def pickup(self, group_id: int) -> float:
        return self.group(group_id).pickup_current


class TableEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    contingency: Contingency
    current: FaultCurrent


class MinFaultTable(BaseModel):
    """Minimum fault current seen by one relay per contingency"""
    model_config = ConfigDict(frozen=True)

    relay: str
    entries: Tuple[TableEntry, ...] = ()

    _index: Dict[Contingency, FaultCurrent] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def check_unique(self) -> "MinFaultTable":
        seen = set()
        for entry in self.entries:
            if entry.contingency in seen:
                raise ValueError(f"contingency {entry.contingency.label} listed twice")
            seen.add(entry.contingency)
        return self

    def model_post_init(self, __context: Any) -> None:
        self._index = {e.contingency: e.current for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TableEntry]:  # type: ignore[override]
        return iter(self.entries)

    def __contains__(self, contingency: Contingency) -> bool:
        return contingency in self._index

    def get(self, contingency: Contingency) -> Optional[FaultCurrent]:
        return self._index.get(contingency)

    def finite(self) -> List[Tuple[Contingency, float]]:
        return [
            (e.contingency, float(e.current))
            for e in self.entries
            if not isinstance(e.current, NotDetected)
        ]

    @property
    def maximum(self) -> Optional[float]:
        values = [v for _, v in self.finite()]
        return max(values) if values else None

    @property
    def minimum(self) -> Optional[float]:
        values = [v for _, v in self.finite()]
        return min(values) if values else None
