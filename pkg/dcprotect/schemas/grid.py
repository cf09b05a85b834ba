"""
Grid Schemas
Pydantic models for the DC microgrid: buses, lines, sources, loads, relay
placements, faults and contingencies
"""
import math
from enum import Enum
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx
from pydantic import (
    AliasChoices,
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    field_validator,
    model_validator,
)


class FaultKind(str, Enum):
    POLE_POLE = "pole_pole"
    POLE_GROUND = "pole_ground"


class SourceKind(str, Enum):
    SLACK = "slack"
    PV = "pv"
    SYNCHRONOUS = "synchronous"


class NotDetected(str, Enum):
    """No fault current reaches the point; rendered "N/D", never 0 A"""
    ND = "N/D"


ND = NotDetected.ND

# amperes, or ND when the fault point is isolated from every source
FaultCurrent = Union[float, NotDetected]


class Bus(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    nominal_voltage: float = Field(..., gt=0, description="Pole voltage magnitude in volts DC")
    bipolar: bool = Field(default=True, description="True for a ±V bus, False for a unipolar +V bus")


class Line(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    from_bus: str
    to_bus: str
    length_km: float = Field(..., gt=0)
    r_ohm_per_km: float = Field(..., gt=0)
    l_h_per_km: float = Field(default=0.0, ge=0)
    in_service: bool = True

    @model_validator(mode="after")
    def check_endpoints(self) -> "Line":
        if self.from_bus == self.to_bus:
            raise ValueError(f"line {self.id} connects bus {self.from_bus} to itself")
        return self

    @property
    def resistance(self) -> float:
        return self.length_km * self.r_ohm_per_km

    @property
    def inductance(self) -> float:
        return self.length_km * self.l_h_per_km

    def other_end(self, bus: str) -> str:
        return self.to_bus if bus == self.from_bus else self.from_bus


class Source(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    bus: str
    rating: float = Field(..., gt=0, description="Watts or VA")
    kind: SourceKind = SourceKind.PV
    internal_resistance: Optional[float] = Field(None, gt=0, description="Explicit Ω; derived from rating when unset")
    resistance_factor: float = Field(default=1.0, gt=0)
    in_service: bool = True


class Load(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    bus: str
    power: float = Field(..., ge=0, description="Watts")


class RelayPlacement(BaseModel):
    """A directional relay at one end of a line, protecting toward the other end"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1)
    line: str
    bus: str


class FaultSpec(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    line: str
    position: float = Field(default=0.5, ge=0.0, le=1.0, description="Fraction along the line from from_bus")
    kind: FaultKind = FaultKind.POLE_POLE
    fault_resistance: float = Field(
        default=0.0, ge=0.0,
        validation_alias=AliasChoices("fault_resistance", "resistance"),
    )


class Contingency(BaseModel):
    """Pre-fault outage condition"""
    model_config = ConfigDict(frozen=True)

    line_outages: FrozenSet[str] = frozenset()
    source_outages: FrozenSet[str] = frozenset()

    @classmethod
    def of(cls, lines: Iterable[str] = (), sources: Iterable[str] = ()) -> "Contingency":
        return cls(line_outages=frozenset(lines), source_outages=frozenset(sources))

    @property
    def label(self) -> str:
        parts = sorted(self.line_outages) + sorted(self.source_outages)
        return "+".join(parts) if parts else "none"

    def sort_key(self) -> Tuple[int, Tuple[str, ...], Tuple[str, ...]]:
        return (
            len(self.line_outages) + len(self.source_outages),
            tuple(sorted(self.line_outages)),
            tuple(sorted(self.source_outages)),
        )

    def __str__(self) -> str:
        return self.label


class GridTopology(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "grid"
    pole_voltage: float = Field(default=750.0, gt=0, description="System pole-to-ground voltage")
    grounding_resistance: float = Field(default=0.1, ge=0, description="TN-S loop resistance added to pole-ground faults")
    source_resistance_factor: float = Field(default=1.0, gt=0)
    buses: Tuple[Bus, ...]
    lines: Tuple[Line, ...]
    sources: Tuple[Source, ...] = ()
    loads: Tuple[Load, ...] = ()
    relays: Tuple[RelayPlacement, ...] = ()

    _bus_index: Dict[str, Bus] = PrivateAttr(default_factory=dict)
    _line_index: Dict[str, Line] = PrivateAttr(default_factory=dict)
    _source_index: Dict[str, Source] = PrivateAttr(default_factory=dict)
    _relay_index: Dict[str, RelayPlacement] = PrivateAttr(default_factory=dict)
    _relay_at: Dict[Tuple[str, str], str] = PrivateAttr(default_factory=dict)
    _cache: Dict[Any, Any] = PrivateAttr(default_factory=dict)

    @field_validator("buses")
    @classmethod
    def check_buses(cls, v: Tuple[Bus, ...]) -> Tuple[Bus, ...]:
        if not v:
            raise ValueError("topology has no buses")
        return v

    @model_validator(mode="after")
    def check_references(self) -> "GridTopology":
        bus_ids = [b.id for b in self.buses]
        for kind, ids in (
            ("bus", bus_ids),
            ("line", [l.id for l in self.lines]),
            ("source", [s.id for s in self.sources]),
            ("load", [l.id for l in self.loads]),
            ("relay", [r.id for r in self.relays]),
        ):
            seen = set()
            for element_id in ids:
                if element_id in seen:
                    raise ValueError(f"duplicate {kind} id {element_id}")
                seen.add(element_id)

        for bus in self.buses:
            if bus.bipolar and not math.isclose(bus.nominal_voltage, self.pole_voltage, rel_tol=1e-9):
                raise ValueError(f"bipolar bus {bus.id} is rated {bus.nominal_voltage:g} V but the grid poles are at "
                                 f"{self.pole_voltage:g} V")
            if not bus.bipolar and bus.nominal_voltage > self.pole_voltage:
                raise ValueError(f"unipolar bus {bus.id} at {bus.nominal_voltage:g} V exceeds the "
                                 f"{self.pole_voltage:g} V pole voltage")

        known = set(bus_ids)
        for line in self.lines:
            for end in (line.from_bus, line.to_bus):
                if end not in known:
                    raise ValueError(f"line {line.id} references unknown bus {end}")
        for source in self.sources:
            if source.bus not in known:
                raise ValueError(f"source {source.id} references unknown bus {source.bus}")
        for load in self.loads:
            if load.bus not in known:
                raise ValueError(f"load {load.id} references unknown bus {load.bus}")

        lines = {l.id: l for l in self.lines}
        ends = set()
        for relay in self.relays:
            line = lines.get(relay.line)
            if line is None:
                raise ValueError(f"relay {relay.id} references unknown line {relay.line}")
            if relay.bus not in (line.from_bus, line.to_bus):
                raise ValueError(f"relay {relay.id} sits at bus {relay.bus}, which is not an end of {line.id}")
            if (relay.line, relay.bus) in ends:
                raise ValueError(f"two relays at the {relay.bus} end of {relay.line}")
            ends.add((relay.line, relay.bus))

        graph = nx.Graph()
        graph.add_nodes_from(bus_ids)
        graph.add_edges_from((l.from_bus, l.to_bus) for l in self.lines)
        if not nx.is_connected(graph):
            islands = sorted(sorted(c) for c in nx.connected_components(graph))
            raise ValueError(f"grid is not connected: {islands}")
        return self

    def model_post_init(self, __context: Any) -> None:
        self._bus_index = {b.id: b for b in self.buses}
        self._line_index = {l.id: l for l in self.lines}
        self._source_index = {s.id: s for s in self.sources}
        self._relay_index = {r.id: r for r in self.relays}
        self._relay_at = {(r.line, r.bus): r.id for r in self.relays}

    # Lookups

    def bus(self, bus_id: str) -> Bus:
        return self._bus_index[bus_id]

    def line(self, line_id: str) -> Line:
        return self._line_index[line_id]

    def source(self, source_id: str) -> Source:
        return self._source_index[source_id]

    def relay(self, relay_id: str) -> RelayPlacement:
        return self._relay_index[relay_id]

    def has_line(self, line_id: str) -> bool:
        return line_id in self._line_index

    def has_source(self, source_id: str) -> bool:
        return source_id in self._source_index

    def has_relay(self, relay_id: str) -> bool:
        return relay_id in self._relay_index

    def relay_at(self, line_id: str, bus_id: str) -> Optional[str]:
        return self._relay_at.get((line_id, bus_id))

    def far_bus(self, relay_id: str) -> str:
        placement = self.relay(relay_id)
        return self.line(placement.line).other_end(placement.bus)

    def lines_at(self, bus_id: str) -> List[Line]:
        return [l for l in self.lines if bus_id in (l.from_bus, l.to_bus)]

    @property
    def breakers(self) -> List[Tuple[str, str]]:
        """(line, bus) of every breaker; each relay drives the breaker at its line end"""
        return [(r.line, r.bus) for r in self.relays]

    # Wire numbering (1-based, document order)

    def relay_number(self, relay_id: str) -> int:
        return self._position(self.relays, relay_id)

    def line_number(self, line_id: str) -> int:
        return self._position(self.lines, line_id)

    def source_number(self, source_id: str) -> int:
        return self._position(self.sources, source_id)

    def relay_by_number(self, number: int) -> Optional[str]:
        return self.relays[number - 1].id if 0 < number <= len(self.relays) else None

    def line_by_number(self, number: int) -> Optional[str]:
        return self.lines[number - 1].id if 0 < number <= len(self.lines) else None

    def source_by_number(self, number: int) -> Optional[str]:
        return self.sources[number - 1].id if 0 < number <= len(self.sources) else None

    @staticmethod
    def _position(elements: Tuple[Any, ...], element_id: str) -> int:
        for i, element in enumerate(elements):
            if element.id == element_id:
                return i + 1
        raise KeyError(element_id)

    # Electrical parameters

    def driving_voltage(self, kind: FaultKind) -> float:
        return 2.0 * self.pole_voltage if kind == FaultKind.POLE_POLE else self.pole_voltage

    @property
    def operating_voltage(self) -> float:
        """Pole-to-pole system voltage used for load resistances and source ratings"""
        return 2.0 * self.pole_voltage

    def source_resistance(self, source: Source) -> float:
        if source.internal_resistance is not None:
            return source.internal_resistance
        v = self.operating_voltage
        return self.source_resistance_factor * source.resistance_factor * v * v / source.rating

    def effective_outages(self, contingency: Contingency) -> Tuple[FrozenSet[str], FrozenSet[str]]:
        """Contingency outages plus elements declared out of service in the document"""
        lines = contingency.line_outages | {l.id for l in self.lines if not l.in_service}
        sources = contingency.source_outages | {s.id for s in self.sources if not s.in_service}
        return frozenset(lines), frozenset(sources)

    def check_contingency(self, contingency: Contingency) -> None:
        for line_id in contingency.line_outages:
            if not self.has_line(line_id):
                raise ValueError(f"contingency references unknown line {line_id}")
        for source_id in contingency.source_outages:
            if not self.has_source(source_id):
                raise ValueError(f"contingency references unknown source {source_id}")

    def cached(self, key: Any, factory: Callable[[], Any]) -> Any:
        """Memoize a derived quantity on this (immutable) topology"""
        if key not in self._cache:
            self._cache[key] = factory()
        return self._cache[key]

    @property
    def summary(self) -> str:
        return f"{len(self.buses)} buses, {len(self.lines)} lines"
