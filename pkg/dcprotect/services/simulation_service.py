"""
Simulation Service
Deterministic discrete-event engine: fault injection, relay sampling, GOOSE
traffic, breaker timing and the adaptive-vs-baseline timing reports
"""
import heapq
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np
from pydantic import ValidationError

from dcprotect.exceptions import DcProtectError, NoReachableFaultsError, ScenarioError
from dcprotect.schemas.goose import GRID_STATUS_PUBLISHER, UINT32_MAX, DatasetEntry, Delivery, EntryKind
from dcprotect.schemas.grid import Contingency, FaultSpec, GridTopology, NotDetected
from dcprotect.schemas.relay import RelayEvent, RelayEventKind
from dcprotect.schemas.settings import IdmtConfig, MinFaultTable, SettingGroupSet
from dcprotect.schemas.sim import (
    ComparisonRow,
    ComparisonTable,
    EventRecord,
    RelayTiming,
    Scenario,
    SchemeReport,
    Scheme,
    SimConfig,
    TimingReport,
    WaveformSample,
    WaveformSource,
)
from dcprotect.services.fault_service import FaultService, FaultSolution
from dcprotect.services.goose_service import GooseBus, Publisher
from dcprotect.services.idmt_service import IdmtService
from dcprotect.services.relay_service import NS, BaselineRelay, RelayRuntime, to_ns
from dcprotect.services.setting_group_service import LOAD_MARGIN, SettingGroupService
from dcprotect.services.topology_service import TopologyService

logger = logging.getLogger(__name__)

# quiet period after isolation before a run may stop early
SETTLE_NS = 20_000_000
GRID_ACTOR = "grid"

Breaker = Tuple[str, str]


class EventKind(str, Enum):
    FAULT_INCEPTION = "fault_inception"
    SAMPLE = "sample"
    FRAME_DELIVERY = "frame_delivery"
    DECISION_DEADLINE = "decision_deadline"
    BREAKER_STAGE = "breaker_stage"
    FAULT_CLEARED = "fault_cleared"
    HEARTBEAT = "heartbeat"


@dataclass(order=True)
class Event:
    time_ns: int
    sequence: int
    kind: EventKind = field(compare=False)
    payload: Any = field(compare=False, default=None)
    scheduled_at: int = field(compare=False, default=0)


class EventQueue:
    """Min-heap on (time, insertion sequence); refuses to schedule into the past"""

    def __init__(self):
        self._heap: List[Event] = []
        self._sequence = 0
        self.now_ns = 0

    def schedule(self, time_ns: int, kind: EventKind, payload: Any = None) -> Event:
        if time_ns < self.now_ns:
            raise ScenarioError(f"{kind.value} scheduled at {time_ns} ns, before the current time {self.now_ns} ns")
        event = Event(time_ns, self._sequence, kind, payload, self.now_ns)
        self._sequence += 1
        heapq.heappush(self._heap, event)
        return event

    def pop(self) -> Event:
        event = heapq.heappop(self._heap)
        self.now_ns = event.time_ns
        return event

    def peek_time(self) -> Optional[int]:
        return self._heap[0].time_ns if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


class CurrentTrace:
    """Signed current at one relay: load plus a first-order rise toward load + fault share"""

    def __init__(self, load: float, fault_share: float, tau: float, start: float):
        self.load = load
        self.fault_share = fault_share
        self.tau = tau
        self.start = start

    def __call__(self, t: float) -> float:
        if t < self.start:
            return self.load
        if self.tau <= 0:
            return self.load + self.fault_share
        return self.load + self.fault_share * -math.expm1(-(t - self.start) / self.tau)

    def directional(self, t: float) -> float:
        return max(self(t), 0.0)


class GridPhysics:
    """
    Piecewise network state: every relay current relaxes exponentially toward
    the value of the current topology epoch; epochs change at fault inception and
    at breaker openings
    """

    def __init__(self, topology: GridTopology, contingency: Contingency, fault: FaultSpec,
                 relays: Sequence[str], scale: Optional[Dict[str, float]] = None):
        self.topology = topology
        self.contingency = contingency
        self.fault = fault
        self.relays = list(relays)
        self.index = {r: i for i, r in enumerate(self.relays)}
        scale = scale or {}
        self.scale = np.array([scale.get(r, 1.0) for r in self.relays])
        self.open_breakers: Set[Breaker] = set()
        self.fault_active = False
        self.isolated = False
        self.solution: Optional[FaultSolution] = None

        load = self._load()
        self._t0 = 0
        self._v0 = load
        self._v_inf = load
        self._tau = 0.0

    def _faulted_line_open(self) -> bool:
        line = self.topology.line(self.fault.line)
        return any((line.id, bus) in self.open_breakers for bus in (line.from_bus, line.to_bus))

    def _load(self) -> np.ndarray:
        out_lines = [self.fault.line] if self.fault_active and self._faulted_line_open() else []
        flow = FaultService.load_flow(self.topology, self.contingency, self.open_breakers, out_lines)
        return np.array([flow[r] for r in self.relays])

    def _dead(self) -> np.ndarray:
        """Relays whose own segment no longer conducts"""
        lines_out, _ = self.topology.effective_outages(self.contingency)
        mask = np.zeros(len(self.relays), dtype=bool)
        for r, i in self.index.items():
            placement = self.topology.relay(r)
            if placement.line in lines_out or (placement.line, placement.bus) in self.open_breakers:
                mask[i] = True
            elif placement.line != self.fault.line or not self.fault_active:
                line = self.topology.line(placement.line)
                far = line.other_end(placement.bus)
                if (placement.line, far) in self.open_breakers:
                    mask[i] = True
        return mask

    def _raw(self, now_ns: int) -> np.ndarray:
        if self._tau <= 0 or now_ns <= self._t0:
            return self._v_inf.copy() if now_ns >= self._t0 and self._tau <= 0 else self._v0.copy()
        decay = math.exp(-(now_ns - self._t0) / NS / self._tau)
        return self._v_inf + (self._v0 - self._v_inf) * decay

    def _set_epoch(self, now_ns: int, target: np.ndarray, tau: float) -> None:
        start = self._raw(now_ns)
        dead = self._dead()
        start[dead] = 0.0
        target = target.copy()
        target[dead] = 0.0
        self._t0 = now_ns
        self._v0 = start
        self._v_inf = target
        self._tau = tau

    def currents(self, now_ns: int) -> np.ndarray:
        """Signed relay currents as measured (fixture scaling applied)"""
        return self._raw(now_ns) * self.scale

    def _target(self, solution: FaultSolution) -> np.ndarray:
        shares = np.array([solution.relay_currents.get(r, 0.0) for r in self.relays])
        return self._load() + shares

    def inject_fault(self, now_ns: int) -> FaultSolution:
        self.fault_active = True
        solution = FaultService.solve(self.topology, self.fault, self.contingency, self.open_breakers)
        self.solution = solution
        if solution.isolated:
            self.isolated = True
            return solution
        self._set_epoch(now_ns, self._target(solution), solution.tau)
        return solution

    def open_breaker(self, now_ns: int, breaker: Breaker) -> bool:
        """
        Re-solve after a breaker opens

        Returns:
            True when this opening isolated the fault
        """
        self.open_breakers.add(breaker)
        if self.fault_active and not self.isolated:
            solution = FaultService.solve(self.topology, self.fault, self.contingency, self.open_breakers)
            self.solution = solution
            if solution.isolated:
                self.isolated = True
                self._set_epoch(now_ns, self._load(), 0.0)
                return True
            self._set_epoch(now_ns, self._target(solution), solution.tau)
            return False
        self._set_epoch(now_ns, self._load(), 0.0)
        return False

    def line_in_service(self, line_id: str) -> bool:
        lines_out, _ = self.topology.effective_outages(self.contingency)
        if line_id in lines_out:
            return False
        line = self.topology.line(line_id)
        return (line_id, line.from_bus) not in self.open_breakers and (line_id, line.to_bus) not in self.open_breakers


@dataclass
class ProtectionPlan:
    """Per-relay tables, adaptive groups and baseline settings derived from the solver"""
    tables: Dict[str, MinFaultTable]
    groups: Dict[str, SettingGroupSet]
    baseline: Dict[str, IdmtConfig]
    nominal_load: Dict[str, float]


class SimulationEngine:
    """One scenario under one scheme; single-threaded, owns its bus and relays"""

    def __init__(self, topology: GridTopology, scenario: Scenario, config: SimConfig, scheme: Scheme,
                 groups: Dict[str, SettingGroupSet], baseline: Dict[str, IdmtConfig],
                 floors: Optional[Dict[str, float]] = None, scale: Optional[Dict[str, float]] = None,
                 trace_relays: Optional[Iterable[str]] = None):
        self.topology = topology
        self.scenario = scenario
        self.config = config
        self.scheme = scheme
        self.fault_ns = to_ns(scenario.fault_time)
        self.end_ns = to_ns(scenario.duration)
        self.step_ns = max(to_ns(scenario.sample_step), 1)
        self.order = [r.id for r in topology.relays]
        self.queue = EventQueue()
        self.physics = GridPhysics(topology, scenario.contingency, scenario.fault, self.order, scale)
        self.trace_relays = [r for r in self.order if r in set(trace_relays or ())]
        floors = floors or {}

        self.relays: Dict[str, Union[RelayRuntime, BaselineRelay]] = {}
        for relay in self.order:
            if relay in scenario.adjacent_failure:
                continue
            if scheme == Scheme.ADAPTIVE:
                group_set = groups.get(relay)
                if group_set is None:
                    continue
                self.relays[relay] = RelayRuntime(
                    relay, topology, group_set, config.times,
                    contingency=scenario.contingency,
                    persistence=config.pickup_persistence,
                    drop_ratio=config.drop_ratio,
                    failure_window=config.failure_window,
                    staleness_window=config.staleness_window,
                    load_floor=floors.get(relay, 0.0),
                )
            else:
                idmt = baseline.get(relay)
                if idmt is None:
                    continue
                pickup = max(idmt.pickup, floors.get(relay, 0.0))
                self.relays[relay] = BaselineRelay(
                    relay, idmt.model_copy(update={"pickup": pickup}),
                    persistence=config.pickup_persistence,
                    drop_ratio=config.drop_ratio,
                )

        self.bus: Optional[GooseBus] = None
        self.publishers: Dict[int, Publisher] = {}
        if scheme == Scheme.ADAPTIVE:
            self._setup_bus()

        self.events: List[EventRecord] = []
        self.trace: List[WaveformSample] = []
        self.pickups: Dict[str, int] = {}
        self.trips: Dict[str, int] = {}
        self.clears: Dict[str, int] = {}
        self.isolated_ns: Optional[int] = None
        self.delivered = 0

    # Setup

    def _setup_bus(self) -> None:
        bus_config = self.config.bus.model_copy(update={"rng_seed": self.config.rng_seed})
        self.bus = GooseBus(bus_config, self.config.schedule)
        self.bus.register(GRID_STATUS_PUBLISHER, GRID_ACTOR)
        self.bus.subscribe(GRID_STATUS_PUBLISHER, self.relays)
        self.publishers[GRID_STATUS_PUBLISHER] = Publisher(GRID_STATUS_PUBLISHER)
        for relay_id, relay in self.relays.items():
            number = self.topology.relay_number(relay_id)
            self.bus.register(number, relay_id)
            self.publishers[number] = Publisher(number)
            self.bus.subscribe(number, [
                other for other, runtime in self.relays.items()
                if relay_id in runtime.neighbors.all_neighbors
            ])

    def _grid_dataset(self) -> Tuple[DatasetEntry, ...]:
        _, sources_out = self.topology.effective_outages(self.scenario.contingency)
        entries = [
            DatasetEntry(kind=EntryKind.LINE_IN_SERVICE, entry_id=i, value=self.physics.line_in_service(line.id))
            for i, line in enumerate(self.topology.lines, start=1)
        ]
        entries.extend(
            DatasetEntry(kind=EntryKind.SOURCE_IN_SERVICE, entry_id=i, value=source.id not in sources_out)
            for i, source in enumerate(self.topology.sources, start=1)
        )
        return tuple(entries)

    # Bookkeeping

    def _log(self, now_ns: int, actor: str, kind: str, detail: str = "") -> None:
        self.events.append(EventRecord(time_ns=now_ns, actor=actor, kind=kind, detail=detail))

    def _publish(self, publisher_id: int, dataset: Tuple[DatasetEntry, ...], now_ns: int,
                 state_change: bool = True) -> None:
        publisher = self.publishers[publisher_id]
        frame = publisher.next_frame(dataset, now_ns, state_change)
        deliveries = self.bus.publish(frame, now_ns, state_change)
        if state_change:
            # the burst copies consumed sqNum 1..n
            publisher.sq_num = min(frame.sq_num + len(self.config.schedule.offsets), UINT32_MAX)
        actor = self.bus.names.get(publisher_id, str(publisher_id))
        self._log(now_ns, actor, "publish", f"st={frame.st_num} sq={frame.sq_num} deliveries={len(deliveries)}")
        for delivery in deliveries:
            self.queue.schedule(delivery.time_ns, EventKind.FRAME_DELIVERY, delivery)
        heartbeat_ns = now_ns + to_ns(self.config.schedule.heartbeat_interval)
        if heartbeat_ns <= self.end_ns:
            self.queue.schedule(heartbeat_ns, EventKind.HEARTBEAT, (publisher_id, publisher.st_num, publisher.sq_num))

    def _handle_relay_events(self, relay_id: str, events: List[RelayEvent], now_ns: int) -> None:
        publish = False
        for event in events:
            self._log(now_ns, relay_id, event.kind.value, event.detail)
            publish = publish or event.publish
            if event.kind == RelayEventKind.PICKUP:
                if now_ns >= self.fault_ns and relay_id not in self.pickups:
                    self.pickups[relay_id] = now_ns
                if self.scheme == Scheme.ADAPTIVE:
                    self.queue.schedule(now_ns + to_ns(self.config.failure_window),
                                        EventKind.DECISION_DEADLINE, relay_id)
            elif event.kind == RelayEventKind.DELAY_START:
                self.queue.schedule(self.relays[relay_id].deadline_ns, EventKind.DECISION_DEADLINE, relay_id)
            elif event.kind == RelayEventKind.TRIP_COMMAND:
                self.trips.setdefault(relay_id, now_ns)
                if relay_id in self.scenario.breaker_failure:
                    self._log(now_ns, relay_id, "breaker_failure")
                else:
                    self.queue.schedule(now_ns + to_ns(self.config.times.t_tr), EventKind.BREAKER_STAGE,
                                        (relay_id, "mechanism"))
        if publish and self.bus is not None:
            self._publish(self.topology.relay_number(relay_id), self.relays[relay_id].status_dataset(), now_ns)

    # Event handlers

    def _on_fault(self, now_ns: int) -> None:
        solution = self.physics.inject_fault(now_ns)
        fault = self.scenario.fault
        if solution.isolated:
            self.isolated_ns = now_ns
            self._log(now_ns, GRID_ACTOR, EventKind.FAULT_INCEPTION.value,
                      f"line={fault.line} kind={fault.kind.value} no fault current")
            return
        self._log(now_ns, GRID_ACTOR, EventKind.FAULT_INCEPTION.value,
                  f"line={fault.line} position={fault.position:g} kind={fault.kind.value} "
                  f"I={float(solution.current):.1f} tau_us={solution.tau * 1e6:.1f}")

    def _on_sample(self, now_ns: int) -> None:
        currents = self.physics.currents(now_ns)
        for i, relay_id in enumerate(self.order):
            relay = self.relays.get(relay_id)
            if relay is None:
                continue
            if isinstance(relay, BaselineRelay):
                events = relay.on_sample(float(currents[i]), now_ns, self.step_ns)
            else:
                events = relay.on_sample(float(currents[i]), now_ns)
            if events:
                self._handle_relay_events(relay_id, events, now_ns)
        for relay_id in self.trace_relays:
            self.trace.append(WaveformSample(time=now_ns / NS, relay=relay_id,
                                             amperes=float(currents[self.physics.index[relay_id]])))
        if now_ns + self.step_ns <= self.end_ns:
            self.queue.schedule(now_ns + self.step_ns, EventKind.SAMPLE)

    def _on_delivery(self, delivery: Delivery, now_ns: int) -> None:
        self.delivered += 1
        relay = self.relays.get(delivery.subscriber)
        if relay is None:
            return
        frame = delivery.frame
        source = self.bus.names.get(frame.publisher_id, str(frame.publisher_id))
        self._log(now_ns, delivery.subscriber, EventKind.FRAME_DELIVERY.value,
                  f"from={source} st={frame.st_num} sq={frame.sq_num}")
        events = relay.on_goose(frame, now_ns)
        if events:
            self._handle_relay_events(delivery.subscriber, events, now_ns)

    def _on_deadline(self, relay_id: str, now_ns: int) -> None:
        relay = self.relays.get(relay_id)
        if isinstance(relay, RelayRuntime):
            events = relay.evaluate(now_ns)
            if events:
                self._handle_relay_events(relay_id, events, now_ns)

    def _on_breaker_stage(self, relay_id: str, stage: str, now_ns: int) -> None:
        self._log(now_ns, relay_id, f"breaker_{stage}")
        times = self.config.times
        if stage == "mechanism":
            self.queue.schedule(now_ns + to_ns(times.t_cb_op), EventKind.BREAKER_STAGE, (relay_id, "arc"))
            return
        if stage == "arc":
            self.queue.schedule(now_ns + to_ns(times.t_arc), EventKind.BREAKER_STAGE, (relay_id, "open"))
            return

        placement = self.topology.relay(relay_id)
        self.clears.setdefault(relay_id, now_ns)
        isolated = self.physics.open_breaker(now_ns, (placement.line, placement.bus))
        relay = self.relays[relay_id]
        if isinstance(relay, RelayRuntime):
            relay.open_breaker()
            self._publish(self.topology.relay_number(relay_id), relay.status_dataset(), now_ns)
            self._publish(GRID_STATUS_PUBLISHER, self._grid_dataset(), now_ns)
        else:
            relay.breaker_closed = False
        if isolated:
            self.queue.schedule(now_ns, EventKind.FAULT_CLEARED)

    def _on_heartbeat(self, payload: Tuple[int, int, int], now_ns: int) -> None:
        publisher_id, st_num, sq_num = payload
        publisher = self.publishers[publisher_id]
        if publisher.st_num != st_num or publisher.sq_num != sq_num:
            return
        self._publish(publisher_id, publisher.dataset, now_ns, state_change=False)

    def _settled(self, now_ns: int) -> bool:
        if self.isolated_ns is None or now_ns - self.isolated_ns < SETTLE_NS:
            return False
        return not any(relay.busy for relay in self.relays.values())

    # Run

    def run(self) -> SchemeReport:
        self.queue.schedule(self.fault_ns, EventKind.FAULT_INCEPTION)
        self.queue.schedule(0, EventKind.SAMPLE)
        if self.bus is not None:
            self._publish(GRID_STATUS_PUBLISHER, self._grid_dataset(), 0)
            for relay_id, relay in self.relays.items():
                self._publish(self.topology.relay_number(relay_id), relay.status_dataset(), 0)

        end_ns = self.end_ns
        while len(self.queue):
            event = self.queue.pop()
            now = event.time_ns
            if now > self.end_ns:
                break
            end_ns = now
            if event.kind == EventKind.SAMPLE:
                self._on_sample(now)
                if self.config.early_stop and self._settled(now):
                    self._log(now, GRID_ACTOR, "settled")
                    break
            elif event.kind == EventKind.FAULT_INCEPTION:
                self._on_fault(now)
            elif event.kind == EventKind.FRAME_DELIVERY:
                self._on_delivery(event.payload, now)
            elif event.kind == EventKind.DECISION_DEADLINE:
                self._on_deadline(event.payload, now)
            elif event.kind == EventKind.BREAKER_STAGE:
                relay_id, stage = event.payload
                self._on_breaker_stage(relay_id, stage, now)
            elif event.kind == EventKind.FAULT_CLEARED:
                if self.isolated_ns is None:
                    self.isolated_ns = now
                    self._log(now, GRID_ACTOR, EventKind.FAULT_CLEARED.value)
            elif event.kind == EventKind.HEARTBEAT:
                self._on_heartbeat(event.payload, now)

        return self._report(end_ns)

    def _relative(self, value: Optional[int]) -> Optional[int]:
        return None if value is None else value - self.fault_ns

    def _report(self, end_ns: int) -> SchemeReport:
        timings = {}
        for relay_id in self.order:
            if relay_id in self.pickups or relay_id in self.trips:
                timings[relay_id] = RelayTiming(
                    pickup_ns=self._relative(self.pickups.get(relay_id)),
                    trip_command_ns=self._relative(self.trips.get(relay_id)),
                    fault_clear_ns=self._relative(self.clears.get(relay_id)),
                )
        return SchemeReport(
            scheme=self.scheme,
            timings=timings,
            events=tuple(self.events),
            fault_isolated_ns=self._relative(self.isolated_ns),
            end_ns=end_ns,
            frames_published=self.bus.published if self.bus else 0,
            frames_delivered=self.delivered,
            trace=tuple(self.trace),
            frame_capture=self.bus.dump_capture() if self.bus else "",
        )


class SimulationService:
    """Scenario documents, protection plans, single runs and comparison batches"""

    @staticmethod
    def _scenario_from(data: Dict[str, Any], defaults: Dict[str, Any]) -> Scenario:
        values = dict(defaults)
        values.update({k: v for k, v in data.items() if k not in ("contingency", "outages")})
        outages = data.get("contingency", data.get("outages", {}))
        if not isinstance(outages, dict):
            raise ScenarioError("contingency must be a table with 'lines' and 'sources'")
        values["contingency"] = Contingency.of(lines=outages.get("lines", []), sources=outages.get("sources", []))
        return Scenario.model_validate(values)

    @staticmethod
    def _expand_matrix(matrix: Dict[str, Any], defaults: Dict[str, Any]) -> List[Scenario]:
        """Fault lines x source-outage columns, with per-row adjacent failures"""
        lines = matrix.get("fault_lines", [])
        columns = matrix.get("source_outages", [""])
        positions = matrix.get("positions", {})
        failures = matrix.get("adjacent_failure", {})
        prefix = matrix.get("name", "matrix")
        scenarios = []
        for line in lines:
            for column in columns:
                fault = {
                    "line": line,
                    "position": positions.get(line, matrix.get("position", 0.5)),
                    "kind": matrix.get("kind", "pole_pole"),
                    "fault_resistance": matrix.get("fault_resistance", 0.0),
                }
                scenarios.append(SimulationService._scenario_from({
                    "name": f"{prefix}-{line}-{column or 'none'}",
                    "fault": fault,
                    "contingency": {"lines": [], "sources": [column] if column else []},
                    "adjacent_failure": failures.get(line, []),
                    "row": line,
                    "column": column or "none",
                    **{k: matrix[k] for k in ("fault_time", "duration", "sample_step") if k in matrix},
                }, defaults))
        return scenarios

    @staticmethod
    def load_scenarios(source_text: str) -> List[Scenario]:
        """
        Parse a scenario document: a single scenario at top level, a list of
        [[scenarios]], and/or a [matrix] generating one scenario per cell
        """
        from dcprotect.config import settings

        document = TopologyService.parse_document(source_text, "scenario document")
        defaults = {"duration": settings.scenario_duration, "sample_step": settings.sample_step}
        try:
            scenarios: List[Scenario] = []
            if "fault" in document:
                scenarios.append(SimulationService._scenario_from(document, defaults))
            for data in document.get("scenarios", []):
                scenarios.append(SimulationService._scenario_from(data, defaults))
            if "matrix" in document:
                scenarios.extend(SimulationService._expand_matrix(document["matrix"], defaults))
        except ValidationError as e:
            raise TopologyService.validation_error(e) from e
        if not scenarios and "scenarios" not in document:
            raise ScenarioError("document has no fault, [[scenarios]] or [matrix]")
        return scenarios

    @staticmethod
    def check_scenario(topology: GridTopology, scenario: Scenario) -> None:
        if not topology.has_line(scenario.fault.line):
            raise ScenarioError(f"scenario {scenario.name}: unknown fault line {scenario.fault.line}")
        try:
            topology.check_contingency(scenario.contingency)
        except ValueError as e:
            raise ScenarioError(f"scenario {scenario.name}: {e}") from e
        for relay in sorted(scenario.adjacent_failure | scenario.breaker_failure):
            if not topology.has_relay(relay):
                raise ScenarioError(f"scenario {scenario.name}: unknown relay {relay}")

    @staticmethod
    def build_plan(topology: GridTopology, ratio: float = 0.10, curve: str = "iec_standard_inverse",
                   time_multiplier: float = 0.025) -> ProtectionPlan:
        """Solver tables over the default contingencies, strict groups and baseline settings (cached)"""
        key = ("protection_plan", ratio, curve, time_multiplier)
        return topology.cached(key, lambda: SimulationService._build_plan(topology, ratio, curve, time_multiplier))

    @staticmethod
    def _build_plan(topology: GridTopology, ratio: float, curve: str, time_multiplier: float) -> ProtectionPlan:
        contingencies = FaultService.default_contingencies(topology)
        base_load = FaultService.load_flow(topology)
        idmt_curve = IdmtService.get_curve(curve)
        tables, groups, baseline, nominal = {}, {}, {}, {}
        for relay in topology.relays:
            table = FaultService.min_fault_current_table(topology, relay.id, contingencies)
            tables[relay.id] = table
            nominal[relay.id] = abs(base_load[relay.id])
            try:
                groups[relay.id] = SettingGroupService.synthesize(table, ratio, nominal_load=nominal[relay.id])
                pickup = SettingGroupService.baseline_pickup(table, nominal[relay.id])
            except NoReachableFaultsError:
                logger.warning(f"{relay.id}: no reachable faults, relay left without settings")
                continue
            baseline[relay.id] = IdmtConfig(curve=idmt_curve, time_multiplier=time_multiplier, pickup=pickup)
        logger.info(f"Protection plan for '{topology.name}': {len(groups)}/{len(topology.relays)} relays set")
        return ProtectionPlan(tables=tables, groups=groups, baseline=baseline, nominal_load=nominal)

    @staticmethod
    def inject_fault(topology: GridTopology, fault: FaultSpec, contingency: Contingency = Contingency(),
                     now: float = 0.0, open_breakers: Iterable[Breaker] = ()) -> Dict[str, CurrentTrace]:
        """
        Current function of every relay once the fault starts at ``now``

        Relays off every source-to-fault path keep their load current; an isolated
        fault changes nothing.
        """
        load = FaultService.load_flow(topology, contingency, open_breakers)
        solution = FaultService.solve(topology, fault, contingency, open_breakers)
        shares = {} if solution.isolated else solution.relay_currents
        return {
            r.id: CurrentTrace(load[r.id], shares.get(r.id, 0.0), solution.tau, now)
            for r in topology.relays
        }

    @staticmethod
    def _fixture_inputs(topology: GridTopology, scenario: Scenario, plan: ProtectionPlan,
                        fixture: MinFaultTable, fixture_groups: Optional[SettingGroupSet],
                        ratio: float) -> Tuple[float, SettingGroupSet]:
        relay = fixture.relay
        if not topology.has_relay(relay):
            raise ScenarioError(f"fixture relay {relay} is not in the topology")
        contingency = scenario.contingency
        wanted = fixture.get(contingency)
        if wanted is None:
            raise ScenarioError(f"scenario {scenario.name}: contingency {contingency.label} is not tabulated "
                                f"in the {relay} fixture")
        if isinstance(wanted, NotDetected):
            raise ScenarioError(f"scenario {scenario.name}: fixture entry for {contingency.label} is N/D")
        solver = plan.tables[relay].get(contingency)
        if solver is None:
            solver = FaultService.min_fault_current_table(topology, relay, [contingency]).get(contingency)
        if solver is None or isinstance(solver, NotDetected):
            raise ScenarioError(f"scenario {scenario.name}: solver finds no fault current at {relay} "
                                f"under {contingency.label}")
        groups = fixture_groups or SettingGroupService.synthesize(fixture, ratio)
        return float(wanted) / float(solver), groups

    @staticmethod
    def run_scenario(topology: GridTopology, scenario: Scenario, config: Optional[SimConfig] = None,
                     plan: Optional[ProtectionPlan] = None, fixture: Optional[MinFaultTable] = None,
                     fixture_groups: Optional[SettingGroupSet] = None, ratio: float = 0.10,
                     trace_relays: Optional[Iterable[str]] = None) -> TimingReport:
        """
        Run one scenario under the adaptive scheme and the inverse-time baseline

        Both runs see the same physics; only the protection differs.
        """
        config = config or SimConfig()
        SimulationService.check_scenario(topology, scenario)
        plan = plan or SimulationService.build_plan(topology, ratio, config.baseline_curve,
                                                    config.baseline_time_multiplier)

        groups = dict(plan.groups)
        baseline = dict(plan.baseline)
        scale: Dict[str, float] = {}
        if config.waveform_source == WaveformSource.FIXTURE_TABLE:
            if fixture is None:
                raise ScenarioError("fixture waveform source needs a fixture table")
            factor, relay_groups = SimulationService._fixture_inputs(
                topology, scenario, plan, fixture, fixture_groups, ratio)
            scale[fixture.relay] = factor
            groups[fixture.relay] = relay_groups
            baseline[fixture.relay] = baseline[fixture.relay].model_copy(update={
                "pickup": SettingGroupService.baseline_pickup(fixture, plan.nominal_load[fixture.relay] * factor),
            }) if fixture.relay in baseline else IdmtConfig(
                curve=IdmtService.get_curve(config.baseline_curve),
                time_multiplier=config.baseline_time_multiplier,
                pickup=SettingGroupService.baseline_pickup(fixture, plan.nominal_load[fixture.relay] * factor),
            )

        scenario_load = FaultService.load_flow(topology, scenario.contingency)
        floors = {
            relay: LOAD_MARGIN * max(plan.nominal_load.get(relay, 0.0), abs(scenario_load[relay]))
            * scale.get(relay, 1.0)
            for relay in scenario_load
        }

        reports = {}
        for scheme in (Scheme.ADAPTIVE, Scheme.BASELINE):
            engine = SimulationEngine(topology, scenario, config, scheme, groups, baseline,
                                      floors=floors, scale=scale, trace_relays=trace_relays)
            reports[scheme] = engine.run()

        logger.info(f"Scenario {scenario.name}: adaptive {SimulationService._brief(reports[Scheme.ADAPTIVE], config)}, "
                    f"baseline {SimulationService._brief(reports[Scheme.BASELINE], config)}")
        return TimingReport(
            scenario=scenario.name,
            adaptive=reports[Scheme.ADAPTIVE],
            baseline=reports[Scheme.BASELINE],
            waveform_source=config.waveform_source,
        )

    @staticmethod
    def _brief(report: SchemeReport, config: SimConfig) -> str:
        timing = report.timing(config.report_relay)
        if timing.trip_command_ns is None:
            return f"{config.report_relay} N/D"
        return f"{config.report_relay} trip {timing.trip_command_ns / 1e6:.2f} ms"

    @staticmethod
    def compare_schemes(topology: GridTopology, scenarios: Sequence[Scenario], config: Optional[SimConfig] = None,
                        relay: Optional[str] = None, workers: int = 1, fixture: Optional[MinFaultTable] = None,
                        fixture_groups: Optional[SettingGroupSet] = None, ratio: float = 0.10) -> List[ComparisonRow]:
        """
        Run every scenario under both schemes; rows keep input order and a failing
        scenario becomes an error row
        """
        config = config or SimConfig()
        relay = relay or config.report_relay
        if not scenarios:
            return []
        plan = SimulationService.build_plan(topology, ratio, config.baseline_curve, config.baseline_time_multiplier)

        def run(scenario: Scenario) -> ComparisonRow:
            try:
                report = SimulationService.run_scenario(topology, scenario, config, plan, fixture,
                                                        fixture_groups, ratio)
            except (DcProtectError, ValueError) as e:
                logger.warning(f"Scenario {scenario.name} failed: {e}")
                return ComparisonRow(scenario=scenario.name, row=scenario.row, column=scenario.column, error=str(e))
            return ComparisonRow(
                scenario=scenario.name,
                row=scenario.row,
                column=scenario.column,
                adaptive=report.adaptive.timing(relay),
                baseline=report.baseline.timing(relay),
            )

        if workers <= 1:
            return [run(s) for s in scenarios]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, scenarios))

    @staticmethod
    def comparison_table(rows: List[ComparisonRow], relay: str) -> ComparisonTable:
        from dcprotect.services.report_service import ReportService
        return ComparisonTable(relay=relay, rows=rows, text=ReportService.render_comparison(rows, relay))


# Singleton
simulation_service = SimulationService()
