"""
Relay Service
Adaptive directional overcurrent relay state machine and the inverse-time
baseline relay
"""
import logging
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from dcprotect.schemas.goose import GRID_STATUS_PUBLISHER, UINT32_MAX, DatasetEntry, EntryKind, GooseFrame
from dcprotect.schemas.grid import Contingency, GridTopology
from dcprotect.schemas.relay import (
    Decision,
    DecisionKind,
    NeighborMap,
    NeighborStatus,
    RelayEvent,
    RelayEventKind,
    RelayState,
)
from dcprotect.schemas.settings import IdmtConfig, RelayTimeSettings, SettingGroupSet
from dcprotect.services.fault_service import FaultService
from dcprotect.services.idmt_service import IdmtService
from dcprotect.services.setting_group_service import SettingGroupService

logger = logging.getLogger(__name__)

NS = 1_000_000_000

# Status evidence outlives one heartbeat gap; two missed heartbeats make it stale
EVIDENCE_LIFETIME = 2.0

_SERIAL_SPAN = UINT32_MAX + 1


def to_ns(seconds: float) -> int:
    return round(seconds * NS)


def serial_after(candidate: int, reference: int) -> bool:
    """True when a 32-bit counter moved forward from ``reference``, across a wrap too"""
    return 0 < (candidate - reference) % _SERIAL_SPAN < _SERIAL_SPAN // 2


class PickupElement:
    """Overcurrent element: persistent pickup, hysteretic drop"""

    def __init__(self, pickup: float, persistence: int = 3, drop_ratio: float = 0.95):
        if pickup <= 0:
            raise ValueError(f"pickup must be positive, got {pickup}")
        self.pickup = pickup
        self.persistence = persistence
        self.drop_ratio = drop_ratio
        self.picked = False
        self.count = 0
        self.picked_at_ns: Optional[int] = None

    def update(self, current: float, now_ns: int) -> Optional[RelayEventKind]:
        if not self.picked:
            if current > self.pickup:
                self.count += 1
                if self.count >= self.persistence:
                    self.picked = True
                    self.picked_at_ns = now_ns
                    return RelayEventKind.PICKUP
            else:
                self.count = 0
            return None
        if current < self.drop_ratio * self.pickup:
            self.reset()
            return RelayEventKind.DROP
        return None

    def reset(self) -> None:
        self.picked = False
        self.count = 0
        self.picked_at_ns = None


class RelayRuntime:
    """
    One adaptive relay: pickup element, neighbour view, active setting group
    and the decision rules

    Rules, in precedence order:
      1. the opposite adjacent relay is picked up -> instantaneous trip
      2. a downstream same-direction relay is picked up and either a downstream
         opposite-direction relay is picked up, none of them has a source behind
         it, or the picked-up downstream relay is itself waiting out a delay
         -> delayed trip after the coordination margin
      3. neither, once the failure window has passed since pickup, or a pending
         delay expired with the downstream relay still picked up
         -> instantaneous trip (protection failure presumed)

    Neighbour status older than the staleness window counts as nothing heard.
    """

    def __init__(self, relay_id: str, topology: GridTopology, group_set: SettingGroupSet,
                 times: Optional[RelayTimeSettings] = None, neighbors: Optional[NeighborMap] = None,
                 contingency: Contingency = Contingency(), persistence: int = 3, drop_ratio: float = 0.95,
                 failure_window: float = 1.132e-3, staleness_window: Optional[float] = None,
                 load_floor: float = 0.0):
        self.id = relay_id
        self.topology = topology
        self.number = topology.relay_number(relay_id)
        self.placement = topology.relay(relay_id)
        self.group_set = group_set
        self.times = times or RelayTimeSettings()
        self.neighbors = neighbors or RelayService.build_neighbor_map(topology, relay_id)
        self.delay = IdmtService.delta_t_min(self.times)
        self.failure_window_ns = to_ns(failure_window)
        self.staleness_ns = to_ns(staleness_window if staleness_window is not None else EVIDENCE_LIFETIME)
        self.load_floor = load_floor

        lines_out, sources_out = topology.effective_outages(contingency)
        self.lines_out: Set[str] = set(lines_out)
        self.sources_out: Set[str] = set(sources_out)
        self.open_breakers: Set[Tuple[str, str]] = set()

        self.active_group = SettingGroupService.select_active_group(group_set, self.observed_contingency())
        self.element = PickupElement(self._pickup_for(self.active_group), persistence, drop_ratio)

        self.state = RelayState.IDLE
        self.breaker_closed = True
        self.measured_current = 0.0
        self.pickup_time_ns: Optional[int] = None
        self.deadline_ns: Optional[int] = None
        self.trip_time_ns: Optional[int] = None
        self.trip_rule: Optional[int] = None

        self.view: Dict[str, NeighborStatus] = {n: NeighborStatus() for n in self.neighbors.all_neighbors}
        self._last_seq: Dict[int, Tuple[int, int]] = {}
        self.fed: Dict[str, bool] = {}
        self.unknown_publishers = 0
        self.replayed_frames = 0
        self._refresh_fed()

    # Settings

    def _pickup_for(self, group_id: int) -> float:
        return max(self.group_set.pickup(group_id), self.load_floor)

    @property
    def pickup(self) -> float:
        return self.element.pickup

    def observed_contingency(self) -> Contingency:
        lines = set(self.lines_out) | {line for line, _ in self.open_breakers}
        return Contingency.of(lines=lines, sources=self.sources_out)

    def _refresh_fed(self) -> None:
        observed = self.observed_contingency()
        self.fed = {
            relay: FaultService.source_behind(self.topology, relay, observed)
            for relay in self.neighbors.downstream_opposite_direction
        }

    def _reselect_group(self, now_ns: int) -> List[RelayEvent]:
        group_id = SettingGroupService.select_active_group(self.group_set, self.observed_contingency())
        if group_id == self.active_group:
            return []
        previous = self.active_group
        self.active_group = group_id
        self.element.pickup = self._pickup_for(group_id)
        logger.debug(f"{self.id}: setting group {previous} -> {group_id} at {now_ns} ns")
        return [RelayEvent(relay=self.id, kind=RelayEventKind.GROUP_CHANGE, time_ns=now_ns,
                           detail=f"group={group_id} pickup={self.element.pickup:.1f}")]

    # Measurements

    def on_sample(self, current: float, now_ns: int) -> List[RelayEvent]:
        """
        Feed one current sample (signed; reverse flow reads as 0)

        Returns:
            Emitted events; those with publish=True change the status dataset
        """
        directional = max(current, 0.0)
        self.measured_current = directional
        change = self.element.update(directional, now_ns)
        events: List[RelayEvent] = []

        if change == RelayEventKind.PICKUP:
            if self.state == RelayState.IDLE:
                self.state = RelayState.PICKED_UP
                self.pickup_time_ns = now_ns
            events.append(RelayEvent(relay=self.id, kind=RelayEventKind.PICKUP, time_ns=now_ns, publish=True,
                                     detail=f"I={directional:.1f} pickup={self.element.pickup:.1f}"))
        elif change == RelayEventKind.DROP:
            if self.state == RelayState.DELAY_PENDING:
                events.append(RelayEvent(relay=self.id, kind=RelayEventKind.DELAY_CANCEL, time_ns=now_ns))
            if self.state in (RelayState.PICKED_UP, RelayState.DELAY_PENDING):
                self.state = RelayState.IDLE
                self.pickup_time_ns = None
                self.deadline_ns = None
            events.append(RelayEvent(relay=self.id, kind=RelayEventKind.DROP, time_ns=now_ns, publish=True,
                                     detail=f"I={directional:.1f}"))
            if self.state == RelayState.IDLE:
                events.extend(self._reselect_group(now_ns))

        events.extend(self.evaluate(now_ns))
        return events

    # Communication

    def on_goose(self, frame: GooseFrame, now_ns: int) -> List[RelayEvent]:
        """
        Ingest a neighbour status frame or a grid status frame

        Frames that do not move (stNum, sqNum) forward, modulo the 32-bit wrap,
        are replays and change nothing. Frames from publishers the topology does
        not know are counted and dropped.
        """
        publisher = frame.publisher_id
        if publisher != GRID_STATUS_PUBLISHER and self.topology.relay_by_number(publisher) is None:
            self.unknown_publishers += 1
            logger.warning(f"{self.id}: frame from unknown publisher {publisher}")
            return []

        last = self._last_seq.get(publisher)
        if last is not None:
            if frame.st_num == last[0]:
                fresh = serial_after(frame.sq_num, last[1])
            else:
                fresh = serial_after(frame.st_num, last[0])
            if not fresh:
                self.replayed_frames += 1
                return []
        self._last_seq[publisher] = (frame.st_num, frame.sq_num)

        observed_before = self.observed_contingency()
        if publisher == GRID_STATUS_PUBLISHER:
            self._apply_grid_status(frame)
        else:
            self._apply_relay_status(self.topology.relay_by_number(publisher), frame, now_ns)

        events: List[RelayEvent] = []
        if self.observed_contingency() != observed_before:
            self._refresh_fed()
            if self.state == RelayState.IDLE:
                events.extend(self._reselect_group(now_ns))
        events.extend(self.evaluate(now_ns))
        return events

    def _apply_grid_status(self, frame: GooseFrame) -> None:
        for number, in_service in frame.values(EntryKind.LINE_IN_SERVICE).items():
            line = self.topology.line_by_number(number)
            if line is None:
                continue
            if in_service:
                self.lines_out.discard(line)
            else:
                self.lines_out.add(line)
        for number, in_service in frame.values(EntryKind.SOURCE_IN_SERVICE).items():
            source = self.topology.source_by_number(number)
            if source is None:
                continue
            if in_service:
                self.sources_out.discard(source)
            else:
                self.sources_out.add(source)

    def _apply_relay_status(self, relay: str, frame: GooseFrame, now_ns: int) -> None:
        number = self.topology.relay_number(relay)
        placement = self.topology.relay(relay)
        breaker = frame.values(EntryKind.BREAKER_CLOSED).get(number)
        if breaker is not None:
            if breaker:
                self.open_breakers.discard((placement.line, placement.bus))
            else:
                self.open_breakers.add((placement.line, placement.bus))

        status = self.view.get(relay)
        if status is None:
            return
        picked = frame.values(EntryKind.PICKED_UP).get(number)
        tripped = frame.values(EntryKind.TRIPPED).get(number)
        pending = frame.values(EntryKind.DELAY_PENDING).get(number)
        if picked is not None:
            status.picked_up = picked
        if tripped is not None:
            status.tripped = tripped
        if breaker is not None:
            status.breaker_closed = breaker
        if pending is not None:
            status.delay_pending = pending
        status.st_num = frame.st_num
        status.last_update_ns = now_ns
        status.stale = False

    def neighbor_view(self, now_ns: int) -> Dict[str, NeighborStatus]:
        """Neighbour statuses with the stale flag brought up to date"""
        for status in self.view.values():
            status.stale = status.last_update_ns is None or now_ns - status.last_update_ns > self.staleness_ns
        return self.view

    def status_dataset(self) -> Tuple[DatasetEntry, ...]:
        return (
            DatasetEntry(kind=EntryKind.PICKED_UP, entry_id=self.number, value=self.element.picked),
            DatasetEntry(kind=EntryKind.TRIPPED, entry_id=self.number, value=self.state == RelayState.TRIPPED),
            DatasetEntry(kind=EntryKind.BREAKER_CLOSED, entry_id=self.number, value=self.breaker_closed),
            DatasetEntry(kind=EntryKind.DELAY_PENDING, entry_id=self.number,
                         value=self.state == RelayState.DELAY_PENDING),
        )

    def open_breaker(self) -> None:
        self.breaker_closed = False
        self.open_breakers.add((self.placement.line, self.placement.bus))

    # Decisions

    def _picked(self, relays: FrozenSet[str], now_ns: int) -> List[str]:
        """Neighbours whose last fresh status says picked up; stale status counts as nothing heard"""
        view = self.neighbor_view(now_ns)
        return [r for r in sorted(relays) if view[r].picked_up and not view[r].stale]

    def _opposite_picked(self, now_ns: int) -> bool:
        opposite = self.neighbors.opposite_adjacent
        return opposite is not None and bool(self._picked(frozenset({opposite}), now_ns))

    def decide(self, now_ns: int) -> Decision:
        """Apply the three rules to the current neighbour view"""
        if self.state not in (RelayState.PICKED_UP, RelayState.DELAY_PENDING):
            return Decision.wait()

        if self._opposite_picked(now_ns):
            return Decision.instant(rule=1)

        same_up = self._picked(self.neighbors.downstream_same_direction, now_ns)
        if same_up:
            opposite_up = bool(self._picked(self.neighbors.downstream_opposite_direction, now_ns))
            any_fed = any(self.fed.get(r, True) for r in self.neighbors.downstream_opposite_direction)
            coordinating = any(self.view[r].delay_pending for r in same_up)
            if opposite_up or not any_fed or coordinating:
                return Decision.delayed(self.delay)

        if self.pickup_time_ns is not None and now_ns - self.pickup_time_ns >= self.failure_window_ns:
            return Decision.instant(rule=3)
        return Decision.wait()

    def evaluate(self, now_ns: int) -> List[RelayEvent]:
        """Run the decision rules and apply the resulting transition"""
        if self.state == RelayState.PICKED_UP:
            decision = self.decide(now_ns)
            if decision.kind == DecisionKind.INSTANT_TRIP:
                return self._trip(now_ns, decision.rule)
            if decision.kind == DecisionKind.DELAYED_TRIP:
                self.state = RelayState.DELAY_PENDING
                self.deadline_ns = now_ns + to_ns(decision.delay)
                return [RelayEvent(relay=self.id, kind=RelayEventKind.DELAY_START, time_ns=now_ns, publish=True,
                                   detail=f"deadline={self.deadline_ns}")]
            return []

        if self.state == RelayState.DELAY_PENDING:
            if self._opposite_picked(now_ns):
                return self._trip(now_ns, 1)
            if not self._picked(self.neighbors.downstream_same_direction, now_ns):
                self.state = RelayState.IDLE
                self.deadline_ns = None
                self.pickup_time_ns = None
                self.element.reset()
                events = [
                    RelayEvent(relay=self.id, kind=RelayEventKind.DELAY_CANCEL, time_ns=now_ns, publish=True),
                ]
                return events + self._reselect_group(now_ns)
            if self.deadline_ns is not None and now_ns >= self.deadline_ns:
                # downstream pickups outlasted the margin: the downstream breaker failed
                return self._trip(now_ns, 3, reason="deadline")
        return []

    def _trip(self, now_ns: int, rule: Optional[int], reason: Optional[str] = None) -> List[RelayEvent]:
        self.state = RelayState.TRIPPED
        self.trip_time_ns = now_ns
        self.trip_rule = rule
        self.deadline_ns = None
        detail = f"rule={rule}" if reason is None else f"rule={rule} reason={reason}"
        logger.debug(f"{self.id}: trip command at {now_ns} ns ({detail})")
        return [RelayEvent(relay=self.id, kind=RelayEventKind.TRIP_COMMAND, time_ns=now_ns, publish=True,
                           detail=detail)]

    @property
    def busy(self) -> bool:
        """Picked up or waiting on a decision"""
        return self.state in (RelayState.PICKED_UP, RelayState.DELAY_PENDING) or \
            (self.state == RelayState.IDLE and self.element.picked)


class BaselineRelay:
    """Conventional directional relay on one inverse-time curve, no communication"""

    def __init__(self, relay_id: str, config: IdmtConfig, persistence: int = 3, drop_ratio: float = 0.95):
        self.id = relay_id
        self.config = config
        self.element = PickupElement(config.pickup, persistence, drop_ratio)
        self.state = RelayState.IDLE
        self.progress = 0.0
        self.measured_current = 0.0
        self.pickup_time_ns: Optional[int] = None
        self.trip_time_ns: Optional[int] = None
        self.breaker_closed = True

    def on_sample(self, current: float, now_ns: int, step_ns: int) -> List[RelayEvent]:
        """
        Advance the accumulated operating time by step / t(I) and trip at 1
        """
        directional = max(current, 0.0)
        self.measured_current = directional
        change = self.element.update(directional, now_ns)
        events: List[RelayEvent] = []

        if change == RelayEventKind.PICKUP:
            if self.state == RelayState.IDLE:
                self.state = RelayState.PICKED_UP
                self.pickup_time_ns = now_ns
                self.progress = 0.0
            events.append(RelayEvent(relay=self.id, kind=RelayEventKind.PICKUP, time_ns=now_ns,
                                     detail=f"I={directional:.1f} pickup={self.element.pickup:.1f}"))
            return events
        if change == RelayEventKind.DROP:
            if self.state == RelayState.PICKED_UP:
                self.state = RelayState.IDLE
                self.pickup_time_ns = None
                self.progress = 0.0
            events.append(RelayEvent(relay=self.id, kind=RelayEventKind.DROP, time_ns=now_ns,
                                     detail=f"I={directional:.1f}"))
            return events

        if self.state == RelayState.PICKED_UP:
            operate = IdmtService.idmt_time(self.config, directional)
            if operate is not None:
                self.progress += step_ns / NS / operate
            if self.progress >= 1.0:
                self.state = RelayState.TRIPPED
                self.trip_time_ns = now_ns
                events.append(RelayEvent(relay=self.id, kind=RelayEventKind.TRIP_COMMAND, time_ns=now_ns,
                                         detail="idmt"))
        return events

    @property
    def busy(self) -> bool:
        return self.state == RelayState.PICKED_UP or (self.state == RelayState.IDLE and self.element.picked)


class RelayService:

    @staticmethod
    def build_neighbor_map(topology: GridTopology, relay: str) -> NeighborMap:
        """
        Neighbours of the relay at bus A on line A-B

        opposite adjacent: the relay at B on the same line; downstream same
        direction: relays at B on B's other lines; downstream opposite direction
        (also the relays upstream of the opposite one): relays at the far ends of
        B's other lines, facing B.
        """
        placement = topology.relay(relay)
        line = topology.line(placement.line)
        remote = line.other_end(placement.bus)

        same, opposite_direction = set(), set()
        for other in topology.lines_at(remote):
            if other.id == line.id:
                continue
            near = topology.relay_at(other.id, remote)
            far = topology.relay_at(other.id, other.other_end(remote))
            if near is not None and near != relay:
                same.add(near)
            if far is not None and far != relay:
                opposite_direction.add(far)

        return NeighborMap(
            relay=relay,
            opposite_adjacent=topology.relay_at(line.id, remote),
            downstream_same_direction=frozenset(same),
            downstream_opposite_direction=frozenset(opposite_direction),
            upstream_of_opposite=frozenset(opposite_direction),
        )

    @staticmethod
    def baseline_decide(config: IdmtConfig, current: float, pickup_time: float, now: float) -> Decision:
        """Constant-current inverse-time decision: trip once the operating time has elapsed"""
        operate = IdmtService.idmt_time(config, current)
        if operate is not None and now - pickup_time >= operate:
            return Decision.instant(rule=None)
        return Decision.wait()


# Singleton
relay_service = RelayService()
