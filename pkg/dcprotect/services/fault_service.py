"""
Fault Service
Linear resistive DC network reduction: Thevenin fault currents, first-order
RL rise waveforms, relay-measured fault shares, load flow and per-relay
minimum fault current tables
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np

from dcprotect.schemas.grid import (
    ND,
    Contingency,
    FaultCurrent,
    FaultKind,
    FaultSpec,
    GridTopology,
    NotDetected,
)
from dcprotect.schemas.settings import MinFaultTable, TableEntry

logger = logging.getLogger(__name__)

FAULT_NODE = "__fault__"
POSITION_EPS = 1e-6
MIN_INDUCTANCE = 1e-12
# relay shares below this fraction of the fault current count as no detection
SHARE_TOLERANCE = 1e-9

Breaker = Tuple[str, str]


@dataclass(frozen=True)
class Branch:
    """One conducting segment of a line (the whole line, or one side of the fault node)"""
    a: str
    b: str
    resistance: float
    inductance: float
    line: str


@dataclass
class FaultSolution:
    current: FaultCurrent
    v_th: float = 0.0
    r_th: float = math.inf
    l_th: float = 0.0
    tau: float = 0.0
    node_voltages: Dict[str, float] = field(default_factory=dict)
    relay_currents: Dict[str, float] = field(default_factory=dict)

    @property
    def isolated(self) -> bool:
        return isinstance(self.current, NotDetected)


class FaultWaveform:
    """i(t) = I_ss * (1 - exp(-t / tau)), t measured from fault inception"""

    def __init__(self, i_ss: float, tau: float):
        self.i_ss = i_ss
        self.tau = tau

    def __call__(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        if self.tau <= 0:
            value = np.where(t > 0, self.i_ss, 0.0)
        else:
            value = self.i_ss * -np.expm1(-t / self.tau)
        return float(value) if value.ndim == 0 else value

    def time_to_fraction(self, fraction: float) -> float:
        """Time for the rise to reach fraction * I_ss"""
        if not 0 <= fraction < 1:
            raise ValueError("fraction must be in [0, 1)")
        return -self.tau * math.log1p(-fraction)


class FaultService:
    """Simplified fault-current solver over a GridTopology"""

    @staticmethod
    def clamp_position(position: float) -> float:
        return min(max(position, POSITION_EPS), 1.0 - POSITION_EPS)

    @staticmethod
    def line_is_energized(topology: GridTopology, line_id: str, lines_out: FrozenSet[str],
                          open_breakers: FrozenSet[Breaker]) -> bool:
        if line_id in lines_out:
            return False
        line = topology.line(line_id)
        return (line_id, line.from_bus) not in open_breakers and (line_id, line.to_bus) not in open_breakers

    @staticmethod
    def branches(topology: GridTopology, contingency: Contingency,
                 open_breakers: Iterable[Breaker] = (), fault: Optional[FaultSpec] = None) -> List[Branch]:
        """
        Conducting segments under a contingency and a set of open breakers

        The faulted line is split at the fault node; an open breaker removes only
        its own segment. Any other line with an open end carries nothing.
        """
        lines_out, _ = topology.effective_outages(contingency)
        opened = frozenset(open_breakers)
        out: List[Branch] = []
        for line in topology.lines:
            if line.id in lines_out:
                continue
            if fault is not None and line.id == fault.line:
                p = FaultService.clamp_position(fault.position)
                if (line.id, line.from_bus) not in opened:
                    out.append(Branch(line.from_bus, FAULT_NODE, line.resistance * p, line.inductance * p, line.id))
                if (line.id, line.to_bus) not in opened:
                    out.append(Branch(line.to_bus, FAULT_NODE, line.resistance * (1 - p),
                                      line.inductance * (1 - p), line.id))
                continue
            if not FaultService.line_is_energized(topology, line.id, lines_out, opened):
                continue
            out.append(Branch(line.from_bus, line.to_bus, line.resistance, line.inductance, line.id))
        return out

    @staticmethod
    def graph(topology: GridTopology, branches: Sequence[Branch]) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(b.id for b in topology.buses)
        for branch in branches:
            g.add_edge(branch.a, branch.b, line=branch.line)
        return g

    @staticmethod
    def live_sources(topology: GridTopology, contingency: Contingency) -> List[Tuple[str, float]]:
        """(bus, internal resistance) of every in-service source"""
        _, sources_out = topology.effective_outages(contingency)
        return [
            (s.bus, topology.source_resistance(s))
            for s in topology.sources
            if s.id not in sources_out
        ]

    @staticmethod
    def _segment_currents(topology: GridTopology, branches: Sequence[Branch],
                          voltages: Dict[str, float]) -> Dict[str, float]:
        """Signed current leaving each relay's bus along its line (positive = protected direction)"""
        currents: Dict[str, float] = {}
        for branch in branches:
            if branch.a not in voltages or branch.b not in voltages:
                continue
            flow = (voltages[branch.a] - voltages[branch.b]) / branch.resistance
            relay_a = topology.relay_at(branch.line, branch.a)
            if relay_a is not None:
                currents[relay_a] = flow
            if branch.b != FAULT_NODE:
                relay_b = topology.relay_at(branch.line, branch.b)
                if relay_b is not None:
                    currents[relay_b] = -flow
        return currents

    @staticmethod
    def solve(topology: GridTopology, fault: FaultSpec, contingency: Contingency = Contingency(),
              open_breakers: Iterable[Breaker] = ()) -> FaultSolution:
        """
        Thevenin reduction at the fault node plus the resulting network state

        Sources are ideal voltages behind their internal resistance (Norton
        form); loads are left out of the fault network. Driving voltage and the
        grounding resistance depend on the fault kind.

        Args:
            topology: Grid
            fault: Fault location, kind and resistance
            contingency: Pre-fault outages
            open_breakers: (line, bus) breakers already open

        Returns:
            FaultSolution with current = ND when no source reaches the fault
        """
        if not topology.has_line(fault.line):
            raise ValueError(f"fault references unknown line {fault.line}")
        topology.check_contingency(contingency)
        lines_out, _ = topology.effective_outages(contingency)
        if fault.line in lines_out:
            return FaultSolution(current=ND)

        branches = FaultService.branches(topology, contingency, open_breakers, fault)
        graph = FaultService.graph(topology, branches)
        graph.add_node(FAULT_NODE)
        component = nx.node_connected_component(graph, FAULT_NODE)

        sources = [(bus, r) for bus, r in FaultService.live_sources(topology, contingency) if bus in component]
        if not sources:
            return FaultSolution(current=ND)

        voltage = topology.driving_voltage(fault.kind)
        r_fault = fault.fault_resistance
        if fault.kind == FaultKind.POLE_GROUND:
            r_fault += topology.grounding_resistance

        nodes = sorted(n for n in component if n != FAULT_NODE) + [FAULT_NODE]
        index = {n: i for i, n in enumerate(nodes)}
        f = index[FAULT_NODE]
        n = len(nodes)

        conductance = np.zeros((n, n))
        injection = np.zeros(n)
        live = [b for b in branches if b.a in index and b.b in index]
        for branch in live:
            g = 1.0 / branch.resistance
            i, j = index[branch.a], index[branch.b]
            conductance[i, i] += g
            conductance[j, j] += g
            conductance[i, j] -= g
            conductance[j, i] -= g
        for bus, r in sources:
            k = index[bus]
            conductance[k, k] += 1.0 / r
            injection[k] += voltage / r

        v_open = np.linalg.solve(conductance, injection)
        unit = np.zeros(n)
        unit[f] = 1.0
        z_column = np.linalg.solve(conductance, unit)

        v_th = float(v_open[f])
        r_th = float(z_column[f])
        total_r = r_th + r_fault
        current = 0.0 if math.isinf(total_r) else v_th / total_r

        voltages = v_open - z_column * current
        node_voltages = {node: float(voltages[index[node]]) for node in nodes}

        l_th = FaultService._driving_point_inductance(nodes, index, live, {bus for bus, _ in sources})
        tau = 0.0 if math.isinf(total_r) or total_r <= 0 else l_th / total_r

        return FaultSolution(
            current=current,
            v_th=v_th,
            r_th=r_th,
            l_th=l_th,
            tau=tau,
            node_voltages=node_voltages,
            relay_currents=FaultService._segment_currents(topology, live, node_voltages),
        )

    @staticmethod
    def _driving_point_inductance(nodes: List[str], index: Dict[str, int], branches: Sequence[Branch],
                                  grounded: Set[str]) -> float:
        """Inductance seen from the fault node with every source bus tied to ground"""
        free = [node for node in nodes if node not in grounded]
        sub = {node: i for i, node in enumerate(free)}
        gamma = np.zeros((len(free), len(free)))
        for branch in branches:
            y = 1.0 / max(branch.inductance, MIN_INDUCTANCE)
            a, b = sub.get(branch.a), sub.get(branch.b)
            if a is not None:
                gamma[a, a] += y
            if b is not None:
                gamma[b, b] += y
            if a is not None and b is not None:
                gamma[a, b] -= y
                gamma[b, a] -= y
        unit = np.zeros(len(free))
        f = sub[FAULT_NODE]
        unit[f] = 1.0
        return float(np.linalg.solve(gamma, unit)[f])

    @staticmethod
    def thevenin_fault_current(topology: GridTopology, fault: FaultSpec,
                               contingency: Contingency = Contingency()) -> FaultCurrent:
        """Steady-state fault current V_th / (R_th + R_fault), or ND when isolated"""
        return FaultService.solve(topology, fault, contingency).current

    @staticmethod
    def fault_waveform(topology: GridTopology, fault: FaultSpec,
                       contingency: Contingency = Contingency()) -> Union[FaultWaveform, NotDetected]:
        solution = FaultService.solve(topology, fault, contingency)
        if solution.isolated:
            return ND
        return FaultWaveform(float(solution.current), solution.tau)

    @staticmethod
    def source_behind(topology: GridTopology, relay: str, contingency: Contingency = Contingency(),
                      open_breakers: Iterable[Breaker] = ()) -> bool:
        """Whether an in-service source is reachable from the relay's bus without using its own line"""
        placement = topology.relay(relay)
        source_buses = {bus for bus, _ in FaultService.live_sources(topology, contingency)}
        if placement.bus in source_buses:
            return True
        branches = [b for b in FaultService.branches(topology, contingency, open_breakers) if b.line != placement.line]
        graph = FaultService.graph(topology, branches)
        reachable = nx.node_connected_component(graph, placement.bus)
        return bool(reachable & source_buses)

    @staticmethod
    def relay_fault_current(topology: GridTopology, relay: str, fault: FaultSpec,
                            contingency: Contingency = Contingency()) -> FaultCurrent:
        """Directional share of the fault current measured at the relay, or ND"""
        placement = topology.relay(relay)
        lines_out, _ = topology.effective_outages(contingency)
        if placement.line in lines_out:
            return ND
        solution = FaultService.solve(topology, fault, contingency)
        if solution.isolated:
            return ND
        share = solution.relay_currents.get(relay, 0.0)
        if share <= SHARE_TOLERANCE * float(solution.current):
            return ND
        if not FaultService.source_behind(topology, relay, contingency):
            return ND
        return share

    @staticmethod
    def relay_currents(topology: GridTopology, fault: FaultSpec, contingency: Contingency = Contingency(),
                       open_breakers: Iterable[Breaker] = ()) -> Dict[str, float]:
        """Signed fault-network current at every relay (0 where no fault current flows)"""
        solution = FaultService.solve(topology, fault, contingency, open_breakers)
        return {r.id: solution.relay_currents.get(r.id, 0.0) for r in topology.relays}

    @staticmethod
    def load_flow(topology: GridTopology, contingency: Contingency = Contingency(),
                  open_breakers: Iterable[Breaker] = (), out_lines: Iterable[str] = ()) -> Dict[str, float]:
        """
        Pre-fault signed directional load current at every relay

        Loads are constant resistances at the system voltage; sources are the same
        Norton equivalents as in the fault network.

        Args:
            out_lines: extra lines treated as out (e.g. a faulted line with an open end)
        """
        topology.check_contingency(contingency)
        contingency = Contingency.of(lines=contingency.line_outages | frozenset(out_lines),
                                     sources=contingency.source_outages)
        branches = FaultService.branches(topology, contingency, open_breakers)
        graph = FaultService.graph(topology, branches)
        sources = FaultService.live_sources(topology, contingency)
        v_sys = topology.operating_voltage

        voltages: Dict[str, float] = {}
        for component in nx.connected_components(graph):
            fed = [(bus, r) for bus, r in sources if bus in component]
            if not fed:
                for node in component:
                    voltages[node] = 0.0
                continue
            nodes = sorted(component)
            index = {node: i for i, node in enumerate(nodes)}
            conductance = np.zeros((len(nodes), len(nodes)))
            injection = np.zeros(len(nodes))
            for branch in branches:
                if branch.a not in index:
                    continue
                g = 1.0 / branch.resistance
                i, j = index[branch.a], index[branch.b]
                conductance[i, i] += g
                conductance[j, j] += g
                conductance[i, j] -= g
                conductance[j, i] -= g
            for bus, r in fed:
                conductance[index[bus], index[bus]] += 1.0 / r
                injection[index[bus]] += v_sys / r
            for load in topology.loads:
                if load.bus in index and load.power > 0:
                    conductance[index[load.bus], index[load.bus]] += load.power / (v_sys * v_sys)
            solved = np.linalg.solve(conductance, injection)
            voltages.update({node: float(solved[index[node]]) for node in nodes})

        measured = FaultService._segment_currents(topology, branches, voltages)
        return {r.id: measured.get(r.id, 0.0) for r in topology.relays}

    @staticmethod
    def default_contingencies(topology: GridTopology) -> List[Contingency]:
        """No/each single line outage crossed with no/each single source outage"""
        line_options: List[Tuple[str, ...]] = [()] + [(l.id,) for l in topology.lines]
        source_options: List[Tuple[str, ...]] = [()] + [(s.id,) for s in topology.sources]
        return [Contingency.of(lines=l, sources=s) for l in line_options for s in source_options]

    @staticmethod
    def default_protection_zone(topology: GridTopology, relay: str) -> List[Tuple[str, float]]:
        """Worst-case fault point: the far end of the relay's own line"""
        placement = topology.relay(relay)
        line = topology.line(placement.line)
        return [(line.id, 1.0 if placement.bus == line.from_bus else 0.0)]

    @staticmethod
    def min_fault_current_table(topology: GridTopology, relay: str, contingencies: Sequence[Contingency],
                                protection_zone: Optional[Sequence[Tuple[str, float]]] = None,
                                kinds: Sequence[FaultKind] = (FaultKind.POLE_POLE, FaultKind.POLE_GROUND),
                                ) -> MinFaultTable:
        """
        Minimum relay-measured fault current over the zone's worst fault points

        Args:
            topology: Grid
            relay: Relay id
            contingencies: Rows of the table
            protection_zone: (line, position) fault points; defaults to the far end
                of the relay's line
            kinds: Fault kinds to minimize over

        Returns:
            MinFaultTable with one entry per contingency (ND when nothing reaches)
        """
        if not topology.has_relay(relay):
            raise ValueError(f"unknown relay {relay}")
        zone = list(protection_zone) if protection_zone is not None else \
            FaultService.default_protection_zone(topology, relay)
        if not zone:
            raise ValueError("protection zone is empty")

        entries: List[TableEntry] = []
        for contingency in contingencies:
            values = []
            for line, position in zone:
                for kind in kinds:
                    fault = FaultSpec(line=line, position=position, kind=kind)
                    value = FaultService.relay_fault_current(topology, relay, fault, contingency)
                    if not isinstance(value, NotDetected):
                        values.append(value)
            entries.append(TableEntry(contingency=contingency, current=min(values) if values else ND))

        table = MinFaultTable(relay=relay, entries=tuple(entries))
        logger.debug(f"Fault table for {relay}: {len(table.finite())}/{len(table)} finite entries")
        return table


# Singleton
fault_service = FaultService()
