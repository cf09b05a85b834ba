"""
Tests for the resistive fault solver, load flow and minimum fault current tables

Hand-derived values use the three-bus chain: S1 (0.1125 ohm) at B1, S3
(0.225 ohm) at B3, 2 km lines at 0.018 ohm/km and 3.2e-5 H/km.
"""
import math

import pytest

from dcprotect.schemas.grid import ND, Contingency, FaultKind, FaultSpec
from dcprotect.services.fault_service import FaultService, FaultWaveform

# mid-L12 fault: 1 km to B1, 1 km + 2 km to B3
R_WEST = 0.1125 + 0.018
R_EAST = 0.225 + 0.018 + 0.036
R_TH = R_WEST * R_EAST / (R_WEST + R_EAST)


def mid(line: str = "L12", kind: FaultKind = FaultKind.POLE_POLE) -> FaultSpec:
    return FaultSpec(line=line, position=0.5, kind=kind)


# ---------------------------------------------------------------------------
# Thevenin reduction
# ---------------------------------------------------------------------------


class TestSolve:
    def test_pole_pole_current(self, chain):
        solution = FaultService.solve(chain, mid())
        assert solution.v_th == pytest.approx(1500.0)
        assert solution.r_th == pytest.approx(R_TH)
        assert float(solution.current) == pytest.approx(1500.0 / R_WEST + 1500.0 / R_EAST)

    def test_pole_ground_adds_grounding_resistance(self, chain):
        current = FaultService.thevenin_fault_current(chain, mid(kind=FaultKind.POLE_GROUND))
        assert float(current) == pytest.approx(750.0 / (R_TH + 0.1))

    def test_fault_resistance(self, chain):
        fault = FaultSpec(line="L12", position=0.5, fault_resistance=0.5)
        assert float(FaultService.thevenin_fault_current(chain, fault)) == pytest.approx(1500.0 / (R_TH + 0.5))

    def test_relay_shares_and_directions(self, chain):
        shares = FaultService.relay_currents(chain, mid())
        assert shares["R12"] == pytest.approx(1500.0 / R_WEST)
        assert shares["R21"] == pytest.approx(1500.0 / R_EAST)
        # L23 carries the eastern share toward B2
        assert shares["R32"] == pytest.approx(1500.0 / R_EAST)
        assert shares["R23"] == pytest.approx(-1500.0 / R_EAST)

    def test_shares_sum_to_fault_current(self, chain):
        solution = FaultService.solve(chain, mid())
        assert solution.relay_currents["R12"] + solution.relay_currents["R21"] == pytest.approx(float(solution.current))

    def test_time_constant(self, chain):
        solution = FaultService.solve(chain, mid())
        l_west, l_east = 3.2e-5, 3 * 3.2e-5
        assert solution.l_th == pytest.approx(l_west * l_east / (l_west + l_east))
        assert solution.tau == pytest.approx(solution.l_th / R_TH)

    def test_faulted_line_out_is_isolated(self, chain):
        solution = FaultService.solve(chain, mid(), Contingency.of(lines=["L12"]))
        assert solution.isolated
        assert solution.current is ND

    def test_no_source_is_isolated(self, chain):
        contingency = Contingency.of(sources=["S1", "S3"])
        assert FaultService.thevenin_fault_current(chain, mid(), contingency) is ND

    def test_open_breakers_cut_one_side(self, chain):
        solution = FaultService.solve(chain, mid(), open_breakers=[("L12", "B2")])
        assert float(solution.current) == pytest.approx(1500.0 / R_WEST)
        assert "R21" not in solution.relay_currents

    def test_unknown_line(self, chain):
        with pytest.raises(ValueError, match="unknown line"):
            FaultService.solve(chain, mid("L99"))

    def test_unknown_contingency_element(self, chain):
        with pytest.raises(ValueError, match="unknown source"):
            FaultService.solve(chain, mid(), Contingency.of(sources=["S9"]))


class TestWaveform:
    def test_rise(self):
        waveform = FaultWaveform(1000.0, 1e-3)
        assert waveform(0.0) == 0.0
        assert waveform(1e-3) == pytest.approx(1000.0 * (1 - math.exp(-1)))
        assert waveform(-1.0) == 0.0

    def test_time_to_fraction(self):
        waveform = FaultWaveform(1000.0, 2e-3)
        t = waveform.time_to_fraction(0.5)
        assert waveform(t) == pytest.approx(500.0)

    def test_zero_tau_is_a_step(self):
        waveform = FaultWaveform(1000.0, 0.0)
        assert waveform(1e-9) == 1000.0

    def test_solver_waveform(self, chain):
        waveform = FaultService.fault_waveform(chain, mid())
        assert waveform.i_ss == pytest.approx(1500.0 / R_TH)
        assert FaultService.fault_waveform(chain, mid(), Contingency.of(lines=["L12"])) is ND


# ---------------------------------------------------------------------------
# Relay view
# ---------------------------------------------------------------------------


class TestRelayFaultCurrent:
    def test_source_behind(self, chain):
        assert FaultService.source_behind(chain, "R21")
        assert not FaultService.source_behind(chain, "R21", Contingency.of(sources=["S3"]))
        assert not FaultService.source_behind(chain, "R21", Contingency.of(lines=["L23"]))

    def test_reverse_flow_is_not_detected(self, chain):
        assert FaultService.relay_fault_current(chain, "R23", mid()) is ND

    def test_relay_without_source_behind(self, chain):
        contingency = Contingency.of(sources=["S1"])
        assert FaultService.relay_fault_current(chain, "R12", mid(), contingency) is ND
        assert float(FaultService.relay_fault_current(chain, "R21", mid(), contingency)) > 0

    def test_own_line_out(self, chain):
        assert FaultService.relay_fault_current(chain, "R32", mid("L23"), Contingency.of(lines=["L23"])) is ND


class TestLoadFlow:
    def test_line_ends_mirror(self, chain):
        flow = FaultService.load_flow(chain)
        assert flow["R12"] == pytest.approx(-flow["R21"])
        assert flow["R32"] == pytest.approx(-flow["R23"])

    def test_load_is_fed_from_both_ends(self, chain):
        flow = FaultService.load_flow(chain)
        assert flow["R12"] > 0
        assert flow["R32"] > 0
        # 100 kW at about 1500 V
        assert flow["R12"] + flow["R32"] == pytest.approx(1.0e5 / 1500.0, rel=0.01)

    def test_single_feeder(self, chain):
        flow = FaultService.load_flow(chain, Contingency.of(sources=["S3"]))
        assert flow["R32"] == pytest.approx(0.0, abs=1e-9)
        assert flow["R12"] == pytest.approx(1.0e5 / 1500.0, rel=0.01)

    def test_dead_island_carries_nothing(self, chain):
        flow = FaultService.load_flow(chain, Contingency.of(lines=["L12"], sources=["S3"]))
        assert all(value == pytest.approx(0.0, abs=1e-9) for value in flow.values())


class TestMinFaultCurrentTable:
    def test_default_contingencies(self, chain, ieee14):
        assert len(FaultService.default_contingencies(chain)) == 3 * 3
        assert len(FaultService.default_contingencies(ieee14)) == 21 * 6
        assert FaultService.default_contingencies(chain)[0] == Contingency()

    def test_default_zone_is_far_end(self, chain):
        assert FaultService.default_protection_zone(chain, "R12") == [("L12", 1.0)]
        assert FaultService.default_protection_zone(chain, "R21") == [("L12", 0.0)]

    def test_chain_table(self, chain):
        table = FaultService.min_fault_current_table(chain, "R12", FaultService.default_contingencies(chain))
        assert len(table) == 9
        assert table.get(Contingency.of(lines=["L12"])) is ND
        assert table.get(Contingency.of(sources=["S1"])) is ND
        healthy = float(table.get(Contingency()))
        # pole-ground at the far end is the minimum, below the pole-pole value
        pole_pole = FaultService.relay_fault_current(chain, "R12", FaultSpec(line="L12", position=1.0))
        assert 0 < healthy < float(pole_pole)

    def test_unknown_relay(self, chain):
        with pytest.raises(ValueError, match="unknown relay"):
            FaultService.min_fault_current_table(chain, "R99", [Contingency()])
