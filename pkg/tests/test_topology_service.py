"""
Tests for topology and fixture loading
"""
import pytest

from dcprotect.exceptions import FixtureError, TopologyParseError, TopologyValidationError
from dcprotect.schemas.grid import ND, Contingency
from dcprotect.services.topology_service import TopologyService

MINIMAL = """
[[buses]]
id = "B1"
nominal_voltage = 750.0

[[buses]]
id = "B2"
nominal_voltage = 750.0

[[lines]]
id = "L12"
from_bus = "B1"
to_bus = "B2"
length_km = {length}
r_ohm_per_km = 0.018
"""


# ---------------------------------------------------------------------------
# Shipped 14-bus grid
# ---------------------------------------------------------------------------


class TestIeee14:
    def test_summary(self, ieee14):
        assert ieee14.summary == "14 buses, 20 lines"

    def test_element_counts(self, ieee14):
        assert len(ieee14.sources) == 5
        assert len(ieee14.loads) == 10
        assert len(ieee14.relays) == 40

    def test_relay_numbering_follows_document_order(self, ieee14):
        assert ieee14.relay_number("R12") == 1
        assert ieee14.relay_number("R21") == 2
        assert ieee14.relay_by_number(1) == "R12"
        assert ieee14.relay_by_number(41) is None

    def test_relay_faces_far_bus(self, ieee14):
        assert ieee14.far_bus("R12") == "B2"
        assert ieee14.far_bus("R21") == "B1"

    def test_one_relay_per_line_end(self, ieee14):
        assert len(ieee14.breakers) == len(set(ieee14.breakers)) == 2 * len(ieee14.lines)

    def test_source_resistance_from_rating(self, ieee14):
        # 0.05 * (2 * 750 V)^2 / 1 MW
        assert ieee14.source_resistance(ieee14.source("S1")) == pytest.approx(0.1125)

    def test_unipolar_buses(self, ieee14):
        assert not ieee14.bus("B7").bipolar
        assert ieee14.bus("B7").nominal_voltage < ieee14.pole_voltage
        assert ieee14.bus("B1").bipolar


class TestContingencyLabels:
    def test_none(self):
        assert Contingency().label == "none"

    def test_lines_then_sources(self):
        assert Contingency.of(lines=["L25"], sources=["S8"]).label == "L25+S8"

    def test_hashable_and_order_free(self):
        a = Contingency.of(lines=["L12", "L23"])
        b = Contingency.of(lines=["L23", "L12"])
        assert a == b
        assert len({a, b}) == 1


# ---------------------------------------------------------------------------
# Parse and validation errors
# ---------------------------------------------------------------------------


class TestLoadTopologyErrors:
    def test_minimal_document_loads(self):
        topology = TopologyService.load_topology(MINIMAL.format(length=1.0))
        assert topology.summary == "2 buses, 1 lines"
        assert topology.name == "grid"

    def test_empty_document(self):
        with pytest.raises(TopologyParseError) as exc:
            TopologyService.load_topology("   ")
        assert exc.value.line == 1

    def test_syntax_error_is_located(self):
        with pytest.raises(TopologyParseError) as exc:
            TopologyService.load_topology('[[buses]\nid = "B1"\n')
        assert exc.value.line == 1
        assert exc.value.column is not None

    def test_missing_lines_section(self):
        with pytest.raises(TopologyParseError) as exc:
            TopologyService.load_topology('[[buses]]\nid = "B1"\nnominal_voltage = 750.0\n')
        assert exc.value.field == "lines"

    def test_section_must_be_array_of_tables(self):
        text = MINIMAL.format(length=1.0) + '\n[relays]\nid = "R12"\n'
        with pytest.raises(TopologyParseError) as exc:
            TopologyService.load_topology(text)
        assert exc.value.field == "relays"

    def test_nonpositive_length_names_field(self):
        with pytest.raises(TopologyValidationError) as exc:
            TopologyService.load_topology(MINIMAL.format(length=-1.0))
        assert exc.value.field == "lines[0].length_km"

    def test_unknown_bus_reference(self):
        text = MINIMAL.format(length=1.0) + '\n[[loads]]\nid = "D9"\nbus = "B9"\npower = 1.0\n'
        with pytest.raises(TopologyValidationError, match="unknown bus B9"):
            TopologyService.load_topology(text)

    def test_relay_off_its_line(self):
        text = MINIMAL.format(length=1.0) + (
            '\n[[buses]]\nid = "B3"\nnominal_voltage = 750.0\n'
            '\n[[lines]]\nid = "L23"\nfrom_bus = "B2"\nto_bus = "B3"\nlength_km = 1.0\nr_ohm_per_km = 0.018\n'
            '\n[[relays]]\nid = "R31"\nline = "L12"\nbus = "B3"\n'
        )
        with pytest.raises(TopologyValidationError, match="not an end of L12"):
            TopologyService.load_topology(text)

    def test_bipolar_bus_off_pole_voltage(self):
        b2 = 'id = "B2"\nnominal_voltage = '
        text = MINIMAL.format(length=1.0).replace(b2 + "750.0", b2 + "700.0")
        with pytest.raises(TopologyValidationError, match="B2 is rated 700 V but the grid poles are at 750 V"):
            TopologyService.load_topology(text)

    def test_unipolar_bus_above_pole_voltage(self):
        text = MINIMAL.format(length=1.0) + '\n[[buses]]\nid = "B3"\nnominal_voltage = 900.0\nbipolar = false\n'
        with pytest.raises(TopologyValidationError, match="unipolar bus B3 at 900 V exceeds"):
            TopologyService.load_topology(text)

    def test_disconnected_grid(self):
        text = MINIMAL.format(length=1.0) + '\n[[buses]]\nid = "B3"\nnominal_voltage = 750.0\n'
        with pytest.raises(TopologyValidationError, match="not connected"):
            TopologyService.load_topology(text)

    def test_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            TopologyService.load_topology("")


# ---------------------------------------------------------------------------
# Minimum fault current fixture
# ---------------------------------------------------------------------------


class TestFaultTableFixture:
    def test_shape(self, r12_table):
        assert r12_table.relay == "R12"
        # 20 line-outage rows x 6 source-outage columns
        assert len(r12_table) == 120

    def test_maximum_and_minimum(self, r12_table):
        assert r12_table.maximum == pytest.approx(881.5)
        assert r12_table.minimum == pytest.approx(289.6)

    def test_own_line_out_is_not_detected(self, r12_table):
        assert r12_table.get(Contingency.of(lines=["L12"])) is ND
        assert r12_table.get(Contingency.of(lines=["L12"], sources=["S3"])) is ND

    def test_cells_map_to_contingencies(self, r12_table):
        assert r12_table.get(Contingency.of(lines=["L23"], sources=["S3"])) == pytest.approx(881.5)
        assert r12_table.get(Contingency.of(lines=["L15"])) == pytest.approx(840.3)

    def test_no_outage_row_is_absent(self, r12_table):
        assert Contingency() not in r12_table

    def test_unknown_relay(self, ieee14):
        text = 'relay = "R99"\ncolumns = [""]\n[rows]\nL15 = [100.0]\n'
        with pytest.raises(FixtureError, match="R99"):
            TopologyService.load_fault_table(text, ieee14)

    def test_row_width_must_match_columns(self):
        text = 'relay = "R12"\ncolumns = ["", "S1"]\n[rows]\nL15 = [100.0]\n'
        with pytest.raises(FixtureError, match="expected 2 cells"):
            TopologyService.load_fault_table(text)

    def test_zero_amperes_is_rejected(self):
        text = 'relay = "R12"\ncolumns = [""]\n[rows]\nL15 = [0.0]\n'
        with pytest.raises(FixtureError, match="N/D"):
            TopologyService.load_fault_table(text)

    def test_text_cell_must_be_nd(self):
        text = 'relay = "R12"\ncolumns = [""]\n[rows]\nL15 = ["lots"]\n'
        with pytest.raises(FixtureError):
            TopologyService.load_fault_table(text)
