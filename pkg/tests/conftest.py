"""
Shared fixtures: the shipped 14-bus grid, the R12 fault current fixture and a
three-bus chain small enough to enumerate exhaustively
"""
import pytest

from dcprotect.config import PROJECT_ROOT
from dcprotect.schemas.sim import SimConfig
from dcprotect.services.simulation_service import SimulationService
from dcprotect.services.topology_service import TopologyService

DATA = PROJECT_ROOT / "data"

# B1(S1) --L12-- B2(D2) --L23-- B3(S3), one relay at each line end
CHAIN_TOML = """
[grid]
name = "chain"
pole_voltage = 750.0
grounding_resistance = 0.1
source_resistance_factor = 0.05

[[buses]]
id = "B1"
nominal_voltage = 750.0

[[buses]]
id = "B2"
nominal_voltage = 750.0

[[buses]]
id = "B3"
nominal_voltage = 750.0

[[lines]]
id = "L12"
from_bus = "B1"
to_bus = "B2"
length_km = 2.0
r_ohm_per_km = 0.018
l_h_per_km = 3.2e-5

[[lines]]
id = "L23"
from_bus = "B2"
to_bus = "B3"
length_km = 2.0
r_ohm_per_km = 0.018
l_h_per_km = 3.2e-5

[[sources]]
id = "S1"
bus = "B1"
rating = 1.0e6

[[sources]]
id = "S3"
bus = "B3"
rating = 5.0e5

[[loads]]
id = "D2"
bus = "B2"
power = 1.0e5

[[relays]]
id = "R12"
line = "L12"
bus = "B1"

[[relays]]
id = "R21"
line = "L12"
bus = "B2"

[[relays]]
id = "R23"
line = "L23"
bus = "B2"

[[relays]]
id = "R32"
line = "L23"
bus = "B3"
"""


@pytest.fixture(scope="session")
def chain_toml():
    return CHAIN_TOML


@pytest.fixture(scope="session")
def chain():
    return TopologyService.load_topology(CHAIN_TOML)


@pytest.fixture(scope="session")
def ieee14():
    return TopologyService.load_topology_file(DATA / "ieee14_dc.toml")


@pytest.fixture(scope="session")
def r12_table(ieee14):
    return TopologyService.load_fault_table_file(DATA / "r12_min_fault_currents.toml", ieee14)


@pytest.fixture(scope="session")
def ieee14_plan(ieee14):
    """Solver tables and groups for all 40 relays (the expensive part of every 14-bus run)"""
    return SimulationService.build_plan(ieee14)


@pytest.fixture
def config():
    return SimConfig()


@pytest.fixture
def scenario_text():
    def read(name: str) -> str:
        return (DATA / "scenarios" / name).read_text(encoding="utf-8")
    return read
