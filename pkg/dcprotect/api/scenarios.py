from typing import Optional

from fastapi import APIRouter

from dcprotect.api.common import bad_request, topology_from
from dcprotect.exceptions import DcProtectError
from dcprotect.schemas.api import ScenarioRequest
from dcprotect.schemas.settings import MinFaultTable
from dcprotect.schemas.sim import ComparisonTable, SimConfig, TimingReport
from dcprotect.services.simulation_service import SimulationService
from dcprotect.services.topology_service import TopologyService

router = APIRouter(prefix="/api/scenarios", tags=["scenarios"])


def _prepare(request: ScenarioRequest):
    topology = topology_from(request.topology)
    try:
        scenarios = SimulationService.load_scenarios(request.scenarios)
        fixture: Optional[MinFaultTable] = None
        if request.fixture:
            fixture = TopologyService.load_fault_table(request.fixture, topology)
    except DcProtectError as e:
        raise bad_request(e)
    config = SimConfig.from_settings(waveform_source=request.waveform_source, rng_seed=request.seed)
    return topology, scenarios, fixture, config


@router.post("/run", response_model=TimingReport)
def run_scenario(request: ScenarioRequest):
    """Run the first scenario of the document under both schemes"""
    topology, scenarios, fixture, config = _prepare(request)
    if not scenarios:
        raise bad_request(ValueError("scenario document is empty"))
    try:
        report = SimulationService.run_scenario(topology, scenarios[0], config, fixture=fixture)
    except DcProtectError as e:
        raise bad_request(e)
    if request.include_events:
        return report
    return report.model_copy(update={
        "adaptive": report.adaptive.model_copy(update={"events": (), "frame_capture": ""}),
        "baseline": report.baseline.model_copy(update={"events": (), "frame_capture": ""}),
    })


@router.post("/batch", response_model=ComparisonTable)
def run_batch(request: ScenarioRequest):
    """Adaptive vs baseline trip times for every scenario; failing scenarios become error rows"""
    topology, scenarios, fixture, config = _prepare(request)
    rows = SimulationService.compare_schemes(topology, scenarios, config, fixture=fixture)
    return SimulationService.comparison_table(rows, config.report_relay)
