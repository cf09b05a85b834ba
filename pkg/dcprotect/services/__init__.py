from dcprotect.services.topology_service import TopologyService
from dcprotect.services.fault_service import FaultService
from dcprotect.services.idmt_service import IdmtService
from dcprotect.services.setting_group_service import SettingGroupService
from dcprotect.services.goose_service import GooseBus, GooseCodec
from dcprotect.services.relay_service import RelayService
from dcprotect.services.simulation_service import SimulationService
from dcprotect.services.report_service import ReportService

__all__ = [
    "TopologyService",
    "FaultService",
    "IdmtService",
    "SettingGroupService",
    "GooseBus",
    "GooseCodec",
    "RelayService",
    "SimulationService",
    "ReportService",
]
