import json

from fastapi import APIRouter, HTTPException

from dcprotect.api.common import bad_request, topology_from
from dcprotect.exceptions import DcProtectError
from dcprotect.schemas.api import GroupsRequest
from dcprotect.services.fault_service import FaultService
from dcprotect.services.setting_group_service import SettingGroupService
from dcprotect.services.topology_service import TopologyService

router = APIRouter(prefix="/api/groups", tags=["groups"])


@router.post("")
def synthesize_groups(request: GroupsRequest):
    """Setting groups for one relay, from a fixture table or the built-in solver"""
    topology = topology_from(request.topology)
    if not topology.has_relay(request.relay):
        raise HTTPException(status_code=404, detail=f"Relay {request.relay} not found")
    try:
        if request.fixture:
            table = TopologyService.load_fault_table(request.fixture, topology)
        else:
            table = FaultService.min_fault_current_table(
                topology, request.relay, FaultService.default_contingencies(topology))
        nominal = abs(FaultService.load_flow(topology)[request.relay])
        groups = SettingGroupService.synthesize(table, request.ratio, request.width_override, nominal_load=nominal)
    except DcProtectError as e:
        raise bad_request(e)
    return json.loads(SettingGroupService.export_groups(groups))
