from fastapi import APIRouter

from dcprotect.api.common import topology_from
from dcprotect.schemas.api import TopologyRequest, TopologySummary
from dcprotect.schemas.grid import GridTopology

router = APIRouter(prefix="/api/topology", tags=["topology"])


def summarize(topology: GridTopology) -> TopologySummary:
    return TopologySummary(
        name=topology.name,
        buses=len(topology.buses),
        lines=len(topology.lines),
        sources=len(topology.sources),
        loads=len(topology.loads),
        relays=[r.id for r in topology.relays],
        summary=topology.summary,
    )


@router.get("", response_model=TopologySummary)
def get_topology():
    """Summary of the configured grid"""
    return summarize(topology_from(None))


@router.post("/validate", response_model=TopologySummary)
def validate_topology(request: TopologyRequest):
    """Parse and validate a topology document (400 with the offending field on error)"""
    return summarize(topology_from(request.topology))
