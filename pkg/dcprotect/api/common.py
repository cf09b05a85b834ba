from functools import lru_cache
from typing import Optional

from fastapi import HTTPException

from dcprotect.config import data_path, settings
from dcprotect.exceptions import DcProtectError
from dcprotect.schemas.grid import GridTopology
from dcprotect.services.topology_service import TopologyService


@lru_cache(maxsize=1)
def configured_topology() -> GridTopology:
    """The grid named by DCPROTECT_TOPOLOGY_PATH, parsed once per process"""
    return TopologyService.load_topology_file(data_path(settings.topology_path))


def topology_from(text: Optional[str]) -> GridTopology:
    try:
        return TopologyService.load_topology(text) if text else configured_topology()
    except DcProtectError as e:
        raise bad_request(e)


def bad_request(e: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(e))
