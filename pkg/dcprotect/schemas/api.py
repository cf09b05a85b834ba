"""
HTTP request/response bodies
"""
from typing import List, Optional

from pydantic import BaseModel, Field

from dcprotect.schemas.sim import WaveformSource


class TopologyRequest(BaseModel):
    topology: Optional[str] = Field(None, description="TOML topology document; the configured grid when omitted")


class TopologySummary(BaseModel):
    name: str
    buses: int
    lines: int
    sources: int
    loads: int
    relays: List[str]
    summary: str


class GroupsRequest(TopologyRequest):
    relay: str = Field(..., min_length=1)
    ratio: float = Field(default=0.10, gt=0, lt=1)
    width_override: Optional[float] = Field(None, gt=0)
    fixture: Optional[str] = Field(None, description="TOML minimum fault current table to cluster instead of the solver")


class ScenarioRequest(TopologyRequest):
    scenarios: str = Field(..., min_length=1, description="TOML scenario document")
    waveform_source: WaveformSource = WaveformSource.BUILTIN_SOLVER
    fixture: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    include_events: bool = False
