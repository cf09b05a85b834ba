from dcprotect.schemas.grid import (
    ND,
    Bus,
    Contingency,
    FaultKind,
    FaultSpec,
    GridTopology,
    Line,
    Load,
    NotDetected,
    RelayPlacement,
    Source,
    SourceKind,
)
from dcprotect.schemas.settings import (
    IdmtConfig,
    IdmtCurve,
    MinFaultTable,
    RelayTimeSettings,
    SettingGroup,
    SettingGroupSet,
    TableEntry,
)
from dcprotect.schemas.relay import Decision, DecisionKind, NeighborMap, RelayState
from dcprotect.schemas.goose import BusConfig, DatasetEntry, Delivery, EntryKind, GooseFrame, RetransmitSchedule
from dcprotect.schemas.sim import (
    ComparisonRow,
    ComparisonTable,
    RelayTiming,
    Scenario,
    Scheme,
    SimConfig,
    TimingReport,
    WaveformSource,
)

__all__ = [
    "ND",
    "Bus",
    "Contingency",
    "FaultKind",
    "FaultSpec",
    "GridTopology",
    "Line",
    "Load",
    "NotDetected",
    "RelayPlacement",
    "Source",
    "SourceKind",
    "IdmtConfig",
    "IdmtCurve",
    "MinFaultTable",
    "RelayTimeSettings",
    "SettingGroup",
    "SettingGroupSet",
    "TableEntry",
    "Decision",
    "DecisionKind",
    "NeighborMap",
    "RelayState",
    "BusConfig",
    "DatasetEntry",
    "Delivery",
    "EntryKind",
    "GooseFrame",
    "RetransmitSchedule",
    "ComparisonRow",
    "ComparisonTable",
    "RelayTiming",
    "Scenario",
    "Scheme",
    "SimConfig",
    "TimingReport",
    "WaveformSource",
]
