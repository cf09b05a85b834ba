from pathlib import Path
from typing import List, Union

from pydantic_settings import BaseSettings, SettingsConfigDict

PROJECT_ROOT = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="DCPROTECT_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Randomness (single documented seed)
    seed: int = 0

    # GOOSE bus
    base_latency: float = 66e-6  # 0.066 ms at 100 Mbps
    jitter: float = 0.0
    loss_probability: float = 0.0
    security_overhead: float = 0.0  # up to 1.8 ms with message authentication
    retransmit_intervals: List[float] = [1e-3, 2e-3, 4e-3, 8e-3]
    heartbeat_interval: float = 1.0

    # Relay / breaker timing
    t_tr: float = 4e-3
    t_cb_op: float = 15e-3
    t_arc: float = 5e-3
    t_reset: float = 5e-3

    # Relay element
    sample_step: float = 1e-4
    pickup_persistence: int = 3
    drop_ratio: float = 0.95

    # Baseline scheme
    baseline_curve: str = "iec_standard_inverse"
    baseline_time_multiplier: float = 0.025

    # Setting groups
    clustering_ratio: float = 0.10

    # Scenarios and reports
    scenario_duration: float = 0.5
    report_relay: str = "R12"
    batch_workers: int = 1

    # Data files
    topology_path: str = "data/ieee14_dc.toml"
    fixture_path: str = "data/r12_min_fault_currents.toml"

    # API
    allowed_origins: str = "http://localhost:8000"

    log_level: str = "INFO"


settings = Settings()


def data_path(path: Union[str, Path]) -> Path:
    """Resolve a relative data path against the working directory, then the project root"""
    candidate = Path(path)
    if candidate.is_absolute() or candidate.exists():
        return candidate
    return PROJECT_ROOT / candidate
