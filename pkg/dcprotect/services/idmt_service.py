import logging
from typing import Callable, Dict, Optional

from dcprotect.schemas.settings import IdmtConfig, IdmtCurve, RelayTimeSettings

logger = logging.getLogger(__name__)


def _curve(name: str, standard: Optional[str], label: str, k: float, alpha: float, l: float = 0.0) -> IdmtCurve:
    return IdmtCurve(name=name, standard=standard, label=label, k=k, alpha=alpha, l=l)


# Inverse-time characteristics, t = T * (k / ((I/Is)^alpha - 1) + l)
CURVES: Dict[str, IdmtCurve] = {
    c.name: c for c in (
        _curve("areva_short_time_inverse", "AREVA", "Short time inverse", 0.05, 0.04),
        _curve("iec_standard_inverse", "IEC", "Standard inverse", 0.14, 0.02),
        _curve("iec_very_inverse", "IEC", "Very inverse", 1.5, 1.0),
        _curve("iec_extremely_inverse", "IEC", "Extremely inverse", 80.0, 2.0),
        _curve("areva_long_time_inverse", "AREVA", "Long time inverse", 120.0, 1.0),
        _curve("co2_short_time_inverse", "CO2", "Short time inverse", 0.023, 0.02, 0.016),
        _curve("ieee_moderately_inverse", "ANSI/IEEE", "Moderately inverse", 0.051, 0.02, 0.011),
        _curve("co2_long_time_inverse", "CO2", "Long time inverse", 9.95, 2.0, 0.18),
        _curve("ieee_very_inverse", "ANSI/IEEE", "Very inverse", 19.61, 2.0, 0.49),
        _curve("ieee_extremely_inverse", "ANSI/IEEE", "Extremely inverse", 28.2, 2.0, 0.12),
        _curve("rectifier", None, "Rectifier protection", 45900.0, 5.6),
    )
}


class IdmtService:
    """Inverse-time operating curves and the coordination margin"""

    @staticmethod
    def get_curve(name: str) -> IdmtCurve:
        curve = CURVES.get(name)
        if curve is None:
            raise ValueError(f"unknown IDMT curve '{name}' (known: {', '.join(CURVES)})")
        return curve

    @staticmethod
    def idmt_time(config: IdmtConfig, current: float) -> Optional[float]:
        """
        Operating time for a constant current

        Args:
            config: Curve, time multiplier and pickup
            current: Measured amperes

        Returns:
            Seconds, or None when the current does not exceed the pickup
        """
        if current <= config.pickup:
            return None
        curve = config.curve
        ratio = current / config.pickup
        denominator = ratio ** curve.alpha - 1.0
        if denominator <= 0:
            # ratio so close to 1 that the power rounds to 1.0
            return None
        return config.time_multiplier * (curve.k / denominator + curve.l)

    @staticmethod
    def delta_t_min(settings: RelayTimeSettings) -> float:
        """Minimum coordination delay between a downstream and an upstream relay"""
        return settings.t_tr + settings.t_cb_op + settings.t_arc + settings.t_reset

    @staticmethod
    def idmt_trip_time(config: IdmtConfig, current: Callable[[float], float], start: float,
                       step: float = 1e-5, horizon: float = 10.0) -> Optional[float]:
        """
        Trip time under a time-varying current by fixed-step integration of dt / t(I)

        The integral starts at ``start`` and resets whenever the current falls to
        the pickup or below.

        Returns:
            Absolute time at which the integral reaches 1, or None within the horizon
        """
        progress = 0.0
        t = start
        end = start + horizon
        while t < end:
            t += step
            operate = IdmtService.idmt_time(config, current(t))
            if operate is None:
                progress = 0.0
                continue
            progress += step / operate
            if progress >= 1.0:
                return t
        return None


# Singleton
idmt_service = IdmtService()
