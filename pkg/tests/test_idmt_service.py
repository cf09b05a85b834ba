"""
Tests for inverse-time curves, checked against an arbitrary-precision evaluation
"""
import itertools

import pytest
import sympy

from dcprotect.schemas.settings import IdmtConfig, RelayTimeSettings
from dcprotect.services.idmt_service import CURVES, IdmtService

MULTIPLIERS = (0.025, 0.1, 0.5, 1.5)
RATIOS = (1.05, 1.5, 2.0, 5.0, 10.0, 20.0)


def exact_time(k: float, alpha: float, l: float, multiplier: float, ratio: float) -> float:
    f = lambda x: sympy.Float(repr(x), 50)
    value = f(multiplier) * (f(k) / (f(ratio) ** f(alpha) - 1) + f(l))
    return float(value)


class TestCurveCatalogue:
    def test_eleven_curves(self):
        assert len(CURVES) == 11

    def test_standard_inverse_constants(self):
        curve = IdmtService.get_curve("iec_standard_inverse")
        assert (curve.k, curve.alpha, curve.l) == (0.14, 0.02, 0.0)

    def test_ieee_curves_carry_offset(self):
        assert IdmtService.get_curve("ieee_very_inverse").l == pytest.approx(0.49)

    def test_unknown_curve(self):
        with pytest.raises(ValueError, match="unknown IDMT curve"):
            IdmtService.get_curve("definite_time")


class TestIdmtTime:
    @pytest.mark.parametrize("name", sorted(CURVES))
    def test_matches_exact_evaluation(self, name):
        curve = CURVES[name]
        for multiplier, ratio in itertools.product(MULTIPLIERS, RATIOS):
            config = IdmtConfig(curve=curve, time_multiplier=multiplier, pickup=1.0)
            got = IdmtService.idmt_time(config, ratio)
            expected = exact_time(curve.k, curve.alpha, curve.l, multiplier, ratio)
            assert got == pytest.approx(expected, rel=1e-9), (name, multiplier, ratio)

    def test_no_operation_at_or_below_pickup(self):
        config = IdmtConfig(curve=IdmtService.get_curve("iec_standard_inverse"), pickup=100.0)
        assert IdmtService.idmt_time(config, 100.0) is None
        assert IdmtService.idmt_time(config, 50.0) is None
        assert IdmtService.idmt_time(config, 0.0) is None

    def test_ratio_rounding_to_one(self):
        config = IdmtConfig(curve=IdmtService.get_curve("iec_standard_inverse"), pickup=1.0)
        assert IdmtService.idmt_time(config, 1.0 + 1e-15) is None

    def test_higher_current_trips_faster(self):
        config = IdmtConfig(curve=IdmtService.get_curve("iec_very_inverse"), time_multiplier=0.1, pickup=100.0)
        assert IdmtService.idmt_time(config, 1000.0) < IdmtService.idmt_time(config, 200.0)

    def test_multiplier_range(self):
        with pytest.raises(ValueError):
            IdmtConfig(curve=IdmtService.get_curve("iec_standard_inverse"), time_multiplier=0.01, pickup=1.0)
        with pytest.raises(ValueError):
            IdmtConfig(curve=IdmtService.get_curve("iec_standard_inverse"), time_multiplier=2.0, pickup=1.0)


class TestCoordinationMargin:
    def test_default_breaker_chain_is_29_ms(self):
        assert IdmtService.delta_t_min(RelayTimeSettings()) == pytest.approx(29e-3, abs=1e-12)

    def test_sum_of_parts(self):
        times = RelayTimeSettings(t_tr=1e-3, t_cb_op=2e-3, t_arc=3e-3, t_reset=4e-3)
        assert IdmtService.delta_t_min(times) == pytest.approx(10e-3)

    def test_clearing_time_excludes_reset(self):
        assert RelayTimeSettings().clearing_time == pytest.approx(24e-3)


class TestTimeVaryingTrip:
    def test_constant_current_matches_closed_form(self):
        config = IdmtConfig(curve=IdmtService.get_curve("iec_standard_inverse"), time_multiplier=0.1, pickup=100.0)
        expected = IdmtService.idmt_time(config, 500.0)
        got = IdmtService.idmt_trip_time(config, lambda t: 500.0, start=1.0, step=1e-5)
        assert got - 1.0 == pytest.approx(expected, abs=2e-5)

    def test_dip_below_pickup_resets(self):
        config = IdmtConfig(curve=IdmtService.get_curve("iec_standard_inverse"), time_multiplier=0.1, pickup=100.0)
        steady = IdmtService.idmt_trip_time(config, lambda t: 500.0, start=0.0, step=1e-4)
        dipped = IdmtService.idmt_trip_time(config, lambda t: 50.0 if 0.05 < t < 0.06 else 500.0, start=0.0, step=1e-4)
        assert dipped > steady + 0.05

    def test_never_trips_below_pickup(self):
        config = IdmtConfig(curve=IdmtService.get_curve("iec_standard_inverse"), pickup=100.0)
        assert IdmtService.idmt_trip_time(config, lambda t: 80.0, start=0.0, step=1e-3, horizon=1.0) is None
