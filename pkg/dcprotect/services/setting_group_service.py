import json
import logging
import math
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from dcprotect.exceptions import NoReachableFaultsError, TopologyValidationError
from dcprotect.schemas.grid import Contingency
from dcprotect.schemas.settings import MinFaultTable, SettingGroup, SettingGroupSet

logger = logging.getLogger(__name__)

PICKUP_FRACTION = 0.5
LOAD_MARGIN = 2.0
# bins are searched up to this count before strict-width synthesis gives up
MAX_STRICT_BINS = 10_000


class SettingGroupService:
    """Clusters minimum fault currents into adaptive setting groups"""

    @staticmethod
    def strict_width(maximum: float, minimum: float, ratio: float) -> float:
        """
        Largest uniform width w with w <= ratio * (lowest lower bound)

        For n bins descending from the maximum the lowest lower bound is
        maximum - n*w, so w = ratio*maximum / (1 + ratio*n). The smallest n whose
        bins still reach the minimum gives the widest admissible bins.
        """
        span = maximum - minimum
        for n in range(1, MAX_STRICT_BINS + 1):
            width = ratio * maximum / (1.0 + ratio * n)
            if n * width >= span:
                return width
        raise NoReachableFaultsError(
            f"cannot cover {minimum:.1f}-{maximum:.1f} A with ratio {ratio} in {MAX_STRICT_BINS} bins"
        )

    @staticmethod
    def bin_index(value: float, maximum: float, width: float) -> int:
        """Bin k covers [maximum - (k+1)*width, maximum - k*width); bin 0 is closed at the maximum"""
        k = max(math.ceil((maximum - value) / width) - 1, 0)
        while value < maximum - (k + 1) * width:
            k += 1
        while k > 0 and value >= maximum - k * width:
            k -= 1
        return k

    @staticmethod
    def synthesize(table: MinFaultTable, ratio: float = 0.10, width_override: Optional[float] = None,
                   nominal_load: Optional[float] = None) -> SettingGroupSet:
        """
        Build the setting groups for one relay

        Args:
            table: Minimum fault current per contingency
            ratio: Clustering ratio (strict mode keeps every bin within it)
            width_override: Fixed bin width in amperes (replication mode)
            nominal_load: Nominal line load; pickups under twice this are reported

        Returns:
            SettingGroupSet with groups numbered from the highest bin down
        """
        if not 0 < ratio < 1:
            raise ValueError(f"clustering ratio must be in (0, 1), got {ratio}")
        if width_override is not None and width_override <= 0:
            raise ValueError(f"width override must be positive, got {width_override}")

        finite = table.finite()
        if not finite:
            raise NoReachableFaultsError(f"no reachable faults for relay {table.relay}: every entry is N/D")

        maximum = max(v for _, v in finite)
        minimum = min(v for _, v in finite)
        width = width_override if width_override is not None else \
            SettingGroupService.strict_width(maximum, minimum, ratio)

        members: Dict[int, List[Tuple[Contingency, float]]] = {}
        for contingency, value in finite:
            members.setdefault(SettingGroupService.bin_index(value, maximum, width), []).append((contingency, value))

        diagnostics: List[str] = []
        groups: List[SettingGroup] = []
        for group_id, k in enumerate(sorted(members), start=1):
            upper = maximum - k * width
            lower = max(maximum - (k + 1) * width, 0.0)
            pickup = PICKUP_FRACTION * lower
            if pickup <= 0:
                # the bottom bin reaches 0 A only when the override is wider than the maximum
                pickup = PICKUP_FRACTION * min(v for _, v in members[k])
            conditions = tuple(c for c, _ in sorted(members[k], key=lambda m: m[0].sort_key()))
            groups.append(SettingGroup(
                group_id=group_id,
                lower_bound=lower,
                upper_bound=upper,
                pickup_current=pickup,
                activation_conditions=conditions,
            ))
            if nominal_load is not None and pickup < LOAD_MARGIN * nominal_load:
                message = (f"group {group_id}: pickup {pickup:.1f} A is below twice the nominal load "
                           f"({LOAD_MARGIN * nominal_load:.1f} A)")
                diagnostics.append(message)
                logger.warning(f"{table.relay} {message}")

        default_group = min(groups, key=lambda g: (g.pickup_current, -g.group_id)).group_id

        if width_override is None:
            for group in groups:
                if width > ratio * group.lower_bound * (1 + 1e-9):
                    raise ValueError(f"group {group.group_id} violates clustering ratio {ratio}")
        else:
            loose = [g.group_id for g in groups if g.lower_bound > 0 and width / g.lower_bound > ratio]
            if loose:
                diagnostics.append(f"replication width {width:.1f} A exceeds ratio {ratio} for groups {loose}")

        group_set = SettingGroupSet(
            relay=table.relay,
            groups=tuple(groups),
            default_group=default_group,
            ratio=ratio,
            width=width,
            width_override=width_override,
            diagnostics=tuple(diagnostics),
        )
        logger.info(f"Synthesized {len(groups)} setting groups for {table.relay} "
                    f"(width {width:.1f} A, max {maximum:.1f} A)")
        return group_set

    @staticmethod
    def select_active_group(group_set: SettingGroupSet, status: Contingency) -> int:
        """Group activated by the observed grid condition, or the default group"""
        group_id = group_set.group_for(status)
        return group_id if group_id is not None else group_set.default_group

    @staticmethod
    def baseline_pickup(table: MinFaultTable, nominal_load: float = 0.0) -> float:
        """
        Single pickup of a conventional relay: half the table minimum, raised to
        twice the nominal load when that is higher
        """
        minimum = table.minimum
        if minimum is None:
            raise NoReachableFaultsError(f"no reachable faults for relay {table.relay}: every entry is N/D")
        pickup = PICKUP_FRACTION * minimum
        floor = LOAD_MARGIN * nominal_load
        if pickup < floor:
            logger.warning(f"{table.relay} baseline pickup {pickup:.1f} A raised to {floor:.1f} A (2x load)")
            return floor
        return pickup

    @staticmethod
    def export_groups(group_set: SettingGroupSet) -> str:
        """JSON document with group bounds and activation conditions as outage-id lists"""
        document = {
            "relay": group_set.relay,
            "ratio": group_set.ratio,
            "width": group_set.width,
            "width_override": group_set.width_override,
            "default_group": group_set.default_group,
            "diagnostics": list(group_set.diagnostics),
            "groups": [
                {
                    "group_id": g.group_id,
                    "lower_bound": g.lower_bound,
                    "upper_bound": g.upper_bound,
                    "pickup_current": g.pickup_current,
                    "activation_conditions": [
                        {"lines": sorted(c.line_outages), "sources": sorted(c.source_outages)}
                        for c in g.activation_conditions
                    ],
                }
                for g in group_set.groups
            ],
        }
        return json.dumps(document, indent=2) + "\n"

    @staticmethod
    def import_groups(text: str) -> SettingGroupSet:
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise TopologyValidationError(f"setting group document is not JSON: {e.msg}",
                                          field=f"line {e.lineno}") from e
        if not isinstance(document, dict):
            raise TopologyValidationError("setting group document must be an object")
        try:
            groups = [
                SettingGroup(
                    group_id=g["group_id"],
                    lower_bound=g["lower_bound"],
                    upper_bound=g["upper_bound"],
                    pickup_current=g["pickup_current"],
                    activation_conditions=tuple(
                        Contingency.of(lines=c.get("lines", []), sources=c.get("sources", []))
                        for c in g.get("activation_conditions", [])
                    ),
                )
                for g in document.get("groups", [])
            ]
            return SettingGroupSet(
                relay=document["relay"],
                groups=tuple(groups),
                default_group=document["default_group"],
                ratio=document.get("ratio", 0.10),
                width=document["width"],
                width_override=document.get("width_override"),
                diagnostics=tuple(document.get("diagnostics", [])),
            )
        except KeyError as e:
            raise TopologyValidationError("missing key", field=str(e.args[0])) from e
        except ValidationError as e:
            first = e.errors()[0]
            raise TopologyValidationError(first.get("msg", str(e)),
                                          field=".".join(str(p) for p in first.get("loc", ()))) from e


# Singleton
setting_group_service = SettingGroupService()
