import logging
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import ValidationError

from dcprotect.exceptions import FixtureError, TopologyParseError, TopologyValidationError
from dcprotect.schemas.grid import ND, Contingency, GridTopology
from dcprotect.schemas.settings import MinFaultTable, TableEntry

logger = logging.getLogger(__name__)

_TOML_LOCATION = re.compile(r"\(at line (\d+), column (\d+)\)")
_ELEMENT_SECTIONS = ("buses", "lines", "sources", "loads", "relays")


class TopologyService:
    """Loads grid topology and minimum fault current documents (TOML)"""

    @staticmethod
    def parse_document(text: str, what: str = "document") -> Dict[str, Any]:
        """
        Parse a TOML document, converting decode errors into located parse errors

        Args:
            text: Document text
            what: Noun used in error messages

        Returns:
            The decoded table
        """
        if not text or not text.strip():
            raise TopologyParseError(f"empty {what}", line=1, column=1)
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            match = _TOML_LOCATION.search(str(e))
            message = _TOML_LOCATION.sub("", str(e)).strip()
            if match:
                raise TopologyParseError(message, line=int(match.group(1)), column=int(match.group(2))) from e
            raise TopologyParseError(message) from e

    @staticmethod
    def validation_error(e: ValidationError) -> TopologyValidationError:
        """First pydantic error as a field-located validation error"""
        first = e.errors()[0]
        field = ""
        for part in first.get("loc", ()):
            if isinstance(part, int):
                field += f"[{part}]"
            else:
                field += f".{part}" if field else str(part)
        message = first.get("msg", str(e))
        return TopologyValidationError(message, field=field or None)

    @staticmethod
    def load_topology(source_text: str) -> GridTopology:
        """
        Build a validated topology from a TOML document

        Args:
            source_text: Document with [grid], [[buses]], [[lines]], [[sources]],
                [[loads]] and [[relays]]

        Returns:
            Validated GridTopology
        """
        document = TopologyService.parse_document(source_text, "topology document")

        for section in _ELEMENT_SECTIONS:
            if section in document and not isinstance(document[section], list):
                raise TopologyParseError(f"'{section}' must be an array of tables ([[{section}]])", field=section)
        if "buses" not in document:
            raise TopologyParseError("missing [[buses]] section", field="buses")
        if "lines" not in document:
            raise TopologyParseError("missing [[lines]] section", field="lines")

        grid = document.get("grid", {})
        if not isinstance(grid, dict):
            raise TopologyParseError("[grid] must be a table", field="grid")

        data = dict(grid)
        for section in _ELEMENT_SECTIONS:
            data[section] = document.get(section, [])

        try:
            topology = GridTopology.model_validate(data)
        except ValidationError as e:
            raise TopologyService.validation_error(e) from e
        except ValueError as e:
            raise TopologyValidationError(str(e)) from e

        logger.info(f"Loaded topology '{topology.name}': {topology.summary}, "
                    f"{len(topology.sources)} sources, {len(topology.relays)} relays")
        return topology

    @staticmethod
    def load_topology_file(path: Union[str, Path]) -> GridTopology:
        return TopologyService.load_topology(Path(path).read_text(encoding="utf-8"))

    @staticmethod
    def load_fault_table(source_text: str, topology: Optional[GridTopology] = None) -> MinFaultTable:
        """
        Parse a minimum fault current fixture

        The document names the relay, the source-outage columns ("" = no source
        outage) and one row per line outage ("" = no line outage); each cell is
        amperes or "N/D".
        """
        document = TopologyService.parse_document(source_text, "fault current fixture")

        relay = document.get("relay")
        if not isinstance(relay, str) or not relay:
            raise FixtureError("fixture must name its relay (relay = \"R12\")")
        columns = document.get("columns")
        if not isinstance(columns, list) or not columns or not all(isinstance(c, str) for c in columns):
            raise FixtureError("fixture 'columns' must be a non-empty list of source ids (\"\" for none)")
        rows = document.get("rows")
        if not isinstance(rows, dict) or not rows:
            raise FixtureError("fixture needs a [rows] table")

        if topology is not None:
            if not topology.has_relay(relay):
                raise FixtureError(f"fixture relay {relay} is not in topology '{topology.name}'")
            for column in columns:
                if column and not topology.has_source(column):
                    raise FixtureError(f"fixture column {column} is not a source of '{topology.name}'")

        entries: List[TableEntry] = []
        for row, cells in rows.items():
            if topology is not None and row and not topology.has_line(row):
                raise FixtureError(f"fixture row {row} is not a line of '{topology.name}'")
            if not isinstance(cells, list) or len(cells) != len(columns):
                raise FixtureError(f"row {row or '(none)'}: expected {len(columns)} cells")
            for column, cell in zip(columns, cells):
                contingency = Contingency.of(lines=[row] if row else [], sources=[column] if column else [])
                if isinstance(cell, str):
                    if cell.strip().upper() != ND.value:
                        raise FixtureError(f"row {row}, column {column or '(none)'}: '{cell}' is neither amperes nor N/D")
                    current = ND
                elif isinstance(cell, (int, float)) and not isinstance(cell, bool):
                    if cell <= 0:
                        raise FixtureError(f"row {row}, column {column or '(none)'}: {cell} A is not a fault current; use \"N/D\"")
                    current = float(cell)
                else:
                    raise FixtureError(f"row {row}, column {column or '(none)'}: unsupported cell {cell!r}")
                entries.append(TableEntry(contingency=contingency, current=current))

        table = MinFaultTable(relay=relay, entries=tuple(entries))
        logger.info(f"Loaded fault current fixture for {relay}: {len(rows)} rows x {len(columns)} columns")
        return table

    @staticmethod
    def load_fault_table_file(path: Union[str, Path], topology: Optional[GridTopology] = None) -> MinFaultTable:
        return TopologyService.load_fault_table(Path(path).read_text(encoding="utf-8"), topology)


# Singleton
topology_service = TopologyService()
