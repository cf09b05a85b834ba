"""
Report Service
Text renderings of timing reports, comparison tables, event logs and current traces
"""
import csv
import io
import logging
from typing import Dict, List, Optional, Sequence

from tabulate import tabulate

from dcprotect.schemas.sim import ComparisonRow, RelayTiming, SchemeReport, TimingReport

logger = logging.getLogger(__name__)

ND_TEXT = "N/D"


def format_ms(ns: Optional[int]) -> str:
    return ND_TEXT if ns is None else f"{ns / 1e6:.2f} ms"


class ReportService:

    @staticmethod
    def comparison_cell(adaptive: Optional[RelayTiming], baseline: Optional[RelayTiming]) -> str:
        """'adaptive (baseline)' trip command times, or N/D when neither scheme trips"""
        a = adaptive.trip_command_ns if adaptive else None
        b = baseline.trip_command_ns if baseline else None
        if a is None and b is None:
            return ND_TEXT
        return f"{format_ms(a)} ({format_ms(b)})"

    @staticmethod
    def _cell(row: ComparisonRow) -> str:
        if row.error:
            return f"error: {row.error}"
        return ReportService.comparison_cell(row.adaptive, row.baseline)

    @staticmethod
    def render_comparison(rows: Sequence[ComparisonRow], relay: str) -> str:
        """
        Matrix layout when every row carries (row, column) labels, otherwise one
        line per scenario
        """
        if not rows:
            return f"{relay}: no scenarios\n"

        if all(r.row is not None and r.column is not None for r in rows):
            row_labels: List[str] = []
            column_labels: List[str] = []
            cells: Dict[tuple, str] = {}
            for r in rows:
                if r.row not in row_labels:
                    row_labels.append(r.row)
                if r.column not in column_labels:
                    column_labels.append(r.column)
                cells[(r.row, r.column)] = ReportService._cell(r)
            body = [[label] + [cells.get((label, c), "") for c in column_labels] for label in row_labels]
            headers = [f"{relay} fault on"] + column_labels
            return tabulate(body, headers=headers, tablefmt="github") + "\n"

        body = [[r.scenario, ReportService._cell(r)] for r in rows]
        return tabulate(body, headers=["scenario", f"{relay} adaptive (baseline)"], tablefmt="github") + "\n"

    @staticmethod
    def render_scheme(report: SchemeReport) -> str:
        body = [
            [relay, format_ms(t.pickup_ns), format_ms(t.trip_command_ns), format_ms(t.fault_clear_ns)]
            for relay, t in report.timings.items()
        ]
        if not body:
            return f"{report.scheme.value}: no relay picked up\n"
        table = tabulate(body, headers=["relay", "pickup", "trip command", "fault clear"], tablefmt="github")
        isolated = format_ms(report.fault_isolated_ns)
        return f"{report.scheme.value} (fault isolated: {isolated})\n{table}\n"

    @staticmethod
    def render_timing_report(report: TimingReport) -> str:
        header = f"Scenario {report.scenario} [{report.waveform_source.value}]"
        return "\n".join([header, ReportService.render_scheme(report.adaptive),
                          ReportService.render_scheme(report.baseline)])

    @staticmethod
    def render_events(report: SchemeReport) -> str:
        """One event per line: '<ns> <actor> <kind> [detail]'"""
        lines = [event.render() for event in report.events]
        return "\n".join(lines) + ("\n" if lines else "")

    @staticmethod
    def render_trace_csv(report: SchemeReport) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["time_s", "relay", "amperes"])
        for sample in report.trace:
            writer.writerow([f"{sample.time:.6f}", sample.relay, f"{sample.amperes:.3f}"])
        return buffer.getvalue()


# Singleton
report_service = ReportService()
