"""
Command-line front end

Usage:
  python -m dcprotect validate --topology data/ieee14_dc.toml
  python -m dcprotect groups --relay R12 --mode fixture --width 85 --out r12_groups.json
  python -m dcprotect run --scenario data/scenarios/l12_pole_pole.toml --events
  python -m dcprotect batch --scenario data/scenarios/adjacent_failure.toml --workers 4
  python -m dcprotect dump-frames --scenario data/scenarios/l12_pole_pole.toml --out frames.txt

Exit codes: 0 success, 1 validation or semantic error, 2 usage error, 3 I/O error
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from tabulate import tabulate

from dcprotect.config import data_path, settings
from dcprotect.exceptions import DcProtectError
from dcprotect.schemas.grid import GridTopology
from dcprotect.schemas.settings import MinFaultTable
from dcprotect.schemas.sim import Scenario, SimConfig, WaveformSource
from dcprotect.services.fault_service import FaultService
from dcprotect.services.report_service import ReportService
from dcprotect.services.setting_group_service import SettingGroupService
from dcprotect.services.simulation_service import SimulationService
from dcprotect.services.topology_service import TopologyService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_IO = 3

MODES = {"solver": WaveformSource.BUILTIN_SOLVER, "fixture": WaveformSource.FIXTURE_TABLE}


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(f"💾 Written to {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _topology(args) -> GridTopology:
    return TopologyService.load_topology_file(data_path(args.topology))


def _fixture(args, topology: GridTopology) -> MinFaultTable:
    return TopologyService.load_fault_table_file(data_path(args.fixture), topology)


def _config(args) -> SimConfig:
    overrides = {"rng_seed": args.seed, "waveform_source": MODES[args.mode]}
    if args.relay:
        overrides["report_relay"] = args.relay
    config = SimConfig.from_settings(**overrides)
    bus = {}
    if args.bus_latency is not None:
        bus["base_latency"] = args.bus_latency
    if args.security_overhead is not None:
        bus["security_overhead"] = args.security_overhead
    if bus:
        config = config.model_copy(update={"bus": config.bus.model_copy(update=bus)})
    return config


def _fixture_inputs(args, topology: GridTopology):
    if args.mode != "fixture":
        return None, None
    fixture = _fixture(args, topology)
    groups = SettingGroupService.synthesize(fixture, args.ratio, args.width)
    return fixture, groups


def _scenarios(paths: Sequence[str]) -> List[Scenario]:
    scenarios: List[Scenario] = []
    for path in paths:
        scenarios.extend(SimulationService.load_scenarios(data_path(path).read_text(encoding="utf-8")))
    return scenarios


# Subcommands

def cmd_validate(args) -> int:
    topology = _topology(args)
    print(f"✅ {topology.name}: {topology.summary}")
    print(f"   Sources: {len(topology.sources)}, loads: {len(topology.loads)}, relays: {len(topology.relays)}")
    return EXIT_OK


def cmd_groups(args) -> int:
    topology = _topology(args)
    if not topology.has_relay(args.relay):
        raise DcProtectError(f"unknown relay {args.relay}")
    if args.mode == "fixture":
        table = _fixture(args, topology)
        if table.relay != args.relay:
            raise DcProtectError(f"fixture is for {table.relay}, not {args.relay}")
        nominal = None
    else:
        table = FaultService.min_fault_current_table(
            topology, args.relay, FaultService.default_contingencies(topology))
        nominal = abs(FaultService.load_flow(topology)[args.relay])
    group_set = SettingGroupService.synthesize(table, args.ratio, args.width, nominal_load=nominal)

    print(f"✅ {args.relay}: {len(group_set.groups)} setting groups (width {group_set.width:.1f} A)", file=sys.stderr)
    rows = [[g.group_id, f"{g.lower_bound:.1f}", f"{g.upper_bound:.1f}", f"{g.pickup_current:.1f}",
             len(g.activation_conditions)] for g in group_set.groups]
    print(tabulate(rows, headers=["group", "lower A", "upper A", "pickup A", "conditions"]), file=sys.stderr)
    for diagnostic in group_set.diagnostics:
        print(f"⚠️  {diagnostic}", file=sys.stderr)
    _emit(SettingGroupService.export_groups(group_set), args.out)
    return EXIT_OK


def _run_one(args):
    topology = _topology(args)
    scenarios = _scenarios([args.scenario])
    if not scenarios:
        raise DcProtectError(f"{args.scenario} holds no scenario")
    fixture, fixture_groups = _fixture_inputs(args, topology)
    config = _config(args)
    trace = [config.report_relay] if args.trace_waveforms else None
    return SimulationService.run_scenario(topology, scenarios[0], config, fixture=fixture,
                                          fixture_groups=fixture_groups, ratio=args.ratio, trace_relays=trace)


def cmd_run(args) -> int:
    report = _run_one(args)
    text = ReportService.render_timing_report(report)
    if args.events:
        text += "\nadaptive events\n" + ReportService.render_events(report.adaptive)
        text += "\nbaseline events\n" + ReportService.render_events(report.baseline)
    _emit(text, args.out)
    if args.trace_waveforms:
        Path(args.trace_waveforms).write_text(ReportService.render_trace_csv(report.adaptive), encoding="utf-8")
        print(f"📈 Waveform trace written to {args.trace_waveforms}", file=sys.stderr)
    if args.dump_frames:
        Path(args.dump_frames).write_text(report.adaptive.frame_capture, encoding="utf-8")
        print(f"📡 Frame capture written to {args.dump_frames}", file=sys.stderr)
    return EXIT_OK


def cmd_batch(args) -> int:
    topology = _topology(args)
    scenarios = _scenarios(args.scenario)
    fixture, fixture_groups = _fixture_inputs(args, topology)
    config = _config(args)
    print(f"🔄 Running {len(scenarios)} scenarios with {args.workers} worker(s)", file=sys.stderr)
    rows = SimulationService.compare_schemes(topology, scenarios, config, workers=args.workers, fixture=fixture,
                                             fixture_groups=fixture_groups, ratio=args.ratio)
    _emit(ReportService.render_comparison(rows, config.report_relay), args.out)
    failed = sum(1 for row in rows if row.error)
    if failed:
        print(f"⚠️  {failed} scenario(s) failed", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_dump_frames(args) -> int:
    report = _run_one(args)
    _emit(report.adaptive.frame_capture, args.out)
    return EXIT_OK


# Parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--topology", default=settings.topology_path, help="Topology TOML document")
    common.add_argument("--fixture", default=settings.fixture_path, help="Minimum fault current fixture (TOML)")
    common.add_argument("--mode", choices=sorted(MODES), default="solver",
                        help="Fault currents from the built-in solver or the fixture table")
    common.add_argument("--ratio", type=float, default=settings.clustering_ratio, help="Group width ratio")
    common.add_argument("--width", type=float, default=None, help="Fixed group width in amperes")
    common.add_argument("--relay", default=None, help="Relay to report or synthesize")
    common.add_argument("--seed", type=int, default=settings.seed, help="Seed for every random draw")
    common.add_argument("--bus-latency", type=float, default=None, help="Bus latency in seconds")
    common.add_argument("--security-overhead", type=float, default=None, help="Message authentication overhead (s)")
    common.add_argument("--out", default=None, help="Write the report here instead of stdout")
    common.add_argument("--log-level", default=settings.log_level, help="Logging level")

    parser = argparse.ArgumentParser(prog="dcprotect", description="Adaptive DC microgrid protection studies")
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", parents=[common], help="Validate a topology")
    validate.set_defaults(handler=cmd_validate)

    groups = sub.add_parser("groups", parents=[common], help="Synthesize setting groups for a relay")
    groups.set_defaults(handler=cmd_groups)

    for name, handler, text in (("run", cmd_run, "Run one scenario under both schemes"),
                                ("dump-frames", cmd_dump_frames, "Write the GOOSE capture of one scenario")):
        run = sub.add_parser(name, parents=[common], help=text)
        run.add_argument("--scenario", required=True, help="Scenario TOML document")
        run.add_argument("--events", action="store_true", help="Append the event logs")
        run.add_argument("--trace-waveforms", default=None, help="CSV file for the reported relay's current")
        run.add_argument("--dump-frames", default=None, help="File for the GOOSE frame capture")
        run.set_defaults(handler=handler)

    batch = sub.add_parser("batch", parents=[common], help="Compare schemes over scenario documents")
    batch.add_argument("--scenario", nargs="+", required=True, help="Scenario TOML documents")
    batch.add_argument("--workers", type=int, default=settings.batch_workers, help="Parallel scenarios")
    batch.set_defaults(handler=cmd_batch)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    if args.command == "groups" and not args.relay:
        args.relay = settings.report_relay

    try:
        return args.handler(args)
    except OSError as e:
        print(f"❌ I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"❌ Error: {e}", file=sys.stderr)
        return EXIT_INVALID
