"""
QHetSim sweep サブコマンド
"""

import argparse
import logging
from pathlib import Path

from core.config_manager import apply_overrides, load_scenario_file
from core.experiments import load_sweep_file, run_sweep, write_sweep_outputs
from utils.formatting import OutputHelper

from .common import collect_overrides, emit

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("sweep", help="パラメータスイープ", allow_abbrev=False)
    parser.add_argument("sweep_file", help="スイープ設定ファイル")
    parser.add_argument("--workers", type=int, default=None, help="並列数（省略時 QHET_THREADS またはCPU数）")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    default_scenario = None
    if args.config is not None or args.unit_system:
        default_scenario = load_scenario_file(args.config)
        overrides = collect_overrides(args)
        if overrides:
            default_scenario = apply_overrides(default_scenario, overrides)
    spec, scenario = load_sweep_file(args.sweep_file, default_scenario)
    if args.seed is not None:
        spec = spec.model_copy(update={"seed_base": args.seed})

    report = run_sweep(spec, scenario, max_workers=args.workers)
    out = Path(args.out) if args.out else Path("results") / Path(args.sweep_file).stem
    written = write_sweep_outputs(report, out, args.format)

    rows = [
        [
            OutputHelper.format_value(r.parameter_value),
            r.quantity,
            r.method,
            OutputHelper.format_value(r.value, r.quantity),
            "" if r.error is None else OutputHelper.format_value(r.error),
        ]
        for r in report.records
    ]
    emit([OutputHelper.format_table([spec.parameter, "quantity", "method", "value", "±1σ"], rows)])
    emit([f"出力: {path}" for path in written])
    if report.truncated:
        emit(["中断されたため結果は途中までです (truncated = true)"])
    return 0
