"""
QHetSim simulate サブコマンド

光電流記録の合成 → Welch PSD → NF 測定を一括実行する
"""

import argparse
import logging
from pathlib import Path

from core.experiments import simulate
from core.spectral import DEFAULT_OVERLAP, DEFAULT_SEGMENT_LEN, DEFAULT_WINDOW
from utils.formatting import OutputHelper

from .common import add_scenario_overrides, emit, load_scenario_from_args

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="モンテカルロ・シミュレーション", allow_abbrev=False)
    length = parser.add_mutually_exclusive_group()
    length.add_argument("--duration", type=float, default=None, help="記録時間")
    length.add_argument("--samples", type=int, default=None, help="サンプル数（既定 2^23）")
    parser.add_argument("--segment-len", type=int, default=DEFAULT_SEGMENT_LEN, help="Welch セグメント長")
    parser.add_argument("--overlap", type=float, default=DEFAULT_OVERLAP, help="セグメントの重なり率")
    parser.add_argument("--window", choices=["hann", "rectangular"], default=DEFAULT_WINDOW, help="窓関数")
    add_scenario_overrides(parser)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    scenario = load_scenario_from_args(args)
    seed = args.seed if args.seed is not None else 0
    out_dir = Path(args.out) if args.out else Path("results") / "simulate"
    summary = simulate(
        scenario,
        seed,
        out_dir,
        duration=args.duration,
        n_samples=args.samples,
        segment_len=args.segment_len,
        overlap=args.overlap,
        window=args.window,
        fmt=args.format,
    )

    if args.format == "json":
        emit([summary.model_dump_json(indent=2)])
        return 0
    lines = {
        "scenario_digest": summary.scenario_digest,
        "seed": summary.seed,
        "n_samples": summary.n_samples,
        "n_segments": summary.n_segments,
        "tone_power": OutputHelper.format_value(summary.tone_power),
        "analytic_p_out": OutputHelper.format_value(summary.analytic_p_out),
        "chi_at_beat": OutputHelper.format_value(summary.chi_at_beat),
        "analytic_chi": OutputHelper.format_value(summary.analytic_chi),
    }
    if summary.nf is not None:
        lines["nf_db"] = OutputHelper.format_value(summary.nf["nf_db"], "nf")
        lines["nf_error_db"] = OutputHelper.format_value(summary.nf["nf_error_db"], "nf")
        lines["analytic_nf_db"] = OutputHelper.format_value(summary.analytic_nf_db, "nf")
    emit([OutputHelper.format_mapping(lines), f"出力: {out_dir}"])
    return 0
