"""
QHetSim validate サブコマンド
"""

import argparse
import logging
from pathlib import Path

from core.validation import check_names, run_validation
from utils.exporters import write_json
from utils.formatting import OutputHelper

from .common import emit, load_scenario_from_args

logger = logging.getLogger(__name__)

EXIT_VALIDATION_FAILED = 1


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("validate", help="相互検証スイート", allow_abbrev=False)
    parser.add_argument("--level", choices=["quick", "full"], default="quick", help="検証レベル")
    parser.add_argument(
        "--check", dest="checks", action="append", default=None, choices=sorted(check_names()), help="実行するチェック"
    )
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    検証スイートを実行し合否表を表示

    Returns:
        int: すべて合格なら 0、失敗があれば 1
    """
    scenario = load_scenario_from_args(args)
    seed = args.seed if args.seed is not None else 0
    report = run_validation(seed, args.level, scenario, only=args.checks)

    if args.out:
        write_json(report, Path(args.out))
    if args.format == "json":
        emit([report.model_dump_json(indent=2)])
    else:
        rows = [
            [
                c.name,
                "PASS" if c.passed else "FAIL",
                "" if c.value is None else f"{c.value:.3e}",
                "" if c.threshold is None else f"{c.threshold:.3e}",
                f"{c.elapsed_s:.2f}",
                c.detail,
            ]
            for c in report.checks
        ]
        emit([OutputHelper.format_table(["check", "result", "value", "threshold", "sec", "detail"], rows)])

    if not report.passed:
        failed = ", ".join(report.failed_checks)
        logger.error(f"検証失敗: {failed}")
        emit([f"FAILED: {failed}"])
        return EXIT_VALIDATION_FAILED
    emit([f"全 {len(report.checks)} 件合格 (level={args.level}, seed={seed})"])
    return 0
