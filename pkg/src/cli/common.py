"""
QHetSim CLI 共通処理

シナリオ上書きオプションとシナリオ読み込み
"""

import argparse
import logging
from typing import Any, Dict, List, Optional

from core.config_manager import apply_overrides, load_scenario_file
from core.errors import ParseError
from core.scenario import SCENARIO_KEYS, Scenario

logger = logging.getLogger(__name__)

# --theta-l のようなオプション名 → シナリオキー
OVERRIDE_OPTIONS = {key: "--" + key.replace("_", "-") for key in SCENARIO_KEYS if key != "unit_system"}


def add_scenario_overrides(parser: argparse.ArgumentParser) -> None:
    """シナリオキーごとの上書きオプション（--q, --r, --theta-l, ...）と --set を追加"""
    group = parser.add_argument_group("シナリオ上書き")
    for key, option in OVERRIDE_OPTIONS.items():
        aliases = [option, "--B"] if key == "bandwidth_B" else [option]
        group.add_argument(*aliases, dest=f"override_{key}", metavar="VALUE", help=f"{key} を上書き")
    group.add_argument(
        "--set", dest="set_values", action="append", default=[], metavar="KEY=VALUE", help="任意のキーを上書き"
    )


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for item in getattr(args, "set_values", []) or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ParseError(f"--set は KEY=VALUE 形式が必要です: {item!r}")
        overrides[key.strip()] = value.strip()
    for key in OVERRIDE_OPTIONS:
        value = getattr(args, f"override_{key}", None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "unit_system", None):
        overrides["unit_system"] = args.unit_system
    return overrides


def load_scenario_from_args(args: argparse.Namespace, extra: Optional[Dict[str, Any]] = None) -> Scenario:
    """--config（なければ既定シナリオ）に CLI 上書きを適用"""
    scenario = load_scenario_file(args.config)
    overrides = collect_overrides(args)
    if extra:
        overrides.update(extra)
    if overrides:
        scenario = apply_overrides(scenario, overrides)
    logger.info(f"シナリオ: digest={scenario.digest()}")
    return scenario


def emit(lines: List[str]) -> None:
    """コマンド結果を stdout に出力"""
    for line in lines:
        print(line)
