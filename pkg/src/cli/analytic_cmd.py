"""
QHetSim analytic サブコマンド

解析式の1量を計算して表示する
"""

import argparse
import logging
from typing import Callable, Dict

from core import analytic
from core import gaussian_engine as engine
from core.errors import DomainError
from core.scenario import Scenario, derive
from utils.formatting import OutputHelper

from .common import add_scenario_overrides, emit, load_scenario_from_args

logger = logging.getLogger(__name__)


def _chi(scenario: Scenario, args: argparse.Namespace) -> float:
    omega = args.omega if args.omega is not None else derive(scenario).Omega
    return analytic.noise_psd(omega, scenario, args.form, args.strict)


def _spectral_factor(scenario: Scenario, args: argparse.Namespace) -> float:
    omega = args.omega if args.omega is not None else derive(scenario).Omega
    return analytic.spectral_factor_F(omega, scenario, args.strict)


def _beat(scenario: Scenario, args: argparse.Namespace) -> float:
    return analytic.beat_signal(args.t, scenario)


QUANTITIES: Dict[str, Callable[[Scenario, argparse.Namespace], float]] = {
    "snr-in": lambda s, a: analytic.snr_in(s),
    "snr-out": lambda s, a: analytic.snr_out(s),
    "p-out": lambda s, a: analytic.output_power(s),
    "beat": _beat,
    "beat-cos": lambda s, a: analytic.beat_coefficients(s)[0],
    "beat-sin": lambda s, a: analytic.beat_coefficients(s)[1],
    "F": _spectral_factor,
    "chi": _chi,
    "chi-baseband": lambda s, a: analytic.baseband_noise_psd(s),
    "nf": lambda s, a: analytic.noise_figure(s).nf_db,
    "nf-oracle": lambda s, a: engine.oracle_noise_figure(s).nf_db,
    "gain": lambda s, a: derive(s).gain_G,
}


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "analytic", help="解析式の値を計算", allow_abbrev=False, description="解析式の1量を計算して表示します"
    )
    parser.add_argument("quantity", choices=sorted(QUANTITIES) + ["nf-regular"], help="計算する量")
    parser.add_argument("--omega", type=float, default=None, help="χ, F の評価角周波数（省略時 Ω）")
    parser.add_argument("--form", choices=["exact", "high_gain"], default="exact", help="χ の形式")
    parser.add_argument("--strict", action="store_true", help="|ω| > ω_l を定義域エラーにする")
    parser.add_argument("--t", type=float, default=0.0, help="beat の評価時刻")
    parser.add_argument("--xi", type=float, default=None, help="nf-regular の量子効率")
    add_scenario_overrides(parser)
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> int:
    """
    analytic コマンドを実行

    Returns:
        int: 終了コード（例外は main で終了コードに変換）
    """
    if args.quantity == "nf-regular":
        if args.xi is None:
            raise DomainError("nf-regular には --xi が必要です")
        value = analytic.noise_figure_regular(args.xi)
    else:
        scenario = load_scenario_from_args(args)
        value = QUANTITIES[args.quantity](scenario, args)

    logger.debug(f"analytic {args.quantity} = {value!r}")
    if args.format == "json":
        emit([OutputHelper.format_json({"quantity": args.quantity, "value": value})])
    else:
        emit([OutputHelper.format_value(value, args.quantity)])
    return 0
