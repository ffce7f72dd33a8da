"""
QHetSim Configuration Management

`key = value` 形式の設定ファイル読み込みと実行時設定
"""

import logging
import math
import os
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field
from pydantic import ValidationError as PydanticValidationError

from .errors import ParseError, ValidationError
from .scenario import SCENARIO_KEYS, Scenario

logger = logging.getLogger(__name__)

REQUIRED_SCENARIO_KEYS = ("omega_s", "omega_l", "alpha_s_mag", "epsilon_l", "r", "q", "bandwidth_B")

# 別名 → 正式キー
KEY_ALIASES = {"B": "bandwidth_B"}

STRING_KEYS = {"unit_system"}

_LINE_PATTERN = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_.]*)\s*=\s*(.*?)\s*$")

# --config 未指定時の既定シナリオ（ω_s − ω_l = 1e-10 でヘテロダイン近似 ω_s ≈ ω_l）
DEFAULT_SCENARIO_TEXT = """\
# QHetSim 既定シナリオ（スケール単位系）
omega_l = 1.0
omega_s = 1.0000000001
alpha_s_mag = 1.0
theta_s = 0.0
epsilon_l = 1.0
theta_l = 0.0
r = 0.0
q = 1.0
bandwidth_B = 1.0
unit_system = scaled
"""


class LoggingConfig(BaseModel):
    """ログ設定"""

    level: str = Field(default_factory=lambda: os.environ.get("QHET_LOG_LEVEL", "INFO"))
    file: str = ""  # 空ならファイル出力なし
    max_size_mb: int = 10
    backup_count: int = 5
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # ログ長制限関連
    enable_truncation: bool = True
    truncate_marker: str = "【切り詰め】"
    max_message_length: int = 2048
    level_specific_lengths: Dict[str, int] = {
        "DEBUG": 400,
        "INFO": 400,
        "WARNING": 1000,
        "ERROR": 10000,
        "CRITICAL": 10000,
    }


def get_thread_limit() -> int:
    """並列度の上限（環境変数 QHET_THREADS、未設定ならCPU数）"""
    raw = os.environ.get("QHET_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
            if value >= 1:
                return value
        except ValueError:
            pass
        logger.warning(f"QHET_THREADS の値が不正です（無視します）: {raw!r}")
    return os.cpu_count() or 1


def substitute_env_variables(text: str) -> str:
    """設定値の ${VAR_NAME} を環境変数の値に置き換える（未設定なら元の文字列のまま）"""

    def replace_env_var(match):
        return os.environ.get(match.group(1), match.group(0))

    return re.sub(r"\$\{([^}]+)\}", replace_env_var, text)


def parse_key_values(config_text: str) -> List[Tuple[int, str, str]]:
    """`key = value` 行を (行番号, キー, 値) のリストに分解する

    Raises:
        ParseError: 不正な行または重複キー
    """
    entries: List[Tuple[int, str, str]] = []
    seen: Dict[str, int] = {}
    for line_no, raw_line in enumerate(config_text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        match = _LINE_PATTERN.match(line)
        if not match:
            raise ParseError(f"`key = value` 形式ではありません: {raw_line.strip()!r}", line_no)
        key, value = match.group(1), match.group(2)
        key = KEY_ALIASES.get(key, key)
        if not value:
            raise ParseError(f"値が空です: {key}", line_no)
        if key in seen:
            raise ParseError(f"キーが重複しています: {key}（{seen[key]}行目と重複）", line_no)
        seen[key] = line_no
        entries.append((line_no, key, substitute_env_variables(value)))
    return entries


def parse_number(key: str, value: str, line_no: Optional[int] = None) -> float:
    """10進・指数表記の数値を解析する"""
    try:
        number = float(value)
    except ValueError:
        raise ParseError(f"{key} の値が数値ではありません: {value!r}", line_no)
    if not math.isfinite(number):
        raise ParseError(f"{key} の値が有限ではありません: {value!r}", line_no)
    return number


def build_scenario(values: Dict[str, Any]) -> Scenario:
    """辞書からシナリオを生成し、検証エラーを ValidationError に変換する"""
    missing = [key for key in REQUIRED_SCENARIO_KEYS if key not in values]
    if missing:
        raise ValidationError(missing[0], f"必須キーがありません: {', '.join(missing)}")
    try:
        return Scenario(**values)
    except PydanticValidationError as e:
        first = e.errors()[0]
        ctx = first.get("ctx") or {}
        if "key" in ctx:
            key = str(ctx["key"])
            message = str(ctx.get("detail", first.get("msg", "")))
        else:
            key = str(first["loc"][0]) if first.get("loc") else "scenario"
            message = f"{first.get('msg', '不正な値')} (値={values.get(key)!r})"
        raise ValidationError(key, message)


def scenario_values_from_text(config_text: str) -> Dict[str, Any]:
    """シナリオ設定テキストをキー→値の辞書に変換（検証前）"""
    values: Dict[str, Any] = {}
    for line_no, key, value in parse_key_values(config_text):
        if key not in SCENARIO_KEYS:
            raise ParseError(f"未知のキーです: {key}", line_no)
        if key in STRING_KEYS:
            values[key] = value
        else:
            values[key] = parse_number(key, value, line_no)
    return values


def load_scenario(config_text: str) -> Scenario:
    """設定テキストからシナリオを読み込む

    Args:
        config_text: `key = value` 行からなるテキスト

    Returns:
        Scenario: 不変条件を満たすシナリオ

    Raises:
        ParseError: 不正行・重複キー・未知キー
        ValidationError: 不変条件違反（メッセージに該当キーを含む）
    """
    scenario = build_scenario(scenario_values_from_text(config_text))
    logger.debug(f"シナリオ読み込み完了: digest={scenario.digest()}")
    return scenario


def load_scenario_file(config_path: Optional[str] = None) -> Scenario:
    """シナリオファイルを読み込む（パス未指定なら既定シナリオ）"""
    if config_path is None:
        return load_scenario(DEFAULT_SCENARIO_TEXT)
    path = Path(config_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"設定ファイルを読み込めません: {path} ({e})")
    logger.info(f"シナリオファイル読み込み: {path}")
    return load_scenario(text)


def serialize_scenario(scenario: Scenario) -> str:
    """シナリオを再解析可能な設定テキストに変換する"""
    return "\n".join(scenario.to_config_lines()) + "\n"


def apply_overrides(scenario: Scenario, overrides: Dict[str, Any]) -> Scenario:
    """CLI等からの上書き値を適用する"""
    if not overrides:
        return scenario
    values = scenario.model_dump(exclude={"constants"})
    for key, value in overrides.items():
        key = KEY_ALIASES.get(key, key)
        if key not in SCENARIO_KEYS:
            raise ParseError(f"未知のキーです: {key}")
        values[key] = value if key in STRING_KEYS else parse_number(key, str(value))
    if ("omega_s" in overrides or "omega_l" in overrides) and "omega_i" not in overrides:
        values["omega_i"] = None
    logger.debug(f"シナリオ上書き: {overrides}")
    return build_scenario(values)
