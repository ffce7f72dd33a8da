"""
QHetSim 標準出力フォーマット

CLI 結果の表示用ヘルパー（stdout はコマンド結果専用、ログは stderr）
"""

import json
import logging
import math
from typing import Any, Dict, List, Sequence

logger = logging.getLogger(__name__)

# dB 表示の量（小数点以下9桁の固定表記）
DECIBEL_QUANTITIES = {"nf", "nf-oracle", "nf-regular", "nf_db"}


class OutputHelper:
    """CLI 出力の整形ヘルパー"""

    @staticmethod
    def format_value(value: float, quantity: str = "") -> str:
        """
        数値を表示用文字列に変換

        Args:
            value: 値
            quantity: 量の名前（dB 量は固定小数9桁、その他は有効数字9桁）

        Returns:
            str: 表示文字列（-0 は 0 として表示）
        """
        if not math.isfinite(value):
            return str(value)
        if quantity in DECIBEL_QUANTITIES:
            return f"{round(value, 9) + 0.0:.9f}"
        return f"{value + 0.0:.9g}"

    @staticmethod
    def format_json(data: Any) -> str:
        try:
            return json.dumps(data, ensure_ascii=False, indent=2, default=str)
        except (TypeError, ValueError) as e:
            logger.error(f"JSON形式変換エラー: {e}")
            return json.dumps({"error": "JSON形式変換に失敗しました"}, ensure_ascii=False)

    @staticmethod
    def format_table(headers: Sequence[str], rows: List[Sequence[Any]]) -> str:
        """等幅の表（列幅は内容に合わせる）"""
        cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
        lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in cells]
        lines.insert(1, "  ".join("-" * width for width in widths))
        return "\n".join(lines)

    @staticmethod
    def format_error(message: str) -> str:
        return f"エラー: {message}"

    @staticmethod
    def format_mapping(data: Dict[str, Any]) -> str:
        """`key = value` 行（シナリオ要約など）"""
        width = max((len(key) for key in data), default=0)
        return "\n".join(f"{key.ljust(width)} = {value}" for key, value in data.items())
