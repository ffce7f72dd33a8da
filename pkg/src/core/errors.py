"""
QHetSim 例外定義

設定・定義域・長さ・形状エラーの階層
"""

from typing import Optional


class QhetError(Exception):
    """QHetSim共通の基底例外"""

    pass


class ConfigurationError(QhetError):
    """設定関連エラー"""

    pass


class ParseError(ConfigurationError):
    """設定テキストの構文エラー（不正行・重複キー・未知キー）"""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"{line_no}行目: {message}"
        super().__init__(message)


class ValidationError(ConfigurationError):
    """設定値が不変条件を満たさない"""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class DomainError(QhetError, ValueError):
    """引数が定義域外"""

    pass


class LengthError(QhetError, ValueError):
    """時系列長・ラグ長の不足"""

    pass


class ShapeError(QhetError, ValueError):
    """モード数・配列形状の不一致"""

    pass
