"""
QHetSim メインアプリケーション

量子相関ヘテロダイン検出シミュレータのコマンドラインエントリポイント
"""

import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List, Optional

# Pythonパスにsrcディレクトリを追加
sys.path.insert(0, str(Path(__file__).parent))

from core.config_manager import LoggingConfig  # noqa: E402
from core.errors import ConfigurationError, DomainError, LengthError, ShapeError  # noqa: E402
from models.records import TOOL_VERSION  # noqa: E402
from utils.formatting import OutputHelper  # noqa: E402

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_DOMAIN_ERROR = 3


class TruncatingFormatter(logging.Formatter):
    """メッセージ長を制限するカスタムフォーマッター（レベル別対応）"""

    def __init__(self, fmt=None, datefmt=None, max_length=1000, level_specific_lengths=None, truncate_marker="...", enable_truncation=True):
        super().__init__(fmt, datefmt)
        self.max_length = max_length  # デフォルト値
        self.level_specific_lengths = level_specific_lengths or {}
        self.truncate_marker = truncate_marker
        self.enable_truncation = enable_truncation

    def format(self, record):
        formatted = super().format(record)

        if self.enable_truncation:
            # レベル別制限を取得（なければデフォルト値を使用）
            max_length = self.level_specific_lengths.get(record.levelname, self.max_length)

            if len(formatted) > max_length:
                truncate_point = max_length - len(self.truncate_marker)
                formatted = formatted[:truncate_point] + self.truncate_marker

        return formatted


def setup_logging(log_config: Optional[LoggingConfig] = None):
    """ログ設定を初期化（コンソールは stderr、file 指定時はローテーションファイルも）"""
    if log_config is None:
        log_config = LoggingConfig()
    level = getattr(logging, log_config.level.upper(), logging.INFO)

    formatter = TruncatingFormatter(
        fmt=log_config.format,
        max_length=log_config.max_message_length,
        level_specific_lengths=log_config.level_specific_lengths,
        truncate_marker=log_config.truncate_marker,
        enable_truncation=log_config.enable_truncation
    )

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    # stdout はコマンド結果専用
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_config.file:
        try:
            log_path = Path(log_config.file)
            log_path.parent.mkdir(parents=True, exist_ok=True)
            file_handler = RotatingFileHandler(
                log_path,
                maxBytes=log_config.max_size_mb * 1024 * 1024,
                backupCount=log_config.backup_count,
                encoding='utf-8'
            )
            file_handler.setLevel(level)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)
        except OSError as e:
            print(f"ファイルロガーの設定に失敗しました: {e}", file=sys.stderr)


logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """グローバルオプションとサブコマンドを持つパーサー"""
    from cli import SUBCOMMANDS

    parser = argparse.ArgumentParser(
        prog="qhetsim",
        description="量子相関ヘテロダイン検出シミュレータ",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    parser.add_argument("--config", default=None, help="シナリオ設定ファイル（省略時は既定シナリオ）")
    parser.add_argument("--out", default=None, help="出力先（ファイルまたはディレクトリ）")
    parser.add_argument("--seed", type=int, default=None, help="乱数シード")
    parser.add_argument("--format", choices=["csv", "json"], default="csv", help="出力形式")
    parser.add_argument("--unit-system", choices=["scaled", "si"], default=None, help="単位系")
    parser.add_argument("--log-level", default=None, help="ログレベル（DEBUG, INFO, ...）")
    parser.add_argument("--log-file", default=None, help="ログファイル（ローテーション）")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for module in SUBCOMMANDS:
        module.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """メイン実行関数

    Returns:
        int: 終了コード（0 成功、1 検証失敗、2 設定エラー、3 定義域・長さ・形状エラー）
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    log_config = LoggingConfig()
    if args.log_level:
        log_config = log_config.model_copy(update={"level": args.log_level})
    if args.log_file:
        log_config = log_config.model_copy(update={"file": args.log_file})
    setup_logging(log_config)
    logger.debug(f"QHetSim {TOOL_VERSION}: {args.command}")

    try:
        return args.func(args)
    except ConfigurationError as e:
        logger.error(f"設定エラー: {e}")
        print(OutputHelper.format_error(str(e)), file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (DomainError, LengthError, ShapeError, IndexError, ValueError) as e:
        logger.error(f"定義域エラー: {e}")
        print(OutputHelper.format_error(str(e)), file=sys.stderr)
        return EXIT_DOMAIN_ERROR
    except KeyboardInterrupt:
        logger.info("中断されました")
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"予期しないエラー: {e}")
        print(OutputHelper.format_error(str(e)), file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
