"""
QHetSim 出力ファイル

CSV（`#` 行のヘッダブロック＋1行の列名）と JSON の書き出し・読み込み。
時系列はリトルエンディアン float64 のバイナリと JSON サイドカー。
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from core.errors import ParseError
from core.noise_synth import TimeSeries
from core.spectral import PsdEstimate
from models.records import TOOL_NAME, TOOL_VERSION, RunReport

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"
BINARY_DTYPE = "<f8"
RECORD_COLUMNS = ["parameter", "parameter_value", "quantity", "method", "value", "error", "seed", "n_seeds"]


def _format_meta_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(str(v) for v in value)
    return str(value)


def header_lines(meta: Dict[str, Any]) -> List[str]:
    """`#` で始まるヘッダブロック（先頭行はツール名とバージョン）"""
    lines = [f"# tool = {TOOL_NAME} {TOOL_VERSION}"]
    lines.extend(f"# {key} = {_format_meta_value(value)}" for key, value in meta.items())
    return lines


def _write_csv(path: PathLike, meta: Dict[str, Any], frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(header_lines(meta)) + "\n")
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    logger.info(f"CSV書き出し: {path}（{len(frame)} 行）")
    return path


def read_csv_with_header(path: PathLike) -> Tuple[Dict[str, str], pd.DataFrame]:
    """ヘッダブロックを辞書に、本体を DataFrame にして返す"""
    path = Path(path)
    meta: Dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if not line.startswith("#"):
                    break
                key, sep, value = line[1:].partition("=")
                if sep:
                    meta[key.strip()] = value.strip()
        frame = pd.read_csv(path, comment="#", keep_default_na=True)
    except (OSError, pd.errors.ParserError) as e:
        raise ParseError(f"CSVを読み込めません: {path} ({e})")
    return meta, frame


def write_json(data: Union[BaseModel, Dict[str, Any]], path: PathLike) -> Path:
    """pydantic モデルまたは辞書を JSON として書き出す"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, BaseModel):
        text = data.model_dump_json(indent=2)
    else:
        text = json.dumps(data, ensure_ascii=False, indent=2)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"JSON書き出し: {path}")
    return path


# ===========================================
# スイープレポート
# ===========================================

def report_frame(report: RunReport) -> pd.DataFrame:
    frame = pd.DataFrame([record.model_dump() for record in report.records], columns=RECORD_COLUMNS)
    for column in ("seed", "n_seeds"):
        frame[column] = frame[column].astype("Int64")
    for column in ("parameter_value", "value", "error"):
        frame[column] = frame[column].astype("float64")
    return frame


def write_report_csv(report: RunReport, path: PathLike) -> Path:
    """スイープ結果を CSV に書き出す（1行 = 点 × 量 × 手法）"""
    meta = {
        "seed_base": report.seed_base,
        "scenario_digest": report.scenario_digest,
        "truncated": report.truncated,
        "skipped": report.skipped,
    }
    return _write_csv(path, meta, report_frame(report))


def write_report_json(report: RunReport, path: PathLike) -> Path:
    return write_json(report, path)


def read_report_json(path: PathLike) -> RunReport:
    try:
        return RunReport.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ParseError(f"レポートを読み込めません: {path} ({e})")


# ===========================================
# 時系列
# ===========================================

def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_timeseries_binary(ts: TimeSeries, path: PathLike) -> Path:
    """リトルエンディアン float64 の生配列と JSON サイドカーを書き出す"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ts.samples.astype(BINARY_DTYPE).tofile(path)
    write_json(
        {
            "tool_version": TOOL_VERSION,
            "dtype": "float64-le",
            "sample_rate": ts.sample_rate,
            "seed": ts.seed,
            "scenario_hash": ts.scenario_hash,
            "length": len(ts),
            "beat_omega": ts.beat_omega,
        },
        sidecar_path(path),
    )
    logger.info(f"時系列書き出し: {path}（{len(ts)} サンプル）")
    return path


def read_timeseries_binary(path: PathLike) -> TimeSeries:
    """write_timeseries_binary の出力を読み込む"""
    path = Path(path)
    try:
        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
        samples = np.fromfile(path, dtype=BINARY_DTYPE)
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"時系列を読み込めません: {path} ({e})")
    if samples.size != meta["length"]:
        raise ParseError(f"サイドカーの長さと一致しません: {samples.size} != {meta['length']}")
    return TimeSeries(
        sample_rate=meta["sample_rate"],
        samples=samples,
        seed=meta["seed"],
        scenario_hash=meta.get("scenario_hash", ""),
        beat_omega=meta.get("beat_omega"),
    )


def write_timeseries_csv(ts: TimeSeries, path: PathLike) -> Path:
    """小さな記録向けの (t, value) CSV"""
    meta = {"seed": ts.seed, "scenario_digest": ts.scenario_hash, "sample_rate": ts.sample_rate}
    frame = pd.DataFrame({"t": ts.times(), "value": ts.samples})
    return _write_csv(path, meta, frame)


# ===========================================
# PSD推定
# ===========================================

def psd_meta(estimate: PsdEstimate) -> Dict[str, Any]:
    return {
        "window": estimate.window,
        "segment_len": estimate.segment_len,
        "overlap": estimate.overlap,
        "n_segments": estimate.n_segments,
        "sample_rate": estimate.sample_rate,
        "seed": estimate.seed if estimate.seed is not None else "",
    }


def write_psd_csv(estimate: PsdEstimate, path: PathLike) -> Path:
    frame = pd.DataFrame({"freq": estimate.freqs, "psd": estimate.values})
    return _write_csv(path, psd_meta(estimate), frame)


def write_psd_json(estimate: PsdEstimate, path: PathLike) -> Path:
    data = {"tool_version": TOOL_VERSION, **psd_meta(estimate)}
    data["freqs"] = estimate.freqs.tolist()
    data["values"] = estimate.values.tolist()
    return write_json(data, path)


def read_psd_csv(path: PathLike) -> PsdEstimate:
    meta, frame = read_csv_with_header(path)
    try:
        return PsdEstimate(
            freqs=frame["freq"].to_numpy(),
            values=frame["psd"].to_numpy(),
            n_segments=int(meta["n_segments"]),
            window=meta["window"],
            segment_len=int(meta["segment_len"]),
            overlap=float(meta["overlap"]),
            sample_rate=float(meta["sample_rate"]),
            seed=int(meta["seed"]) if meta.get("seed") else None,
        )
    except KeyError as e:
        raise ParseError(f"PSD CSV のヘッダが不足しています: {e}")
