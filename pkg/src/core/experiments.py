"""
QHetSim 実験ランナー

パラメータスイープ（解析・オラクル・モンテカルロ）と simulate パイプライン
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from models.records import METHODS, QUANTITIES, PointRecord, RunReport, SimulationSummary
from utils import exporters

from . import analytic
from . import gaussian_engine as engine
from .config_manager import (
    apply_overrides,
    get_thread_limit,
    load_scenario_file,
    parse_key_values,
    parse_number,
)
from .errors import ParseError, ValidationError
from .noise_synth import SynthesisPlan, fit_quadratures, regress_out_beat, synthesize_from_plan
from .scenario import Scenario, derive, describe
from .spectral import DEFAULT_OVERLAP, DEFAULT_SEGMENT_LEN, DEFAULT_WINDOW, measure_nf, psd_at_beat, tone_power, welch_psd

logger = logging.getLogger(__name__)

# モンテカルロ1点あたりの既定サンプル数
MC_DEFAULT_SAMPLES = 2**21
SIMULATE_DEFAULT_SAMPLES = 2**23
# この長さ以下の記録は (t, value) CSV も書き出す
TIMESERIES_CSV_LIMIT = 100_000

SWEEP_KEYS = {
    "parameter", "values", "start", "stop", "count", "spacing", "outputs", "methods",
    "seed_base", "mc_duration", "mc_seeds", "mc_segment_len", "psd_form", "scenario",
}

# 手法ごとに対応する量
SUPPORTED_QUANTITIES = {
    "analytic": set(QUANTITIES),
    "oracle": {"nf_db", "p_out", "chi", "snr_out", "beat_cos", "beat_sin"},
    "monte-carlo": {"nf_db", "p_out", "chi", "snr_out", "beat_cos", "beat_sin"},
}


class SweepSpec(BaseModel):
    """スイープ設定"""

    model_config = ConfigDict(frozen=True)

    parameter: Literal["r", "q", "theta_l", "omega"]
    values: List[float] = Field(..., min_length=1)
    outputs: List[str] = Field(default_factory=lambda: ["nf_db"], min_length=1)
    methods: List[str] = Field(default_factory=lambda: ["analytic"], min_length=1)
    seed_base: int = Field(default=0, ge=0)
    mc_duration: Optional[float] = Field(default=None, gt=0)
    mc_seeds: int = Field(default=4, ge=2)
    mc_segment_len: int = Field(default=256, ge=16)
    psd_form: Literal["exact", "high_gain"] = "exact"
    spacing: str = "explicit"

    @model_validator(mode="after")
    def _check_lists(self) -> "SweepSpec":
        unknown = [q for q in self.outputs if q not in QUANTITIES]
        if unknown:
            raise ValueError(f"未知の出力量です: {', '.join(unknown)}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"未知の手法です: {', '.join(unknown)}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("values に有限でない値が含まれています")
        if self.parameter == "q" and not all(0.0 < v <= 1.0 for v in self.values):
            raise ValueError("q の値は (0, 1] が必要です")
        if self.parameter == "r" and not all(v >= 0.0 for v in self.values):
            raise ValueError("r の値は非負が必要です")
        return self

    def check_against(self, scenario: Scenario) -> None:
        """シナリオに依存する定義域（|ω| < ω_l）を検証"""
        if self.parameter == "omega" and not all(abs(v) < scenario.omega_l for v in self.values):
            raise ValidationError("values", f"omega スイープは |ω| < ω_l = {scenario.omega_l} が必要です")


def build_grid(spacing: str, start: float, stop: float, count: int) -> List[float]:
    """スイープ格子（linear / log / gain_db）

    gain_db は G = e^{2r} の dB 値を r = dB·ln10/20 に変換する。
    """
    if count < 1:
        raise ValidationError("count", f"count は1以上が必要です: {count}")
    if spacing == "linear":
        grid = np.linspace(start, stop, count)
    elif spacing == "log":
        if start <= 0 or stop <= 0:
            raise ValidationError("start", "log 格子には正の start/stop が必要です")
        grid = np.geomspace(start, stop, count)
    elif spacing == "gain_db":
        grid = np.linspace(start, stop, count) * math.log(10.0) / 20.0
    else:
        raise ValidationError("spacing", f"未知の格子です: {spacing}")
    return [float(v) for v in grid]


def _split_list(value: str) -> List[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def load_sweep(
    config_text: str, base_dir: Optional[Path] = None, default_scenario: Optional[Scenario] = None
) -> Tuple[SweepSpec, Scenario]:
    """スイープ設定テキストを読み込む

    シナリオは `scenario` キーのファイル、なければ default_scenario、なければ既定シナリオ。

    Returns:
        Tuple[SweepSpec, Scenario]: スイープ設定と `set.<key>` 上書き適用済みのシナリオ

    Raises:
        ParseError: 不正行・未知キー
        ValidationError: 値の不変条件違反
    """
    raw: Dict[str, str] = {}
    overrides: Dict[str, str] = {}
    for line_no, key, value in parse_key_values(config_text):
        if key.startswith("set."):
            overrides[key[4:]] = value
        elif key in SWEEP_KEYS:
            raw[key] = value
        else:
            raise ParseError(f"未知のキーです: {key}", line_no)

    scenario_path = raw.get("scenario")
    if scenario_path is not None and base_dir is not None and not Path(scenario_path).is_absolute():
        scenario_path = str(base_dir / scenario_path)
    if scenario_path is None and default_scenario is not None:
        base = default_scenario
    else:
        base = load_scenario_file(scenario_path)
    scenario = apply_overrides(base, overrides)

    if "parameter" not in raw:
        raise ValidationError("parameter", "必須キーがありません")
    spacing = raw.get("spacing", "explicit" if "values" in raw else "linear")
    if "values" in raw:
        values = [parse_number("values", v) for v in _split_list(raw["values"])]
    elif {"start", "stop", "count"} <= raw.keys():
        values = build_grid(
            spacing,
            parse_number("start", raw["start"]),
            parse_number("stop", raw["stop"]),
            int(parse_number("count", raw["count"])),
        )
    else:
        raise ValidationError("values", "values または start/stop/count が必要です")
    if spacing == "gain_db" and raw["parameter"] != "r":
        raise ValidationError("spacing", "gain_db 格子は parameter = r のときのみ使えます")

    fields: Dict[str, Any] = {"parameter": raw["parameter"], "values": values, "spacing": spacing}
    for key in ("outputs", "methods"):
        if key in raw:
            fields[key] = _split_list(raw[key])
    for key in ("seed_base", "mc_seeds", "mc_segment_len"):
        if key in raw:
            fields[key] = int(parse_number(key, raw[key]))
    if "mc_duration" in raw:
        fields["mc_duration"] = parse_number("mc_duration", raw["mc_duration"])
    if "psd_form" in raw:
        fields["psd_form"] = raw["psd_form"]
    try:
        spec = SweepSpec(**fields)
    except PydanticValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first.get("loc") else "sweep"
        raise ValidationError(key, first.get("msg", "不正な値"))
    spec.check_against(scenario)
    return spec, scenario


def load_sweep_file(path: str, default_scenario: Optional[Scenario] = None) -> Tuple[SweepSpec, Scenario]:
    sweep_path = Path(path)
    try:
        text = sweep_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"スイープファイルを読み込めません: {sweep_path} ({e})")
    logger.info(f"スイープファイル読み込み: {sweep_path}")
    return load_sweep(text, sweep_path.parent, default_scenario)


# ===========================================
# スイープ点の評価
# ===========================================

def point_scenario(scenario: Scenario, parameter: str, value: float) -> Scenario:
    if parameter == "omega":
        return scenario
    return scenario.with_overrides(**{parameter: value})


def _analytic_value(s: Scenario, spec: SweepSpec, quantity: str, value: float) -> float:
    omega = value if spec.parameter == "omega" else derive(s).Omega
    if quantity == "nf_db":
        return analytic.noise_figure(s).nf_db
    if quantity == "p_out":
        return analytic.output_power(s)
    if quantity == "chi":
        if spec.parameter != "omega" and spec.psd_form == "exact":
            return analytic.baseband_noise_psd(s)
        return analytic.noise_psd(omega, s, spec.psd_form)
    if quantity == "F":
        return analytic.spectral_factor_F(omega, s)
    if quantity == "snr_out":
        return analytic.snr_out(s)
    cos_amp, sin_amp = analytic.beat_coefficients(s)
    return cos_amp if quantity == "beat_cos" else sin_amp


def _oracle_values(s: Scenario) -> Dict[str, float]:
    p_out = engine.oracle_output_power(s)
    chi = engine.oracle_noise_psd_at_beat(s)
    stats = engine.heterodyne_beat_statistics(engine.prepare_detection_state(s), s)
    scale = derive(s).detector_scale
    values = {
        "p_out": p_out,
        "chi": chi,
        "snr_out": p_out / (chi * s.bandwidth_B),
        "beat_cos": scale * stats.beat_cos_mean,
        "beat_sin": scale * stats.beat_sin_mean,
    }
    if s.alpha_s_mag > 0:
        values["nf_db"] = engine.oracle_noise_figure(s).nf_db
    return values


def _mc_values(s: Scenario, spec: SweepSpec, seed: int) -> Dict[str, float]:
    n_samples = None if spec.mc_duration is not None else MC_DEFAULT_SAMPLES
    plan = SynthesisPlan.for_scenario(s, duration=spec.mc_duration, n_samples=n_samples)
    ts = synthesize_from_plan(plan, seed)
    omega = plan.beat_omega
    p_out = tone_power(ts, omega)
    estimate = welch_psd(regress_out_beat(ts), spec.mc_segment_len)
    chi = psd_at_beat(estimate, omega)
    beat_cos, beat_sin = fit_quadratures(ts.samples, ts.sample_rate, omega, s.phase)
    values = {
        "p_out": p_out,
        "chi": chi,
        "snr_out": p_out / (chi * s.bandwidth_B),
        "beat_cos": beat_cos,
        "beat_sin": beat_sin,
    }
    if s.alpha_s_mag > 0:
        values["nf_db"] = measure_nf(ts, s, segment_len=spec.mc_segment_len).nf_db
    return values


def mc_seeds_for_point(spec: SweepSpec, index: int) -> List[int]:
    """点番号ごとに重ならないシード列"""
    first = spec.seed_base + index * spec.mc_seeds
    return list(range(first, first + spec.mc_seeds))


def evaluate_point(scenario: Scenario, spec: SweepSpec, index: int, value: float) -> List[PointRecord]:
    """スイープ1点の全 (量, 手法) を評価する（未対応の組は含めない）"""
    s = point_scenario(scenario, spec.parameter, value)
    records: List[PointRecord] = []
    common = {"parameter": spec.parameter, "parameter_value": value}

    for method in spec.methods:
        quantities = [q for q in spec.outputs if is_supported(spec, q, method)]
        if not quantities:
            continue
        if method == "analytic":
            for quantity in quantities:
                if quantity == "nf_db" and s.alpha_s_mag <= 0:
                    logger.warning(f"alpha_s_mag = 0 のため NF を省略します（点 {index}）")
                    continue
                records.append(PointRecord(
                    **common, quantity=quantity, method=method, value=_analytic_value(s, spec, quantity, value)
                ))
        elif method == "oracle":
            values = _oracle_values(s)
            for quantity in quantities:
                if quantity in values:
                    records.append(PointRecord(**common, quantity=quantity, method=method, value=values[quantity]))
        else:
            seeds = mc_seeds_for_point(spec, index)
            samples = [_mc_values(s, spec, seed) for seed in seeds]
            for quantity in quantities:
                data = np.array([sample[quantity] for sample in samples if quantity in sample])
                if data.size < 2:
                    continue
                records.append(PointRecord(
                    **common,
                    quantity=quantity,
                    method=method,
                    value=float(np.mean(data)),
                    error=float(np.std(data, ddof=1) / math.sqrt(data.size)),
                    seed=seeds[0],
                    n_seeds=int(data.size),
                ))
    logger.debug(f"スイープ点 {index}: {spec.parameter}={value}, {len(records)} レコード")
    return records


def is_supported(spec: SweepSpec, quantity: str, method: str) -> bool:
    if quantity not in SUPPORTED_QUANTITIES[method]:
        return False
    if method != "analytic" and (spec.parameter == "omega" or (quantity == "chi" and spec.psd_form != "exact")):
        return False
    return True


def unsupported_pairs(spec: SweepSpec) -> List[str]:
    return [
        f"{quantity}/{method}"
        for method in spec.methods
        for quantity in spec.outputs
        if not is_supported(spec, quantity, method)
    ]


def run_sweep(spec: SweepSpec, scenario: Scenario, max_workers: Optional[int] = None) -> RunReport:
    """スイープを実行してレポートを返す

    点ごとに独立に並列評価し、結果は点の順に並べる。
    KeyboardInterrupt 時は完了した点までを truncated=True で返す。
    """
    started = time.monotonic()
    skipped = unsupported_pairs(spec)
    for pair in skipped:
        logger.warning(f"未対応の (量/手法) をスキップします: {pair}")

    report = RunReport(
        scenario=describe(scenario),
        scenario_digest=scenario.digest(),
        sweep=spec.model_dump(),
        seed_base=spec.seed_base,
        skipped=skipped,
    )
    logger.info(f"スイープ開始: {spec.parameter} × {len(spec.values)} 点, 手法={','.join(spec.methods)}")

    workers = max_workers or get_thread_limit()
    executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="QHetSweep")
    futures = [executor.submit(evaluate_point, scenario, spec, i, v) for i, v in enumerate(spec.values)]
    records: List[PointRecord] = []
    truncated = False
    try:
        for future in futures:
            records.extend(future.result())
    except KeyboardInterrupt:
        truncated = True
        logger.warning(f"スイープが中断されました（{len(records)} レコードまで保存）")
    finally:
        executor.shutdown(wait=not truncated, cancel_futures=True)

    elapsed = time.monotonic() - started
    logger.info(f"スイープ完了: {len(records)} レコード, {elapsed:.2f} 秒")
    return report.model_copy(update={"records": records, "truncated": truncated, "wall_clock_s": elapsed})


def write_sweep_outputs(report: RunReport, out_path: Path, fmt: str = "csv") -> List[Path]:
    """CSV と JSON レポートを書き出す（fmt は主出力の形式）"""
    out_path = Path(out_path)
    stem = out_path.with_suffix("")
    written = [exporters.write_report_csv(report, stem.with_suffix(".csv"))]
    written.append(exporters.write_report_json(report, stem.with_suffix(".json")))
    if fmt == "json":
        written.reverse()
    return written


# ===========================================
# simulate パイプライン
# ===========================================

def simulate(
    scenario: Scenario,
    seed: int,
    out_dir: Path,
    duration: Optional[float] = None,
    n_samples: Optional[int] = None,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap: float = DEFAULT_OVERLAP,
    window: str = DEFAULT_WINDOW,
    fmt: str = "csv",
) -> SimulationSummary:
    """光電流記録を合成し、PSD推定と NF 測定の結果をファイルに書き出す

    出力: timeseries.f64（＋ .json サイドカー）、psd.csv|json、nf.json、summary.json
    """
    if duration is None and n_samples is None:
        n_samples = SIMULATE_DEFAULT_SAMPLES
    plan = SynthesisPlan.for_scenario(scenario, duration=duration, n_samples=n_samples)
    logger.info(f"シミュレーション開始: n={plan.n_samples}, fs={plan.fs:.6g}, seed={seed}")

    ts = synthesize_from_plan(plan, seed)
    power = tone_power(ts, plan.beat_omega)
    estimate = welch_psd(regress_out_beat(ts), segment_len, overlap, window)
    chi = psd_at_beat(estimate, plan.beat_omega)
    nf = measure_nf(ts, scenario, segment_len, overlap, window) if scenario.alpha_s_mag > 0 else None

    out_dir = Path(out_dir)
    files = {"timeseries": exporters.write_timeseries_binary(ts, out_dir / "timeseries.f64")}
    if len(ts) <= TIMESERIES_CSV_LIMIT:
        files["timeseries_csv"] = exporters.write_timeseries_csv(ts, out_dir / "timeseries.csv")
    if fmt == "json":
        files["psd"] = exporters.write_psd_json(estimate, out_dir / "psd.json")
    else:
        files["psd"] = exporters.write_psd_csv(estimate, out_dir / "psd.csv")
    analytic_nf: Optional[float] = None
    if nf is not None:
        files["nf"] = exporters.write_json(nf, out_dir / "nf.json")
        analytic_nf = analytic.noise_figure(scenario).nf_db
    else:
        logger.warning("alpha_s_mag = 0 のため NF 測定を省略します")
    summary = SimulationSummary(
        scenario=describe(scenario),
        scenario_digest=scenario.digest(),
        seed=seed,
        sample_rate=ts.sample_rate,
        n_samples=len(ts),
        duration=ts.duration,
        window=window,
        segment_len=segment_len,
        overlap=overlap,
        n_segments=estimate.n_segments,
        tone_power=power,
        chi_at_beat=chi,
        nf=nf.model_dump() if nf is not None else None,
        analytic_nf_db=analytic_nf,
        analytic_p_out=analytic.output_power(scenario),
        analytic_chi=analytic.baseband_noise_psd(scenario),
        files={key: str(path) for key, path in files.items()},
    )
    exporters.write_json(summary, out_dir / "summary.json")
    if nf is not None:
        logger.info(f"シミュレーション完了: NF={nf.nf_db:.4f} ± {nf.nf_error_db:.4f} dB")
    else:
        logger.info(f"シミュレーション完了: χ(Ω)={chi:.6g}")
    return summary
