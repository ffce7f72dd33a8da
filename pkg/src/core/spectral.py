"""
QHetSim スペクトル推定

Welch 法による片側PSD推定、ビート周波数でのトーン電力抽出、
モンテカルロによる雑音指数測定。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import signal

from .analytic import NoiseFigureResult, snr_in
from .config_manager import get_thread_limit
from .errors import DomainError, LengthError
from .noise_synth import PsdFunction, TimeSeries, psd_on_grid, regress_out_beat, synthesize_colored_noise
from .scenario import Scenario, derive

logger = logging.getLogger(__name__)

WindowName = Literal["hann", "rectangular"]

# scipy.signal の窓名
SCIPY_WINDOWS = {"hann": "hann", "rectangular": "boxcar"}

# トーンの両側で除外するビン数（hann は主ローブが ±1 ビンに広がる）
TONE_GUARD_BINS = {"hann": 1, "rectangular": 0}

DEFAULT_SEGMENT_LEN = 4096
DEFAULT_OVERLAP = 0.5
DEFAULT_WINDOW: WindowName = "hann"
MIN_NF_SEGMENTS = 50
MAX_OVERLAP = 0.9


class PsdEstimate(BaseModel):
    """片側PSD推定値"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    freqs: np.ndarray
    values: np.ndarray
    n_segments: int = Field(..., ge=1)
    window: WindowName
    segment_len: int = Field(..., ge=2)
    overlap: float = Field(..., ge=0, lt=1)
    sample_rate: float = Field(..., gt=0)
    seed: Optional[int] = None

    @field_validator("freqs", "values", mode="before")
    @classmethod
    def _to_array(cls, value):
        array = np.array(value, dtype=np.float64)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_grid(self) -> "PsdEstimate":
        if self.freqs.shape != self.values.shape or self.freqs.ndim != 1:
            raise ValueError(f"freqs と values の形状が一致しません: {self.freqs.shape}, {self.values.shape}")
        if np.any(self.values < 0):
            raise ValueError("PSD推定値に負の値が含まれています")
        if self.freqs.size > 1 and np.any(np.diff(self.freqs) <= 0):
            raise ValueError("freqs が昇順ではありません")
        return self

    @property
    def resolution(self) -> float:
        """周波数分解能 Δf"""
        return self.sample_rate / self.segment_len

    def integrated_power(self, f_min: float = 0.0, f_max: Optional[float] = None) -> float:
        """Σ values·Δf（全帯域なら系列の分散に一致）"""
        mask = self.freqs >= f_min
        if f_max is not None:
            mask &= self.freqs <= f_max
        return float(np.sum(self.values[mask]) * self.resolution)


def count_segments(n: int, segment_len: int, overlap: float) -> int:
    """Welch 法で実際に使われるセグメント数"""
    noverlap = int(overlap * segment_len)
    return 1 + (n - segment_len) // (segment_len - noverlap)


def _check_welch_args(n: int, segment_len: int, overlap: float, window: str) -> None:
    if window not in SCIPY_WINDOWS:
        raise DomainError(f"未知の窓関数です: {window}（hann, rectangular のいずれか）")
    if not 0.0 <= overlap <= MAX_OVERLAP:
        raise DomainError(f"overlap は [0, {MAX_OVERLAP}] が必要です: {overlap}")
    if segment_len < 2 or segment_len > n:
        raise LengthError(f"セグメント長が不正です: segment_len={segment_len}, 記録長={n}")


def welch_psd(
    ts: TimeSeries,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap: float = DEFAULT_OVERLAP,
    window: WindowName = DEFAULT_WINDOW,
) -> PsdEstimate:
    """Welch 法による片側PSD推定（窓電力補正済み、トレンド除去なし）

    Raises:
        LengthError: segment_len が記録長を超える
        DomainError: 未知の窓関数、overlap が範囲外
    """
    _check_welch_args(len(ts), segment_len, overlap, window)
    freqs, values = signal.welch(
        ts.samples,
        fs=ts.sample_rate,
        window=SCIPY_WINDOWS[window],
        nperseg=segment_len,
        noverlap=int(overlap * segment_len),
        detrend=False,
        return_onesided=True,
        scaling="density",
    )
    return PsdEstimate(
        freqs=freqs,
        values=np.maximum(values, 0.0),
        n_segments=count_segments(len(ts), segment_len, overlap),
        window=window,
        segment_len=segment_len,
        overlap=overlap,
        sample_rate=ts.sample_rate,
        seed=ts.seed,
    )


def tone_power(ts: TimeSeries, omega: float) -> float:
    """角周波数 omega の正弦波成分の電力 (c² + s²)/2

    周期の整数倍の区間で cos/sin に最小二乗射影する（コヒーレント復調）。

    Raises:
        DomainError: omega が Nyquist 以上、または非正
        LengthError: 記録が1周期に満たない
    """
    fs = ts.sample_rate
    if not 0.0 < omega < math.pi * fs:
        raise DomainError(f"omega は (0, π·fs) が必要です: omega={omega}, fs={fs}")
    period = 2.0 * math.pi * fs / omega
    n_periods = math.floor(len(ts) / period)
    if n_periods < 1:
        raise LengthError(f"記録がビート1周期より短いです: n={len(ts)}, 周期={period:.3f} サンプル")
    n_use = min(len(ts), int(round(n_periods * period)))
    arg = omega * np.arange(n_use) / fs
    design = np.column_stack([np.cos(arg), np.sin(arg)])
    (c, s), *_ = np.linalg.lstsq(design, ts.samples[:n_use], rcond=None)
    return float((c * c + s * s) / 2.0)


def psd_at_beat(estimate: PsdEstimate, omega: float) -> float:
    """トーンのビンを除いた両側2ビンずつから χ(Ω) を線形補間で推定する"""
    f0 = omega / (2.0 * math.pi)
    k0 = f0 / estimate.resolution
    kc = int(round(k0))
    guard = TONE_GUARD_BINS[estimate.window]
    bins = np.array([kc - guard - 2, kc - guard - 1, kc + guard + 1, kc + guard + 2])
    if bins[0] < 0 or bins[-1] >= estimate.freqs.size:
        raise LengthError(f"ビート周波数の近傍ビンが足りません: k0={k0:.2f}, ビン数={estimate.freqs.size}")
    slope, intercept = np.polyfit(estimate.freqs[bins], estimate.values[bins], 1)
    return float(slope * f0 + intercept)


def measure_nf(
    ts: TimeSeries,
    scenario: Scenario,
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap: float = DEFAULT_OVERLAP,
    window: WindowName = DEFAULT_WINDOW,
) -> NoiseFigureResult:
    """合成記録から雑音指数を測定する

    トーン電力をコヒーレント復調で求め、ビートを除去した揺らぎの Welch PSD から
    χ(Ω) を推定して SNR_out = P/(χ(Ω)·B) とする。

    Raises:
        LengthError: Welch セグメント数が50未満
        DomainError: alpha_s_mag = 0
    """
    if scenario.alpha_s_mag <= 0:
        raise DomainError("alpha_s_mag = 0 では SNR が定義できません")
    n_segments = count_segments(len(ts), segment_len, overlap) if segment_len <= len(ts) else 0
    if n_segments < MIN_NF_SEGMENTS:
        raise LengthError(f"NF測定には {MIN_NF_SEGMENTS} 以上のセグメントが必要です: {n_segments}")

    omega = ts.beat_omega if ts.beat_omega is not None else derive(scenario).Omega
    power = tone_power(ts, omega)
    estimate = welch_psd(regress_out_beat(ts, omega), segment_len, overlap, window)
    chi = psd_at_beat(estimate, omega)
    if chi <= 0:
        raise DomainError(f"χ(Ω) の推定値が正ではありません: {chi}")

    snr_out = power / (chi * scenario.bandwidth_B)
    # 4ビン平均の相対標準偏差からの概算
    relative_error = 1.0 / math.sqrt(4.0 * estimate.n_segments)
    nf_error_db = 10.0 / math.log(10.0) * relative_error
    result = NoiseFigureResult.from_snr(snr_in(scenario), snr_out, method="monte-carlo", nf_error_db=nf_error_db)
    logger.debug(
        f"NF測定: P={power:.6g}, χ(Ω)={chi:.6g}, セグメント={estimate.n_segments}, NF={result.nf_db:.4f} dB"
    )
    return result


def ensemble_welch(
    psd: PsdFunction,
    fs: float,
    n: int,
    seeds: Iterable[int],
    segment_len: int = DEFAULT_SEGMENT_LEN,
    overlap: float = DEFAULT_OVERLAP,
    window: WindowName = DEFAULT_WINDOW,
    max_workers: Optional[int] = None,
) -> PsdEstimate:
    """複数シードで合成した雑音の Welch 推定の平均"""
    seed_list: List[int] = list(seeds)
    if not seed_list:
        raise DomainError("シードが1つ以上必要です")
    _check_welch_args(n, segment_len, overlap, window)

    def one(seed: int) -> np.ndarray:
        return welch_psd(synthesize_colored_noise(psd, fs, n, seed), segment_len, overlap, window).values

    workers = max_workers or get_thread_limit()
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="QHetWelch") as executor:
        spectra = list(executor.map(one, seed_list))

    freqs = np.fft.rfftfreq(segment_len, d=1.0 / fs)
    logger.debug(f"アンサンブルWelch: {len(seed_list)} シード, n={n}, segment_len={segment_len}")
    return PsdEstimate(
        freqs=freqs,
        values=np.mean(spectra, axis=0),
        n_segments=count_segments(n, segment_len, overlap) * len(seed_list),
        window=window,
        segment_len=segment_len,
        overlap=overlap,
        sample_rate=fs,
        seed=seed_list[0],
    )


def relative_rms_error(estimate: PsdEstimate, psd: PsdFunction, f_max: Optional[float] = None) -> float:
    """(0, f_max] のビンでの推定値と目標PSDの相対RMS誤差（f_max 省略時 fs/4）"""
    f_max = estimate.sample_rate / 4.0 if f_max is None else f_max
    mask = (estimate.freqs > 0) & (estimate.freqs <= f_max)
    target = psd_on_grid(psd, estimate.freqs[mask])
    if np.any(target <= 0):
        raise DomainError("相対誤差の計算には正の目標PSDが必要です")
    return float(np.sqrt(np.mean((estimate.values[mask] / target - 1.0) ** 2)))
