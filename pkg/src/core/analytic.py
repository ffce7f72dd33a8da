"""
QHetSim 解析モデル

入力SNR、ビート光電流、出力信号電力、雑音スペクトル密度 χ(ω)、
出力SNR、雑音指数の閉形式。PSD はすべて片側（負周波数成分の因子2を含む）。
"""

import logging
import math
from typing import Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import DomainError
from .scenario import Scenario, derive

logger = logging.getLogger(__name__)

NF_CONSISTENCY_TOLERANCE = 1e-12

PsdForm = Literal["exact", "high_gain"]
NfMethod = Literal["analytic", "oracle", "monte-carlo"]
ArrayLike = Union[float, np.ndarray]


class NoiseFigureResult(BaseModel):
    """雑音指数の計算結果"""

    model_config = ConfigDict(frozen=True)

    snr_in: float = Field(..., gt=0)
    snr_out: float = Field(..., gt=0)
    nf_db: float
    method: NfMethod
    nf_error_db: float = Field(default=0.0, ge=0, description="統計誤差（モンテカルロのみ）")

    @model_validator(mode="after")
    def _check_consistency(self) -> "NoiseFigureResult":
        expected = 10.0 * math.log10(self.snr_in / self.snr_out)
        if abs(self.nf_db - expected) > NF_CONSISTENCY_TOLERANCE * max(1.0, abs(expected)):
            raise ValueError(f"nf_db が snr_in/snr_out と一致しません: {self.nf_db} != {expected}")
        return self

    @classmethod
    def from_snr(cls, snr_in: float, snr_out: float, method: NfMethod, nf_error_db: float = 0.0) -> "NoiseFigureResult":
        """SNR の組から NF(dB) を計算して生成"""
        if snr_in <= 0 or snr_out <= 0:
            raise DomainError(f"SNR は正である必要があります: snr_in={snr_in}, snr_out={snr_out}")
        return cls(
            snr_in=snr_in,
            snr_out=snr_out,
            nf_db=10.0 * math.log10(snr_in / snr_out),
            method=method,
            nf_error_db=nf_error_db,
        )


def snr_in(scenario: Scenario) -> float:
    """光場固有の入力SNR c·ε0·|α_s|²/(2ħω_s·B)"""
    k = scenario.constants
    return k.c * k.epsilon0 * scenario.alpha_s_mag**2 / (2.0 * k.hbar * scenario.omega_s * scenario.bandwidth_B)


def beat_coefficients(scenario: Scenario) -> Tuple[float, float]:
    """ビート光電流の cos(Ωt−Δθ), sin(Ωt−Δθ) 成分の振幅

    Returns:
        Tuple[float, float]: (√2·A·e^r·cosθ_l, −√2·A·e^{−r}·sinθ_l)、A = c·e·ε0·η·ε_l·|α_s|
    """
    amplitude = math.sqrt(2.0) * derive(scenario).detector_scale * scenario.alpha_s_mag
    return (
        amplitude * math.exp(scenario.r) * math.cos(scenario.theta_l),
        -amplitude * math.exp(-scenario.r) * math.sin(scenario.theta_l),
    )


def beat_signal(t: ArrayLike, scenario: Scenario) -> ArrayLike:
    """平均差動光電流 J₋(t)（時刻配列に対してベクトル化）"""
    cos_amp, sin_amp = beat_coefficients(scenario)
    phase = derive(scenario).Omega * np.asarray(t, dtype=float) - scenario.phase
    signal = cos_amp * np.cos(phase) + sin_amp * np.sin(phase)
    return float(signal) if np.ndim(signal) == 0 else signal


def output_power(scenario: Scenario) -> float:
    """ビート周期の整数倍で時間平均した出力信号電力

    (c·e·ε0·η·ε_l·|α_s|)²·(e^{2r}cos²θ_l + e^{−2r}sin²θ_l)
    """
    amplitude = derive(scenario).detector_scale * scenario.alpha_s_mag
    return amplitude**2 * (
        math.exp(2.0 * scenario.r) * math.cos(scenario.theta_l) ** 2
        + math.exp(-2.0 * scenario.r) * math.sin(scenario.theta_l) ** 2
    )


def spectral_factor_F(omega: ArrayLike, scenario: Scenario, strict: bool = False) -> ArrayLike:
    """スペクトル因子 F(ω)

    F = sinh r·(|ω_l+ω| + |ω_l−ω|) + 2·cos2θ_l·cosh r·√(ω_l²−ω²)
    |ω| > ω_l では平方根項を 0 とする（strict なら DomainError）。

    Raises:
        DomainError: strict=True かつ |ω| > ω_l の場合
    """
    w = np.asarray(omega, dtype=float)
    omega_l = scenario.omega_l
    if strict and np.any(np.abs(w) > omega_l):
        raise DomainError(f"|ω| > ω_l では F(ω) は定義域外です (ω_l={omega_l}, max|ω|={np.max(np.abs(w))})")
    root = np.sqrt(np.maximum(omega_l**2 - w**2, 0.0))
    value = (
        math.sinh(scenario.r) * (np.abs(omega_l + w) + np.abs(omega_l - w))
        + 2.0 * math.cos(2.0 * scenario.theta_l) * math.cosh(scenario.r) * root
    )
    return float(value) if np.ndim(value) == 0 else value


def noise_psd(omega: ArrayLike, scenario: Scenario, form: PsdForm = "exact", strict: bool = False) -> ArrayLike:
    """片側雑音スペクトル密度 χ(ω)

    Args:
        omega: 角周波数（スカラーまたは配列）
        scenario: シナリオ
        form: "exact"（F(ω) を使う厳密形）または "high_gain"（高利得近似）
        strict: |ω| > ω_l を DomainError にする

    Returns:
        2·ηcε0e²ε_l²·[1 + ηħ·sinh r·F(ω)]、high_gain は 2·ηcε0e²ε_l²·[1 + ηħω_l·e^{2r}cos²θ_l]
    """
    params = derive(scenario)
    hbar = scenario.constants.hbar
    if form == "exact":
        excess = params.eta * hbar * math.sinh(scenario.r) * np.asarray(spectral_factor_F(omega, scenario, strict))
    elif form == "high_gain":
        if strict and np.any(np.abs(np.asarray(omega, dtype=float)) > scenario.omega_l):
            raise DomainError(f"|ω| > ω_l は定義域外です (ω_l={scenario.omega_l})")
        excess = np.full(np.shape(omega), params.xi_l * math.exp(2.0 * scenario.r) * math.cos(scenario.theta_l) ** 2)
    else:
        raise DomainError(f"未知のPSD形式です: {form}")
    value = 2.0 * params.shot_level * (1.0 + excess)
    return float(value) if np.ndim(value) == 0 else value


def baseband_noise_psd(scenario: Scenario) -> float:
    """ω ≪ ω_l 極限でのビート周波数の雑音密度

    2·shot·[1 + ξ_l·(2sinh²r + 2sinh r cosh r·cos2θ_l)]、ξ_l = ηħω_l
    """
    params = derive(scenario)
    r = scenario.r
    excess = 2.0 * math.sinh(r) ** 2 + 2.0 * math.sinh(r) * math.cosh(r) * math.cos(2.0 * scenario.theta_l)
    return 2.0 * params.shot_level * (1.0 + params.xi_l * excess)


def snr_out(scenario: Scenario) -> float:
    """出力SNR P_out/(χ(Ω)·B)（χ は ω ≪ ω_l 極限）"""
    return output_power(scenario) / (baseband_noise_psd(scenario) * scenario.bandwidth_B)


def noise_figure(scenario: Scenario) -> NoiseFigureResult:
    """解析的な雑音指数

    θ_l = 0 では 10·log10[(1 + ξ_l(G−1))/(qG)]、ξ_l = q·ω_l/ω_s。

    Raises:
        DomainError: alpha_s_mag = 0（SNR が定義できない）
    """
    if scenario.alpha_s_mag <= 0:
        raise DomainError("alpha_s_mag = 0 では SNR が定義できません")
    return NoiseFigureResult.from_snr(snr_in(scenario), snr_out(scenario), method="analytic")


def noise_figure_regular(xi: float) -> float:
    """量子効率 ξ の通常検出器の雑音指数 10·log10(1/ξ)"""
    if not 0.0 < xi <= 1.0:
        raise DomainError(f"量子効率 xi は (0, 1] が必要です: {xi}")
    return 10.0 * math.log10(1.0 / xi)


class PsdModel(BaseModel):
    """シナリオに束縛された片側雑音密度 χ(ω)"""

    model_config = ConfigDict(frozen=True)

    scenario: Scenario
    one_sided: Literal[True] = True
    form: PsdForm = "exact"
    strict: bool = False

    def evaluate(self, omega: ArrayLike) -> ArrayLike:
        return noise_psd(omega, self.scenario, self.form, self.strict)

    def __call__(self, omega: ArrayLike) -> ArrayLike:
        return self.evaluate(omega)

    def evaluate_frequency(self, freqs: np.ndarray) -> np.ndarray:
        """通常周波数 f の格子上で評価（ω = 2πf）"""
        return np.asarray(self.evaluate(2.0 * np.pi * np.asarray(freqs, dtype=float)), dtype=float)

    @property
    def shot_floor(self) -> float:
        """ショット雑音床 2·ηcε0e²ε_l²"""
        return 2.0 * derive(self.scenario).shot_level
