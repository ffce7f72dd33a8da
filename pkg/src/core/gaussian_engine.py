"""
QHetSim ガウス状態エンジン

共分散行列形式による信号モード・イメージ帯モードの独立オラクル。
シンプレクティック変換（2モードスクイーズ）と損失チャネルで状態を発展させ、
モード単位のモーメントとヘテロダインのビート統計を求める。

規約:
    - 直交位相の並び (x1, p1, ..., xN, pN)、x = (a + a†)/√2
    - 真空の分散 = 1/2（cov_vac = I/2）
    - 2モードスクイーズは b_s = a_s cosh r + a_i† sinh r（r は実数）
"""

import json
import logging
import math
from typing import NamedTuple, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .analytic import NoiseFigureResult, snr_in
from .errors import DomainError, ShapeError
from .scenario import Scenario, derive

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12
UNCERTAINTY_TOLERANCE = 1e-10
SYMPLECTIC_TOLERANCE = 1e-12

SIGNAL_MODE = 0
IMAGE_MODE = 1


def _frozen_array(value) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


def symplectic_form(n_modes: int) -> np.ndarray:
    """標準シンプレクティック形式 J（モードごとに [[0, 1], [-1, 0]]）"""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def is_symplectic(matrix: np.ndarray, tol: float = SYMPLECTIC_TOLERANCE) -> bool:
    """S·J·Sᵀ = J を要素ごとに判定

    許容誤差は ‖S‖₂² に比例させる（丸め誤差は e^{2r} で増える）。
    """
    n_modes = matrix.shape[0] // 2
    omega = symplectic_form(n_modes)
    atol = tol * max(1.0, float(np.linalg.norm(matrix, 2)) ** 2)
    return bool(np.max(np.abs(matrix @ omega @ matrix.T - omega)) <= atol)


class GaussianState(BaseModel):
    """N モードのガウス状態（平均ベクトルと共分散行列）"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_modes: int = Field(..., ge=1)
    mean: np.ndarray
    cov: np.ndarray

    @field_validator("mean", "cov", mode="before")
    @classmethod
    def _to_array(cls, value):
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_physical(self) -> "GaussianState":
        dim = 2 * self.n_modes
        if self.mean.shape != (dim,) or self.cov.shape != (dim, dim):
            raise ShapeError(f"状態の形状が不正です: mean={self.mean.shape}, cov={self.cov.shape}, n_modes={self.n_modes}")
        if np.max(np.abs(self.cov - self.cov.T)) > SYMMETRY_TOLERANCE:
            raise ValueError("共分散行列が対称ではありません")
        margin = self.uncertainty_margin()
        if margin < -UNCERTAINTY_TOLERANCE * max(1.0, float(np.linalg.norm(self.cov, 2))):
            raise ValueError(f"不確定性関係を満たしません（最小固有値={margin:.3e}）")
        return self

    def uncertainty_margin(self) -> float:
        """cov + (i/2)J の最小固有値（物理的状態なら ≥ 0）"""
        hermitian = self.cov + 0.5j * symplectic_form(self.n_modes)
        return float(np.min(np.linalg.eigvalsh(hermitian)))

    def purity(self) -> float:
        """1/√det(2·cov)（純粋状態で 1）"""
        return float(1.0 / math.sqrt(np.linalg.det(2.0 * self.cov)))

    def to_json(self) -> str:
        """デバッグ用ダンプ（行優先の配列）"""
        return json.dumps(
            {"n_modes": self.n_modes, "mean": self.mean.tolist(), "cov": self.cov.tolist()},
            ensure_ascii=False,
        )


class SymplecticTransform(BaseModel):
    """シンプレクティック変換行列"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray
    label: str = ""

    @field_validator("matrix", mode="before")
    @classmethod
    def _to_array(cls, value):
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_symplectic(self) -> "SymplecticTransform":
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1] or self.matrix.shape[0] % 2:
            raise ShapeError(f"変換行列の形状が不正です: {self.matrix.shape}")
        if not is_symplectic(self.matrix):
            raise ValueError(f"シンプレクティック条件を満たしません: {self.label}")
        return self

    def apply(self, state: GaussianState) -> GaussianState:
        """状態に変換を適用（mean → S·mean, cov → S·cov·Sᵀ）"""
        if self.matrix.shape[0] != 2 * state.n_modes:
            raise ShapeError(f"モード数が一致しません: 変換={self.matrix.shape[0] // 2}, 状態={state.n_modes}")
        cov = self.matrix @ state.cov @ self.matrix.T
        return GaussianState(n_modes=state.n_modes, mean=self.matrix @ state.mean, cov=0.5 * (cov + cov.T))


class ModeMoments(BaseModel):
    """消滅演算子のゆらぎモーメント

    交差・自己モーメントは場の正周波数成分（i·b）の規約で表す。
    """

    model_config = ConfigDict(frozen=True)

    n_sig: float = Field(..., description="⟨Δb_s†Δb_s⟩")
    n_img: float = Field(..., description="⟨Δb_i†Δb_i⟩")
    m_cross: complex = Field(..., description="⟨Δb_sΔb_i⟩")
    m_self_sig: complex = Field(..., description="⟨Δb_sΔb_s⟩")

    def physicality_bound(self) -> float:
        """|m_cross|² の上限 n_sig·n_img + max(n_sig, n_img) + 1/4"""
        return self.n_sig * self.n_img + max(self.n_sig, self.n_img) + 0.25


class BeatStatistics(NamedTuple):
    """ビート直交成分の平均と分散（真空1モード = 1/2 単位）"""

    beat_cos_mean: float
    beat_sin_mean: float
    beat_cos_var: float
    beat_sin_var: float


def _check_mode(state: GaussianState, mode: int) -> None:
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"モード番号が範囲外です: {mode}（モード数 {state.n_modes}）")


def vacuum_state(n_modes: int) -> GaussianState:
    """真空状態（mean = 0, cov = I/2）"""
    if n_modes < 1:
        raise DomainError(f"モード数は1以上が必要です: {n_modes}")
    return GaussianState(n_modes=n_modes, mean=np.zeros(2 * n_modes), cov=0.5 * np.eye(2 * n_modes))


def displace(state: GaussianState, mode: int, amp_mag: float, phase: float) -> GaussianState:
    """コヒーレント変位 ⟨a⟩ += amp_mag·e^{iφ}"""
    _check_mode(state, mode)
    if amp_mag < 0:
        raise DomainError(f"変位振幅は非負が必要です: {amp_mag}")
    mean = np.array(state.mean)
    mean[2 * mode] += math.sqrt(2.0) * amp_mag * math.cos(phase)
    mean[2 * mode + 1] += math.sqrt(2.0) * amp_mag * math.sin(phase)
    return GaussianState(n_modes=state.n_modes, mean=mean, cov=state.cov)


def two_mode_squeeze_transform(n_modes: int, r: float, mode_a: int, mode_b: int) -> SymplecticTransform:
    """2モードスクイーズのシンプレクティック行列

    b_a = a_a cosh r + a_b† sinh r, b_b = a_a† sinh r + a_b cosh r に対応する。
    """
    if mode_a == mode_b:
        raise DomainError("2モードスクイーズには異なる2モードが必要です")
    if r < 0:
        raise DomainError(f"スクイーズパラメータは非負が必要です: {r}")
    ch, sh = math.cosh(r), math.sinh(r)
    matrix = np.eye(2 * n_modes)
    xa, pa, xb, pb = 2 * mode_a, 2 * mode_a + 1, 2 * mode_b, 2 * mode_b + 1
    matrix[xa, xa] = matrix[pa, pa] = matrix[xb, xb] = matrix[pb, pb] = ch
    matrix[xa, xb] = matrix[xb, xa] = sh
    matrix[pa, pb] = matrix[pb, pa] = -sh
    return SymplecticTransform(matrix=matrix, label=f"tms(r={r}, modes={mode_a},{mode_b})")


def two_mode_squeeze(state: GaussianState, r: float, mode_a: int, mode_b: int) -> GaussianState:
    """パラメトリック増幅（2モードスクイーズ）を適用"""
    _check_mode(state, mode_a)
    _check_mode(state, mode_b)
    return two_mode_squeeze_transform(state.n_modes, r, mode_a, mode_b).apply(state)


def loss_channel(state: GaussianState, mode: int, q: float) -> GaussianState:
    """透過率 q のビームスプリッタ損失（真空との混合）"""
    _check_mode(state, mode)
    if not 0.0 < q <= 1.0:
        raise DomainError(f"損失チャネルの透過率は (0, 1] が必要です: {q}")
    scale = np.ones(2 * state.n_modes)
    scale[2 * mode: 2 * mode + 2] = math.sqrt(q)
    cov = state.cov * np.outer(scale, scale)
    cov[2 * mode: 2 * mode + 2, 2 * mode: 2 * mode + 2] += 0.5 * (1.0 - q) * np.eye(2)
    return GaussianState(n_modes=state.n_modes, mean=state.mean * scale, cov=cov)


def mode_moments(state: GaussianState, mode_a: int, mode_b: int) -> ModeMoments:
    """対称順序の共分散から正規順序のゆらぎモーメントを求める

    ⟨Δb†Δb⟩ = (Vxx + Vpp − 1)/2 は交換子 [b, b†] = 1 の補正項 −1/2 を含む。
    交差・自己モーメントは場の因子 i を含めた符号（i² = −1）で返す。
    """
    _check_mode(state, mode_a)
    _check_mode(state, mode_b)
    if mode_a == mode_b:
        raise DomainError("モーメント計算には異なる2モードが必要です")
    cov = state.cov
    xa, pa, xb, pb = 2 * mode_a, 2 * mode_a + 1, 2 * mode_b, 2 * mode_b + 1

    n_sig = 0.5 * (cov[xa, xa] + cov[pa, pa] - 1.0)
    n_img = 0.5 * (cov[xb, xb] + cov[pb, pb] - 1.0)
    bb_cross = 0.5 * complex(cov[xa, xb] - cov[pa, pb], cov[xa, pb] + cov[pa, xb])
    bb_self = 0.5 * complex(cov[xa, xa] - cov[pa, pa], 2.0 * cov[xa, pa])
    return ModeMoments(
        n_sig=max(n_sig, 0.0) if abs(n_sig) < UNCERTAINTY_TOLERANCE else n_sig,
        n_img=max(n_img, 0.0) if abs(n_img) < UNCERTAINTY_TOLERANCE else n_img,
        m_cross=-bb_cross,
        m_self_sig=-bb_self,
    )


def beat_quadrature_weights(scenario: Scenario) -> Tuple[np.ndarray, np.ndarray]:
    """ビート直交成分 Q_c, Q_s の (x_s, p_s, x_i, p_i) 係数

    差動光電流の揺らぎ部分 j(t) = Q_c cos(Ωt − Δθ) + Q_s sin(Ωt − Δθ)。
    a = Δθ + θ_l, b = Δθ − θ_l として
        Q_c =  x_s cos a − p_s sin a + x_i cos b + p_i sin b
        Q_s = −x_s sin a − p_s cos a − x_i sin b + p_i cos b
    """
    a = scenario.phase + scenario.theta_l
    b = scenario.phase - scenario.theta_l
    w_cos = np.array([math.cos(a), -math.sin(a), math.cos(b), math.sin(b)])
    w_sin = np.array([-math.sin(a), -math.cos(a), -math.sin(b), math.cos(b)])
    return w_cos, w_sin


def heterodyne_beat_statistics(state: GaussianState, scenario: Scenario) -> BeatStatistics:
    """ビート直交成分 cos(Ωt − Δθ), sin(Ωt − Δθ) の平均と分散

    真空1モードは各直交成分に 1/2 を与えるため、信号帯とイメージ帯が
    ともに真空なら分散は 1.0 になる。

    Raises:
        ShapeError: 状態が (信号, イメージ帯) の2モードでない場合
    """
    if state.n_modes != 2:
        raise ShapeError(f"ビート統計には2モード状態が必要です: n_modes={state.n_modes}")
    w_cos, w_sin = beat_quadrature_weights(scenario)
    return BeatStatistics(
        beat_cos_mean=float(w_cos @ state.mean),
        beat_sin_mean=float(w_sin @ state.mean),
        beat_cos_var=float(w_cos @ state.cov @ w_cos),
        beat_sin_var=float(w_sin @ state.cov @ w_sin),
    )


# ===========================================
# シナリオ単位のオラクル
# ===========================================

def prepare_detection_state(scenario: Scenario) -> GaussianState:
    """検出器入力直前の (信号, イメージ帯) 状態（無損失）"""
    state = vacuum_state(2)
    state = displace(state, SIGNAL_MODE, scenario.alpha_s_mag, scenario.theta_s)
    return two_mode_squeeze(state, scenario.r, SIGNAL_MODE, IMAGE_MODE)


def detected_state(scenario: Scenario) -> GaussianState:
    """LO周波数での実効効率 ξ_l = ηħω_l の損失を両モードに適用した状態"""
    xi_l = derive(scenario).xi_l
    if xi_l > 1.0:
        raise DomainError(f"実効効率 ξ_l が 1 を超えています: {xi_l}")
    state = prepare_detection_state(scenario)
    state = loss_channel(state, SIGNAL_MODE, xi_l)
    return loss_channel(state, IMAGE_MODE, xi_l)


def oracle_output_power(scenario: Scenario) -> float:
    """ビート平均から求めた平均信号電力 (c·e·ε0·η·ε_l)²·(Q̄c² + Q̄s²)/2"""
    stats = heterodyne_beat_statistics(prepare_detection_state(scenario), scenario)
    scale = derive(scenario).detector_scale
    return scale**2 * (stats.beat_cos_mean**2 + stats.beat_sin_mean**2) / 2.0


def oracle_noise_psd_at_beat(scenario: Scenario) -> float:
    """ビート周波数での片側雑音密度 2·(ショット単位)·Var(Q_c)

    Var(Q_c) は損失後の LO 直交成分の分散で、真空なら 1（ショット雑音床）。
    """
    stats = heterodyne_beat_statistics(detected_state(scenario), scenario)
    return 2.0 * derive(scenario).shot_level * stats.beat_cos_var


def oracle_noise_figure(scenario: Scenario) -> NoiseFigureResult:
    """ガウス状態エンジンによる雑音指数"""
    if scenario.alpha_s_mag <= 0:
        raise DomainError("alpha_s_mag = 0 では SNR が定義できません")
    snr_out = oracle_output_power(scenario) / (oracle_noise_psd_at_beat(scenario) * scenario.bandwidth_B)
    result = NoiseFigureResult.from_snr(snr_in(scenario), snr_out, method="oracle")
    logger.debug(f"オラクルNF: r={scenario.r}, q={scenario.q}, NF={result.nf_db:.6f} dB")
    return result
