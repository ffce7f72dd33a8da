"""
QHetSim シナリオ定義

物理定数・単位系・検証済みシナリオ設定と派生パラメータ
"""

import hashlib
import logging
import math
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_core import PydanticCustomError
from scipy import constants as sc

logger = logging.getLogger(__name__)

# ω_s + ω_i = 2ω_l の許容誤差（ω_l に対する相対値）
PHASE_MATCH_TOLERANCE = 1e-12

# 設定ファイルに書き出すキーの順序
SCENARIO_KEYS: List[str] = [
    "omega_s",
    "omega_i",
    "omega_l",
    "alpha_s_mag",
    "theta_s",
    "epsilon_l",
    "theta_l",
    "r",
    "q",
    "bandwidth_B",
    "unit_system",
    "delta_theta",
]


class PhysicalConstants(BaseModel):
    """物理定数（ħ, c, ε0, e）"""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    hbar: float = Field(default=1.0, gt=0, description="作用の単位 ħ")
    c: float = Field(default=1.0, gt=0, description="光速")
    epsilon0: float = Field(default=1.0, gt=0, description="真空の誘電率")
    e_charge: float = Field(default=1.0, gt=0, description="電気素量")

    @classmethod
    def scaled(cls) -> "PhysicalConstants":
        """スケール単位系（全定数 = 1）"""
        return cls()

    @classmethod
    def si(cls) -> "PhysicalConstants":
        """SI単位系（CODATA値）"""
        return cls(hbar=sc.hbar, c=sc.c, epsilon0=sc.epsilon_0, e_charge=sc.e)


UNIT_SYSTEMS = {
    "scaled": PhysicalConstants.scaled,
    "si": PhysicalConstants.si,
}


def _invariant_error(key: str, detail: str) -> PydanticCustomError:
    return PydanticCustomError("scenario_invariant", "{key}: {detail}", {"key": key, "detail": detail})


class Scenario(BaseModel):
    """ヘテロダイン検出の物理構成

    信号・イメージ帯・LOの各角周波数、信号振幅と位相、LO振幅と位相、
    スクイーズパラメータ r、量子効率 q、測定帯域 B を保持する。
    生成後は不変。
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    omega_s: float = Field(..., gt=0, description="信号角周波数")
    omega_i: float = Field(..., gt=0, description="イメージ帯角周波数（省略時 2ω_l − ω_s）")
    omega_l: float = Field(..., gt=0, description="LO角周波数")
    alpha_s_mag: float = Field(..., ge=0, description="信号場振幅 |α_s|")
    theta_s: float = Field(default=0.0, description="信号位相 (rad)")
    epsilon_l: float = Field(..., gt=0, description="LO振幅")
    theta_l: float = Field(default=0.0, description="LO位相 (rad)")
    r: float = Field(..., ge=0, description="スクイーズパラメータ")
    q: float = Field(..., gt=0, le=1, description="量子効率 q = ηħω_s")
    bandwidth_B: float = Field(..., gt=0, description="測定帯域 B")
    delta_theta: Optional[float] = Field(default=None, description="合成位相 Δθ（省略時 −θ_s）")
    unit_system: Literal["scaled", "si"] = "scaled"
    constants: PhysicalConstants = Field(default_factory=PhysicalConstants.scaled)

    @model_validator(mode="before")
    @classmethod
    def _fill_defaults(cls, data: Any) -> Any:
        """omega_i と constants の既定値を補完"""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        if data.get("omega_i") is None:
            omega_s, omega_l = data.get("omega_s"), data.get("omega_l")
            if isinstance(omega_s, (int, float)) and isinstance(omega_l, (int, float)):
                data["omega_i"] = 2.0 * omega_l - omega_s
        if data.get("constants") is None:
            unit_system = data.get("unit_system") or "scaled"
            factory = UNIT_SYSTEMS.get(unit_system)
            if factory is not None:
                data["constants"] = factory()
        return data

    @model_validator(mode="after")
    def _check_frequencies(self) -> "Scenario":
        if not self.omega_s > self.omega_i:
            raise _invariant_error("omega_i", f"omega_s > omega_i が必要です (omega_s={self.omega_s}, omega_i={self.omega_i})")
        mismatch = abs(self.omega_s + self.omega_i - 2.0 * self.omega_l)
        if mismatch > PHASE_MATCH_TOLERANCE * self.omega_l:
            raise _invariant_error(
                "omega_i",
                f"位相整合条件 omega_s + omega_i = 2 omega_l が成り立ちません (差={mismatch:.3e})",
            )
        return self

    @property
    def phase(self) -> float:
        """実効合成位相 Δθ（未指定なら Δk·r = 0 として −θ_s）"""
        if self.delta_theta is not None:
            return self.delta_theta
        return -self.theta_s

    def with_overrides(self, **changes: Any) -> "Scenario":
        """一部のキーを差し替えた新しいシナリオを検証付きで生成"""
        data = self.model_dump(exclude={"constants"})
        data["constants"] = self.constants
        data.update(changes)
        if ("omega_s" in changes or "omega_l" in changes) and "omega_i" not in changes:
            data["omega_i"] = None
        if "unit_system" in changes:
            data["constants"] = None
        return Scenario(**data)

    def to_config_lines(self) -> List[str]:
        """`key = value` 形式の正規化テキスト行"""
        lines = []
        for key in SCENARIO_KEYS:
            value = getattr(self, key)
            if value is None:
                continue
            lines.append(f"{key} = {value if isinstance(value, str) else repr(float(value))}")
        return lines

    def digest(self) -> str:
        """シナリオのダイジェスト（正規化テキストのSHA-256先頭16桁）"""
        text = "\n".join(self.to_config_lines()) + "\n"
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class DerivedParams(BaseModel):
    """シナリオから導かれる量"""

    model_config = ConfigDict(frozen=True)

    Omega: float = Field(..., gt=0, description="ビート角周波数 (ω_s − ω_i)/2")
    eta: float = Field(..., gt=0, description="検出効率 η = q/(ħω_s)")
    gain_G: float = Field(..., ge=1, description="増幅利得 e^{2r}")
    shot_level: float = Field(..., gt=0, description="ショット雑音単位 ηcε0e²ε_l²（両側）")
    xi_l: float = Field(..., gt=0, description="LO周波数での実効効率 ηħω_l")
    detector_scale: float = Field(..., gt=0, description="光電流係数 c·e·ε0·η·ε_l")


def derive(scenario: Scenario) -> DerivedParams:
    """派生パラメータを計算する

    Args:
        scenario: 検証済みシナリオ

    Returns:
        DerivedParams: Ω, η, G, ショット雑音単位ほか
    """
    k = scenario.constants
    eta = scenario.q / (k.hbar * scenario.omega_s)
    return DerivedParams(
        Omega=(scenario.omega_s - scenario.omega_i) / 2.0,
        eta=eta,
        gain_G=math.exp(2.0 * scenario.r),
        shot_level=eta * k.c * k.epsilon0 * k.e_charge**2 * scenario.epsilon_l**2,
        xi_l=eta * k.hbar * scenario.omega_l,
        detector_scale=k.c * k.e_charge * k.epsilon0 * eta * scenario.epsilon_l,
    )


def describe(scenario: Scenario) -> Dict[str, Any]:
    """レポート用のシナリオ要約（キー順固定）"""
    summary: Dict[str, Any] = {key: getattr(scenario, key) for key in SCENARIO_KEYS}
    summary["delta_theta_effective"] = scenario.phase
    summary["digest"] = scenario.digest()
    return summary
