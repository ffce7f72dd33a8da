"""
QHetSim 出力レコード

スイープ・検証・シミュレーションの結果レコード定義
"""

from datetime import datetime
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator

TOOL_NAME = "qhetsim"
TOOL_VERSION = "1.0.0"

Quantity = Literal["nf_db", "p_out", "chi", "F", "snr_out", "beat_cos", "beat_sin"]
Method = Literal["analytic", "oracle", "monte-carlo"]
SweepParameter = Literal["r", "q", "theta_l", "omega"]

QUANTITIES: List[str] = ["nf_db", "p_out", "chi", "F", "snr_out", "beat_cos", "beat_sin"]
METHODS: List[str] = ["analytic", "oracle", "monte-carlo"]


class PointRecord(BaseModel):
    """スイープ1点・1量・1手法の結果"""
    parameter: SweepParameter
    parameter_value: float
    quantity: Quantity
    method: Method
    value: float
    error: Optional[float] = Field(None, ge=0, description="±1σ（モンテカルロのみ）")
    seed: Optional[int] = Field(None, ge=0, description="先頭シード（モンテカルロのみ）")
    n_seeds: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_monte_carlo(self) -> "PointRecord":
        if self.method == "monte-carlo" and (self.seed is None or self.error is None):
            raise ValueError("モンテカルロのレコードにはシードと誤差が必要です")
        return self


class RunReport(BaseModel):
    """スイープ実行レポート"""
    tool: str = TOOL_NAME
    tool_version: str = TOOL_VERSION
    scenario: Dict[str, Any]
    scenario_digest: str
    sweep: Dict[str, Any] = Field(default_factory=dict, description="スイープ設定のエコー")
    seed_base: int = 0
    records: List[PointRecord] = Field(default_factory=list)
    skipped: List[str] = Field(default_factory=list, description="未対応の (量, 手法) の組")
    truncated: bool = False
    started_at: datetime = Field(default_factory=datetime.now)
    wall_clock_s: float = 0.0


class CheckResult(BaseModel):
    """検証チェック1件の結果"""
    name: str
    passed: bool
    detail: str = ""
    value: Optional[float] = None
    threshold: Optional[float] = None
    elapsed_s: float = 0.0


class ValidationReport(BaseModel):
    """検証スイートの結果"""
    tool_version: str = TOOL_VERSION
    level: Literal["quick", "full"]
    seed: int
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed_checks(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]


class SimulationSummary(BaseModel):
    """simulate コマンドの結果要約"""
    tool_version: str = TOOL_VERSION
    scenario: Dict[str, Any]
    scenario_digest: str
    seed: int
    sample_rate: float
    n_samples: int
    duration: float
    window: str
    segment_len: int
    overlap: float
    n_segments: int
    tone_power: float
    chi_at_beat: float
    nf: Optional[Dict[str, Any]] = Field(None, description="モンテカルロの NoiseFigureResult（alpha_s_mag = 0 なら None）")
    analytic_nf_db: Optional[float] = None
    analytic_p_out: float
    analytic_chi: float
    files: Dict[str, str] = Field(default_factory=dict)
