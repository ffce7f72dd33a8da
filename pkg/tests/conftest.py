"""
QHetSim テスト共通設定
"""

import math
import sys
from pathlib import Path

import pytest

# Pythonパスにsrcディレクトリを追加
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from core.config_manager import load_scenario, load_scenario_file  # noqa: E402

F_EXAMPLE_TEXT = f"""\
omega_l = 100.0
omega_s = 101.0
alpha_s_mag = 1.0
epsilon_l = 1.0
theta_l = 0.0
r = {math.asinh(1.0)!r}
q = 1.0
B = 1.0
"""


@pytest.fixture
def default_scenario():
    """既定シナリオ（ω_s ≈ ω_l、r = 0、q = 1）"""
    return load_scenario_file(None)


@pytest.fixture
def f_example_scenario():
    """ω_l = 100, ω_s = 101, sinh r = 1"""
    return load_scenario(F_EXAMPLE_TEXT)


@pytest.fixture
def amplified_scenario(default_scenario):
    """r = 1, q = 0.5, θ_s = 0.7 の増幅シナリオ"""
    return default_scenario.with_overrides(r=1.0, q=0.5, theta_s=0.7)
