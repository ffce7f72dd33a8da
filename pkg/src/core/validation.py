"""
QHetSim 検証スイート

解析式・ガウス状態オラクル・モンテカルロの相互検証と、エンジンの不変条件チェック。
quick は決定論的チェックと短いモンテカルロ、full は長いモンテカルロと200シードのアンサンブルを加える。
"""

import logging
import math
import time
from typing import Callable, Dict, List, Literal, NamedTuple, Optional

import numpy as np

from models.records import CheckResult, ValidationReport

from . import analytic
from . import gaussian_engine as engine
from .analytic import PsdModel
from .config_manager import load_scenario_file
from .noise_synth import (
    SynthesisPlan,
    autocorrelation_estimate,
    expected_autocorrelation,
    regress_out_beat,
    synthesize_colored_noise,
    synthesize_from_plan,
)
from .scenario import Scenario, derive
from .spectral import ensemble_welch, measure_nf, relative_rms_error, tone_power, welch_psd

logger = logging.getLogger(__name__)

Level = Literal["quick", "full"]

# ω_s/ω_l − 1 を 1e-14 にして 10·log10(ω_l/ω_s) を 1e-12 dB 未満に抑える
NEAR_DEGENERATE_OMEGA_S = 1.0 + 1e-14

MC_SAMPLES = 2**21
MC_SEGMENT_LEN = 256
MC_NF_TOLERANCE_DB = 0.1
MC_NF_SEEDS = 10


class Outcome(NamedTuple):
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""


CheckFunction = Callable[[int, Scenario], Outcome]


class RegisteredCheck(NamedTuple):
    name: str
    level: Level
    func: CheckFunction


CHECKS: List[RegisteredCheck] = []


def check(name: str, level: Level = "quick") -> Callable[[CheckFunction], CheckFunction]:
    """検証チェックを登録するデコレータ"""

    def register(func: CheckFunction) -> CheckFunction:
        CHECKS.append(RegisteredCheck(name, level, func))
        return func

    return register


def _near_degenerate(scenario: Scenario, **changes) -> Scenario:
    return scenario.with_overrides(omega_l=1.0, omega_s=NEAR_DEGENERATE_OMEGA_S, **changes)


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


# ===========================================
# 解析式
# ===========================================

@check("nf_high_gain_zero_db")
def _nf_high_gain_zero_db(seed: int, scenario: Scenario) -> Outcome:
    worst = max(
        abs(analytic.noise_figure(_near_degenerate(scenario, q=1.0, theta_l=0.0, r=r, alpha_s_mag=1.0)).nf_db)
        for r in (0.5, 1.0, 2.5, 5.0)
    )
    return Outcome(worst <= 1e-12, worst, 1e-12, "q=1, θ_l=0 で |NF| (dB)")


@check("nf_regular_detector")
def _nf_regular_detector(seed: int, scenario: Scenario) -> Outcome:
    worst = 0.0
    for xi in (0.25, 0.5, 1.0):
        expected = 10.0 * math.log10(1.0 / xi)
        worst = max(worst, abs(analytic.noise_figure_regular(xi) - expected))
        finite_gain = analytic.noise_figure(_near_degenerate(scenario, q=xi, r=0.0, theta_l=0.0, alpha_s_mag=1.0))
        worst = max(worst, abs(finite_gain.nf_db - expected))
    return Outcome(worst <= 1e-12, worst, 1e-12, "r=0 の有限利得NFと通常検出器NFの差")


@check("quadrature_gain_ratio")
def _quadrature_gain_ratio(seed: int, scenario: Scenario) -> Outcome:
    worst = 0.0
    for r in (0.0, 0.5, 1.0, 2.5, 5.0):
        base = scenario.with_overrides(r=r, alpha_s_mag=1.0)
        ratio = analytic.output_power(base.with_overrides(theta_l=0.0)) / analytic.output_power(
            base.with_overrides(theta_l=math.pi / 2)
        )
        worst = max(worst, abs(ratio / math.exp(4.0 * r) - 1.0))
        gain_law = (derive(base).detector_scale * base.alpha_s_mag) ** 2 * math.exp(2.0 * r)
        worst = max(worst, abs(analytic.output_power(base.with_overrides(theta_l=0.0)) / gain_law - 1.0))
    return Outcome(worst <= 1e-12, worst, 1e-12, "P(θ_l=0)/P(θ_l=π/2) と e^{4r} の相対差")


@check("spectral_factor_worked_point")
def _spectral_factor_worked_point(seed: int, scenario: Scenario) -> Outcome:
    s = scenario.with_overrides(omega_l=100.0, omega_s=101.0, r=math.asinh(1.0), theta_l=0.0)
    value = analytic.spectral_factor_F(10.0, s)
    # sinh r = 1, cosh r = √2: F(10) = 110 + 90 + 2√2·√9900
    error = abs(value - (200.0 + 2.0 * math.sqrt(2.0) * math.sqrt(9900.0)))
    return Outcome(error <= 1e-9, error, 1e-9, f"F(10) = {value:.9f}")


@check("chi_parity")
def _chi_parity(seed: int, scenario: Scenario) -> Outcome:
    s = scenario.with_overrides(omega_l=100.0, omega_s=101.0, r=0.8, theta_l=0.3)
    omega = np.linspace(0.0, 99.0, 64)
    plus = analytic.noise_psd(omega, s)
    minus = analytic.noise_psd(-omega, s)
    worst = float(np.max(np.abs(plus - minus) / plus))
    return Outcome(worst <= 1e-12, worst, 1e-12, "χ(ω) と χ(−ω) の相対差")


@check("chi_high_gain_cos2")
def _chi_high_gain_cos2(seed: int, scenario: Scenario) -> Outcome:
    r = 4.5 * math.log(10.0) / 2.0
    thetas = np.linspace(0.0, math.pi, 37)
    chi = np.array([
        analytic.noise_psd(derive(scenario).Omega, scenario.with_overrides(r=r, theta_l=t), "high_gain")
        for t in thetas
    ])
    x = np.cos(thetas) ** 2
    slope, intercept = np.polyfit(x, chi, 1)
    residual = chi - (slope * x + intercept)
    r_squared = 1.0 - float(np.sum(residual**2) / np.sum((chi - chi.mean()) ** 2))
    return Outcome(r_squared >= 0.999, r_squared, 0.999, "45 dB 利得での χ と cos²θ_l の決定係数")


# ===========================================
# ガウス状態エンジン
# ===========================================

@check("symplectic_condition")
def _symplectic_condition(seed: int, scenario: Scenario) -> Outcome:
    ok = all(engine.is_symplectic(engine.two_mode_squeeze_transform(2, r, 0, 1).matrix) for r in (0.0, 0.1, 1.0, 5.0))
    return Outcome(ok, detail="S·J·Sᵀ = J (r = 0, 0.1, 1, 5)")


@check("two_mode_squeezed_moments")
def _two_mode_squeezed_moments(seed: int, scenario: Scenario) -> Outcome:
    worst = 0.0
    for r in np.linspace(0.0, 5.0, 11):
        moments = engine.mode_moments(engine.two_mode_squeeze(engine.vacuum_state(2), r, 0, 1), 0, 1)
        expected_n = math.sinh(r) ** 2
        expected_m = -math.sinh(r) * math.cosh(r)
        worst = max(
            worst,
            _relative(moments.n_sig, expected_n),
            _relative(moments.n_img, expected_n),
            _relative(moments.m_cross.real, expected_m),
            abs(moments.m_cross.imag),
            abs(moments.m_self_sig),
        )
    return Outcome(worst <= 1e-12, worst, 1e-12, "(sinh²r, −sinh r cosh r) との相対差")


@check("image_band_doubling")
def _image_band_doubling(seed: int, scenario: Scenario) -> Outcome:
    state = engine.displace(engine.vacuum_state(2), 0, 1.0, 0.3)
    stats = engine.heterodyne_beat_statistics(state, scenario.with_overrides(r=0.0))
    single_mode = float(engine.vacuum_state(1).cov[0, 0])
    error = max(abs(stats.beat_cos_var - 1.0), abs(stats.beat_sin_var - 1.0), abs(single_mode - 0.5))
    return Outcome(error <= 1e-12, error, 1e-12, "真空1モード 0.5 → ビート分散 1.0")


@check("beat_means_match_analytic")
def _beat_means_match_analytic(seed: int, scenario: Scenario) -> Outcome:
    worst = 0.0
    for r in (0.0, 0.5, 1.0, 2.0):
        for theta_l in (0.0, 0.4, math.pi / 2):
            s = scenario.with_overrides(r=r, theta_l=theta_l, theta_s=0.7)
            stats = engine.heterodyne_beat_statistics(engine.prepare_detection_state(s), s)
            scale = derive(s).detector_scale
            cos_amp, sin_amp = analytic.beat_coefficients(s)
            worst = max(worst, abs(scale * stats.beat_cos_mean - cos_amp), abs(scale * stats.beat_sin_mean - sin_amp))
    return Outcome(worst <= 1e-10, worst, 1e-10, "エンジンのビート平均と解析係数の差")


@check("loss_composition")
def _loss_composition(seed: int, scenario: Scenario) -> Outcome:
    state = engine.two_mode_squeeze(engine.displace(engine.vacuum_state(2), 0, 1.3, 0.2), 0.7, 0, 1)
    twice = engine.loss_channel(engine.loss_channel(state, 0, 0.6), 0, 0.5)
    once = engine.loss_channel(state, 0, 0.3)
    error = max(float(np.max(np.abs(twice.cov - once.cov))), float(np.max(np.abs(twice.mean - once.mean))))
    return Outcome(error <= 1e-12, error, 1e-12, "loss(0.6)∘loss(0.5) と loss(0.3) の差")


@check("purity_and_uncertainty")
def _purity_and_uncertainty(seed: int, scenario: Scenario) -> Outcome:
    state = engine.vacuum_state(2)
    worst_purity = 0.0
    worst_margin = 0.0
    for r, amp in ((0.3, 1.0), (1.2, 0.5), (2.0, 2.0)):
        state = engine.two_mode_squeeze(engine.displace(state, 0, amp, r), r, 0, 1)
        worst_purity = max(worst_purity, abs(float(np.linalg.det(2.0 * state.cov)) - 1.0))
        worst_margin = min(worst_margin, state.uncertainty_margin())
    lossy = engine.loss_channel(state, 1, 0.4)
    worst_margin = min(worst_margin, lossy.uncertainty_margin())
    ok = worst_purity <= 1e-9 and worst_margin >= -1e-10
    return Outcome(ok, worst_purity, 1e-9, f"det(2·cov) − 1 の最大値、最小固有値={worst_margin:.3e}")


@check("oracle_matches_analytic")
def _oracle_matches_analytic(seed: int, scenario: Scenario) -> Outcome:
    worst = 0.0
    for r in (0.0, 0.5, 1.0, 2.5):
        for q in (0.25, 0.5, 1.0):
            for theta_l in (0.0, 0.6):
                s = scenario.with_overrides(r=r, q=q, theta_l=theta_l, alpha_s_mag=max(scenario.alpha_s_mag, 1.0))
                worst = max(
                    worst,
                    _relative(engine.oracle_output_power(s), analytic.output_power(s)),
                    _relative(engine.oracle_noise_psd_at_beat(s), analytic.baseband_noise_psd(s)),
                    abs(engine.oracle_noise_figure(s).nf_db - analytic.noise_figure(s).nf_db),
                )
    return Outcome(worst <= 1e-9, worst, 1e-9, "オラクルと解析式の P_out, χ(Ω), NF の差")


# ===========================================
# モンテカルロ
# ===========================================

def _mc_nf(scenario: Scenario, seed: int) -> float:
    plan = SynthesisPlan.for_scenario(scenario, n_samples=MC_SAMPLES)
    return measure_nf(synthesize_from_plan(plan, seed), scenario, segment_len=MC_SEGMENT_LEN).nf_db


def _mc_nf_error(scenario: Scenario, seed: int) -> float:
    return abs(_mc_nf(scenario, seed) - analytic.noise_figure(scenario).nf_db)


@check("mc_nf_noiseless")
def _mc_nf_noiseless(seed: int, scenario: Scenario) -> Outcome:
    s = scenario.with_overrides(r=1.0, q=1.0, theta_l=0.0, alpha_s_mag=max(scenario.alpha_s_mag, 1.0))
    measured = [_mc_nf(s, seed + k) for k in range(MC_NF_SEEDS)]
    error = abs(float(np.mean(measured)) - analytic.noise_figure(s).nf_db)
    return Outcome(
        error <= MC_NF_TOLERANCE_DB, error, MC_NF_TOLERANCE_DB, f"r=1, q=1 の測定NF（{MC_NF_SEEDS} シード平均）と解析NFの差 (dB)"
    )


@check("welch_parseval")
def _welch_parseval(seed: int, scenario: Scenario) -> Outcome:
    ts = synthesize_colored_noise(lambda w: np.full_like(w, 2.0), 1.0, 2**18, seed)
    estimate = welch_psd(ts, 256)
    error = abs(estimate.integrated_power() / float(np.var(ts.samples)) - 1.0)
    return Outcome(error <= 0.02, error, 0.02, "Σ PSD·Δf と分散の相対差")


@check("beat_removal")
def _beat_removal(seed: int, scenario: Scenario) -> Outcome:
    s = scenario.with_overrides(r=math.log(2.0), theta_l=0.0, alpha_s_mag=max(scenario.alpha_s_mag, 1.0))
    plan = SynthesisPlan.for_scenario(s, n_samples=2**16)
    ts = synthesize_from_plan(plan, seed)
    injected = analytic.output_power(s)
    residual = tone_power(regress_out_beat(ts), plan.beat_omega)
    ratio = residual / injected
    return Outcome(ratio <= 0.01, ratio, 0.01, "除去後のトーン電力 / 注入トーン電力")


@check("mc_nf_grid", level="full")
def _mc_nf_grid(seed: int, scenario: Scenario) -> Outcome:
    worst = 0.0
    for i, (r, q) in enumerate((r, q) for r in (0.0, 0.5, 1.0, 2.5) for q in (0.25, 0.5, 1.0)):
        s = scenario.with_overrides(r=r, q=q, theta_l=0.0, alpha_s_mag=max(scenario.alpha_s_mag, 1.0))
        worst = max(worst, _mc_nf_error(s, seed + i))
    return Outcome(worst <= MC_NF_TOLERANCE_DB, worst, MC_NF_TOLERANCE_DB, "r × q 格子での測定NFと解析NFの最大差 (dB)")


@check("mc_quadrature_ratio", level="full")
def _mc_quadrature_ratio(seed: int, scenario: Scenario) -> Outcome:
    r = math.log(2.0)
    amplitudes = []
    for theta_l in (0.0, math.pi / 2):
        s = scenario.with_overrides(r=r, theta_l=theta_l, alpha_s_mag=max(scenario.alpha_s_mag, 1.0))
        plan = SynthesisPlan.for_scenario(s, n_samples=2**18)
        amplitudes.append(math.sqrt(2.0 * tone_power(synthesize_from_plan(plan, seed), plan.beat_omega)))
    error = abs(amplitudes[0] / amplitudes[1] / math.exp(2.0 * r) - 1.0)
    return Outcome(error <= 0.01, error, 0.01, "トーン振幅比と e^{2r} の相対差")


def _colored_target(scenario: Scenario) -> PsdModel:
    s = scenario.with_overrides(omega_l=1.0, omega_s=1.5, r=math.asinh(1.0), q=1.0, theta_l=0.0)
    return PsdModel(scenario=s)


# 格子の最高角周波数 π·fs が ω_l = 1 を下回る
COLORED_FS = 0.25


@check("wiener_khinchin", level="full")
def _wiener_khinchin(seed: int, scenario: Scenario) -> Outcome:
    psd = _colored_target(scenario)
    n = 2**20
    estimate = welch_psd(synthesize_colored_noise(psd, COLORED_FS, n, seed), 1024)
    rms = relative_rms_error(estimate, psd)
    fine = welch_psd(synthesize_colored_noise(psd, COLORED_FS, n, seed + 1), 128)
    rms_fine = relative_rms_error(fine, psd)

    ts = synthesize_colored_noise(psd, COLORED_FS, n, seed + 2)
    measured = autocorrelation_estimate(ts, 10)
    expected = expected_autocorrelation(psd, COLORED_FS, n, 10)
    acf_error = float(np.max(np.abs(measured - expected)) / expected[0])

    ok = rms <= 0.05 and rms_fine <= 0.02 and acf_error <= 0.05
    detail = (
        f"RMS {rms:.4f} ({estimate.n_segments} セグメント), "
        f"RMS {rms_fine:.4f} ({fine.n_segments} セグメント), 自己相関 {acf_error:.4f}"
    )
    return Outcome(ok, max(rms, acf_error), 0.05, detail)


@check("ensemble_psd_200_seeds", level="full")
def _ensemble_psd(seed: int, scenario: Scenario) -> Outcome:
    psd = _colored_target(scenario)
    estimate = ensemble_welch(psd, COLORED_FS, 2**14, range(seed, seed + 200), segment_len=256)
    rms = relative_rms_error(estimate, psd)
    return Outcome(rms <= 0.05, rms, 0.05, "200シード平均の Welch PSD と目標の相対RMS誤差")


def select_checks(level: Level, only: Optional[List[str]] = None) -> List[RegisteredCheck]:
    selected = [c for c in CHECKS if level == "full" or c.level == "quick"]
    if only:
        selected = [c for c in selected if c.name in only]
    return selected


def run_validation(
    seed: int,
    level: Level = "quick",
    scenario: Optional[Scenario] = None,
    only: Optional[List[str]] = None,
) -> ValidationReport:
    """検証スイートを実行する

    Args:
        seed: モンテカルロの基準シード
        level: "quick" または "full"
        scenario: 基準シナリオ（省略時は既定シナリオ）
        only: 実行するチェック名の限定

    Returns:
        ValidationReport: チェックごとの合否
    """
    base = scenario if scenario is not None else load_scenario_file(None)
    results: List[CheckResult] = []
    for registered in select_checks(level, only):
        started = time.monotonic()
        try:
            outcome = registered.func(seed, base)
        except Exception as e:
            logger.error(f"検証チェック {registered.name} で例外: {e}")
            outcome = Outcome(False, detail=f"{type(e).__name__}: {e}")
        elapsed = time.monotonic() - started
        value = outcome.value
        if value is not None and not math.isfinite(value):
            value = None
        results.append(CheckResult(
            name=registered.name,
            passed=bool(outcome.passed),
            detail=outcome.detail,
            value=value,
            threshold=outcome.threshold,
            elapsed_s=elapsed,
        ))
        status = "OK" if outcome.passed else "NG"
        logger.info(f"[{status}] {registered.name}: {outcome.detail} ({elapsed:.2f} 秒)")
    return ValidationReport(level=level, seed=seed, checks=results)


def check_names() -> Dict[str, str]:
    """チェック名 → レベル"""
    return {c.name: c.level for c in CHECKS}
