"""
検証スイートのテスト
"""

import pytest

from core import analytic
from core import gaussian_engine as engine
from core import validation
from core.validation import check_names, run_validation, select_checks

DETERMINISTIC = [
    "nf_high_gain_zero_db",
    "nf_regular_detector",
    "quadrature_gain_ratio",
    "spectral_factor_worked_point",
    "chi_parity",
    "chi_high_gain_cos2",
    "symplectic_condition",
    "two_mode_squeezed_moments",
    "image_band_doubling",
    "beat_means_match_analytic",
    "loss_composition",
    "purity_and_uncertainty",
    "oracle_matches_analytic",
]


class TestRegistry:
    def test_names_are_unique(self):
        names = [c.name for c in validation.CHECKS]
        assert len(names) == len(set(names))

    def test_levels(self):
        levels = check_names()
        assert set(DETERMINISTIC) <= set(levels)
        assert levels["wiener_khinchin"] == "full"
        assert levels["ensemble_psd_200_seeds"] == "full"
        assert levels["mc_nf_noiseless"] == "quick"

    def test_quick_is_subset_of_full(self):
        quick = {c.name for c in select_checks("quick")}
        full = {c.name for c in select_checks("full")}
        assert quick < full
        assert "mc_nf_grid" not in quick

    def test_only_filter(self):
        assert [c.name for c in select_checks("quick", ["chi_parity"])] == ["chi_parity"]


class TestRun:
    def test_deterministic_checks_pass(self, default_scenario):
        report = run_validation(0, "quick", default_scenario, only=DETERMINISTIC)
        assert report.failed_checks == []
        assert len(report.checks) == len(DETERMINISTIC)
        assert report.passed

    def test_quick_level_passes(self):
        report = run_validation(0, "quick")
        assert report.passed, report.failed_checks
        assert report.level == "quick"

    def test_corrupted_spectral_factor_is_detected(self, monkeypatch):
        monkeypatch.setattr(analytic, "spectral_factor_F", lambda omega, scenario, strict=False: 0.0)
        report = run_validation(0, "quick", only=["spectral_factor_worked_point"])
        assert not report.passed
        assert report.failed_checks == ["spectral_factor_worked_point"]
        assert report.checks[0].value == pytest.approx(481.42494, abs=1e-5)

    def test_worked_point_needs_full_precision(self, monkeypatch):
        monkeypatch.setattr(analytic, "spectral_factor_F", lambda omega, scenario, strict=False: 481.42494)
        report = run_validation(0, "quick", only=["spectral_factor_worked_point"])
        assert report.failed_checks == ["spectral_factor_worked_point"]
        assert report.checks[0].threshold == pytest.approx(1e-9)

    def test_noiseless_nf_is_a_seed_average(self, monkeypatch):
        seeds = []

        def fake_nf(scenario, seed):
            seeds.append(seed)
            return analytic.noise_figure(scenario).nf_db + (0.5 if seed == 7 else 0.0)

        monkeypatch.setattr(validation, "_mc_nf", fake_nf)
        report = run_validation(7, "quick", only=["mc_nf_noiseless"])
        assert report.passed
        assert seeds == list(range(7, 7 + validation.MC_NF_SEEDS))
        assert validation.MC_NF_SEEDS >= 10
        assert report.checks[0].value == pytest.approx(0.5 / validation.MC_NF_SEEDS)

    def test_exception_counts_as_failure(self, monkeypatch):
        def broken(matrix, tol=0.0):
            raise RuntimeError("壊れたチェック")

        monkeypatch.setattr(engine, "is_symplectic", broken)
        report = run_validation(0, "quick", only=["symplectic_condition"])
        assert report.failed_checks == ["symplectic_condition"]
        assert "RuntimeError" in report.checks[0].detail


@pytest.mark.slow
def test_full_level_passes():
    report = run_validation(1, "full")
    assert report.passed, report.failed_checks
