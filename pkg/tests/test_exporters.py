"""
出力ファイルのテスト
"""

import json

import numpy as np
import pandas as pd
import pytest

from core.errors import ParseError
from core.noise_synth import TimeSeries
from core.spectral import PsdEstimate
from models.records import TOOL_VERSION, PointRecord, RunReport
from utils.exporters import (
    header_lines,
    read_csv_with_header,
    read_psd_csv,
    read_report_json,
    read_timeseries_binary,
    report_frame,
    sidecar_path,
    write_psd_csv,
    write_psd_json,
    write_report_csv,
    write_report_json,
    write_timeseries_binary,
    write_timeseries_csv,
)


def _report():
    records = [
        PointRecord(parameter="r", parameter_value=0.5, quantity="nf_db", method="analytic", value=0.1),
        PointRecord(
            parameter="r", parameter_value=0.5, quantity="nf_db", method="monte-carlo", value=0.12, error=0.01,
            seed=40, n_seeds=4,
        ),
    ]
    return RunReport(
        scenario={"r": 0.5}, scenario_digest="0123456789abcdef", seed_base=40, records=records,
        skipped=["F/oracle"],
    )


def _estimate():
    return PsdEstimate(
        freqs=np.linspace(0.0, 0.5, 5), values=[1.0, 2.0, 3.0, 2.5, 1.5], n_segments=12, window="hann",
        segment_len=8, overlap=0.5, sample_rate=1.0, seed=3,
    )


class TestHeader:
    def test_first_line_names_tool(self):
        lines = header_lines({"seed": 1, "truncated": False, "skipped": ["a", "b"]})
        assert lines[0] == f"# tool = qhetsim {TOOL_VERSION}"
        assert lines[1:] == ["# seed = 1", "# truncated = false", "# skipped = a, b"]


class TestReport:
    def test_csv(self, tmp_path):
        path = write_report_csv(_report(), tmp_path / "out" / "sweep.csv")
        meta, frame = read_csv_with_header(path)
        assert meta["seed_base"] == "40"
        assert meta["scenario_digest"] == "0123456789abcdef"
        assert meta["truncated"] == "false"
        assert list(frame.columns) == [
            "parameter", "parameter_value", "quantity", "method", "value", "error", "seed", "n_seeds"
        ]
        assert frame.loc[1, "value"] == 0.12
        assert pd.isna(frame.loc[0, "error"])
        assert frame.loc[1, "seed"] == 40

    def test_frame_keeps_integer_seeds(self):
        frame = report_frame(_report())
        assert str(frame["seed"].dtype) == "Int64"
        assert frame["seed"].isna().tolist() == [True, False]

    def test_json(self, tmp_path):
        path = write_report_json(_report(), tmp_path / "sweep.json")
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["tool"] == "qhetsim"
        assert data["skipped"] == ["F/oracle"]
        assert read_report_json(path).records == _report().records

    def test_missing_report(self, tmp_path):
        with pytest.raises(ParseError):
            read_report_json(tmp_path / "missing.json")

    def test_monte_carlo_record_needs_seed(self):
        with pytest.raises(ValueError):
            PointRecord(parameter="r", parameter_value=0.0, quantity="chi", method="monte-carlo", value=1.0)


class TestTimeSeries:
    def test_binary_with_sidecar(self, tmp_path):
        ts = TimeSeries(sample_rate=8.0, samples=[0.5, -1.25, 3.0], seed=2**63, scenario_hash="abc", beat_omega=1.0)
        path = write_timeseries_binary(ts, tmp_path / "ts.f64")
        assert path.stat().st_size == 3 * 8
        assert sidecar_path(path).name == "ts.f64.json"
        meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
        assert meta["dtype"] == "float64-le"
        assert meta["length"] == 3
        again = read_timeseries_binary(path)
        np.testing.assert_array_equal(again.samples, ts.samples)
        assert again.seed == 2**63

    def test_truncated_binary(self, tmp_path):
        ts = TimeSeries(sample_rate=8.0, samples=[0.5, -1.25, 3.0])
        path = write_timeseries_binary(ts, tmp_path / "ts.f64")
        path.write_bytes(path.read_bytes()[:16])
        with pytest.raises(ParseError):
            read_timeseries_binary(path)

    def test_csv(self, tmp_path):
        ts = TimeSeries(sample_rate=4.0, samples=[1.0, 2.0, 3.0, 4.0], seed=5)
        meta, frame = read_csv_with_header(write_timeseries_csv(ts, tmp_path / "ts.csv"))
        assert meta["seed"] == "5"
        np.testing.assert_allclose(frame["t"], [0.0, 0.25, 0.5, 0.75])
        np.testing.assert_allclose(frame["value"], ts.samples)


class TestPsd:
    def test_csv_is_exact(self, tmp_path):
        estimate = _estimate()
        again = read_psd_csv(write_psd_csv(estimate, tmp_path / "psd.csv"))
        np.testing.assert_array_equal(again.freqs, estimate.freqs)
        np.testing.assert_array_equal(again.values, estimate.values)
        assert (again.window, again.segment_len, again.n_segments, again.seed) == ("hann", 8, 12, 3)

    def test_json(self, tmp_path):
        data = json.loads(write_psd_json(_estimate(), tmp_path / "psd.json").read_text(encoding="utf-8"))
        assert data["window"] == "hann"
        assert data["values"] == [1.0, 2.0, 3.0, 2.5, 1.5]

    def test_csv_without_header(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("freq,psd\n0,1\n", encoding="utf-8")
        with pytest.raises(ParseError):
            read_psd_csv(path)
