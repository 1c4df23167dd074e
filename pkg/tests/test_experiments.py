"""Tests for growth sweeps.

Covers the profile integral against direct quadrature, sweep argument
validation, CSV/JSON persistence and its parse errors, and anomaly flags.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import replace

import numpy as np
import pytest
from scipy.special import sici

from src.errors import InvalidRange, InvalidTolerance, SweepNotFound, SweepParseError
from src.experiments import (
    COLUMNS,
    CSV_NAME,
    JSON_NAME,
    SweepRecord,
    anomalies,
    discrepancy_trend,
    growth_sweep,
    load_sweep,
    persist_sweep,
    profile_integral,
    profile_integral_parts,
    sweep_row,
)
from src.quadrature import integrate


def _record(n: int, I_Pn: float, ratio: float = 1.0, chain_holds: bool = True, status: str = "ok") -> SweepRecord:
    return SweepRecord(
        n=n, d=2 * n * n - 1, I_Pn=I_Pn, I_fn=I_Pn + 0.25, D_n=0.5, ratio_logd=ratio,
        I1_Pn=0.75, tail_Pn=0.125, chain_gap=0.1, chain_holds=chain_holds,
        status=status, tol=1e-9, runtime_ms=12.5,
    )


# ──────────────────────────────────────────────
# Profile integral
# ──────────────────────────────────────────────


class TestProfileIntegral:
    def test_closed_form_pieces(self):
        parts = profile_integral_parts(5, tol=1e-12)
        assert parts["inner_ramp"] == pytest.approx(float(sici(1.0)[0]), abs=1e-15)
        assert parts["plateau"] == pytest.approx(math.sin(1.0) * math.log(4.0), abs=1e-15)
        assert parts["value"] >= parts["lower_bound"]

    @pytest.mark.parametrize("n", [3, 6])
    def test_matches_direct_quadrature(self, n):
        h = 1.0 / n

        def integrand(t):
            profile = np.minimum(1.0, n * np.minimum(t, 1.0 - t))
            return np.sin(profile) / t

        direct = integrate(integrand, 0.0, 1.0, abs_tol=1e-12, breakpoints=[h, 1.0 - h]).value
        assert profile_integral(n, tol=1e-12) == pytest.approx(2.0 * abs(direct), abs=1e-10)

    def test_log_growth(self):
        n = 10**4
        parts = profile_integral_parts(n, tol=1e-10)
        slope = (parts["value"] - 2.0 * float(sici(1.0)[0])) / math.log(n - 1)
        assert slope == pytest.approx(2.0 * math.sin(1.0), rel=0.02)

    def test_rejects_small_n(self):
        with pytest.raises(ValueError):
            profile_integral_parts(1)


# ──────────────────────────────────────────────
# Sweeps
# ──────────────────────────────────────────────


class TestGrowthSweep:
    def test_range_validation(self):
        with pytest.raises(InvalidRange):
            growth_sweep(1, 3)
        with pytest.raises(InvalidRange):
            growth_sweep(5, 4)

    def test_cap(self):
        with pytest.raises(InvalidRange):
            growth_sweep(2, 13)

    def test_tolerance_validation(self):
        with pytest.raises(InvalidTolerance):
            growth_sweep(2, 3, tol=0.0)

    def test_columns_follow_record_fields(self):
        assert COLUMNS[0] == "n"
        assert "chain_holds" in COLUMNS
        assert len(COLUMNS) == len(_record(2, 1.0).to_dict())

    @pytest.mark.slow
    def test_single_row(self):
        rec = sweep_row(3, 1e-8)
        assert rec.ok
        assert rec.d == 17
        assert rec.chain_holds
        assert rec.chain_gap <= 2.0 * rec.D_n + 1e-8
        assert rec.ratio_logd == pytest.approx(rec.I_Pn / math.log(17))

    def test_chain_holds_at_four(self):
        rec = sweep_row(4, 1e-8)
        assert rec.ok, rec.status
        assert rec.d == 31
        assert rec.chain_holds
        assert rec.chain_gap <= 2.0 * rec.D_n + 1e-8

    @pytest.mark.slow
    def test_sweep_writes_output(self, tmp_out):
        records = growth_sweep(2, 3, tol=1e-8, out_dir=tmp_out)
        assert [r.n for r in records] == [2, 3]
        loaded, sidecar = load_sweep(tmp_out)
        assert [r.n for r in loaded] == [2, 3]
        assert sidecar["n_values"] == [2, 3]

    @pytest.mark.slow
    def test_discrepancy_trend_decreases(self):
        trend = discrepancy_trend((4, 8), tol=1e-8)
        assert [n for n, _ in trend] == [4, 8]
        assert trend[0][1] > trend[1][1]


# ──────────────────────────────────────────────
# Anomalies
# ──────────────────────────────────────────────


class TestAnomalies:
    def test_clean_sweep(self):
        records = [_record(n, 1.0 + 0.1 * n) for n in range(2, 8)]
        assert anomalies(records, tol=1e-9) == []

    def test_decrease_is_flagged(self):
        records = [_record(4, 2.0), _record(5, 1.0), _record(6, 2.5)]
        kinds = [a["kind"] for a in anomalies(records, tol=1e-9)]
        assert kinds == ["decreasing"]

    def test_decrease_below_four_is_ignored(self):
        records = [_record(2, 2.0), _record(3, 1.0)]
        assert anomalies(records, tol=1e-9) == []

    def test_low_ratio(self):
        found = anomalies([_record(6, 1.0, ratio=0.1), _record(5, 0.5, ratio=0.1)], tol=1e-9)
        assert found == [{"kind": "ratio_below_threshold", "n": 6, "ratio": 0.1}]

    def test_discrepancy_over_cap(self):
        rec = replace(_record(16, 3.0), D_n=0.9 * math.log(16))
        found = anomalies([rec], tol=1e-9)
        assert [a["kind"] for a in found] == ["discrepancy_above_cap"]
        assert found[0]["n"] == 16
        assert found[0]["ratio"] == pytest.approx(0.9)

    def test_discrepancy_cap_starts_at_sixteen(self):
        big = 0.9 * math.log(15)
        assert anomalies([replace(_record(15, 3.0), D_n=big)], tol=1e-9) == []
        assert anomalies([replace(_record(16, 3.0), D_n=0.7 * math.log(16))], tol=1e-9) == []

    def test_discrepancy_cap_from_environment(self, monkeypatch):
        monkeypatch.setenv("OSCINT_DISCREPANCY_CAP", "0.5")
        rec = replace(_record(16, 3.0), D_n=0.6 * math.log(16))
        assert [a["kind"] for a in anomalies([rec], tol=1e-9)] == ["discrepancy_above_cap"]

    def test_chain_violation(self):
        found = anomalies([_record(3, 1.0, chain_holds=False)], tol=1e-9)
        assert found[0]["kind"] == "chain_violated"
        assert found[0]["n"] == 3

    def test_failed_rows_are_skipped(self):
        records = [_record(4, 2.0), _record(5, 1.0, status="error: boom", chain_holds=False)]
        assert anomalies(records, tol=1e-9) == []


# ──────────────────────────────────────────────
# Persistence
# ──────────────────────────────────────────────


class TestPersistence:
    def test_records_read_back_exactly(self, tmp_out):
        records = [_record(3, 1.0 / 3.0), _record(2, math.pi)]
        csv_path, json_path = persist_sweep(records, tmp_out, config={"tol": 1e-9})
        assert csv_path.name == CSV_NAME
        assert json_path.name == JSON_NAME
        loaded, sidecar = load_sweep(tmp_out)
        assert loaded == sorted(records, key=lambda r: r.n)
        assert sidecar["engine"] == {"tol": 1e-9}
        assert sidecar["columns"] == list(COLUMNS)

    def test_load_from_csv_path(self, tmp_out):
        csv_path, _ = persist_sweep([_record(2, 1.0)], tmp_out, config={})
        loaded, _ = load_sweep(csv_path)
        assert loaded[0].n == 2

    def test_failed_record_keeps_nan(self, tmp_out):
        nan = math.nan
        failed = replace(
            _record(4, nan, ratio=nan, chain_holds=False, status="error: boom"),
            I_fn=nan, D_n=nan, chain_gap=nan,
        )
        persist_sweep([failed], tmp_out, config={})
        loaded, _ = load_sweep(tmp_out)
        assert math.isnan(loaded[0].I_Pn)
        assert loaded[0].status == "error: boom"
        assert loaded[0].chain_holds is False

    def test_default_sidecar_has_engine_config(self, tmp_out):
        persist_sweep([_record(2, 1.0)], tmp_out)
        _, sidecar = load_sweep(tmp_out)
        assert sidecar["engine"]["tol"] == 1e-9
        assert sidecar["anomalies"] == []


class TestLoadErrors:
    def _write(self, csv_text: str, sidecar: str | None = "{}") -> str:
        out = tempfile.mkdtemp()
        with open(os.path.join(out, CSV_NAME), "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        if sidecar is not None:
            with open(os.path.join(out, JSON_NAME), "w", encoding="utf-8") as fh:
                fh.write(sidecar)
        return out

    def test_missing_directory_contents(self):
        with pytest.raises(SweepNotFound):
            load_sweep(tempfile.mkdtemp())

    def test_missing_sidecar(self):
        out = self._write(",".join(COLUMNS) + "\n", sidecar=None)
        with pytest.raises(SweepNotFound):
            load_sweep(out)

    def test_not_found_is_file_not_found(self):
        with pytest.raises(FileNotFoundError):
            load_sweep(os.path.join(tempfile.mkdtemp(), "nope.csv"))

    def test_bad_header(self):
        out = self._write("n,d,value\n")
        with pytest.raises(SweepParseError) as exc_info:
            load_sweep(out)
        assert exc_info.value.line == 1
        assert str(exc_info.value).startswith("line 1:")

    def test_wrong_field_count(self):
        out = self._write(",".join(COLUMNS) + "\n2,7,1.0\n")
        with pytest.raises(SweepParseError) as exc_info:
            load_sweep(out)
        assert exc_info.value.line == 2

    def test_bad_value(self):
        row = ["2", "7", "abc"] + ["1.0"] * 6 + ["true", "ok", "1e-09", "3.0"]
        assert len(row) == len(COLUMNS)
        out = self._write(",".join(COLUMNS) + "\n" + ",".join(row) + "\n")
        with pytest.raises(SweepParseError) as exc_info:
            load_sweep(out)
        assert exc_info.value.line == 2

    def test_bad_boolean(self):
        row = ["2", "7"] + ["1.0"] * 7 + ["yes", "ok", "1e-09", "3.0"]
        out = self._write(",".join(COLUMNS) + "\n" + ",".join(row) + "\n")
        with pytest.raises(SweepParseError):
            load_sweep(out)

    def test_malformed_sidecar(self):
        out = self._write(",".join(COLUMNS) + "\n", sidecar="{not json")
        with pytest.raises(SweepParseError):
            load_sweep(out)
