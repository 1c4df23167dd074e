"""Tests for settings loading and CLI overrides."""

from __future__ import annotations

import os

import pytest
from pydantic import ValidationError

from src.config import OutputFormat, Settings, apply_overrides, get_settings, resolve_settings


class TestSettings:
    def test_defaults(self):
        s = get_settings()
        assert s.tol == 1e-9
        assert s.precision == 256
        assert s.seed == 0
        assert s.output_format is OutputFormat.JSON
        assert s.sweep_n_cap == 12
        assert s.discrepancy_cap == 0.75
        assert s.vdc_growth_factor == 2.0
        assert s.workers == 1

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("OSCINT_TOL", "1e-6")
        monkeypatch.setenv("OSCINT_OUTPUT_FORMAT", "csv")
        get_settings.cache_clear()
        s = get_settings()
        assert s.tol == 1e-6
        assert s.output_format is OutputFormat.CSV

    def test_invalid_env(self, monkeypatch):
        monkeypatch.setenv("OSCINT_TOL", "-1")
        with pytest.raises(ValidationError):
            Settings()

    def test_cached(self):
        assert get_settings() is get_settings()

    def test_engine_config(self):
        cfg = get_settings().engine_config()
        assert cfg["tol"] == 1e-9
        assert {"precision", "seed", "max_lobes", "conv_min_k", "root_width"} <= set(cfg)
        assert "db_path" not in cfg


class TestOverrides:
    def test_none_means_not_given(self):
        assert resolve_settings({"tol": None}) is get_settings()

    def test_resolve(self):
        s = resolve_settings({"tol": 1e-5, "seed": 7})
        assert s.tol == 1e-5
        assert s.seed == 7
        assert get_settings().tol == 1e-9

    def test_resolve_validates(self):
        with pytest.raises(ValidationError):
            resolve_settings({"precision": 8})

    def test_apply_writes_environment(self):
        s = apply_overrides({"tol": 1e-7, "output_format": OutputFormat.CSV, "seed": None})
        assert s.tol == 1e-7
        assert os.environ["OSCINT_TOL"] == "1e-07"
        assert os.environ["OSCINT_OUTPUT_FORMAT"] == "csv"
        assert "OSCINT_SEED" not in os.environ
        assert get_settings().output_format is OutputFormat.CSV
