"""
Unit tests for the ConfigManager class.
"""

import json

import pytest

from lib.config import DEFAULT_CONFIG_PATH, ConfigManager


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"nep": {"rcond_tol": 1e-12, "maxit": 50}}))
    return path


class TestConfigManager:
    """Tests for ConfigManager."""

    def test_packaged_defaults(self, monkeypatch):
        monkeypatch.delenv("QGRAPH_CONFIG", raising=False)
        config = ConfigManager()
        assert config.config_path == str(DEFAULT_CONFIG_PATH)
        assert config.get_value("nep", "rcond_tol") == 1e-10
        assert config.get_value("nep", "maxit") == 1000
        assert config.get_value("laplacian", "sparse_threshold") == 500
        assert config.get_value("output", "format") == "table"

    def test_explicit_path(self, config_file):
        config = ConfigManager(str(config_file))
        assert config.get_value("nep", "maxit") == 50

    def test_environment_override(self, config_file, monkeypatch):
        monkeypatch.setenv("QGRAPH_CONFIG", str(config_file))
        assert ConfigManager().get_value("nep", "rcond_tol") == 1e-12

    def test_missing_values_use_default(self, config_file):
        config = ConfigManager(str(config_file))
        assert config.get_value("nep", "pole_guard", 1e-8) == 1e-8
        assert config.get_value("generate", "decimals") is None

    def test_section_is_a_copy(self, config_file):
        config = ConfigManager(str(config_file))
        section = config.section("nep")
        section["maxit"] = 1
        assert config.get_value("nep", "maxit") == 50
        assert config.section("absent") == {}

    def test_reading_leaves_file_untouched(self, config_file):
        before = config_file.read_bytes()
        config = ConfigManager(str(config_file))
        config.section("nep")["maxit"] = 7
        assert config.get_value("nep", "maxit") == 50
        assert config_file.read_bytes() == before

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ConfigManager(str(tmp_path / "absent.json"))
