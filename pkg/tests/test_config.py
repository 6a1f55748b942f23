"""
Unit tests for configuration loading.
"""

import pytest

from src.utils.config import DEFAULTS, load_config


class TestLoadConfig:
    """Test configuration loading and merging."""

    def test_repository_config(self):
        """Test the repository config.yaml yields the built-in defaults."""
        config = load_config()
        assert config['kriging']['rcond_threshold'] == 1e-14
        assert config['spline']['gcv_grid_size'] == 40
        assert config['crossval']['refit_policy'] == 'fixed'

    def test_partial_file_merged(self, tmp_path):
        """Test keys missing from the file fall back to the defaults."""
        path = tmp_path / "config.yaml"
        path.write_text("variogram:\n  n_bins: 20\nkriging:\n  drift_degree: 1\n", encoding='utf-8')
        config = load_config(str(path))

        assert config['variogram']['n_bins'] == 20
        assert config['kriging']['drift_degree'] == 1
        assert config['kriging']['rcond_threshold'] == DEFAULTS['kriging']['rcond_threshold']
        assert config['trend'] == DEFAULTS['trend']

    def test_empty_file(self, tmp_path):
        """Test an empty file gives the defaults."""
        path = tmp_path / "config.yaml"
        path.write_text("", encoding='utf-8')
        assert load_config(str(path)) == DEFAULTS

    def test_defaults_not_mutated(self, tmp_path):
        """Test merging leaves the module defaults untouched."""
        path = tmp_path / "config.yaml"
        path.write_text("logging:\n  level: DEBUG\n", encoding='utf-8')
        load_config(str(path))['spline']['gcv_low'] = 99.0
        assert DEFAULTS['logging']['level'] == 'WARNING'
        assert DEFAULTS['spline']['gcv_low'] == 1e-6

    def test_missing_explicit_path(self, tmp_path):
        """Test an explicit path that does not exist raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_config(str(tmp_path / "absent.yaml"))

    def test_not_a_mapping(self, tmp_path):
        """Test a YAML list is rejected."""
        path = tmp_path / "config.yaml"
        path.write_text("- 1\n- 2\n", encoding='utf-8')
        with pytest.raises(ValueError):
            load_config(str(path))
